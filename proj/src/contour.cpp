#include "eigenspine/contour.hpp"

#include <cmath>
#include <string>

#include "eigenspine/error.hpp"

namespace eigenspine {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kInvalidM: return "InvalidM";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDegenerateEdge: return "DegenerateEdge";
    case ErrorCode::kTooFewInstances: return "TooFewInstances";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyImage: return "EmptyImage";
    case ErrorCode::kEmptyReferenceSet: return "EmptyReferenceSet";
    case ErrorCode::kInfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::kMissingStats: return "MissingStats";
    case ErrorCode::kNoPredictor: return "NoPredictor";
    case ErrorCode::kBlockedOnReview: return "BlockedOnReview";
    case ErrorCode::kIdMismatch: return "IdMismatch";
    case ErrorCode::kValidation: return "Validation";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kParse: return "Parse";
  }
  return "Unknown";
}

ContourVector::ContourVector(std::vector<double> coords)
    : coords_(std::move(coords)) {
  if (coords_.empty() || coords_.size() % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "contour needs a non-empty even number of coordinates, got " +
                    std::to_string(coords_.size()));
  }
  for (double v : coords_) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument, "contour coordinate is not finite");
    }
  }
}

ContourVector ContourVector::from_points(std::span<const Point> points) {
  std::vector<double> coords;
  coords.reserve(points.size() * 2);
  for (const Point& p : points) {
    coords.push_back(p.x);
    coords.push_back(p.y);
  }
  return ContourVector(std::move(coords));
}

std::vector<Point> ContourVector::points() const {
  std::vector<Point> out;
  out.reserve(n_vertices());
  for (std::size_t i = 0; i < n_vertices(); ++i) out.push_back(vertex(i));
  return out;
}

}  // namespace eigenspine
