#include "eigenspine/lra.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "eigenspine/error.hpp"

namespace eigenspine {
namespace {

void fix_column_signs(Eigen::MatrixXd& u) {
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
      if (std::abs(u(r, c)) > best) {
        best = std::abs(u(r, c));
        arg = r;
      }
    }
    if (u(arg, c) < 0) u.col(c) *= -1.0;
  }
}

void check_dim(const EigenSpineBasis& basis, std::size_t dim, const char* what) {
  if (dim != basis.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + " has dimension " + std::to_string(dim) +
                    ", basis expects " + std::to_string(basis.dim()));
  }
}

}  // namespace

ContourMatrix build_contour_matrix(std::span<const ContourVector> contours) {
  if (contours.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no contours to build a matrix from");
  }
  const std::size_t dim = contours.front().dim();
  ContourMatrix out;
  out.n_vertices = contours.front().n_vertices();
  out.data.resize(static_cast<Eigen::Index>(dim),
                  static_cast<Eigen::Index>(contours.size()));
  for (std::size_t c = 0; c < contours.size(); ++c) {
    if (contours[c].dim() != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "contour " + std::to_string(c) + " has " +
                      std::to_string(contours[c].n_vertices()) +
                      " vertices, expected " + std::to_string(out.n_vertices));
    }
    const auto coords = contours[c].coords();
    for (std::size_t r = 0; r < dim; ++r) {
      out.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = coords[r];
    }
  }
  return out;
}

EigenSpineBasis fit_basis(const ContourMatrix& matrix, std::size_t m) {
  const std::size_t limit = std::min(matrix.rows(), matrix.cols());
  if (m < 1 || m > limit) {
    throw Error(ErrorCode::kInvalidM, "m=" + std::to_string(m) +
                                          " outside [1, " + std::to_string(limit) + "]");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(matrix.data, Eigen::ComputeThinU);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double sigma_m = sigma(static_cast<Eigen::Index>(m - 1));
  if (!(sigma(0) > 0.0) || sigma_m < kRankTolerance * sigma(0)) {
    throw Error(ErrorCode::kRankDeficient,
                "sigma_" + std::to_string(m) + "=" + std::to_string(sigma_m) +
                    " is below tolerance; matrix rank is smaller than m");
  }

  EigenSpineBasis out;
  out.n_vertices = matrix.n_vertices;
  out.basis = svd.matrixU().leftCols(static_cast<Eigen::Index>(m));
  out.singular_values = sigma.head(static_cast<Eigen::Index>(m));
  fix_column_signs(out.basis);
  return out;
}

CoeffVector project(const EigenSpineBasis& basis, const ContourVector& contour) {
  check_dim(basis, contour.dim(), "contour");
  const auto coords = contour.coords();
  const Eigen::Map<const Eigen::VectorXd> a(coords.data(),
                                            static_cast<Eigen::Index>(coords.size()));
  return CoeffVector{basis.basis.transpose() * a};
}

ContourVector reconstruct(const EigenSpineBasis& basis, const CoeffVector& coeffs) {
  if (coeffs.size() != basis.m()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "coefficient vector has length " + std::to_string(coeffs.size()) +
                    ", basis has m=" + std::to_string(basis.m()));
  }
  const Eigen::VectorXd a = basis.basis * coeffs.values;
  return ContourVector(std::vector<double>(a.data(), a.data() + a.size()));
}

double reconstruction_error(const EigenSpineBasis& basis, const ContourMatrix& matrix) {
  check_dim(basis, matrix.rows(), "contour matrix");
  const Eigen::MatrixXd coeffs = basis.basis.transpose() * matrix.data;
  return (matrix.data - basis.basis * coeffs).norm();
}

void to_json(nlohmann::json& j, const EigenSpineBasis& basis) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < basis.basis.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < basis.basis.cols(); ++c) row.push_back(basis.basis(r, c));
    rows.push_back(std::move(row));
  }
  j = nlohmann::json{
      {"n_vertices", basis.n_vertices},
      {"m", basis.m()},
      {"singular_values",
       std::vector<double>(basis.singular_values.data(),
                           basis.singular_values.data() + basis.singular_values.size())},
      {"basis", std::move(rows)},
  };
}

void from_json(const nlohmann::json& j, EigenSpineBasis& basis) {
  const auto n = j.at("n_vertices").get<std::size_t>();
  const auto m = j.at("m").get<std::size_t>();
  const auto sv = j.at("singular_values").get<std::vector<double>>();
  const auto& rows = j.at("basis");
  if (n == 0 || m == 0 || sv.size() != m || rows.size() != 2 * n) {
    throw Error(ErrorCode::kParse, "basis file dimensions are inconsistent");
  }
  basis.n_vertices = n;
  basis.basis.resize(static_cast<Eigen::Index>(2 * n), static_cast<Eigen::Index>(m));
  basis.singular_values.resize(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) basis.singular_values(static_cast<Eigen::Index>(i)) = sv[i];
  for (std::size_t r = 0; r < 2 * n; ++r) {
    const auto row = rows[r].get<std::vector<double>>();
    if (row.size() != m) throw Error(ErrorCode::kParse, "basis row has wrong length");
    for (std::size_t c = 0; c < m; ++c) {
      basis.basis(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
  }
}

void save_basis(const EigenSpineBasis& basis, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << nlohmann::json(basis).dump(2) << '\n';
}

EigenSpineBasis load_basis(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  try {
    return nlohmann::json::parse(in).get<EigenSpineBasis>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

}  // namespace eigenspine
