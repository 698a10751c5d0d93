#include "eigenspine/annotation.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eigenspine/error.hpp"

namespace eigenspine {
namespace {

using nlohmann::json;

LabelSource source_from_string(const std::string& s) {
  if (s == "seed") return LabelSource::kSeed;
  if (s == "pseudo") return LabelSource::kPseudo;
  if (s == "corrected") return LabelSource::kCorrected;
  throw Error(ErrorCode::kParse, "unknown source '" + s + "'");
}

ContourVector contour_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::kParse, "contour must be a non-empty array");
  std::vector<double> coords;
  coords.reserve(2 * j.size());
  for (const json& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw Error(ErrorCode::kParse, "contour vertex must be [x, y]");
    }
    coords.push_back(p[0].get<double>());
    coords.push_back(p[1].get<double>());
  }
  try {
    return ContourVector(std::move(coords));
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, e.detail());
  }
}

}  // namespace

std::string to_string(LabelSource source) {
  switch (source) {
    case LabelSource::kSeed: return "seed";
    case LabelSource::kPseudo: return "pseudo";
    case LabelSource::kCorrected: return "corrected";
  }
  return "seed";
}

std::string to_json_line(const AnnotationRecord& r) {
  json instances = json::array();
  for (const auto& inst : r.sample.instances) {
    json contour = json::array();
    for (const Point& p : inst.contour.points()) contour.push_back({p.x, p.y});
    instances.push_back({{"contour", std::move(contour)}, {"confidence", inst.confidence}});
  }
  json j = {{"sample_id", r.sample.sample_id},
            {"image", r.image},
            {"instances", std::move(instances)},
            {"source", to_string(r.source)}};
  j["cobb"] = r.cobb ? json(*r.cobb) : json(nullptr);
  return j.dump();
}

AnnotationRecord parse_annotation(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kParse, "record must be a JSON object");
  AnnotationRecord r;
  try {
    r.sample.sample_id = j.at("sample_id").get<std::string>();
    if (r.sample.sample_id.empty()) throw Error(ErrorCode::kParse, "empty sample_id");
    r.image = j.value("image", std::string());
    if (!r.image.empty()) r.sample.image_ref = r.image;
    for (const json& inst : j.at("instances")) {
      VertebraInstance v;
      v.contour = contour_from_json(inst.at("contour"));
      v.confidence = inst.value("confidence", 1.0);
      if (!(v.confidence >= 0.0 && v.confidence <= 1.0)) {
        throw Error(ErrorCode::kParse, "confidence outside [0, 1]");
      }
      r.sample.instances.push_back(std::move(v));
    }
    if (j.contains("cobb") && !j["cobb"].is_null()) r.cobb = j["cobb"].get<CobbReport>();
    r.source = source_from_string(j.value("source", std::string("seed")));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, r.sample.sample_id.empty()
                                       ? std::string(e.what())
                                       : r.sample.sample_id + ": " + e.what());
  }
  sort_instances(r.sample);
  return r;
}

std::vector<AnnotationRecord> read_annotations(std::istream& in) {
  std::vector<AnnotationRecord> out;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_annotation(line));
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(n) + ": " + e.detail());
    }
  }
  return out;
}

std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return read_annotations(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

void write_annotations(std::ostream& out, const std::vector<AnnotationRecord>& records) {
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

void write_annotations(const std::filesystem::path& path,
                       const std::vector<AnnotationRecord>& records) {
  std::ostringstream ss;
  write_annotations(ss, records);
  write_file_atomic(path, ss.str());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) throw Error(ErrorCode::kIo, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace eigenspine
