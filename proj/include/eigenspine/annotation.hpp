#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "eigenspine/cobb.hpp"

// JSON-lines annotation files, one sample per line:
//   {"sample_id", "image", "instances": [{"contour": [[x, y], ...], "confidence"}],
//    "cobb", "source": "seed" | "pseudo" | "corrected"}
namespace eigenspine {

enum class LabelSource { kSeed, kPseudo, kCorrected };

std::string to_string(LabelSource source);

struct AnnotationRecord {
  SpineSample sample;
  std::string image;  // path as written in the file
  std::optional<CobbReport> cobb;
  LabelSource source = LabelSource::kSeed;
};

/// Serializes one record as a single JSON line (no trailing newline).
std::string to_json_line(const AnnotationRecord& record);

/// Parses one line. Throws kParse with a description of the offending field.
AnnotationRecord parse_annotation(const std::string& line);

/// Blank lines are skipped. Errors carry the 1-based line number.
std::vector<AnnotationRecord> read_annotations(std::istream& in);
std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path);

void write_annotations(std::ostream& out, const std::vector<AnnotationRecord>& records);
void write_annotations(const std::filesystem::path& path,
                       const std::vector<AnnotationRecord>& records);

/// Writes to a sibling temporary file and renames it over path.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace eigenspine
