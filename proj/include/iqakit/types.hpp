#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace iqakit {

/// Side length of the normalized coordinate grid used by every box.
inline constexpr int kCoordScale = 1000;

/// A typed distortion region in normalized [0,1000] coordinates.
struct DistortionBox {
  std::string label;
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;
  int y2 = 0;

  int width() const { return x2 - x1; }
  int height() const { return y2 - y1; }
  std::int64_t area() const { return std::int64_t{width()} * height(); }

  bool operator==(const DistortionBox&) const = default;
};

/// True when 0 <= x1 < x2 <= 1000 and 0 <= y1 < y2 <= 1000.
bool coords_valid(const DistortionBox& b);

/// Ordered set of distortion-type labels. Labels are trimmed and lowercased on
/// construction; empty or duplicate labels are rejected.
class DistortionTaxonomy {
 public:
  explicit DistortionTaxonomy(std::vector<std::string> labels);

  /// Ten common distortion types used when no taxonomy file is supplied.
  static DistortionTaxonomy defaults();
  /// One label per line; blank lines and lines starting with '#' are ignored.
  static DistortionTaxonomy from_file(const std::filesystem::path& path);

  const std::vector<std::string>& labels() const { return labels_; }
  bool contains(std::string_view label) const;
  /// Case-folded, trimmed label if it belongs to the taxonomy.
  std::optional<std::string> normalize(std::string_view label) const;

 private:
  std::vector<std::string> labels_;
};

/// Mean opinion score in [1,5].
class MosScore {
 public:
  explicit MosScore(double value);
  double value() const { return value_; }
  bool operator==(const MosScore&) const = default;

 private:
  double value_;
};

struct AnnotatedImage {
  std::string id;
  std::string path;  // relative to the corpus root
  int width = 0;
  int height = 0;
  MosScore mos{1.0};
  std::vector<DistortionBox> boxes;

  bool operator==(const AnnotatedImage&) const = default;
};

struct Turn {
  std::string role;
  std::string text;
  bool operator==(const Turn&) const = default;
};

/// A record from reg-grounding.jsonl or dist_detect.jsonl.
struct GroundingRecord {
  std::string id;
  std::string image;  // AnnotatedImage id
  int width = 0;
  int height = 0;
  std::vector<Turn> conversations;
  std::vector<DistortionBox> boxes;

  bool operator==(const GroundingRecord&) const = default;
};

struct McqSample {
  std::string id;
  std::string image;
  std::string question;
  std::vector<std::string> options;
  int answer_index = 0;

  const std::string& answer() const { return options.at(static_cast<std::size_t>(answer_index)); }
  bool operator==(const McqSample&) const = default;
};

/// A record from assess.jsonl, brief_assess.jsonl or scores.jsonl.
struct DescriptionSample {
  std::string id;
  std::string image;
  std::string assessment_text;
  std::vector<DistortionBox> detections;
  std::vector<DistortionBox> key_distortions;
  std::string quality_label;
  std::optional<MosScore> mos;

  bool operator==(const DescriptionSample&) const = default;
};

/// Everything a training corpus directory holds, in file order.
struct CorpusBundle {
  std::vector<AnnotatedImage> images;
  std::vector<GroundingRecord> reg_grounding;
  std::vector<GroundingRecord> dist_detect;
  std::vector<McqSample> mcq;
  std::vector<DescriptionSample> assess;
  std::vector<DescriptionSample> brief_assess;
  std::vector<DescriptionSample> scores;
  nlohmann::json metadata = nlohmann::json::object();

  const AnnotatedImage* find_image(std::string_view id) const;

  bool operator==(const CorpusBundle&) const = default;
};

}  // namespace iqakit
