#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "iqakit/types.hpp"

namespace iqakit {

namespace corpus_files {
inline constexpr const char* kImages = "images.jsonl";
inline constexpr const char* kRegGrounding = "reg-grounding.jsonl";
inline constexpr const char* kDistDetect = "dist_detect.jsonl";
inline constexpr const char* kMcq = "mcq.jsonl";
inline constexpr const char* kAssess = "assess.jsonl";
inline constexpr const char* kBriefAssess = "brief_assess.jsonl";
inline constexpr const char* kScores = "scores.jsonl";
inline constexpr const char* kMetadata = "train_metadata.json";
inline constexpr const char* kTaxonomy = "taxonomy.txt";
}  // namespace corpus_files

/// A problem found while loading; the offending record is left out of the bundle.
struct Diagnostic {
  std::string file;
  std::size_t line = 0;
  std::string reason;

  std::string to_string() const;
  bool operator==(const Diagnostic&) const = default;
};

struct LoadOptions {
  /// Throw InvalidRecord on the first bad line instead of collecting diagnostics.
  bool strict = false;
};

struct LoadResult {
  CorpusBundle bundle;
  std::vector<Diagnostic> diagnostics;
};

/// Reads every corpus file under `root`. All JSONL files must exist (they may
/// be empty); train_metadata.json is optional.
LoadResult load_corpus(const std::filesystem::path& root, const DistortionTaxonomy& taxonomy,
                       LoadOptions options = {});

/// Writes the seven JSONL files and train_metadata.json. Output depends only on
/// the bundle: fixed key order, file record order, LF endings.
void save_corpus(const CorpusBundle& bundle, const std::filesystem::path& root);

/// Checks every record against its invariants and the image index. Returns
/// the diagnostics instead of throwing.
std::vector<Diagnostic> validate_bundle(const CorpusBundle& bundle,
                                        const DistortionTaxonomy& taxonomy);

// Record <-> JSON. The encoders emit keys in schema order; the decoders throw
// std::invalid_argument with a human-readable reason.
nlohmann::ordered_json box_to_json(const DistortionBox& b);
nlohmann::ordered_json to_json(const AnnotatedImage& r);
nlohmann::ordered_json to_json(const GroundingRecord& r);
nlohmann::ordered_json to_json(const McqSample& r);
nlohmann::ordered_json to_json(const DescriptionSample& r);

DistortionBox box_from_json(const nlohmann::json& j, const DistortionTaxonomy& taxonomy);
AnnotatedImage image_from_json(const nlohmann::json& j, const DistortionTaxonomy& taxonomy);
GroundingRecord grounding_from_json(const nlohmann::json& j, const DistortionTaxonomy& taxonomy);
McqSample mcq_from_json(const nlohmann::json& j);
DescriptionSample description_from_json(const nlohmann::json& j,
                                        const DistortionTaxonomy& taxonomy);

/// Record invariant checks; empty string when the record is valid.
std::string check_record(const McqSample& r);
std::string check_record(const DescriptionSample& r, bool require_key_distortions);

/// Writes `lines` as one line each with a trailing LF.
void write_jsonl(const std::filesystem::path& path, const std::vector<std::string>& lines);

/// Line count of a file (number of LF characters).
std::size_t count_lines(const std::filesystem::path& path);

/// Looks up metadata["images"][image_id][key] as a string.
std::optional<std::string> metadata_attribute(const nlohmann::json& metadata,
                                              const std::string& image_id,
                                              const std::string& key);

}  // namespace iqakit
