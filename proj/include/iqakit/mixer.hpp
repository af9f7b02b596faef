#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "iqakit/corpus.hpp"
#include "iqakit/image.hpp"
#include "iqakit/perception.hpp"
#include "iqakit/quality_levels.hpp"
#include "iqakit/spatial.hpp"

namespace iqakit {

enum class GroundingMode { add, replace };
enum class PerceptionStrategy { none, selfmade, shuffle, more_options };

std::string to_string(GroundingMode m);
std::string to_string(PerceptionStrategy s);
GroundingMode parse_grounding_mode(const std::string& s);
PerceptionStrategy parse_perception_strategy(const std::string& s);

struct MixPlan {
  /// Fraction of grounding records (both files pooled) that get augmented.
  double grounding_ratio = 0.0;
  GroundingMode grounding_mode = GroundingMode::add;
  /// Augmented copies per selected record (add mode only).
  int copies = 1;
  AugmentPolicy policy;
  PerceptionStrategy perception = PerceptionStrategy::none;
  std::size_t target_options = 5;
  std::vector<QuestionTemplate> templates = default_question_templates();
  /// Unset leaves description labels untouched.
  std::optional<int> description_levels;
  std::optional<ScoreOnlyTemplate> score_only;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument.
  void validate() const;
};

/// floor(ratio * n), tolerant of binary representation error in `ratio`.
std::size_t ratio_count(double ratio, std::size_t n);

/// Pixel access for the mixer. `store` is called concurrently for distinct
/// images and must be thread-safe.
class ImageStore {
 public:
  virtual ~ImageStore() = default;
  virtual Image load(const AnnotatedImage& image) = 0;
  virtual void store(const AnnotatedImage& image, const Image& pixels) = 0;
};

/// Reads from `source_root`/path and writes to `output_root`/path.
class DirectoryImageStore : public ImageStore {
 public:
  DirectoryImageStore(std::filesystem::path source_root, std::filesystem::path output_root);
  Image load(const AnnotatedImage& image) override;
  void store(const AnnotatedImage& image, const Image& pixels) override;

 private:
  std::filesystem::path source_root_;
  std::filesystem::path output_root_;
};

/// "dir/name.png" + ("rg_1", "_aug0") -> "dir/name__rg_1_aug0.png".
std::string augmented_image_path(const std::string& source_path, const std::string& record_id,
                                 const std::string& suffix);

struct MixResult {
  CorpusBundle bundle;
  std::vector<ScoreOnlyRecord> score_only;
  std::vector<Diagnostic> diagnostics;
  /// Ids of the grounding records that were augmented, in output order.
  std::vector<std::string> augmented_ids;
};

/// Mixes the three task families: augments a seeded selection of grounding records (add or
/// replace), transforms mcq.jsonl per the perception strategy, and rewrites
/// description labels on the requested scale. Output order depends only on
/// (bundle, plan). Augmentation runs record-parallel.
MixResult mix(const CorpusBundle& bundle, const MixPlan& plan, ImageStore& images);

/// Same result computed without OpenMP; kept as the reference for tests and
/// the benchmark.
MixResult mix_serial(const CorpusBundle& bundle, const MixPlan& plan, ImageStore& images);

/// Reproducibility manifest: the effective plan plus per-file record counts
/// before and after.
nlohmann::ordered_json describe_plan(const MixPlan& plan, const CorpusBundle& before, const MixResult& after);

/// Augmentation label for the manifest, e.g. "horizontal_flip+random_crop".
std::string augmentation_kind(const AugmentPolicy& policy);

inline constexpr const char* kMixManifest = "mix_manifest.json";
inline constexpr const char* kScoreOnlyFile = "score_only.jsonl";

/// Saves the corpus, copies the source images it references (augmented ones
/// are already written by the store), and writes score_only.jsonl and the
/// manifest.
void write_mix_output(const MixResult& result, const nlohmann::ordered_json& manifest,
                      const std::filesystem::path& source_root, const std::filesystem::path& output_root);

}  // namespace iqakit
