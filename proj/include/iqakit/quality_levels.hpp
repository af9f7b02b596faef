#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iqakit/corpus.hpp"
#include "iqakit/types.hpp"

namespace iqakit {

/// The canonical five-level quality vocabulary.
enum class QualityWord { bad = 0, poor, fair, good, excellent };

std::string_view to_string(QualityWord w);
/// Exact (lowercase) match against the five words.
std::optional<QualityWord> parse_quality_word_exact(std::string_view s);

/// k-level label set over MOS [1,5]. k = 5 uses the five words; larger k uses
/// consecutive letters starting at 'a'.
class QualityScale {
 public:
  /// k must be one of 5, 10, 15, 20.
  static QualityScale with_levels(int k);
  static QualityScale five() { return with_levels(5); }

  int levels() const { return k_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<std::size_t> index_of(std::string_view label) const;

 private:
  explicit QualityScale(int k);
  int k_;
  std::vector<std::string> labels_;
};

bool is_supported_levels(int k);

/// True if `label` belongs to any supported scale (a five-level word or a-t).
bool is_scale_label(std::string_view label);

/// Zero-based level index of s: the i with 1 + 4i/k <= s < 1 + 4(i+1)/k, with
/// s == 5 clamped to the top level. Bounds are the correctly rounded values of
/// the exact rationals (k + 4i)/k, so scales sharing a boundary agree on it.
std::size_t quantize_index(double s, int k);

std::string quantize(MosScore s, const QualityScale& scale);
/// Throws OutOfRange when s is outside [1,5].
std::string quantize(double s, const QualityScale& scale);

/// Projects a k-level label onto the five-level scale: contiguous blocks of
/// k/5 labels map to bad..excellent. Throws UnknownLabel.
QualityWord map_back(std::string_view label, const QualityScale& scale);

struct RefineResult {
  CorpusBundle bundle;
  std::vector<Diagnostic> diagnostics;
};

/// Rewrites quality_label in assess, brief_assess and scores records to
/// quantize(mos, scale). Records without a MOS pass through unchanged.
RefineResult refine_description_files(const CorpusBundle& bundle, const QualityScale& scale);

/// Prompt/response pair for score-only records. `response` must contain the
/// {quality} placeholder.
struct ScoreOnlyTemplate {
  std::string prompt;
  std::string response;

  static ScoreOnlyTemplate defaults();
  /// JSON object with "prompt" and "response" strings.
  static ScoreOnlyTemplate from_file(const std::filesystem::path& path);
};

inline constexpr std::string_view kQualityPlaceholder = "{quality}";

struct ScoreOnlyRecord {
  std::string id;
  std::string image;
  std::string prompt;
  std::string target;

  bool operator==(const ScoreOnlyRecord&) const = default;
};

std::vector<ScoreOnlyRecord> make_score_only_records(std::span<const DescriptionSample> descriptions,
                                                     const ScoreOnlyTemplate& tmpl);

nlohmann::ordered_json to_json(const ScoreOnlyRecord& r);

}  // namespace iqakit
