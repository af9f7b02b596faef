#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "iqakit/corpus.hpp"
#include "iqakit/rng.hpp"
#include "iqakit/types.hpp"

namespace iqakit {

/// A test-style question form.
///
/// `pattern` may use {category}, {image} and {<attribute>} placeholders, the
/// last resolved from the image's metadata attributes. `option_source` is one
/// of:
///   - "category"            every value of this category across the metadata
///   - "values:a|b|c"        a fixed list
///   - "metadata:<key>"      the string array metadata["option_sets"][key]
struct QuestionTemplate {
  std::string category;
  std::string pattern;
  std::string option_source = "category";
  int distractors = 3;

  bool operator==(const QuestionTemplate&) const = default;
};

/// Checks placeholder presence and category uniqueness.
void validate_templates(std::span<const QuestionTemplate> templates);

/// Built-in table matching the attribute keys of the default metadata layout.
std::vector<QuestionTemplate> default_question_templates();

/// JSON array of {category, pattern, option_source, distractors} objects.
std::vector<QuestionTemplate> load_question_templates(const std::filesystem::path& path);

/// Reorders options by `permutation` (new position i holds old option
/// permutation[i]) and moves the answer index with its content.
McqSample permute_options(const McqSample& sample, std::span<const std::size_t> permutation);

/// Uniform random permutation of the options (Fisher-Yates).
McqSample shuffle_options(const McqSample& sample, Rng& rng);

struct ExpandResult {
  McqSample sample;
  /// Set when the pool ran out before target_count was reached.
  bool pool_exhausted = false;
};

/// Appends distinct distractors drawn from `pool` until `target_count` options
/// exist, then shuffles. Pool entries already among the options are ignored.
ExpandResult expand_options(const McqSample& sample, std::span<const std::string> pool,
                            std::size_t target_count, Rng& rng);

/// Key under which MCQ questions share a distractor pool: the trimmed,
/// lowercased question text.
std::string question_category(const McqSample& sample);

/// Union of option strings per question category, sorted.
std::map<std::string, std::set<std::string>> distractor_pools(std::span<const McqSample> corpus);

struct RegenerateResult {
  std::vector<McqSample> samples;
  std::vector<Diagnostic> diagnostics;
};

/// One sample per (image, template) whose category the image's metadata
/// defines. Images are visited in metadata key order, templates in table
/// order; each sample draws from its own stream keyed by its id.
RegenerateResult regenerate_mcq(const nlohmann::json& metadata,
                                std::span<const QuestionTemplate> templates, std::uint64_t seed);

}  // namespace iqakit
