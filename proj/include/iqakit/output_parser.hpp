#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iqakit/quality_levels.hpp"
#include "iqakit/types.hpp"

namespace iqakit {

// Canonical detection grammar (what serialize_detections writes):
//
//   detections := "" | entry ("\n" entry)*
//   entry      := label ": [" group (", " group)* "]"
//   group      := "[" int ", " int ", " int ", " int "]"
//
// Consecutive boxes sharing a label form one entry; list order is rank order.
// Outside strict mode the parser also accepts any case, ':' '-' '=' or no
// separator after the label, a missing outer bracket, '(' ')' groups and
// arbitrary whitespace.

struct ParseOptions {
  bool strict = false;
};

struct DetectionParse {
  std::vector<DistortionBox> boxes;
  std::vector<std::string> diagnostics;
};

/// Total on any input. Out-of-range coordinates are clamped to [0,1000];
/// groups with x1 >= x2 or y1 >= y2 are dropped. Both are diagnosed.
DetectionParse parse_detections(std::string_view text, const DistortionTaxonomy& taxonomy,
                                ParseOptions options = {});

std::string serialize_detections(std::span<const DistortionBox> boxes);

/// First standalone option letter in range (upper case preferred over lower
/// case), e.g. "B", "b)", "(C)".
std::optional<int> parse_mcq_choice(std::string_view text, int option_count);

/// As above, falling back to the longest option text found in the response
/// unless options.strict is set.
std::optional<int> parse_mcq_choice(std::string_view text, std::span<const std::string> options,
                                    ParseOptions parse = {});

/// Last whole-word occurrence of bad/poor/fair/good/excellent, any case.
std::optional<QualityWord> parse_quality_word(std::string_view text);

struct ParsedPrediction {
  std::vector<DistortionBox> detections;
  std::vector<DistortionBox> key_distortions;
  std::optional<int> mcq_choice;
  std::optional<QualityWord> quality_word;
  std::vector<std::string> diagnostics;
};

/// Splits a description response at its "Detections:", "Key distortions:"
/// and "Quality:" headers (the last occurrence of each) and parses each part.
ParsedPrediction parse_description_response(std::string_view text, const DistortionTaxonomy& taxonomy,
                                            ParseOptions options = {});

std::string render_description_response(std::string_view assessment,
                                        std::span<const DistortionBox> detections,
                                        std::span<const DistortionBox> key_distortions,
                                        std::optional<QualityWord> quality);

/// "Answer: C" for index 2.
std::string render_mcq_answer(int index);

}  // namespace iqakit
