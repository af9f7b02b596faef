#pragma once
// Synthetic corpora and random generators shared by the unit tests, the
// acceptance binary and the benchmark.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "iqakit/rng.hpp"
#include "iqakit/types.hpp"

namespace iqakit::testing {

struct FixtureOptions {
  std::size_t images = 100;
  std::uint64_t seed = 1;
  /// Boxes are at least this wide and tall, in normalized units.
  int min_box_side = 200;
  int max_boxes = 3;
};

/// Every corpus file populated: one record per image in each JSONL file plus
/// train_metadata.json attributes for the default question templates.
CorpusBundle make_fixture(const FixtureOptions& options = {});

/// make_fixture + save_corpus + a PNG per image.
CorpusBundle write_fixture(const std::filesystem::path& root, const FixtureOptions& options = {});

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(std::string_view name);

DistortionBox random_box(Rng& rng, const std::vector<std::string>& labels, int min_side = 1);
std::vector<DistortionBox> random_boxes(Rng& rng, const std::vector<std::string>& labels,
                                        std::size_t max_count, int min_side = 1);

/// A grounding record over a W x H image whose assistant turn lists `boxes`.
GroundingRecord grounding_record(std::string id, std::string image, int width, int height,
                                 std::vector<DistortionBox> boxes);

std::string read_file(const std::filesystem::path& path);

/// Relative path -> file bytes for every regular file under root.
std::map<std::string, std::string> tree_contents(const std::filesystem::path& root);

}  // namespace iqakit::testing
