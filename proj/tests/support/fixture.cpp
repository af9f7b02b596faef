#include "support/fixture.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "iqakit/corpus.hpp"
#include "iqakit/image.hpp"
#include "iqakit/output_parser.hpp"
#include "iqakit/quality_levels.hpp"

namespace iqakit::testing {

namespace fs = std::filesystem;

namespace {

constexpr std::pair<int, int> kSizes[] = {{96, 64}, {80, 80}, {64, 96}, {120, 72}};

const std::vector<std::vector<std::string>> kAttributeValues = {
    {"none", "slight", "moderate", "severe"},
    {"low", "medium", "high"},
    {"dark", "normal", "bright", "overexposed"},
    {"faded", "natural", "vivid"},
};
const std::vector<std::string> kAttributeKeys = {"blur severity", "noise level", "brightness",
                                                 "color saturation"};

std::string numbered(std::string_view prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%03zu", i);
  return std::string(prefix) + buf;
}

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[rng.below(v.size())];
}

Image synth_pixels(int w, int h, std::uint64_t seed) {
  Image img(w, h, 3);
  Rng rng(seed);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.pixels[(static_cast<std::size_t>(y) * w + x) * 3 + c] =
            static_cast<std::uint8_t>((x * 3 + y * 5 + c * 40 + rng.below(16)) & 0xff);
  return img;
}

}  // namespace

DistortionBox random_box(Rng& rng, const std::vector<std::string>& labels, int min_side) {
  auto span = [&](int& lo, int& hi) {
    int len = min_side + static_cast<int>(rng.below(static_cast<std::uint64_t>(kCoordScale - min_side + 1)));
    lo = static_cast<int>(rng.below(static_cast<std::uint64_t>(kCoordScale - len + 1)));
    hi = lo + len;
  };
  DistortionBox b;
  b.label = pick(rng, labels);
  span(b.x1, b.x2);
  span(b.y1, b.y2);
  return b;
}

std::vector<DistortionBox> random_boxes(Rng& rng, const std::vector<std::string>& labels,
                                        std::size_t max_count, int min_side) {
  std::vector<DistortionBox> out(rng.below(max_count + 1));
  for (auto& b : out) b = random_box(rng, labels, min_side);
  return out;
}

GroundingRecord grounding_record(std::string id, std::string image, int width, int height,
                                 std::vector<DistortionBox> boxes) {
  GroundingRecord r;
  r.id = std::move(id);
  r.image = std::move(image);
  r.width = width;
  r.height = height;
  r.conversations = {{"human", "<image>\nMark every region with a visible quality problem."},
                     {"gpt", serialize_detections(boxes)}};
  r.boxes = std::move(boxes);
  return r;
}

CorpusBundle make_fixture(const FixtureOptions& options) {
  const auto labels = DistortionTaxonomy::defaults().labels();
  const auto five = QualityScale::five();
  Rng rng(options.seed);
  CorpusBundle b;
  nlohmann::json images_meta = nlohmann::json::object();

  for (std::size_t i = 0; i < options.images; ++i) {
    AnnotatedImage img;
    img.id = numbered("img_", i);
    img.path = "images/" + img.id + ".png";
    auto [w, h] = kSizes[rng.below(std::size(kSizes))];
    img.width = w;
    img.height = h;
    img.mos = MosScore(1.0 + static_cast<double>(rng.below(401)) / 100.0);
    std::size_t n = 1 + rng.below(static_cast<std::uint64_t>(options.max_boxes));
    for (std::size_t k = 0; k < n; ++k) img.boxes.push_back(random_box(rng, labels, options.min_box_side));
    b.images.push_back(img);

    b.reg_grounding.push_back(grounding_record(numbered("rg_", i), img.id, w, h, img.boxes));
    std::vector<DistortionBox> typed;
    for (const auto& box : img.boxes)
      if (box.label == img.boxes.front().label) typed.push_back(box);
    auto dd = grounding_record(numbered("dd_", i), img.id, w, h, typed);
    dd.conversations.front().text = "<image>\nWhere is the " + typed.front().label + " in this image?";
    b.dist_detect.push_back(std::move(dd));

    McqSample q;
    q.id = numbered("mcq_", i);
    q.image = img.id;
    q.question = "What is the noise level of this image?";
    q.options = kAttributeValues[1];
    q.answer_index = static_cast<int>(rng.below(q.options.size()));
    b.mcq.push_back(q);

    DescriptionSample d;
    d.image = img.id;
    d.mos = img.mos;
    d.quality_label = quantize(img.mos, five);
    d.detections = img.boxes;

    d.id = numbered("as_", i);
    d.assessment_text = "Several regions show visible degradation that lowers the overall impression.";
    d.key_distortions = {img.boxes.front()};
    b.assess.push_back(d);

    d.id = numbered("ba_", i);
    d.assessment_text = "Brief: the main problem is " + img.boxes.front().label + ".";
    d.key_distortions.clear();
    b.brief_assess.push_back(d);

    d.id = numbered("sc_", i);
    d.assessment_text = "";
    d.detections.clear();
    b.scores.push_back(d);

    nlohmann::json attrs = nlohmann::json::object();
    for (std::size_t k = 0; k < kAttributeKeys.size(); ++k) attrs[kAttributeKeys[k]] = pick(rng, kAttributeValues[k]);
    attrs["main distortion"] = img.boxes.front().label;
    images_meta[img.id] = std::move(attrs);
  }
  b.metadata = {{"images", std::move(images_meta)}};
  return b;
}

CorpusBundle write_fixture(const fs::path& root, const FixtureOptions& options) {
  auto bundle = make_fixture(options);
  save_corpus(bundle, root);
  for (std::size_t i = 0; i < bundle.images.size(); ++i) {
    const auto& img = bundle.images[i];
    save_image(root / img.path, synth_pixels(img.width, img.height, options.seed * 1000003 + i));
  }
  return bundle;
}

fs::path scratch_dir(std::string_view name) {
  static std::uint64_t counter = 0;
  auto dir = fs::temp_directory_path() /
             ("iqakit_" + std::string(name) + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
  return out;
}

}  // namespace iqakit::testing
