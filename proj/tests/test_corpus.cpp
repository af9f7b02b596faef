#include <fstream>

#include "doctest.h"
#include "iqakit/corpus.hpp"
#include "iqakit/errors.hpp"
#include "support/fixture.hpp"

using namespace iqakit;
namespace fs = std::filesystem;

namespace {
const auto kTax = DistortionTaxonomy::defaults();

void append_line(const fs::path& p, const std::string& line) {
  std::ofstream out(p, std::ios::app);
  out << line << '\n';
}
}  // namespace

TEST_CASE("taxonomy") {
  DistortionTaxonomy t({" Blur ", "NOISE"});
  CHECK(t.labels() == std::vector<std::string>{"blur", "noise"});
  CHECK(t.contains("blur"));
  CHECK(t.normalize("  Noise") == "noise");
  CHECK_FALSE(t.normalize("banding").has_value());
  CHECK_THROWS(DistortionTaxonomy({"blur", "Blur"}));
  CHECK_THROWS(DistortionTaxonomy({""}));
  CHECK(kTax.labels().size() == 10);

  auto dir = testing::scratch_dir("tax");
  std::ofstream(dir / "t.txt") << "# comment\nblur\n\nJPEG artifact\n";
  CHECK(DistortionTaxonomy::from_file(dir / "t.txt").labels() == std::vector<std::string>{"blur", "jpeg artifact"});
  fs::remove_all(dir);
}

TEST_CASE("mos range") {
  CHECK_NOTHROW(MosScore(1.0));
  CHECK_NOTHROW(MosScore(5.0));
  CHECK_THROWS_AS(MosScore(0.5), OutOfRange);
  CHECK_THROWS_AS(MosScore(5.5), OutOfRange);
}

TEST_CASE("load and save") {
  auto dir = testing::scratch_dir("corpus");
  auto bundle = testing::make_fixture({.images = 100, .seed = 3});
  save_corpus(bundle, dir);

  SUBCASE("round trip is byte-identical") {
    auto before = testing::tree_contents(dir);
    auto loaded = load_corpus(dir, kTax);
    CHECK(loaded.diagnostics.empty());
    CHECK(loaded.bundle == bundle);
    auto again = testing::scratch_dir("corpus2");
    save_corpus(loaded.bundle, again);
    CHECK(testing::tree_contents(again) == before);
    save_corpus(loaded.bundle, again);
    CHECK(testing::tree_contents(again) == before);
    fs::remove_all(again);
  }
  SUBCASE("line counts equal record counts") {
    CHECK(count_lines(dir / corpus_files::kRegGrounding) == 100);
    CHECK(count_lines(dir / corpus_files::kMcq) == 100);
  }
  SUBCASE("empty mcq file") {
    std::ofstream(dir / corpus_files::kMcq, std::ios::trunc).close();
    auto loaded = load_corpus(dir, kTax);
    CHECK(loaded.bundle.mcq.empty());
    CHECK(loaded.diagnostics.empty());
  }
  SUBCASE("missing file") {
    fs::remove(dir / corpus_files::kScores);
    CHECK_THROWS_AS(load_corpus(dir, kTax), MissingCorpusFile);
  }
  SUBCASE("degenerate box") {
    auto rec = bundle.reg_grounding.front();
    rec.id = "rg_bad";
    rec.boxes.front().x2 = rec.boxes.front().x1;
    append_line(dir / corpus_files::kRegGrounding, to_json(rec).dump());
    auto loaded = load_corpus(dir, kTax);
    REQUIRE(loaded.diagnostics.size() == 1);
    CHECK(loaded.diagnostics[0].line == 101);
    CHECK(loaded.bundle.reg_grounding.size() == 100);
    try {
      load_corpus(dir, kTax, {.strict = true});
      FAIL("expected InvalidRecord");
    } catch (const InvalidRecord& e) {
      CHECK(e.line() == 101);
      CHECK(std::string(e.what()).find("x1") != std::string::npos);
    }
  }
  SUBCASE("other invalid records") {
    append_line(dir / corpus_files::kMcq, R"({"id":"m_x","image":"img_000","question":"q","options":["a"],"answer_index":3})");
    append_line(dir / corpus_files::kMcq, "not json");
    append_line(dir / corpus_files::kMcq, R"({"id":"m_y","image":"ghost","question":"q","options":["a","b"],"answer_index":0})");
    auto dup = bundle.dist_detect.front();
    dup.id = bundle.reg_grounding.front().id;
    append_line(dir / corpus_files::kDistDetect, to_json(dup).dump());
    auto unknown = bundle.dist_detect.front();
    unknown.id = "dd_unknown";
    unknown.boxes.front().label = "lens flare";
    append_line(dir / corpus_files::kDistDetect, to_json(unknown).dump());
    auto loaded = load_corpus(dir, kTax);
    CHECK(loaded.diagnostics.size() == 5);
    CHECK(loaded.bundle.mcq.size() == 100);
    CHECK(loaded.bundle.dist_detect.size() == 100);
  }
  SUBCASE("key distortions must appear among detections") {
    auto d = bundle.assess.front();
    d.id = "as_bad";
    d.key_distortions = {{"noise", 1, 1, 2, 2}};
    append_line(dir / corpus_files::kAssess, to_json(d).dump());
    d.id = "as_empty";
    d.key_distortions.clear();
    append_line(dir / corpus_files::kAssess, to_json(d).dump());
    CHECK(load_corpus(dir, kTax).diagnostics.size() == 2);
  }
  SUBCASE("metadata is optional") {
    fs::remove(dir / corpus_files::kMetadata);
    auto loaded = load_corpus(dir, kTax);
    CHECK(loaded.diagnostics.empty());
    CHECK(loaded.bundle.metadata.empty());
  }
  fs::remove_all(dir);
}

TEST_CASE("metadata_attribute") {
  nlohmann::json m = {{"images", {{"img_1", {{"noise level", "high"}, {"n", 3}}}}}};
  CHECK(metadata_attribute(m, "img_1", "noise level") == "high");
  CHECK_FALSE(metadata_attribute(m, "img_1", "brightness").has_value());
  CHECK_FALSE(metadata_attribute(m, "img_2", "noise level").has_value());
  CHECK_FALSE(metadata_attribute(nlohmann::json::object(), "img_1", "x").has_value());
}
