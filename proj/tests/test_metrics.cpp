#include <cmath>

#include "doctest.h"
#include "iqakit/errors.hpp"
#include "iqakit/metrics.hpp"
#include "support/ap_oracle.hpp"
#include "support/fixture.hpp"

using namespace iqakit;
using Boxes = std::vector<DistortionBox>;

namespace {
const std::vector<double> kHalf{0.5};

DistortionBox grid_box(Rng& rng, const std::vector<std::string>& labels) {
  // coarse grid so ties and exact IoU = 0.5 occur often
  auto c = [&] { return static_cast<int>(rng.below(11)) * 100; };
  DistortionBox b;
  b.label = labels[rng.below(labels.size())];
  do {
    b.x1 = c(), b.x2 = c(), b.y1 = c(), b.y2 = c();
    if (b.x1 > b.x2) std::swap(b.x1, b.x2);
    if (b.y1 > b.y2) std::swap(b.y1, b.y2);
  } while (!coords_valid(b));
  return b;
}
}  // namespace

TEST_CASE("iou") {
  DistortionBox a{"blur", 0, 0, 100, 100};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, {"blur", 200, 200, 300, 300}) == 0.0);
  CHECK(iou(a, {"blur", 50, 0, 150, 100}) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(iou(a, {"blur", 100, 0, 200, 100}) == 0.0);  // shared edge
  Rng rng(2);
  const auto labels = DistortionTaxonomy::defaults().labels();
  for (int i = 0; i < 1000; ++i) {
    auto x = testing::random_box(rng, labels), y = testing::random_box(rng, labels);
    double v = iou(x, y);
    REQUIRE(v == iou(y, x));
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
    REQUIRE((v == 1.0) == (x.x1 == y.x1 && x.x2 == y.x2 && x.y1 == y.y1 && x.y2 == y.y2));
  }
}

TEST_CASE("average_precision cases") {
  DistortionBox g{"blur", 100, 100, 400, 400};
  Boxes gt{g};
  CHECK(average_precision(gt, gt, 0.5, false) == 1.0);
  Boxes wrong_then_right{{"blur", 600, 600, 900, 900}, g};
  CHECK(average_precision(wrong_then_right, gt, 0.5, false) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(average_precision({}, gt, 0.5, false) == 0.0);
  CHECK(average_precision({}, {}, 0.5, false) == 1.0);
  CHECK(average_precision(gt, {}, 0.5, false) == 0.0);
  Boxes relabeled{{"noise", 100, 100, 400, 400}};
  CHECK(average_precision(relabeled, gt, 0.5, false) == 0.0);
  CHECK(average_precision(relabeled, gt, 0.5, true) == 1.0);
}

TEST_CASE("average_precision matches the brute-force oracle") {
  Rng rng(99);
  const std::vector<std::string> labels{"blur", "noise"};
  for (int it = 0; it < 3000; ++it) {
    Boxes p(rng.below(6)), g(rng.below(6));
    for (auto& b : p) b = grid_box(rng, labels);
    for (auto& b : g) b = grid_box(rng, labels);
    // near-copies of GT make true positives common
    if (!g.empty() && !p.empty() && rng.bernoulli(0.7)) p[rng.below(p.size())] = g[rng.below(g.size())];
    for (bool agnostic : {false, true}) {
      REQUIRE(average_precision(p, g, 0.5, agnostic) ==
              doctest::Approx(testing::oracle_ap(p, g, 1, 2, agnostic)).epsilon(1e-12));
      REQUIRE(average_precision(p, g, 0.75, agnostic) ==
              doctest::Approx(testing::oracle_ap(p, g, 3, 4, agnostic)).epsilon(1e-12));
    }
  }
}

TEST_CASE("region_map") {
  std::vector<DetectionPair> perfect{{{{"blur", 0, 0, 500, 500}}, {{"blur", 0, 0, 500, 500}}},
                                     {{{"noise", 100, 100, 200, 200}}, {{"noise", 100, 100, 200, 200}}}};
  CHECK(region_map(perfect, kHalf) == 1.0);
  auto empty = perfect;
  for (auto& r : empty) r.predictions.clear();
  CHECK(region_map(empty, kHalf) == 0.0);
  CHECK(region_map(std::vector<DetectionPair>{}, kHalf) == 0.0);

  // Three hand-made images, scored per image by the oracle.
  std::vector<DetectionPair> three{
      {{{"blur", 0, 0, 400, 400}, {"noise", 500, 500, 900, 900}}, {{"blur", 0, 0, 400, 400}}},
      {{{"blur", 600, 0, 1000, 300}, {"blur", 0, 0, 300, 300}, {"noise", 0, 0, 320, 300}},
       {{"noise", 0, 0, 300, 300}, {"blur", 0, 600, 300, 1000}}},
      {{}, {{"banding", 100, 100, 900, 900}}},
  };
  double expect = 0;
  for (const auto& r : three) expect += testing::oracle_ap(r.predictions, r.ground_truth, 1, 2, true);
  expect /= 3;
  CHECK(region_map(three, kHalf) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect == doctest::Approx((1.0 + 0.25 + 0.0) / 3));
}

TEST_CASE("distortion_map") {
  std::vector<DetectionPair> wrong{{{{"noise", 0, 0, 500, 500}}, {{"blur", 0, 0, 500, 500}}}};
  CHECK(distortion_map(wrong, kHalf) == 0.0);
  std::vector<DetectionPair> single{{{{"blur", 0, 0, 500, 500}}, {{"blur", 0, 0, 500, 500}}},
                                    {{{"blur", 10, 10, 50, 50}}, {{"blur", 10, 10, 50, 50}}}};
  CHECK(distortion_map(single, kHalf) == 1.0);
  std::vector<DetectionPair> two{{{{"blur", 0, 0, 500, 500}}, {{"blur", 0, 0, 500, 500}, {"noise", 600, 600, 900, 900}}}};
  std::map<std::string, double> per_class;
  CHECK(distortion_map(two, kHalf, MapMode::pooled, &per_class) == 0.5);
  CHECK(per_class.at("blur") == 1.0);
  CHECK(per_class.at("noise") == 0.0);

  SUBCASE("pooled ranking interleaves records by in-record rank") {
    std::vector<DetectionPair> recs{
        {{{"blur", 0, 0, 100, 100}, {"blur", 0, 0, 500, 500}}, {{"blur", 0, 0, 500, 500}}},
        {{{"blur", 600, 600, 700, 700}}, {{"blur", 0, 0, 100, 100}}},
    };
    // pooled order: r0p0 (FP), r1p0 (FP), r0p1 (TP); G = 2
    auto tp = std::vector<bool>{false, false, true};
    CHECK(distortion_map(recs, kHalf) == doctest::Approx(testing::oracle_ap_from(tp, 2)).epsilon(1e-15));
    CHECK(distortion_map(recs, kHalf, MapMode::per_image) == doctest::Approx(0.25));
  }
}

TEST_CASE("class-agnostic AP dominates label-aware AP when GT cells are disjoint") {
  Rng rng(61);
  const auto labels = DistortionTaxonomy::defaults().labels();
  for (int it = 0; it < 2000; ++it) {
    // 4x4 grid of 250-unit cells; each GT and each prediction stays inside one cell
    Boxes g, p;
    for (int cell = 0; cell < 16; ++cell) {
      if (!rng.bernoulli(0.3)) continue;
      int cx = (cell % 4) * 250, cy = (cell / 4) * 250;
      DistortionBox b{labels[rng.below(3)], cx + 20, cy + 20, cx + 230, cy + 230};
      g.push_back(b);
      for (std::size_t k = rng.below(3); k > 0; --k) {
        DistortionBox q = b;
        q.label = labels[rng.below(3)];
        q.x1 -= static_cast<int>(rng.below(21));
        q.x2 -= static_cast<int>(rng.below(100));
        p.push_back(q);
      }
    }
    for (std::size_t i = p.size(); i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
    REQUIRE(average_precision(p, g, 0.5, true) >= average_precision(p, g, 0.5, false) - 1e-12);
  }
}

TEST_CASE("accuracies") {
  std::vector<std::optional<int>> all{0, 1, 2};
  std::vector<int> gold{0, 1, 2};
  CHECK(perception_accuracy(all, gold) == 1.0);
  std::vector<std::optional<int>> none(3);
  CHECK(perception_accuracy(none, gold) == 0.0);
  std::vector<int> short_gold{0};
  CHECK_THROWS_AS(perception_accuracy(all, short_gold), AlignmentError);

  std::vector<std::optional<QualityWord>> fair(4, QualityWord::fair);
  std::vector<QualityWord> gold_fair(4, QualityWord::fair);
  CHECK(image_quality_accuracy(fair, gold_fair) == 1.0);
  std::vector<std::string> letters{"c", "fair", "e", "fair"};
  std::vector<std::string> diags;
  CHECK(image_quality_accuracy(letters, gold_fair, diags) == 0.5);
  REQUIRE(diags.size() == 2);
  CHECK(diags[0].find("map_back") != std::string::npos);
}

TEST_CASE("key_distortion_accuracy") {
  DistortionBox k{"blur", 0, 0, 100, 100};
  std::vector<DetectionPair> exact{{{k}, {k}}};
  CHECK(key_distortion_accuracy(exact).value == 1.0);
  std::vector<DetectionPair> relabeled{{{{"noise", 0, 0, 100, 100}}, {k}}};
  CHECK(key_distortion_accuracy(relabeled).value == 0.0);
  DistortionBox forty{"blur", 0, 0, 100, 40};
  REQUIRE(iou(k, forty) == doctest::Approx(0.4));
  std::vector<DetectionPair> low{{{forty}, {k}}};
  CHECK(key_distortion_accuracy(low).value == 0.0);
  std::vector<DetectionPair> mixed{{{k}, {k, {"noise", 500, 500, 900, 900}}}, {{}, {}}};
  auto r = key_distortion_accuracy(mixed);
  CHECK(r.value == 0.5);
  CHECK(r.evaluated == 1);
  CHECK(r.skipped == 1);
}

TEST_CASE("final_score") {
  CHECK(final_score({}) == 0.0);
  ScoreComponents c{0.72, 0.14, 0.11, 0.14, 0.37, 0.78};
  CHECK(std::abs(final_score(c) - 2.26) < 1e-12);
  ScoreComponents top{0.81, 0.40, 0.12, 0.20, 0.43, 0.83};
  CHECK(std::abs(final_score(top) - 2.80) <= 0.015);
}

TEST_CASE("score_predictions on the fixture") {
  auto bundle = testing::make_fixture({.images = 25});
  const auto tax = DistortionTaxonomy::defaults();
  auto preds = predictions_from_ground_truth(bundle);

  auto report = score_predictions(bundle, preds, tax);
  CHECK(report.components.perception_accuracy == 1.0);
  CHECK(report.components.region_map == 1.0);
  CHECK(report.components.distortion_map == 1.0);
  CHECK(report.components.description_map == 1.0);
  CHECK(report.components.key_distortion_acc == 1.0);
  CHECK(report.components.image_quality_accuracy == 1.0);
  CHECK(report.final_score == 6.0);
  CHECK(report.to_json()["final_score"] == 6.0);
  CHECK(report.to_table().find("6.0") != std::string::npos);

  SUBCASE("missing predictions count as empty") {
    preds.erase(preds.begin());
    auto r = score_predictions(bundle, preds, tax);
    CHECK(r.final_score < 6.0);
    std::size_t missing = 0;
    for (const auto& [task, c] : r.counts) missing += c.missing_predictions;
    CHECK(missing == 1);
  }
  SUBCASE("stray ids are diagnosed") {
    preds.push_back({"nope", "A"});
    auto r = score_predictions(bundle, preds, tax);
    CHECK(r.final_score == 6.0);
    CHECK_FALSE(r.diagnostics.empty());
  }
  SUBCASE("ids shared between scored files are an alignment error") {
    bundle.mcq.front().id = bundle.reg_grounding.front().id;
    CHECK_THROWS_AS(score_predictions(bundle, preds, tax), AlignmentError);
  }
  SUBCASE("letter labels need a scale") {
    auto refined = refine_description_files(bundle, QualityScale::with_levels(10)).bundle;
    auto p10 = predictions_from_ground_truth(refined, 10);
    CHECK_THROWS(score_predictions(refined, p10, tax));
    ScoreOptions o;
    o.levels = 10;
    CHECK(score_predictions(refined, p10, tax, o).final_score == 6.0);
  }
}

TEST_CASE("prediction files") {
  auto dir = testing::scratch_dir("preds");
  std::vector<Prediction> p{{"a", "blur: [[1, 2, 3, 4]]"}, {"b", "Answer: C"}};
  save_predictions(dir / "p.jsonl", p);
  auto back = load_predictions(dir / "p.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[1].response == "Answer: C");
  p.push_back({"a", "x"});
  save_predictions(dir / "dup.jsonl", p);
  CHECK_THROWS_AS(load_predictions(dir / "dup.jsonl"), AlignmentError);
  CHECK_THROWS_AS(load_predictions(dir / "absent.jsonl"), IoError);
  std::filesystem::remove_all(dir);
}
