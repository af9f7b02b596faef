#include "doctest.h"
#include "iqakit/output_parser.hpp"
#include "support/fixture.hpp"

using namespace iqakit;

namespace {
const auto kTax = DistortionTaxonomy::defaults();
}

TEST_CASE("parse_detections canonical") {
  auto r = parse_detections("blur: [[120, 340, 560, 780]]", kTax);
  REQUIRE(r.boxes.size() == 1);
  CHECK(r.boxes[0] == DistortionBox{"blur", 120, 340, 560, 780});
  CHECK(r.diagnostics.empty());

  auto empty = parse_detections("", kTax);
  CHECK(empty.boxes.empty());
  REQUIRE(empty.diagnostics.size() == 1);
  CHECK(empty.diagnostics[0].find("no detections") != std::string::npos);
}

TEST_CASE("parse_detections lenient forms") {
  auto r = parse_detections("Motion Blur - [10,20,30,40] (50, 60, 70, 80)\nNOISE = [[1, 2, 3, 4]]", kTax);
  REQUIRE(r.boxes.size() == 3);
  CHECK(r.boxes[0] == DistortionBox{"motion blur", 10, 20, 30, 40});
  CHECK(r.boxes[1] == DistortionBox{"motion blur", 50, 60, 70, 80});
  CHECK(r.boxes[2] == DistortionBox{"noise", 1, 2, 3, 4});

  auto clamped = parse_detections("blur: [[-5, 10, 1200, 20]]", kTax);
  REQUIRE(clamped.boxes.size() == 1);
  CHECK(clamped.boxes[0] == DistortionBox{"blur", 0, 10, 1000, 20});
  CHECK_FALSE(clamped.diagnostics.empty());

  auto dropped = parse_detections("blur: [[50, 10, 40, 20]]", kTax);
  CHECK(dropped.boxes.empty());
  CHECK_FALSE(dropped.diagnostics.empty());

  CHECK(parse_detections("blur - [10,20,30,40]", kTax, {.strict = true}).boxes.empty());
}

TEST_CASE("serialize_detections groups consecutive labels") {
  std::vector<DistortionBox> boxes{{"blur", 1, 2, 3, 4}, {"blur", 5, 6, 7, 8}, {"noise", 0, 0, 9, 9}, {"blur", 1, 1, 2, 2}};
  auto text = serialize_detections(boxes);
  CHECK(text == "blur: [[1, 2, 3, 4], [5, 6, 7, 8]]\nnoise: [[0, 0, 9, 9]]\nblur: [[1, 1, 2, 2]]");
  CHECK(parse_detections(text, kTax, {.strict = true}).boxes == boxes);
}

TEST_CASE("serialize then parse is the identity") {
  Rng rng(31);
  for (int i = 0; i < 1000; ++i) {
    auto boxes = testing::random_boxes(rng, kTax.labels(), 8);
    auto text = serialize_detections(boxes);
    auto back = parse_detections(text, kTax, {.strict = true});
    REQUIRE(back.boxes == boxes);
    REQUIRE(parse_detections(text, kTax).boxes == boxes);
  }
}

TEST_CASE("fuzzed input never throws") {
  Rng rng(1234);
  const std::string alphabet = "[](),:-= 0123456789abcdefghijklmnopqrstuvwxyz\n\tBLURNOISE";
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    std::size_t n = rng.below(120);
    for (std::size_t k = 0; k < n; ++k) s += alphabet[rng.below(alphabet.size())];
    CHECK_NOTHROW(parse_detections(s, kTax));
    CHECK_NOTHROW(parse_description_response(s, kTax));
    CHECK_NOTHROW(parse_mcq_choice(s, 4));
  }
}

TEST_CASE("parse_mcq_choice") {
  CHECK(parse_mcq_choice("The answer is B.", 4) == 1);
  CHECK(parse_mcq_choice("b)", 4) == 1);
  CHECK(parse_mcq_choice("(C)", 4) == 2);
  CHECK_FALSE(parse_mcq_choice("E", 4).has_value());
  CHECK(parse_mcq_choice(render_mcq_answer(3), 4) == 3);
  std::vector<std::string> opts{"low", "medium", "high"};
  CHECK(parse_mcq_choice("I think it is medium overall", opts) == 1);
  CHECK_FALSE(parse_mcq_choice("I think it is medium overall", opts, {.strict = true}).has_value());
}

TEST_CASE("parse_quality_word") {
  CHECK(parse_quality_word("overall quality is fair") == QualityWord::fair);
  CHECK(parse_quality_word("not bad, in fact good") == QualityWord::good);
  CHECK_FALSE(parse_quality_word("").has_value());
  CHECK_FALSE(parse_quality_word("goodness").has_value());
  CHECK(parse_quality_word("EXCELLENT!") == QualityWord::excellent);
}

TEST_CASE("description response round trip") {
  std::vector<DistortionBox> det{{"noise", 10, 10, 500, 500}, {"blur", 0, 0, 1000, 300}};
  std::vector<DistortionBox> key{det[1]};
  auto text = render_description_response("Some detections: here. Quality: unclear.", det, key, QualityWord::poor);
  auto p = parse_description_response(text, kTax);
  CHECK(p.detections == det);
  CHECK(p.key_distortions == key);
  CHECK(p.quality_word == QualityWord::poor);

  auto letter = parse_description_response("Quality: c", kTax);
  CHECK_FALSE(letter.quality_word.has_value());
  bool demanded = false;
  for (const auto& d : letter.diagnostics) demanded |= d.find("must be mapped back") != std::string::npos;
  CHECK(demanded);
}
