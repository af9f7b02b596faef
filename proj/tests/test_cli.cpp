#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "iqakit/cli.hpp"
#include "iqakit/corpus.hpp"
#include "iqakit/metrics.hpp"
#include "iqakit/mixer.hpp"
#include "support/fixture.hpp"

using namespace iqakit;
namespace fs = std::filesystem;

namespace {
struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}
}  // namespace

TEST_CASE("cli") {
  auto root = testing::scratch_dir("cli");
  auto corpus = root / "corpus";
  testing::write_fixture(corpus, {.images = 20});

  SUBCASE("usage errors") {
    CHECK(run({}).code == cli::kUsage);
    CHECK(run({"validate", "--corpus", corpus.string(), "--bogus"}).code == cli::kUsage);
    CHECK(run({"--help"}).code == cli::kOk);
    CHECK(run({"mix", "--help"}).out.find("--ratio") != std::string::npos);
  }
  SUBCASE("validate") {
    auto r = run({"validate", "--corpus", corpus.string()});
    CHECK(r.code == cli::kOk);
    CHECK(r.out.find("diagnostics: 0") != std::string::npos);
    fs::remove(corpus / corpus_files::kBriefAssess);
    CHECK(run({"validate", "--corpus", corpus.string()}).code == cli::kMissingCorpusFile);
  }
  SUBCASE("mix is deterministic") {
    auto a = root / "a", b = root / "b";
    for (const auto& out : {a, b})
      REQUIRE(run({"mix", "--corpus", corpus.string(), "--out", out.string(), "--ratio", "0.3", "--seed", "7"}).code ==
              cli::kOk);
    auto ta = testing::tree_contents(a);
    CHECK(ta == testing::tree_contents(b));
    CHECK(ta.count(kMixManifest) == 1);
    CHECK(ta.count("run_manifest.json") == 1);
    CHECK(count_lines(a / corpus_files::kRegGrounding) + count_lines(a / corpus_files::kDistDetect) == 40 + 12);
    CHECK(run({"--workers", "1", "mix", "--corpus", corpus.string(), "--out", (root / "c").string(), "--ratio",
               "0.3", "--seed", "7"})
              .code == cli::kOk);
    CHECK(testing::tree_contents(root / "c") == ta);
  }
  SUBCASE("config file, environment and flags") {
    std::ofstream(root / "run.toml") << "[mix]\nratio = 0.5\nseed = 3\n";
    auto manifest = [&](const fs::path& out) {
      return nlohmann::json::parse(testing::read_file(out / "run_manifest.json"))["config"];
    };
    REQUIRE(run({"--config", (root / "run.toml").string(), "mix", "--corpus", corpus.string(), "--out",
                 (root / "c1").string()})
                .code == cli::kOk);
    CHECK(manifest(root / "c1")["ratio"] == 0.5);
    CHECK(manifest(root / "c1")["seed"] == 3);
    REQUIRE(run({"--config", (root / "run.toml").string(), "mix", "--corpus", corpus.string(), "--out",
                 (root / "c2").string(), "--ratio", "0.1"})
                .code == cli::kOk);
    CHECK(manifest(root / "c2")["ratio"] == 0.1);
    ::setenv("IQAKIT_SEED", "11", 1);
    REQUIRE(run({"mix", "--corpus", corpus.string(), "--out", (root / "c3").string()}).code == cli::kOk);
    ::unsetenv("IQAKIT_SEED");
    CHECK(manifest(root / "c3")["seed"] == 11);
  }
  SUBCASE("subcommands") {
    CHECK(run({"augment-grounding", "--corpus", corpus.string(), "--out", (root / "g").string(), "--ratio", "0.5",
               "--alpha-min", "0.8"})
              .code == cli::kOk);
    CHECK(count_lines(root / "g" / corpus_files::kImages) == 40);
    CHECK(run({"augment-perception", "--corpus", corpus.string(), "--out", (root / "p").string()}).code == cli::kOk);
    CHECK(count_lines(root / "p" / corpus_files::kMcq) == 100);
    CHECK(run({"refine-levels", "--corpus", corpus.string(), "--out", (root / "l").string(), "--levels", "15",
               "--score-only"})
              .code == cli::kOk);
    CHECK(count_lines(root / "l" / kScoreOnlyFile) == 20);
    CHECK(run({"refine-levels", "--corpus", corpus.string(), "--out", (root / "x").string(), "--levels", "7"}).code ==
          cli::kUsage);
  }
  SUBCASE("score") {
    auto tax = DistortionTaxonomy::defaults();
    auto gt = load_corpus(corpus, tax).bundle;
    auto preds = predictions_from_ground_truth(gt);
    save_predictions(root / "preds.jsonl", preds);
    auto report = root / "out" / "report.json";
    auto r = run({"score", "--gt", corpus.string(), "--predictions", (root / "preds.jsonl").string(), "--report",
                  report.string()});
    CHECK(r.code == cli::kOk);
    auto j = nlohmann::json::parse(testing::read_file(report));
    CHECK(j["final_score"] == 6.0);
    CHECK(fs::exists(root / "out" / "report.diagnostics.jsonl"));
    CHECK(fs::exists(root / "out" / "report.manifest.json"));

    preds.push_back(preds.front());
    save_predictions(root / "dup.jsonl", preds);
    CHECK(run({"score", "--gt", corpus.string(), "--predictions", (root / "dup.jsonl").string()}).code ==
          cli::kAlignment);
  }
  fs::remove_all(root);
}
