#include "iqakit/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "iqakit/corpus.hpp"
#include "iqakit/errors.hpp"
#include "iqakit/metrics.hpp"
#include "iqakit/mixer.hpp"

namespace iqakit::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct RunConfig {
  std::string subcommand;
  std::string corpus;
  std::string out;
  std::string taxonomy;
  bool strict = false;
  int workers = 0;

  // grounding
  double ratio = 0.0;
  std::string mode = "add";
  int copies = 1;
  AugmentPolicy policy;

  // perception
  std::string perception = "none";
  std::size_t target_options = 5;
  std::string templates;

  // description
  int levels = 0;
  std::string score_only_template;
  bool score_only = false;

  std::uint64_t seed = 0;

  // score
  std::string predictions;
  std::string report;
  std::vector<double> iou_thresholds{0.5};
  std::string map_mode = "default";
  bool strict_parse = false;
  std::string manifest;
};

DistortionTaxonomy resolve_taxonomy(const RunConfig& cfg, const std::string& root) {
  if (!cfg.taxonomy.empty()) return DistortionTaxonomy::from_file(cfg.taxonomy);
  auto local = fs::path(root) / corpus_files::kTaxonomy;
  if (!root.empty() && fs::exists(local)) return DistortionTaxonomy::from_file(local);
  return DistortionTaxonomy::defaults();
}

ordered_json config_json(const RunConfig& cfg) {
  ordered_json j;
  j["schema_version"] = 1;
  j["subcommand"] = cfg.subcommand;
  ordered_json c;
  c["corpus"] = cfg.corpus;
  c["taxonomy"] = cfg.taxonomy;
  c["strict"] = cfg.strict;
  c["seed"] = cfg.seed;
  if (cfg.subcommand == "score") {
    c["predictions"] = cfg.predictions;
    c["iou_thresholds"] = cfg.iou_thresholds;
    c["map_mode"] = cfg.map_mode;
    c["strict_parse"] = cfg.strict_parse;
    c["levels"] = cfg.levels;
  } else if (cfg.subcommand != "validate") {
    c["ratio"] = cfg.ratio;
    c["mode"] = cfg.mode;
    c["copies"] = cfg.copies;
    c["alpha_min"] = cfg.policy.alpha_min;
    c["alpha_max"] = cfg.policy.alpha_max;
    c["flip_prob"] = cfg.policy.flip_probability;
    c["retention"] = cfg.policy.min_box_retention;
    c["max_retries"] = cfg.policy.max_retries;
    c["max_tokens"] = cfg.policy.max_tokens;
    c["patch_px"] = cfg.policy.patch_px;
    c["perception"] = cfg.perception;
    c["target_options"] = cfg.target_options;
    c["templates"] = cfg.templates;
    c["levels"] = cfg.levels;
    c["score_only"] = cfg.score_only;
    c["score_only_template"] = cfg.score_only_template;
  }
  j["config"] = std::move(c);
  return j;
}

void write_manifest(const fs::path& path, const RunConfig& cfg) {
  write_jsonl(path, {config_json(cfg).dump(2)});
}

LoadResult load(const RunConfig& cfg, const DistortionTaxonomy& taxonomy, std::ostream& err) {
  auto result = load_corpus(cfg.corpus, taxonomy, {cfg.strict});
  for (const auto& d : result.diagnostics) err << "warning: " << d.to_string() << '\n';
  return result;
}

int do_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto taxonomy = resolve_taxonomy(cfg, cfg.corpus);
  auto loaded = load(cfg, taxonomy, err);
  const auto& b = loaded.bundle;
  out << corpus_files::kImages << ": " << b.images.size() << '\n'
      << corpus_files::kRegGrounding << ": " << b.reg_grounding.size() << '\n'
      << corpus_files::kDistDetect << ": " << b.dist_detect.size() << '\n'
      << corpus_files::kMcq << ": " << b.mcq.size() << '\n'
      << corpus_files::kAssess << ": " << b.assess.size() << '\n'
      << corpus_files::kBriefAssess << ": " << b.brief_assess.size() << '\n'
      << corpus_files::kScores << ": " << b.scores.size() << '\n'
      << "diagnostics: " << loaded.diagnostics.size() << '\n';
  if (!cfg.manifest.empty()) write_manifest(cfg.manifest, cfg);
  return loaded.diagnostics.empty() ? kOk : kInvalidRecord;
}

int do_mix(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.out.empty()) throw std::invalid_argument("--out is required");
  auto taxonomy = resolve_taxonomy(cfg, cfg.corpus);
  auto loaded = load(cfg, taxonomy, err);

  MixPlan plan;
  plan.grounding_ratio = cfg.ratio;
  plan.grounding_mode = parse_grounding_mode(cfg.mode);
  plan.copies = cfg.copies;
  plan.policy = cfg.policy;
  plan.policy.seed = cfg.seed;
  plan.perception = parse_perception_strategy(cfg.perception);
  plan.target_options = cfg.target_options;
  if (!cfg.templates.empty()) plan.templates = load_question_templates(cfg.templates);
  if (cfg.levels != 0) plan.description_levels = cfg.levels;
  if (!cfg.score_only_template.empty())
    plan.score_only = ScoreOnlyTemplate::from_file(cfg.score_only_template);
  else if (cfg.score_only)
    plan.score_only = ScoreOnlyTemplate::defaults();
  plan.seed = cfg.seed;
  plan.validate();

  fs::create_directories(cfg.out);
  DirectoryImageStore store(cfg.corpus, cfg.out);
  auto result = mix(loaded.bundle, plan, store);
  for (const auto& d : result.diagnostics) err << "note: " << d.to_string() << '\n';
  auto manifest = describe_plan(plan, loaded.bundle, result);
  write_mix_output(result, manifest, cfg.corpus, cfg.out);
  if (fs::exists(fs::path(cfg.corpus) / corpus_files::kTaxonomy))
    fs::copy_file(fs::path(cfg.corpus) / corpus_files::kTaxonomy, fs::path(cfg.out) / corpus_files::kTaxonomy,
                  fs::copy_options::overwrite_existing);
  write_manifest(fs::path(cfg.out) / "run_manifest.json", cfg);

  for (const auto& [name, counts] : manifest["files"].items())
    out << name << ": " << counts["before"].get<long long>() << " -> " << counts["after"].get<long long>() << '\n';
  return kOk;
}

int do_score(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto taxonomy = resolve_taxonomy(cfg, cfg.corpus);
  auto loaded = load(cfg, taxonomy, err);
  auto predictions = load_predictions(cfg.predictions);

  ScoreOptions options;
  options.thresholds = cfg.iou_thresholds;
  options.parse.strict = cfg.strict_parse;
  if (cfg.map_mode == "per-image") {
    options.region_mode = options.detection_mode = MapMode::per_image;
  } else if (cfg.map_mode == "pooled") {
    options.region_mode = options.detection_mode = MapMode::pooled;
  }
  if (cfg.levels != 0) {
    options.levels = cfg.levels;
  } else {
    auto manifest_path = fs::path(cfg.corpus) / kMixManifest;
    if (fs::exists(manifest_path)) {
      std::ifstream in(manifest_path);
      auto m = nlohmann::json::parse(in);
      if (m.contains("description") && m["description"]["levels"].is_number_integer())
        options.levels = m["description"]["levels"].get<int>();
    }
  }

  auto report = score_predictions(loaded.bundle, predictions, taxonomy, options);
  out << report.to_table();
  if (!cfg.report.empty()) {
    fs::path rp(cfg.report);
    write_jsonl(rp, {report.to_json().dump(2)});
    std::vector<std::string> lines;
    for (const auto& d : report.diagnostics) lines.push_back(ordered_json{{"diagnostic", d}}.dump());
    auto stem = rp.parent_path() / rp.stem();
    write_jsonl(stem.string() + ".diagnostics.jsonl", lines);
    write_manifest(stem.string() + ".manifest.json", cfg);
  } else {
    for (const auto& d : report.diagnostics) err << "note: " << d << '\n';
  }
  return kOk;
}

void add_corpus_options(CLI::App* sub, RunConfig& cfg, bool needs_out) {
  sub->add_option("--corpus", cfg.corpus, "Corpus root directory")->required()->check(CLI::ExistingDirectory);
  if (needs_out) sub->add_option("--out", cfg.out, "Output corpus directory")->required();
}

void add_seed(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--seed", cfg.seed, "Seed for every random draw; equal seeds give identical outputs")
      ->envname("IQAKIT_SEED")
      ->capture_default_str();
}

// Several subcommands share a RunConfig field but not its default, so the
// default is applied after parsing when the option was not given.
struct LateDefault {
  CLI::App* sub;
  CLI::Option* opt;
  std::function<void()> apply;
};
std::vector<LateDefault> g_late;

template <class T>
CLI::Option* defaulted(CLI::App* sub, CLI::Option* opt, T& field, T value) {
  std::ostringstream s;
  s << value;
  opt->default_str(s.str());
  g_late.push_back({sub, opt, [&field, value] { field = value; }});
  return opt;
}

void add_grounding_options(CLI::App* sub, RunConfig& cfg, double default_ratio) {
  auto* ratio = sub->add_option("--ratio", cfg.ratio,
                  "Fraction of grounding records (reg-grounding + dist_detect) to augment; typical "
                  "settings are 0.15, 0.30 and 0.45")
      ->check(CLI::Range(0.0, 1.0));
  defaulted(sub, ratio, cfg.ratio, default_ratio);
  sub->add_option("--mode", cfg.mode, "add: append augmented copies; replace: substitute the originals")
      ->check(CLI::IsMember({"add", "replace"}))
      ->capture_default_str();
  sub->add_option("--copies", cfg.copies, "Augmented copies per selected record (add mode)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--alpha-min", cfg.policy.alpha_min, "Smallest crop ratio alpha in (0,1]")
      ->capture_default_str();
  sub->add_option("--alpha-max", cfg.policy.alpha_max, "Largest crop ratio alpha in (0,1]; 1 disables cropping "
                  "when --alpha-min is also 1")
      ->capture_default_str();
  sub->add_option("--flip-prob", cfg.policy.flip_probability, "Probability of a horizontal flip")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sub->add_option("--retention", cfg.policy.min_box_retention,
                  "Minimum fraction of a box's area that must survive a crop")
      ->capture_default_str();
  sub->add_option("--max-retries", cfg.policy.max_retries, "Flip/crop draws per record before failing")
      ->capture_default_str();
  sub->add_option("--max-tokens", cfg.policy.max_tokens,
                  "Patch budget (max pixel tokens, e.g. 256..2048) for augmented images; 0 keeps their size")
      ->capture_default_str();
  sub->add_option("--patch-px", cfg.policy.patch_px, "Patch side in pixels for --max-tokens")
      ->capture_default_str();
}

void add_perception_options(CLI::App* sub, RunConfig& cfg, const std::string& default_strategy) {
  auto* strategy = sub->add_option("--strategy,--perception", cfg.perception,
                  "selfmade: regenerate mcq.jsonl from train_metadata.json with test-style templates; "
                  "shuffle: permute options; more-options: add distractors; none")
      ->check(CLI::IsMember({"selfmade", "shuffle", "more-options", "none"}));
  defaulted(sub, strategy, cfg.perception, default_strategy);
  sub->add_option("--target-options", cfg.target_options, "Option count for more-options")->capture_default_str();
  sub->add_option("--templates", cfg.templates, "Question template table (JSON array) for selfmade")
      ->check(CLI::ExistingFile);
}

void add_level_options(CLI::App* sub, RunConfig& cfg, int default_levels) {
  auto* levels = sub->add_option("--levels", cfg.levels,
                  "Quality granularity for description labels (5, 10, 15 or 20; 0 leaves labels as-is)")
      ->check(CLI::IsMember({0, 5, 10, 15, 20}));
  defaulted(sub, levels, cfg.levels, default_levels);
  sub->add_flag("--score-only", cfg.score_only, "Also emit score_only.jsonl (score-only prompts)");
  sub->add_option("--score-only-template", cfg.score_only_template,
                  "JSON {prompt, response} for score-only records; response must contain {quality}")
      ->check(CLI::ExistingFile);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  g_late.clear();
  CLI::App app{"iqakit: augmentation, mixing and scoring for image quality assessment instruction corpora"};
  app.set_config("--config", "", "TOML/INI file of option defaults (flags and IQAKIT_* variables override it)");
  app.require_subcommand(1);
  app.add_option("--taxonomy", cfg.taxonomy, "Distortion label file, one per line (default: <corpus>/taxonomy.txt "
                                             "or the built-in ten labels)")
      ->check(CLI::ExistingFile)
      ->envname("IQAKIT_TAXONOMY");
  app.add_flag("--strict", cfg.strict, "Fail on the first invalid corpus record instead of reporting it");
  app.add_option("--workers", cfg.workers, "OpenMP worker threads (0 = all cores); results do not depend on it")
      ->envname("IQAKIT_WORKERS")
      ->check(CLI::NonNegativeNumber);

  auto* validate = app.add_subcommand("validate", "Load a corpus and report invalid records");
  add_corpus_options(validate, cfg, false);
  validate->add_option("--manifest", cfg.manifest, "Write the effective configuration here");

  auto* aug_ground = app.add_subcommand("augment-grounding", "Flip/crop augmentation of grounding records");
  add_corpus_options(aug_ground, cfg, true);
  add_grounding_options(aug_ground, cfg, 1.0);
  add_seed(aug_ground, cfg);

  auto* aug_perc = app.add_subcommand("augment-perception", "Rewrite mcq.jsonl with one perception strategy");
  add_corpus_options(aug_perc, cfg, true);
  add_perception_options(aug_perc, cfg, "selfmade");
  add_seed(aug_perc, cfg);

  auto* refine = app.add_subcommand("refine-levels", "Requantize description quality labels from MOS");
  add_corpus_options(refine, cfg, true);
  add_level_options(refine, cfg, 10);
  add_seed(refine, cfg);

  auto* mix_cmd = app.add_subcommand("mix", "Augment and mix grounding, perception and description data into one corpus");
  add_corpus_options(mix_cmd, cfg, true);
  add_grounding_options(mix_cmd, cfg, 0.0);
  add_perception_options(mix_cmd, cfg, "none");
  add_level_options(mix_cmd, cfg, 0);
  add_seed(mix_cmd, cfg);

  auto* score = app.add_subcommand("score", "Score model predictions against a ground-truth corpus");
  score->add_option("--gt,--corpus", cfg.corpus, "Ground-truth corpus root")->required()->check(CLI::ExistingDirectory);
  score->add_option("--predictions", cfg.predictions, "JSONL of {id, response}")->required()->check(CLI::ExistingFile);
  score->add_option("--report", cfg.report, "Write the report JSON here (plus .diagnostics.jsonl and .manifest.json)");
  score->add_option("--iou-thresholds", cfg.iou_thresholds, "IoU thresholds averaged by the mAP metrics")
      ->capture_default_str();
  score->add_option("--map-mode", cfg.map_mode,
                    "default: region per-image, distortion/description pooled per class; per-image; pooled")
      ->check(CLI::IsMember({"default", "per-image", "pooled"}))
      ->capture_default_str();
  score->add_flag("--strict-parse", cfg.strict_parse, "Accept only the canonical response grammar");
  score->add_option("--levels", cfg.levels,
                    "Scale of ground-truth labels that are not five-level words (default: from mix_manifest.json)")
      ->check(CLI::IsMember({0, 5, 10, 15, 20}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  for (const auto& d : g_late)
    if (d.sub->parsed() && d.opt->count() == 0) d.apply();
  g_late.clear();
  if (cfg.workers > 0) omp_set_num_threads(cfg.workers);
  cfg.subcommand = app.get_subcommands().front()->get_name();

  try {
    if (cfg.subcommand == "validate") return do_validate(cfg, out, err);
    if (cfg.subcommand == "augment-grounding") {
      cfg.perception = "none";
      cfg.levels = 0;
      return do_mix(cfg, out, err);
    }
    if (cfg.subcommand == "augment-perception") {
      cfg.ratio = 0.0;
      cfg.levels = 0;
      return do_mix(cfg, out, err);
    }
    if (cfg.subcommand == "refine-levels") {
      cfg.ratio = 0.0;
      cfg.perception = "none";
      return do_mix(cfg, out, err);
    }
    if (cfg.subcommand == "mix") return do_mix(cfg, out, err);
    if (cfg.subcommand == "score") return do_score(cfg, out, err);
  } catch (const InvalidRecord& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidRecord;
  } catch (const AlignmentError& e) {
    err << "error: " << e.what() << '\n';
    return kAlignment;
  } catch (const MissingCorpusFile& e) {
    err << "error: " << e.what() << '\n';
    return kMissingCorpusFile;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const AugmentationFailed& e) {
    err << "error: " << e.what() << '\n';
    return kAugmentationFailed;
  } catch (const ImageDecodeError& e) {
    err << "error: " << e.what() << '\n';
    return kImageDecode;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace iqakit::cli
