#include "iqakit/mixer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <unordered_map>

#include "iqakit/errors.hpp"

namespace iqakit {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string to_string(GroundingMode m) { return m == GroundingMode::add ? "add" : "replace"; }

std::string to_string(PerceptionStrategy s) {
  switch (s) {
    case PerceptionStrategy::none: return "none";
    case PerceptionStrategy::selfmade: return "selfmade";
    case PerceptionStrategy::shuffle: return "shuffle";
    case PerceptionStrategy::more_options: return "more-options";
  }
  return "none";
}

GroundingMode parse_grounding_mode(const std::string& s) {
  if (s == "add") return GroundingMode::add;
  if (s == "replace") return GroundingMode::replace;
  throw std::invalid_argument("grounding mode must be add or replace, got '" + s + "'");
}

PerceptionStrategy parse_perception_strategy(const std::string& s) {
  if (s == "none") return PerceptionStrategy::none;
  if (s == "selfmade") return PerceptionStrategy::selfmade;
  if (s == "shuffle") return PerceptionStrategy::shuffle;
  if (s == "more-options") return PerceptionStrategy::more_options;
  throw std::invalid_argument("unknown perception strategy '" + s + "'");
}

void MixPlan::validate() const {
  if (!(grounding_ratio >= 0.0 && grounding_ratio <= 1.0))
    throw std::invalid_argument("grounding ratio must lie in [0,1]");
  if (copies < 1) throw std::invalid_argument("copies must be >= 1");
  if (grounding_mode == GroundingMode::replace && copies != 1)
    throw std::invalid_argument("replace mode substitutes exactly one copy per record");
  if (description_levels && !is_supported_levels(*description_levels))
    throw std::invalid_argument("description levels must be 5, 10, 15 or 20");
  if (perception == PerceptionStrategy::more_options && target_options < 2)
    throw std::invalid_argument("target option count must be >= 2");
  if (perception == PerceptionStrategy::selfmade) validate_templates(templates);
  policy.validate();
}

std::size_t ratio_count(double ratio, std::size_t n) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
}

DirectoryImageStore::DirectoryImageStore(fs::path source_root, fs::path output_root)
    : source_root_(std::move(source_root)), output_root_(std::move(output_root)) {}

Image DirectoryImageStore::load(const AnnotatedImage& image) { return load_image(source_root_ / image.path); }

void DirectoryImageStore::store(const AnnotatedImage& image, const Image& pixels) {
  save_image(output_root_ / image.path, pixels);
}

std::string augmented_image_path(const std::string& source_path, const std::string& record_id,
                                 const std::string& suffix) {
  fs::path p(source_path);
  auto name = p.stem().string() + "__" + record_id + suffix + p.extension().string();
  return (p.parent_path() / name).generic_string();
}

namespace {

struct GroundingRef {
  std::vector<GroundingRecord>* file;
  std::size_t index;
};

struct AugmentJob {
  GroundingRef ref;
  int copy = 0;
};

struct AugmentOutcome {
  GroundingRecord record;
  AnnotatedImage image;
  std::exception_ptr error;
};

AugmentOutcome run_job(const AugmentJob& job, const MixPlan& plan,
                       const std::unordered_map<std::string, const AnnotatedImage*>& images, ImageStore& store) {
  AugmentOutcome out;
  try {
    const auto& record = (*job.ref.file)[job.ref.index];
    const auto* source = images.at(record.image);
    const std::string suffix = "_aug" + std::to_string(job.copy);
    Rng rng = Rng::for_key(plan.seed, record.id, static_cast<std::uint64_t>(job.copy) + 1);
    auto pixels = store.load(*source);
    auto aug = augment_grounding_record(record, pixels, plan.policy, rng, suffix);

    AnnotatedImage img;
    img.id = aug.record.image;
    img.path = augmented_image_path(source->path, record.id, suffix);
    img.width = aug.record.width;
    img.height = aug.record.height;
    img.mos = source->mos;
    for (const auto& b : source->boxes)
      if (auto moved = aug.transform.apply(b, plan.policy.min_box_retention)) img.boxes.push_back(*moved);
    store.store(img, aug.image);
    out.record = std::move(aug.record);
    out.image = std::move(img);
  } catch (...) {
    out.error = std::current_exception();
  }
  return out;
}

MixResult mix_impl(const CorpusBundle& bundle, const MixPlan& plan, ImageStore& store, bool parallel) {
  plan.validate();
  MixResult result;
  result.bundle = bundle;
  auto& out = result.bundle;

  // Grounding: pooled seeded selection, ordered by record id first.
  std::vector<GroundingRef> pool;
  for (std::size_t i = 0; i < out.reg_grounding.size(); ++i) pool.push_back({&out.reg_grounding, i});
  for (std::size_t i = 0; i < out.dist_detect.size(); ++i) pool.push_back({&out.dist_detect, i});
  auto id_of = [](const GroundingRef& r) -> const std::string& { return (*r.file)[r.index].id; };
  std::stable_sort(pool.begin(), pool.end(),
                   [&](const GroundingRef& a, const GroundingRef& b) { return id_of(a) < id_of(b); });

  const std::size_t chosen = ratio_count(plan.grounding_ratio, pool.size());
  Rng select = Rng::for_key(plan.seed, "grounding-selection");
  for (std::size_t i = 0; i < chosen; ++i) {
    auto j = i + static_cast<std::size_t>(select.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(chosen);
  auto file_rank = [&](const GroundingRef& r) { return r.file == &out.reg_grounding ? 0 : 1; };
  std::sort(pool.begin(), pool.end(), [&](const GroundingRef& a, const GroundingRef& b) {
    return file_rank(a) != file_rank(b) ? file_rank(a) < file_rank(b) : a.index < b.index;
  });

  std::vector<AugmentJob> jobs;
  for (const auto& ref : pool)
    for (int c = 0; c < plan.copies; ++c) jobs.push_back({ref, c});

  std::unordered_map<std::string, const AnnotatedImage*> image_index;
  for (const auto& img : bundle.images) image_index.emplace(img.id, &img);

  std::vector<AugmentOutcome> outcomes(jobs.size());
  const auto n = static_cast<std::int64_t>(jobs.size());
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i)
      outcomes[static_cast<std::size_t>(i)] = run_job(jobs[static_cast<std::size_t>(i)], plan, image_index, store);
  } else {
    for (std::int64_t i = 0; i < n; ++i)
      outcomes[static_cast<std::size_t>(i)] = run_job(jobs[static_cast<std::size_t>(i)], plan, image_index, store);
  }
  for (const auto& o : outcomes)
    if (o.error) std::rethrow_exception(o.error);

  std::vector<GroundingRecord> appended_reg, appended_det;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    auto& o = outcomes[i];
    const auto& ref = jobs[i].ref;
    result.augmented_ids.push_back(o.record.id);
    out.images.push_back(std::move(o.image));
    if (plan.grounding_mode == GroundingMode::replace) {
      (*ref.file)[ref.index] = std::move(o.record);
    } else {
      (ref.file == &out.reg_grounding ? appended_reg : appended_det).push_back(std::move(o.record));
    }
  }
  for (auto& r : appended_reg) out.reg_grounding.push_back(std::move(r));
  for (auto& r : appended_det) out.dist_detect.push_back(std::move(r));

  // Perception.
  switch (plan.perception) {
    case PerceptionStrategy::none:
      break;
    case PerceptionStrategy::shuffle:
      for (auto& s : out.mcq) {
        Rng rng = Rng::for_key(plan.seed, "shuffle:" + s.id);
        s = shuffle_options(s, rng);
      }
      break;
    case PerceptionStrategy::more_options: {
      auto pools = distractor_pools(bundle.mcq);
      for (std::size_t i = 0; i < out.mcq.size(); ++i) {
        auto& s = out.mcq[i];
        const auto& p = pools[question_category(s)];
        std::vector<std::string> candidates(p.begin(), p.end());
        Rng rng = Rng::for_key(plan.seed, "more-options:" + s.id);
        auto expanded = expand_options(s, candidates, plan.target_options, rng);
        if (expanded.pool_exhausted)
          result.diagnostics.push_back({corpus_files::kMcq, i + 1,
                                        "distractor pool exhausted for " + s.id + " at " +
                                            std::to_string(expanded.sample.options.size()) + " options"});
        s = std::move(expanded.sample);
      }
      break;
    }
    case PerceptionStrategy::selfmade: {
      auto regen = regenerate_mcq(bundle.metadata, plan.templates, plan.seed);
      for (auto& d : regen.diagnostics) result.diagnostics.push_back(std::move(d));
      out.mcq.clear();
      for (auto& s : regen.samples) {
        if (!image_index.count(s.image)) {
          result.diagnostics.push_back({corpus_files::kMetadata, 0,
                                        "metadata image '" + s.image + "' is not in the corpus; skipped"});
          continue;
        }
        out.mcq.push_back(std::move(s));
      }
      break;
    }
  }

  // Description.
  if (plan.description_levels) {
    auto refined = refine_description_files(out, QualityScale::with_levels(*plan.description_levels));
    out = std::move(refined.bundle);
    for (auto& d : refined.diagnostics) result.diagnostics.push_back(std::move(d));
  }
  if (plan.score_only) result.score_only = make_score_only_records(out.assess, *plan.score_only);
  return result;
}

}  // namespace

MixResult mix(const CorpusBundle& bundle, const MixPlan& plan, ImageStore& images) {
  return mix_impl(bundle, plan, images, true);
}

MixResult mix_serial(const CorpusBundle& bundle, const MixPlan& plan, ImageStore& images) {
  return mix_impl(bundle, plan, images, false);
}

std::string augmentation_kind(const AugmentPolicy& policy) {
  const bool flip = policy.flip_probability > 0.0;
  const bool crop = policy.alpha_min < 1.0;
  if (flip && crop) return "horizontal_flip+random_crop";
  if (flip) return "horizontal_flip";
  if (crop) return "random_crop";
  return "none";
}

ordered_json describe_plan(const MixPlan& plan, const CorpusBundle& before, const MixResult& after) {
  ordered_json j;
  j["schema_version"] = 1;
  j["seed"] = plan.seed;

  ordered_json g;
  g["ratio"] = plan.grounding_ratio;
  g["mode"] = to_string(plan.grounding_mode);
  g["copies"] = plan.copies;
  g["augmentation"] = augmentation_kind(plan.policy);
  g["alpha_min"] = plan.policy.alpha_min;
  g["alpha_max"] = plan.policy.alpha_max;
  g["flip_probability"] = plan.policy.flip_probability;
  g["min_box_retention"] = plan.policy.min_box_retention;
  g["max_retries"] = plan.policy.max_retries;
  g["max_tokens"] = plan.policy.max_tokens;
  g["patch_px"] = plan.policy.patch_px;
  g["augmented_records"] = after.augmented_ids.size();
  j["grounding"] = std::move(g);

  ordered_json p;
  p["strategy"] = to_string(plan.perception);
  if (plan.perception == PerceptionStrategy::more_options) p["target_options"] = plan.target_options;
  if (plan.perception == PerceptionStrategy::selfmade) {
    auto t = ordered_json::array();
    for (const auto& q : plan.templates) {
      ordered_json e;
      e["category"] = q.category;
      e["pattern"] = q.pattern;
      e["option_source"] = q.option_source;
      e["distractors"] = q.distractors;
      t.push_back(std::move(e));
    }
    p["templates"] = std::move(t);
  }
  j["perception"] = std::move(p);

  ordered_json d;
  if (plan.description_levels)
    d["levels"] = *plan.description_levels;
  else
    d["levels"] = nullptr;
  d["score_only"] = plan.score_only.has_value();
  if (plan.score_only) {
    d["score_only_prompt"] = plan.score_only->prompt;
    d["score_only_response"] = plan.score_only->response;
  }
  j["description"] = std::move(d);

  auto files = ordered_json::object();
  auto count = [&](const char* name, std::size_t b, std::size_t a) {
    ordered_json f;
    f["before"] = b;
    f["after"] = a;
    f["delta"] = static_cast<long long>(a) - static_cast<long long>(b);
    files[name] = std::move(f);
  };
  const auto& a = after.bundle;
  count(corpus_files::kImages, before.images.size(), a.images.size());
  count(corpus_files::kRegGrounding, before.reg_grounding.size(), a.reg_grounding.size());
  count(corpus_files::kDistDetect, before.dist_detect.size(), a.dist_detect.size());
  count(corpus_files::kMcq, before.mcq.size(), a.mcq.size());
  count(corpus_files::kAssess, before.assess.size(), a.assess.size());
  count(corpus_files::kBriefAssess, before.brief_assess.size(), a.brief_assess.size());
  count(corpus_files::kScores, before.scores.size(), a.scores.size());
  if (plan.score_only) count(kScoreOnlyFile, 0, after.score_only.size());
  j["files"] = std::move(files);
  j["diagnostics"] = after.diagnostics.size();
  return j;
}

void write_mix_output(const MixResult& result, const ordered_json& manifest, const fs::path& source_root,
                      const fs::path& output_root) {
  save_corpus(result.bundle, output_root);
  std::error_code ec;
  for (const auto& img : result.bundle.images) {
    auto src = source_root / img.path;
    auto dst = output_root / img.path;
    if (!fs::exists(src)) continue;  // augmented images live only in the output
    if (fs::exists(dst) && fs::equivalent(src, dst, ec)) continue;
    fs::create_directories(dst.parent_path(), ec);
    if (!fs::copy_file(src, dst, fs::copy_options::overwrite_existing, ec) || ec)
      throw IoError("cannot copy " + src.string() + " to " + dst.string() + ": " + ec.message());
  }
  if (!result.score_only.empty() || manifest["description"].value("score_only", false)) {
    std::vector<std::string> lines;
    for (const auto& r : result.score_only) lines.push_back(to_json(r).dump());
    write_jsonl(output_root / kScoreOnlyFile, lines);
  }
  write_jsonl(output_root / kMixManifest, {manifest.dump(2)});
}

}  // namespace iqakit
