#include "iqakit/perception.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>

#include "iqakit/errors.hpp"

namespace iqakit {

using nlohmann::json;

namespace {

// Replaces {name} placeholders via `lookup`; returns nullopt naming the first
// unresolved key through `missing`.
template <typename Lookup>
std::optional<std::string> fill_pattern(const std::string& pattern, Lookup lookup, std::string& missing) {
  std::string out;
  std::size_t pos = 0;
  while (pos < pattern.size()) {
    auto open = pattern.find('{', pos);
    if (open == std::string::npos) break;
    auto close = pattern.find('}', open + 1);
    if (close == std::string::npos) break;
    out.append(pattern, pos, open - pos);
    auto key = pattern.substr(open + 1, close - open - 1);
    auto value = lookup(key);
    if (!value) {
      missing = key;
      return std::nullopt;
    }
    out += *value;
    pos = close + 1;
  }
  out.append(pattern, pos, std::string::npos);
  return out;
}

bool has_placeholder(const std::string& pattern) {
  auto open = pattern.find('{');
  return open != std::string::npos && pattern.find('}', open + 1) != std::string::npos;
}

// Option values a template may draw distractors from, sorted and distinct.
std::optional<std::vector<std::string>> option_values(const QuestionTemplate& t, const json& metadata,
                                                      std::string& why) {
  std::set<std::string> values;
  const auto& src = t.option_source;
  if (src == "category") {
    if (auto images = metadata.find("images"); images != metadata.end() && images->is_object()) {
      for (const auto& [id, attrs] : images->items()) {
        if (auto v = metadata_attribute(metadata, id, t.category)) values.insert(*v);
      }
    }
  } else if (src.rfind("values:", 0) == 0) {
    std::string rest = src.substr(7);
    std::size_t start = 0;
    while (start <= rest.size()) {
      auto bar = rest.find('|', start);
      auto item = rest.substr(start, bar == std::string::npos ? std::string::npos : bar - start);
      if (!item.empty()) values.insert(item);
      if (bar == std::string::npos) break;
      start = bar + 1;
    }
  } else if (src.rfind("metadata:", 0) == 0) {
    auto key = src.substr(9);
    auto sets = metadata.find("option_sets");
    if (sets == metadata.end() || !sets->contains(key) || !(*sets)[key].is_array()) {
      why = "metadata has no option_sets." + key;
      return std::nullopt;
    }
    for (const auto& v : (*sets)[key])
      if (v.is_string()) values.insert(v.get<std::string>());
  } else {
    why = "unknown option_source '" + src + "'";
    return std::nullopt;
  }
  return std::vector<std::string>(values.begin(), values.end());
}

// First `count` entries of a seeded partial Fisher-Yates over `items`.
std::vector<std::string> draw_distinct(std::vector<std::string> items, std::size_t count, Rng& rng) {
  count = std::min(count, items.size());
  for (std::size_t i = 0; i < count; ++i) {
    auto j = i + static_cast<std::size_t>(rng.below(items.size() - i));
    std::swap(items[i], items[j]);
  }
  items.resize(count);
  return items;
}

}  // namespace

void validate_templates(std::span<const QuestionTemplate> templates) {
  std::set<std::string> seen;
  for (const auto& t : templates) {
    if (t.category.empty()) throw std::invalid_argument("question template has an empty category");
    if (!has_placeholder(t.pattern))
      throw std::invalid_argument("question template '" + t.category + "' has no placeholder");
    if (!seen.insert(t.category).second)
      throw std::invalid_argument("duplicate question template category '" + t.category + "'");
    if (t.distractors < 1)
      throw std::invalid_argument("question template '" + t.category + "' needs >= 1 distractor");
  }
}

std::vector<QuestionTemplate> default_question_templates() {
  return {
      {"blur severity", "How severe is the blur in this image? The {category} is:", "category", 3},
      {"noise level", "What is the {category} of this image?", "category", 3},
      {"brightness", "How would you describe the {category} of this image?", "category", 3},
      {"color saturation", "Which option best describes the {category} of this image?", "category", 3},
      {"main distortion", "Which distortion affects this image the most? The {category} is:", "category", 3},
  };
}

std::vector<QuestionTemplate> load_question_templates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read template table " + path.string());
  std::vector<QuestionTemplate> out;
  try {
    auto j = json::parse(in);
    if (!j.is_array()) throw std::invalid_argument("template table must be a JSON array");
    for (const auto& e : j) {
      QuestionTemplate t;
      t.category = e.at("category").get<std::string>();
      t.pattern = e.at("pattern").get<std::string>();
      t.option_source = e.value("option_source", std::string("category"));
      t.distractors = e.value("distractors", 3);
      out.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument("bad template table " + path.string() + ": " + e.what());
  }
  validate_templates(out);
  return out;
}

McqSample permute_options(const McqSample& sample, std::span<const std::size_t> permutation) {
  if (permutation.size() != sample.options.size())
    throw std::invalid_argument("permutation size does not match option count");
  McqSample out = sample;
  std::vector<bool> used(permutation.size(), false);
  for (std::size_t i = 0; i < permutation.size(); ++i) {
    auto from = permutation[i];
    if (from >= permutation.size() || used[from]) throw std::invalid_argument("not a permutation");
    used[from] = true;
    out.options[i] = sample.options[from];
    if (static_cast<int>(from) == sample.answer_index) out.answer_index = static_cast<int>(i);
  }
  return out;
}

McqSample shuffle_options(const McqSample& sample, Rng& rng) {
  std::vector<std::size_t> perm(sample.options.size());
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  return permute_options(sample, perm);
}

ExpandResult expand_options(const McqSample& sample, std::span<const std::string> pool,
                            std::size_t target_count, Rng& rng) {
  std::set<std::string> present(sample.options.begin(), sample.options.end());
  std::vector<std::string> candidates;
  std::set<std::string> seen;
  for (const auto& p : pool)
    if (!present.count(p) && seen.insert(p).second) candidates.push_back(p);

  ExpandResult result{sample, false};
  auto need = target_count > sample.options.size() ? target_count - sample.options.size() : 0;
  auto picked = draw_distinct(std::move(candidates), need, rng);
  result.pool_exhausted = picked.size() < need;
  for (auto& p : picked) result.sample.options.push_back(std::move(p));
  result.sample = shuffle_options(result.sample, rng);
  return result;
}

std::string question_category(const McqSample& sample) {
  const auto& q = sample.question;
  auto b = q.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = q.find_last_not_of(" \t\r\n");
  std::string key = q.substr(b, e - b + 1);
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return key;
}

std::map<std::string, std::set<std::string>> distractor_pools(std::span<const McqSample> corpus) {
  std::map<std::string, std::set<std::string>> pools;
  for (const auto& s : corpus) pools[question_category(s)].insert(s.options.begin(), s.options.end());
  return pools;
}

RegenerateResult regenerate_mcq(const json& metadata, std::span<const QuestionTemplate> templates,
                                std::uint64_t seed) {
  validate_templates(templates);
  RegenerateResult out;
  auto images = metadata.find("images");
  if (templates.empty() || images == metadata.end() || !images->is_object()) return out;

  std::vector<std::optional<std::vector<std::string>>> values(templates.size());
  for (std::size_t t = 0; t < templates.size(); ++t) {
    std::string why;
    values[t] = option_values(templates[t], metadata, why);
    if (!values[t]) out.diagnostics.push_back({corpus_files::kMetadata, 0, templates[t].category + ": " + why});
  }

  for (const auto& [image_id, attrs] : images->items()) {
    for (std::size_t t = 0; t < templates.size(); ++t) {
      const auto& tmpl = templates[t];
      auto gold = metadata_attribute(metadata, image_id, tmpl.category);
      if (!gold || !values[t]) continue;

      std::string missing;
      auto question = fill_pattern(
          tmpl.pattern,
          [&](const std::string& key) -> std::optional<std::string> {
            if (key == "category") return tmpl.category;
            if (key == "image") return image_id;
            return metadata_attribute(metadata, image_id, key);
          },
          missing);
      if (!question) {
        out.diagnostics.push_back({corpus_files::kMetadata, 0,
                                   "image " + image_id + ", template '" + tmpl.category +
                                       "': metadata key '" + missing + "' missing; skipped"});
        continue;
      }

      std::vector<std::string> pool;
      for (const auto& v : *values[t])
        if (v != *gold) pool.push_back(v);
      McqSample sample;
      sample.id = image_id + "_q" + std::to_string(t);
      sample.image = image_id;
      sample.question = *question;
      Rng rng = Rng::for_key(seed, sample.id);
      auto distractors = draw_distinct(std::move(pool), static_cast<std::size_t>(tmpl.distractors), rng);
      if (distractors.empty()) {
        out.diagnostics.push_back({corpus_files::kMetadata, 0,
                                   "image " + image_id + ", template '" + tmpl.category +
                                       "': no distractors available; skipped"});
        continue;
      }
      sample.options.push_back(*gold);
      for (auto& d : distractors) sample.options.push_back(std::move(d));
      sample.answer_index = 0;
      out.samples.push_back(shuffle_options(sample, rng));
    }
  }
  return out;
}

}  // namespace iqakit
