#include "iqakit/quality_levels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include "iqakit/errors.hpp"

namespace iqakit {

namespace {

constexpr std::array<std::string_view, 5> kWords = {"bad", "poor", "fair", "good", "excellent"};

// Lower bound of level i on a k-level scale, as the nearest double to (k+4i)/k.
double level_bound(std::size_t i, int k) {
  return static_cast<double>(k + 4 * static_cast<long long>(i)) / static_cast<double>(k);
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

}  // namespace

std::string_view to_string(QualityWord w) { return kWords[static_cast<std::size_t>(w)]; }

std::optional<QualityWord> parse_quality_word_exact(std::string_view s) {
  for (std::size_t i = 0; i < kWords.size(); ++i)
    if (kWords[i] == s) return static_cast<QualityWord>(i);
  return std::nullopt;
}

bool is_supported_levels(int k) { return k == 5 || k == 10 || k == 15 || k == 20; }

QualityScale::QualityScale(int k) : k_(k) {
  labels_.reserve(static_cast<std::size_t>(k));
  if (k == 5) {
    for (auto w : kWords) labels_.emplace_back(w);
  } else {
    for (int i = 0; i < k; ++i) labels_.emplace_back(1, static_cast<char>('a' + i));
  }
}

QualityScale QualityScale::with_levels(int k) {
  if (!is_supported_levels(k))
    throw std::invalid_argument("quality levels must be 5, 10, 15 or 20; got " + std::to_string(k));
  return QualityScale(k);
}

std::optional<std::size_t> QualityScale::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return i;
  return std::nullopt;
}

bool is_scale_label(std::string_view label) {
  if (parse_quality_word_exact(label)) return true;
  return label.size() == 1 && label[0] >= 'a' && label[0] < 'a' + 20;
}

std::size_t quantize_index(double s, int k) {
  if (!(s >= 1.0 && s <= 5.0)) throw OutOfRange("MOS " + std::to_string(s) + " outside [1,5]");
  const auto top = static_cast<std::size_t>(k) - 1;
  if (s >= 5.0) return top;
  // Estimate, then settle against the exact bounds.
  auto guess = static_cast<long long>(std::floor((s - 1.0) * k / 4.0));
  std::size_t i = static_cast<std::size_t>(std::clamp<long long>(guess, 0, static_cast<long long>(top)));
  while (i > 0 && s < level_bound(i, k)) --i;
  while (i < top && s >= level_bound(i + 1, k)) ++i;
  return i;
}

std::string quantize(MosScore s, const QualityScale& scale) {
  return scale.labels()[quantize_index(s.value(), scale.levels())];
}

std::string quantize(double s, const QualityScale& scale) {
  return scale.labels()[quantize_index(s, scale.levels())];
}

QualityWord map_back(std::string_view label, const QualityScale& scale) {
  auto idx = scale.index_of(label);
  if (!idx)
    throw UnknownLabel("label '" + std::string(label) + "' is not on the " +
                       std::to_string(scale.levels()) + "-level scale");
  auto block = static_cast<std::size_t>(scale.levels() / 5);
  return static_cast<QualityWord>(*idx / block);
}

RefineResult refine_description_files(const CorpusBundle& bundle, const QualityScale& scale) {
  RefineResult out{bundle, {}};
  auto rewrite = [&](std::vector<DescriptionSample>& records, const char* file) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      auto& r = records[i];
      if (!r.mos) {
        out.diagnostics.push_back({file, i + 1, "record " + r.id + " has no mos; label left unchanged"});
        continue;
      }
      r.quality_label = quantize(*r.mos, scale);
    }
  };
  rewrite(out.bundle.assess, corpus_files::kAssess);
  rewrite(out.bundle.brief_assess, corpus_files::kBriefAssess);
  rewrite(out.bundle.scores, corpus_files::kScores);
  return out;
}

ScoreOnlyTemplate ScoreOnlyTemplate::defaults() {
  return {"<image>\nRate the overall quality of this image. Answer with a single quality level.",
          "The quality of the image is {quality}."};
}

ScoreOnlyTemplate ScoreOnlyTemplate::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read score-only template " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    return {j.at("prompt").get<std::string>(), j.at("response").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("bad score-only template " + path.string() + ": " + e.what());
  }
}

std::vector<ScoreOnlyRecord> make_score_only_records(std::span<const DescriptionSample> descriptions,
                                                     const ScoreOnlyTemplate& tmpl) {
  if (tmpl.response.find(kQualityPlaceholder) == std::string::npos)
    throw std::invalid_argument("score-only response template lacks the {quality} placeholder");
  std::vector<ScoreOnlyRecord> out;
  out.reserve(descriptions.size());
  for (const auto& d : descriptions) {
    out.push_back({d.id + "_score", d.image, tmpl.prompt,
                   replace_all(tmpl.response, kQualityPlaceholder, d.quality_label)});
  }
  return out;
}

nlohmann::ordered_json to_json(const ScoreOnlyRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["image"] = r.image;
  j["prompt"] = r.prompt;
  j["target"] = r.target;
  return j;
}

}  // namespace iqakit
