#include "iqakit/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <unordered_map>

#include "iqakit/errors.hpp"
#include "iqakit/metric_kernels.hpp"

namespace iqakit {

using nlohmann::json;
using nlohmann::ordered_json;

double iou(const DistortionBox& a, const DistortionBox& b) {
  const std::int64_t iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const std::int64_t ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0 || ih <= 0) return 0.0;
  const std::int64_t inter = iw * ih;
  const std::int64_t uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

std::vector<char> greedy_match(std::span<const DistortionBox> preds, std::span<const DistortionBox> gts,
                               double iou_threshold, bool class_agnostic) {
  std::vector<char> tp(preds.size(), 0);
  std::vector<char> taken(gts.size(), 0);
  for (std::size_t p = 0; p < preds.size(); ++p) {
    double best = -1.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      if (!class_agnostic && gts[g].label != preds[p].label) continue;
      double v = iou(preds[p], gts[g]);
      if (v >= iou_threshold && v > best) {
        best = v;
        best_gt = g;
      }
    }
    if (best_gt < gts.size()) {
      taken[best_gt] = 1;
      tp[p] = 1;
    }
  }
  return tp;
}

double ap_from_matches(std::span<const char> true_positive, std::size_t num_ground_truth) {
  if (num_ground_truth == 0) return true_positive.empty() ? 1.0 : 0.0;
  const std::size_t n = true_positive.size();
  std::vector<double> precision(n);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    hits += true_positive[i] ? 1 : 0;
    precision[i] = static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  // Each true positive adds 1/G recall at the best precision seen at or after it.
  double envelope = 0.0;
  double ap = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    envelope = std::max(envelope, precision[i]);
    if (true_positive[i]) ap += envelope;
  }
  return ap / static_cast<double>(num_ground_truth);
}

double average_precision(std::span<const DistortionBox> preds, std::span<const DistortionBox> gts,
                         double iou_threshold, bool class_agnostic) {
  if (gts.empty()) return preds.empty() ? 1.0 : 0.0;
  auto tp = greedy_match(preds, gts, iou_threshold, class_agnostic);
  return ap_from_matches(tp, gts.size());
}

namespace {

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double pooled_map(std::span<const DetectionPair> records, double thr, bool agnostic,
                  std::map<std::string, double>* per_class) {
  auto flags = kernels::omp::match_records(records, thr, agnostic);
  struct Entry {
    std::size_t rank;
    std::size_t record;
    char tp;
  };
  std::map<std::string, std::vector<Entry>> ranked;
  std::map<std::string, std::size_t> gt_count;
  bool any_pred = false;
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (const auto& g : records[i].ground_truth) ++gt_count[agnostic ? std::string() : g.label];
    const auto& preds = records[i].predictions;
    for (std::size_t j = 0; j < preds.size(); ++j) {
      ranked[agnostic ? std::string() : preds[j].label].push_back({j, i, flags[i][j]});
      any_pred = true;
    }
  }
  if (gt_count.empty()) return any_pred ? 0.0 : 1.0;
  double sum = 0.0;
  for (const auto& [cls, n] : gt_count) {
    auto& entries = ranked[cls];
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      return a.rank != b.rank ? a.rank < b.rank : a.record < b.record;
    });
    std::vector<char> tp;
    tp.reserve(entries.size());
    for (const auto& e : entries) tp.push_back(e.tp);
    double ap = ap_from_matches(tp, n);
    if (per_class) (*per_class)[cls] += ap;
    sum += ap;
  }
  return sum / static_cast<double>(gt_count.size());
}

double map_over_thresholds(std::span<const DetectionPair> records, std::span<const double> thresholds,
                           MapMode mode, bool agnostic, std::map<std::string, double>* per_class) {
  if (thresholds.empty()) throw std::invalid_argument("at least one IoU threshold is required");
  if (records.empty()) return 0.0;
  std::vector<double> per_threshold;
  std::map<std::string, double> class_sums;
  for (double thr : thresholds) {
    if (mode == MapMode::per_image) {
      auto aps = kernels::omp::per_image_ap(records, thr, agnostic);
      per_threshold.push_back(mean(aps));
    } else {
      per_threshold.push_back(pooled_map(records, thr, agnostic, per_class ? &class_sums : nullptr));
    }
  }
  if (per_class) {
    for (auto& [cls, s] : class_sums) (*per_class)[cls] = s / static_cast<double>(thresholds.size());
  }
  return mean(per_threshold);
}

}  // namespace

double region_map(std::span<const DetectionPair> records, std::span<const double> thresholds, MapMode mode) {
  return map_over_thresholds(records, thresholds, mode, true, nullptr);
}

double distortion_map(std::span<const DetectionPair> records, std::span<const double> thresholds, MapMode mode,
                      std::map<std::string, double>* per_class) {
  return map_over_thresholds(records, thresholds, mode, false, per_class);
}

double perception_accuracy(std::span<const std::optional<int>> choices, std::span<const int> gold) {
  if (choices.size() != gold.size())
    throw AlignmentError("perception: " + std::to_string(choices.size()) + " choices for " +
                         std::to_string(gold.size()) + " questions");
  if (gold.empty()) return 0.0;
  std::size_t right = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) right += (choices[i] && *choices[i] == gold[i]) ? 1 : 0;
  return static_cast<double>(right) / static_cast<double>(gold.size());
}

KeyAccuracy key_distortion_accuracy(std::span<const DetectionPair> records, double iou_threshold) {
  auto fractions = kernels::omp::key_fractions(records, iou_threshold);
  KeyAccuracy out;
  double sum = 0.0;
  for (const auto& f : fractions) {
    if (f.total == 0) {
      ++out.skipped;
      continue;
    }
    ++out.evaluated;
    sum += static_cast<double>(f.matched) / static_cast<double>(f.total);
  }
  out.value = out.evaluated ? sum / static_cast<double>(out.evaluated) : 0.0;
  return out;
}

double image_quality_accuracy(std::span<const std::optional<QualityWord>> predicted,
                              std::span<const QualityWord> gold) {
  if (predicted.size() != gold.size())
    throw AlignmentError("image quality: " + std::to_string(predicted.size()) + " predictions for " +
                         std::to_string(gold.size()) + " records");
  if (gold.empty()) return 0.0;
  std::size_t right = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) right += (predicted[i] && *predicted[i] == gold[i]) ? 1 : 0;
  return static_cast<double>(right) / static_cast<double>(gold.size());
}

double image_quality_accuracy(std::span<const std::string> predicted, std::span<const QualityWord> gold,
                              std::vector<std::string>& diagnostics) {
  std::vector<std::optional<QualityWord>> words;
  words.reserve(predicted.size());
  for (const auto& p : predicted) {
    auto w = parse_quality_word_exact(p);
    if (!w)
      diagnostics.push_back("'" + p + "' is not a five-level quality word; apply map_back before scoring");
    words.push_back(w);
  }
  return image_quality_accuracy(words, gold);
}

double final_score(const ScoreComponents& c) {
  return c.perception_accuracy + c.region_map + c.distortion_map + c.description_map + c.key_distortion_acc +
         c.image_quality_accuracy;
}

ordered_json ScoreReport::to_json() const {
  ordered_json j;
  j["final_score"] = final_score;
  j["perception_accuracy"] = components.perception_accuracy;
  j["region_map"] = components.region_map;
  j["distortion_map"] = components.distortion_map;
  j["description_map"] = components.description_map;
  j["key_distortion_accuracy"] = components.key_distortion_acc;
  j["image_quality_accuracy"] = components.image_quality_accuracy;
  j["per_class_ap"] = per_class_ap;
  j["description_per_class_ap"] = description_per_class_ap;
  auto c = ordered_json::object();
  for (const auto& [task, n] : counts) {
    ordered_json t;
    t["records"] = n.records;
    t["missing_predictions"] = n.missing_predictions;
    t["skipped"] = n.skipped;
    c[task] = std::move(t);
  }
  j["counts"] = std::move(c);
  j["diagnostics"] = diagnostics.size();
  return j;
}

std::string ScoreReport::to_table() const {
  std::string out;
  char line[96];
  auto row = [&](const char* name, double v) {
    std::snprintf(line, sizeof line, "%-26s %8.4f\n", name, v);
    out += line;
  };
  row("Perception Accuracy", components.perception_accuracy);
  row("Region mAP", components.region_map);
  row("Distortion mAP", components.distortion_map);
  row("Description mAP", components.description_map);
  row("Key Distortion Accuracy", components.key_distortion_acc);
  row("Image Quality Accuracy", components.image_quality_accuracy);
  out += std::string(35, '-') + "\n";
  row("Final Score", final_score);
  return out;
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open predictions " + path.string());
  std::vector<Prediction> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  const auto name = path.filename().string();
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Prediction p;
    try {
      auto j = json::parse(line);
      p.id = j.at("id").get<std::string>();
      p.response = j.at("response").get<std::string>();
    } catch (const json::exception& e) {
      throw InvalidRecord(name, lineno, e.what());
    }
    if (!ids.insert(p.id).second) throw AlignmentError("duplicate prediction id '" + p.id + "'");
    out.push_back(std::move(p));
  }
  return out;
}

void save_predictions(const std::filesystem::path& path, std::span<const Prediction> predictions) {
  std::vector<std::string> lines;
  lines.reserve(predictions.size());
  for (const auto& p : predictions) {
    ordered_json j;
    j["id"] = p.id;
    j["response"] = p.response;
    lines.push_back(j.dump());
  }
  write_jsonl(path, lines);
}

namespace {

QualityWord ground_truth_word(const DescriptionSample& d, std::optional<int> levels) {
  if (auto w = parse_quality_word_exact(d.quality_label)) return *w;
  if (!levels)
    throw std::invalid_argument("ground-truth label '" + d.quality_label + "' of record " + d.id +
                                " needs a quality scale; pass the number of levels");
  return map_back(d.quality_label, QualityScale::with_levels(*levels));
}

}  // namespace

ScoreReport score_predictions(const CorpusBundle& gt, std::span<const Prediction> predictions,
                              const DistortionTaxonomy& taxonomy, const ScoreOptions& options) {
  ScoreReport report;
  std::unordered_map<std::string, const Prediction*> by_id;
  for (const auto& p : predictions)
    if (!by_id.emplace(p.id, &p).second) throw AlignmentError("duplicate prediction id '" + p.id + "'");

  std::unordered_map<std::string, std::string> owner;
  auto claim = [&](const std::string& id, const char* task) {
    auto [it, fresh] = owner.emplace(id, task);
    if (!fresh) throw AlignmentError("record id '" + id + "' appears in both " + it->second + " and " + task);
  };
  for (const auto& r : gt.reg_grounding) claim(r.id, "region");
  for (const auto& r : gt.dist_detect) claim(r.id, "distortion");
  for (const auto& r : gt.mcq) claim(r.id, "perception");
  for (const auto& r : gt.assess) claim(r.id, "description");
  for (const auto& p : predictions)
    if (!owner.count(p.id)) report.diagnostics.push_back("prediction '" + p.id + "' matches no scored record");

  auto response_for = [&](const std::string& id, const char* task) -> std::string {
    auto& counts = report.counts[task];
    ++counts.records;
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      ++counts.missing_predictions;
      report.diagnostics.push_back(std::string(task) + ": no prediction for '" + id + "'; scored as empty");
      return {};
    }
    return it->second->response;
  };

  auto detection_pairs = [&](const std::vector<GroundingRecord>& records, const char* task) {
    std::vector<std::string> responses;
    for (const auto& r : records) responses.push_back(response_for(r.id, task));
    std::vector<DetectionPair> pairs(records.size());
    const auto n = static_cast<std::int64_t>(records.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < n; ++i) {
      auto k = static_cast<std::size_t>(i);
      pairs[k].predictions = parse_detections(responses[k], taxonomy, options.parse).boxes;
      pairs[k].ground_truth = records[k].boxes;
    }
    return pairs;
  };

  auto region_pairs = detection_pairs(gt.reg_grounding, "region");
  auto distortion_pairs = detection_pairs(gt.dist_detect, "distortion");
  report.components.region_map = region_map(region_pairs, options.thresholds, options.region_mode);
  report.components.distortion_map =
      distortion_map(distortion_pairs, options.thresholds, options.detection_mode, &report.per_class_ap);

  std::vector<std::optional<int>> choices;
  std::vector<int> gold;
  for (const auto& q : gt.mcq) {
    choices.push_back(parse_mcq_choice(response_for(q.id, "perception"), q.options, options.parse));
    gold.push_back(q.answer_index);
  }
  report.components.perception_accuracy = perception_accuracy(choices, gold);

  std::vector<std::string> responses;
  for (const auto& d : gt.assess) responses.push_back(response_for(d.id, "description"));
  std::vector<ParsedPrediction> parsed(gt.assess.size());
  {
    const auto n = static_cast<std::int64_t>(gt.assess.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < n; ++i) {
      auto k = static_cast<std::size_t>(i);
      parsed[k] = parse_description_response(responses[k], taxonomy, options.parse);
    }
  }
  std::vector<DetectionPair> description_pairs, key_pairs;
  std::vector<std::optional<QualityWord>> words;
  std::vector<QualityWord> gold_words;
  for (std::size_t i = 0; i < gt.assess.size(); ++i) {
    const auto& d = gt.assess[i];
    description_pairs.push_back({parsed[i].detections, d.detections});
    key_pairs.push_back({parsed[i].key_distortions, d.key_distortions});
    words.push_back(parsed[i].quality_word);
    gold_words.push_back(ground_truth_word(d, options.levels));
    for (const auto& diag : parsed[i].diagnostics)
      if (diag.find("mapped back") != std::string::npos) report.diagnostics.push_back(d.id + ": " + diag);
  }
  report.components.description_map = distortion_map(description_pairs, options.thresholds,
                                                     options.detection_mode, &report.description_per_class_ap);
  auto keys = key_distortion_accuracy(key_pairs, 0.5);
  report.components.key_distortion_acc = keys.value;
  report.counts["description"].skipped = keys.skipped;
  if (keys.skipped)
    report.diagnostics.push_back("key distortion accuracy skipped " + std::to_string(keys.skipped) +
                                 " record(s) without ground-truth keys");
  report.components.image_quality_accuracy = image_quality_accuracy(words, gold_words);

  for (const char* task : {"region", "distortion", "perception", "description"})
    if (report.counts[task].records == 0) report.diagnostics.push_back(std::string("no ") + task + " records");

  report.final_score = final_score(report.components);
  return report;
}

std::vector<Prediction> predictions_from_ground_truth(const CorpusBundle& gt, std::optional<int> levels) {
  std::vector<Prediction> out;
  for (const auto* records : {&gt.reg_grounding, &gt.dist_detect})
    for (const auto& r : *records) out.push_back({r.id, serialize_detections(r.boxes)});
  for (const auto& q : gt.mcq) out.push_back({q.id, render_mcq_answer(q.answer_index)});
  for (const auto& d : gt.assess)
    out.push_back({d.id, render_description_response(d.assessment_text, d.detections, d.key_distortions,
                                                     ground_truth_word(d, levels))});
  return out;
}

}  // namespace iqakit
