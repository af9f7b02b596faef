#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iqakit/corpus.hpp"
#include "iqakit/output_parser.hpp"
#include "iqakit/quality_levels.hpp"
#include "iqakit/types.hpp"

namespace iqakit {

double iou(const DistortionBox& a, const DistortionBox& b);

/// Rank-greedy matching: predictions are visited in list order and each takes
/// the unmatched ground truth of highest IoU >= threshold (lowest index on
/// ties), requiring equal labels unless class_agnostic. Returns one
/// true-positive flag per prediction.
std::vector<char> greedy_match(std::span<const DistortionBox> preds, std::span<const DistortionBox> gts,
                               double iou_threshold, bool class_agnostic);

/// All-point interpolated AP of a ranked true-positive sequence.
double ap_from_matches(std::span<const char> true_positive, std::size_t num_ground_truth);

/// Empty ground truth scores 1 with no predictions and 0 otherwise.
double average_precision(std::span<const DistortionBox> preds, std::span<const DistortionBox> gts,
                         double iou_threshold, bool class_agnostic);

/// Predictions and ground truth for one record.
struct DetectionPair {
  std::vector<DistortionBox> predictions;
  std::vector<DistortionBox> ground_truth;
};

/// per_image: AP per record, averaged over records. pooled: every record's
/// predictions joined into one ranked list per class (ordered by in-record
/// rank, then record order), AP per class, averaged over classes present in
/// the ground truth.
enum class MapMode { per_image, pooled };

/// Class-agnostic mAP averaged over `thresholds`. Defaults to per-image.
double region_map(std::span<const DetectionPair> records, std::span<const double> thresholds,
                  MapMode mode = MapMode::per_image);

/// Label-aware mAP averaged over `thresholds`. Defaults to pooled per class.
/// When `per_class` is given it receives each class's AP (threshold-averaged).
double distortion_map(std::span<const DetectionPair> records, std::span<const double> thresholds,
                      MapMode mode = MapMode::pooled, std::map<std::string, double>* per_class = nullptr);

/// Fraction of choices equal to gold; nullopt is wrong. Throws AlignmentError.
double perception_accuracy(std::span<const std::optional<int>> choices, std::span<const int> gold);

struct KeyAccuracy {
  double value = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // records without ground-truth keys
};

/// Mean over records of matched GT keys / GT keys, matching same-label
/// predictions one-to-one at IoU >= threshold.
KeyAccuracy key_distortion_accuracy(std::span<const DetectionPair> records, double iou_threshold = 0.5);

/// Exact-match fraction; nullopt is wrong. Throws AlignmentError.
double image_quality_accuracy(std::span<const std::optional<QualityWord>> predicted,
                              std::span<const QualityWord> gold);

/// String form: predictions that are not five-level words count as wrong and
/// get a diagnostic asking for map_back.
double image_quality_accuracy(std::span<const std::string> predicted, std::span<const QualityWord> gold,
                              std::vector<std::string>& diagnostics);

struct ScoreComponents {
  double perception_accuracy = 0.0;
  double region_map = 0.0;
  double distortion_map = 0.0;
  double description_map = 0.0;
  double key_distortion_acc = 0.0;
  double image_quality_accuracy = 0.0;
};

double final_score(const ScoreComponents& c);

struct TaskCounts {
  std::size_t records = 0;
  std::size_t missing_predictions = 0;
  std::size_t skipped = 0;
};

struct ScoreReport {
  ScoreComponents components;
  double final_score = 0.0;
  std::map<std::string, double> per_class_ap;              // distortion detection
  std::map<std::string, double> description_per_class_ap;  // description detections
  std::map<std::string, TaskCounts> counts;
  std::vector<std::string> diagnostics;

  nlohmann::ordered_json to_json() const;
  std::string to_table() const;
};

struct Prediction {
  std::string id;
  std::string response;
};

/// JSONL with {id, response} per line. Throws AlignmentError on duplicate
/// ids, IoError when unreadable, InvalidRecord on malformed lines.
std::vector<Prediction> load_predictions(const std::filesystem::path& path);
void save_predictions(const std::filesystem::path& path, std::span<const Prediction> predictions);

struct ScoreOptions {
  std::vector<double> thresholds{0.5};
  MapMode region_mode = MapMode::per_image;
  MapMode detection_mode = MapMode::pooled;
  ParseOptions parse;
  /// Scale of ground-truth description labels that are not five-level words.
  std::optional<int> levels;
};

/// Scores predictions against reg-grounding (region mAP), dist_detect
/// (distortion mAP), mcq (perception accuracy) and assess (description mAP,
/// key distortion accuracy, image quality accuracy). Missing predictions
/// count as empty responses; ids that match no record are diagnosed.
ScoreReport score_predictions(const CorpusBundle& ground_truth, std::span<const Prediction> predictions,
                              const DistortionTaxonomy& taxonomy, const ScoreOptions& options = {});

/// Renders the ground truth as model responses in the canonical formats.
std::vector<Prediction> predictions_from_ground_truth(const CorpusBundle& ground_truth,
                                                      std::optional<int> levels = std::nullopt);

}  // namespace iqakit
