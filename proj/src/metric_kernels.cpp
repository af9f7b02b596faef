#include "iqakit/metric_kernels.hpp"

#include <cstdint>

namespace iqakit::kernels {

namespace {

KeyFraction key_fraction(const DetectionPair& r, double iou_threshold) {
  auto tp = greedy_match(r.predictions, r.ground_truth, iou_threshold, false);
  KeyFraction f;
  f.total = r.ground_truth.size();
  for (char t : tp) f.matched += t ? 1 : 0;
  return f;
}

}  // namespace

namespace omp {

std::vector<double> per_image_ap(std::span<const DetectionPair> records, double iou_threshold,
                                 bool class_agnostic) {
  std::vector<double> out(records.size());
  const auto n = static_cast<std::int64_t>(records.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] =
        average_precision(r.predictions, r.ground_truth, iou_threshold, class_agnostic);
  }
  return out;
}

std::vector<std::vector<char>> match_records(std::span<const DetectionPair> records, double iou_threshold,
                                             bool class_agnostic) {
  std::vector<std::vector<char>> out(records.size());
  const auto n = static_cast<std::int64_t>(records.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = greedy_match(r.predictions, r.ground_truth, iou_threshold, class_agnostic);
  }
  return out;
}

std::vector<KeyFraction> key_fractions(std::span<const DetectionPair> records, double iou_threshold) {
  std::vector<KeyFraction> out(records.size());
  const auto n = static_cast<std::int64_t>(records.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = key_fraction(records[static_cast<std::size_t>(i)], iou_threshold);
  return out;
}

}  // namespace omp

namespace serial {

std::vector<double> per_image_ap(std::span<const DetectionPair> records, double iou_threshold,
                                 bool class_agnostic) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records)
    out.push_back(average_precision(r.predictions, r.ground_truth, iou_threshold, class_agnostic));
  return out;
}

std::vector<std::vector<char>> match_records(std::span<const DetectionPair> records, double iou_threshold,
                                             bool class_agnostic) {
  std::vector<std::vector<char>> out;
  out.reserve(records.size());
  for (const auto& r : records)
    out.push_back(greedy_match(r.predictions, r.ground_truth, iou_threshold, class_agnostic));
  return out;
}

std::vector<KeyFraction> key_fractions(std::span<const DetectionPair> records, double iou_threshold) {
  std::vector<KeyFraction> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(key_fraction(r, iou_threshold));
  return out;
}

}  // namespace serial

}  // namespace iqakit::kernels
