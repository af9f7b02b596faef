#pragma once

// Record-parallel scoring kernels. Each kernel exists twice: an OpenMP
// version used by the scorer and a plain loop kept as the reference the tests
// and the benchmark compare against. Both write one slot per record, so the
// results are identical regardless of thread count.

#include <cstddef>
#include <span>
#include <vector>

#include "iqakit/metrics.hpp"

namespace iqakit::kernels {

struct KeyFraction {
  std::size_t matched = 0;
  std::size_t total = 0;
};

namespace omp {
std::vector<double> per_image_ap(std::span<const DetectionPair> records, double iou_threshold,
                                 bool class_agnostic);
std::vector<std::vector<char>> match_records(std::span<const DetectionPair> records, double iou_threshold,
                                             bool class_agnostic);
std::vector<KeyFraction> key_fractions(std::span<const DetectionPair> records, double iou_threshold);
}  // namespace omp

namespace serial {
std::vector<double> per_image_ap(std::span<const DetectionPair> records, double iou_threshold,
                                 bool class_agnostic);
std::vector<std::vector<char>> match_records(std::span<const DetectionPair> records, double iou_threshold,
                                             bool class_agnostic);
std::vector<KeyFraction> key_fractions(std::span<const DetectionPair> records, double iou_threshold);
}  // namespace serial

}  // namespace iqakit::kernels
