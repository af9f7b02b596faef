#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "iqakit/image.hpp"
#include "iqakit/rng.hpp"
#include "iqakit/types.hpp"

namespace iqakit {

/// A square-ratio crop window: round(alpha*W) x round(alpha*H) pixels whose
/// top-left corner sits at (offset_x, offset_y).
struct CropSpec {
  double alpha = 1.0;
  int offset_x = 0;
  int offset_y = 0;

  bool operator==(const CropSpec&) const = default;
};

/// round-half-up(alpha * extent), clamped to [1, extent].
int crop_extent(double alpha, int extent);

/// Throws InvalidDimensions if the window does not fit inside W x H.
void check_crop(const CropSpec& spec, int width, int height);

struct AugmentPolicy {
  double alpha_min = 0.7;
  double alpha_max = 1.0;
  double flip_probability = 0.5;
  /// Fraction of a box's area that must survive a crop for the box to be kept.
  double min_box_retention = 0.3;
  std::uint64_t seed = 0;
  /// Flip/crop draws attempted per record before giving up.
  int max_retries = 16;
  /// When positive, augmented images are downscaled to this many patches.
  int max_tokens = 0;
  int patch_px = 28;

  /// Throws std::invalid_argument describing the first bad field.
  void validate() const;
};

/// Mirrors a normalized box about the vertical centre line.
DistortionBox flip_box(const DistortionBox& b);

/// Column mirror: out(x, y) = in(W - x - 1, y).
Image flip_image(const Image& img);

Image crop_image(const Image& img, const CropSpec& spec);

CropSpec sample_crop(const AugmentPolicy& policy, Rng& rng, int width, int height);

/// Re-projects a box into the crop window. The intersection is computed in
/// exact source-pixel units and rounded once, half-up, when renormalizing to
/// the crop; boxes keeping less than `retention` of their area, or collapsing
/// to zero width or height, are dropped.
std::optional<DistortionBox> crop_box(const DistortionBox& b, const CropSpec& spec, int width,
                                      int height, double retention);

/// One flip-then-crop draw on a W x H source.
struct SpatialTransform {
  bool flip = false;
  CropSpec crop;
  int source_width = 0;
  int source_height = 0;

  int output_width() const { return crop_extent(crop.alpha, source_width); }
  int output_height() const { return crop_extent(crop.alpha, source_height); }

  std::optional<DistortionBox> apply(const DistortionBox& b, double retention) const;
  Image apply(const Image& img) const;
};

struct AugmentedGrounding {
  GroundingRecord record;
  Image image;
  SpatialTransform transform;
};

/// Id given to the augmented copy of `record`'s image.
std::string augmented_image_id(const GroundingRecord& record, std::string_view suffix);

/// Flips with the policy's probability, then crops, transforming the pixels,
/// the record's boxes and any [x1, y1, x2, y2] groups in its conversation
/// text. A draw is rejected when every box drops or any conversation box
/// drops; after max_retries rejections AugmentationFailed is thrown.
AugmentedGrounding augment_grounding_record(const GroundingRecord& record, const Image& image,
                                            const AugmentPolicy& policy, Rng& rng,
                                            std::string_view suffix = "_aug0");

/// Largest patch-aligned size within `max_tokens` patches; unchanged when the
/// input already fits.
std::pair<int, int> resize_to_token_budget(int width, int height, int max_tokens, int patch_px);

/// ceil(W/patch) * ceil(H/patch).
std::int64_t token_count(int width, int height, int patch_px);

}  // namespace iqakit
