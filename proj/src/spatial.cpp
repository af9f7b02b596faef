#include "iqakit/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "iqakit/errors.hpp"

namespace iqakit {

namespace {

// round-half-up(num / den) for num >= 0, den > 0.
std::int64_t div_round_half_up(std::int64_t num, std::int64_t den) {
  return (2 * num + den) / (2 * den);
}

std::int64_t isqrt(std::int64_t n) {
  if (n <= 0) return 0;
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<long double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

const std::regex& box_group_pattern() {
  static const std::regex re(R"(\[\s*(-?\d{1,9})\s*,\s*(-?\d{1,9})\s*,\s*(-?\d{1,9})\s*,\s*(-?\d{1,9})\s*\])");
  return re;
}

std::string render_group(const DistortionBox& b) {
  return "[" + std::to_string(b.x1) + ", " + std::to_string(b.y1) + ", " + std::to_string(b.x2) +
         ", " + std::to_string(b.y2) + "]";
}

// Rewrites every valid coordinate group in `text`. Returns nullopt if a group
// does not survive the transform.
std::optional<std::string> transform_text_boxes(const std::string& text, const SpatialTransform& t,
                                                double retention) {
  std::string out;
  out.reserve(text.size());
  auto begin = std::sregex_iterator(text.begin(), text.end(), box_group_pattern());
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    DistortionBox b{"", std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3]), std::stoi(m[4])};
    auto pos = static_cast<std::size_t>(m.position(0));
    out.append(text, last, pos - last);
    last = pos + static_cast<std::size_t>(m.length(0));
    if (!coords_valid(b)) {
      out.append(m.str(0));
      continue;
    }
    auto moved = t.apply(b, retention);
    if (!moved) return std::nullopt;
    out.append(*moved == b ? m.str(0) : render_group(*moved));
  }
  out.append(text, last, std::string::npos);
  return out;
}

}  // namespace

int crop_extent(double alpha, int extent) {
  auto v = static_cast<long long>(std::floor(alpha * extent + 0.5));
  return static_cast<int>(std::clamp<long long>(v, 1, extent));
}

void check_crop(const CropSpec& spec, int width, int height) {
  if (width < 1 || height < 1) throw InvalidDimensions("image dimensions must be >= 1");
  if (!(spec.alpha > 0.0 && spec.alpha <= 1.0)) throw InvalidDimensions("crop alpha outside (0,1]");
  if (spec.offset_x < 0 || spec.offset_y < 0 ||
      spec.offset_x + crop_extent(spec.alpha, width) > width ||
      spec.offset_y + crop_extent(spec.alpha, height) > height)
    throw InvalidDimensions("crop window exceeds the image");
}

void AugmentPolicy::validate() const {
  if (!(alpha_min > 0.0 && alpha_min <= alpha_max && alpha_max <= 1.0))
    throw std::invalid_argument("need 0 < alpha_min <= alpha_max <= 1");
  if (!(flip_probability >= 0.0 && flip_probability <= 1.0))
    throw std::invalid_argument("flip probability must lie in [0,1]");
  if (!(min_box_retention > 0.0 && min_box_retention <= 1.0))
    throw std::invalid_argument("box retention must lie in (0,1]");
  if (max_retries < 1) throw std::invalid_argument("max_retries must be >= 1");
  if (max_tokens < 0) throw std::invalid_argument("max_tokens must be >= 0");
  if (patch_px < 1) throw std::invalid_argument("patch size must be >= 1");
}

DistortionBox flip_box(const DistortionBox& b) {
  return {b.label, kCoordScale - b.x2, b.y1, kCoordScale - b.x1, b.y2};
}

Image flip_image(const Image& img) {
  const auto expected = static_cast<std::size_t>(img.width) * img.height * img.channels;
  if (img.width < 1 || img.height < 1 || img.channels < 1 || img.pixels.size() != expected)
    throw InvalidDimensions("pixel buffer does not hold " + std::to_string(img.width) + "x" +
                            std::to_string(img.height) + " pixels");
  Image out(img.width, img.height, img.channels);
  const int w = img.width;
  const int c = img.channels;
  const std::size_t stride = img.row_bytes();
#pragma omp parallel for if (expected > (1u << 20))
  for (int y = 0; y < img.height; ++y) {
    const std::uint8_t* src = img.pixels.data() + y * stride;
    std::uint8_t* dst = out.pixels.data() + y * stride;
    for (int x = 0; x < w; ++x)
      std::copy_n(src + static_cast<std::size_t>(w - x - 1) * c, c, dst + static_cast<std::size_t>(x) * c);
  }
  return out;
}

Image crop_image(const Image& img, const CropSpec& spec) {
  check_crop(spec, img.width, img.height);
  const int cw = crop_extent(spec.alpha, img.width);
  const int ch = crop_extent(spec.alpha, img.height);
  Image out(cw, ch, img.channels);
  for (int y = 0; y < ch; ++y) {
    const auto* src = img.pixels.data() + static_cast<std::size_t>(spec.offset_y + y) * img.row_bytes() +
                      static_cast<std::size_t>(spec.offset_x) * img.channels;
    std::copy_n(src, out.row_bytes(), out.pixels.data() + static_cast<std::size_t>(y) * out.row_bytes());
  }
  return out;
}

CropSpec sample_crop(const AugmentPolicy& policy, Rng& rng, int width, int height) {
  CropSpec spec;
  spec.alpha = rng.uniform(policy.alpha_min, policy.alpha_max);
  const int cw = crop_extent(spec.alpha, width);
  const int ch = crop_extent(spec.alpha, height);
  spec.offset_x = static_cast<int>(rng.below(static_cast<std::uint64_t>(width - cw) + 1));
  spec.offset_y = static_cast<int>(rng.below(static_cast<std::uint64_t>(height - ch) + 1));
  return spec;
}

std::optional<DistortionBox> crop_box(const DistortionBox& b, const CropSpec& spec, int width,
                                      int height, double retention) {
  check_crop(spec, width, height);
  // Coordinates below are source pixels scaled by 1000, so x1*W is exact.
  const std::int64_t cw = crop_extent(spec.alpha, width);
  const std::int64_t ch = crop_extent(spec.alpha, height);
  const std::int64_t left = std::int64_t{kCoordScale} * spec.offset_x;
  const std::int64_t top = std::int64_t{kCoordScale} * spec.offset_y;
  const std::int64_t right = left + kCoordScale * cw;
  const std::int64_t bottom = top + kCoordScale * ch;

  const std::int64_t bx1 = std::int64_t{b.x1} * width, bx2 = std::int64_t{b.x2} * width;
  const std::int64_t by1 = std::int64_t{b.y1} * height, by2 = std::int64_t{b.y2} * height;
  const std::int64_t ix1 = std::max(bx1, left), ix2 = std::min(bx2, right);
  const std::int64_t iy1 = std::max(by1, top), iy2 = std::min(by2, bottom);
  if (ix2 <= ix1 || iy2 <= iy1) return std::nullopt;

  const long double kept = static_cast<long double>(ix2 - ix1) * static_cast<long double>(iy2 - iy1);
  const long double whole = static_cast<long double>(bx2 - bx1) * static_cast<long double>(by2 - by1);
  if (kept < static_cast<long double>(retention) * whole) return std::nullopt;

  DistortionBox out{b.label,
                    static_cast<int>(div_round_half_up(ix1 - left, cw)),
                    static_cast<int>(div_round_half_up(iy1 - top, ch)),
                    static_cast<int>(div_round_half_up(ix2 - left, cw)),
                    static_cast<int>(div_round_half_up(iy2 - top, ch))};
  if (!coords_valid(out)) return std::nullopt;
  return out;
}

std::optional<DistortionBox> SpatialTransform::apply(const DistortionBox& b, double retention) const {
  return crop_box(flip ? flip_box(b) : b, crop, source_width, source_height, retention);
}

Image SpatialTransform::apply(const Image& img) const {
  return crop_image(flip ? flip_image(img) : img, crop);
}

std::string augmented_image_id(const GroundingRecord& record, std::string_view suffix) {
  return record.image + "__" + record.id + std::string(suffix);
}

AugmentedGrounding augment_grounding_record(const GroundingRecord& record, const Image& image,
                                            const AugmentPolicy& policy, Rng& rng,
                                            std::string_view suffix) {
  if (image.width != record.width || image.height != record.height)
    throw InvalidDimensions("image for record " + record.id + " is " + std::to_string(image.width) +
                            "x" + std::to_string(image.height) + ", record says " +
                            std::to_string(record.width) + "x" + std::to_string(record.height));
  for (int attempt = 0; attempt < policy.max_retries; ++attempt) {
    SpatialTransform t;
    t.source_width = record.width;
    t.source_height = record.height;
    t.flip = rng.bernoulli(policy.flip_probability);
    t.crop = sample_crop(policy, rng, record.width, record.height);

    std::vector<DistortionBox> boxes;
    for (const auto& b : record.boxes)
      if (auto moved = t.apply(b, policy.min_box_retention)) boxes.push_back(std::move(*moved));
    if (!record.boxes.empty() && boxes.empty()) continue;

    std::vector<Turn> turns;
    bool text_ok = true;
    for (const auto& turn : record.conversations) {
      auto text = transform_text_boxes(turn.text, t, policy.min_box_retention);
      if (!text) {
        text_ok = false;
        break;
      }
      turns.push_back({turn.role, std::move(*text)});
    }
    if (!text_ok) continue;

    AugmentedGrounding out;
    out.transform = t;
    out.image = t.apply(image);
    out.record.id = record.id + std::string(suffix);
    out.record.image = augmented_image_id(record, suffix);
    out.record.conversations = std::move(turns);
    out.record.boxes = std::move(boxes);
    if (policy.max_tokens > 0) {
      auto [w, h] = resize_to_token_budget(out.image.width, out.image.height, policy.max_tokens,
                                           policy.patch_px);
      out.image = resize_image(out.image, w, h);
    }
    out.record.width = out.image.width;
    out.record.height = out.image.height;
    return out;
  }
  throw AugmentationFailed(record.id);
}

std::int64_t token_count(int width, int height, int patch_px) {
  const std::int64_t p = patch_px;
  return ((width + p - 1) / p) * ((height + p - 1) / p);
}

std::pair<int, int> resize_to_token_budget(int width, int height, int max_tokens, int patch_px) {
  if (width < 1 || height < 1 || max_tokens < 1 || patch_px < 1)
    throw std::invalid_argument("resize_to_token_budget needs positive arguments");
  if (token_count(width, height, patch_px) <= max_tokens) return {width, height};
  // Patches per side: floor(W*s/p) with s = sqrt(T*p^2/(W*H)) reduces to
  // floor(sqrt(T*W/H)), evaluated exactly in integers.
  const std::int64_t budget = max_tokens;
  std::int64_t cols = std::max<std::int64_t>(1, isqrt(budget * width / height));
  std::int64_t rows = std::max<std::int64_t>(1, isqrt(budget * height / width));
  if (cols * rows > budget) {
    if (cols == 1)
      rows = budget;
    else
      cols = budget;
  }
  return {static_cast<int>(cols * patch_px), static_cast<int>(rows * patch_px)};
}

}  // namespace iqakit
