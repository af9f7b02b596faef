#pragma once

#include <map>
#include <mutex>
#include <string>

#include "iqakit/mixer.hpp"

namespace iqakit::testing {

/// Synthesizes source pixels from the image id and keeps written images in memory.
class MemoryImageStore : public ImageStore {
 public:
  Image load(const AnnotatedImage& image) override {
    Image img(image.width, image.height, 3);
    auto h = Rng::fnv1a(image.id);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>((h >> (i % 56)) + i);
    return img;
  }
  void store(const AnnotatedImage& image, const Image& pixels) override {
    std::lock_guard lock(mu_);
    written_[image.path] = pixels;
  }
  const std::map<std::string, Image>& written() const { return written_; }

 private:
  std::mutex mu_;
  std::map<std::string, Image> written_;
};

}  // namespace iqakit::testing
