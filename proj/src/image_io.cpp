#include "iqakit/image.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "iqakit/errors.hpp"

namespace iqakit {

Image::Image(int w, int h, int c)
    : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w) * h * c) {}

namespace {

cv::Mat as_mat(const Image& img) {
  // OpenCV never writes through this header.
  return cv::Mat(img.height, img.width, CV_8UC(img.channels),
                 const_cast<std::uint8_t*>(img.pixels.data()));
}

Image from_mat(const cv::Mat& m) {
  Image out(m.cols, m.rows, m.channels());
  for (int y = 0; y < m.rows; ++y)
    std::copy_n(m.ptr<std::uint8_t>(y), out.row_bytes(), out.pixels.data() + y * out.row_bytes());
  return out;
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (m.empty()) throw ImageDecodeError("cannot decode image " + path.string());
  return from_mat(m);
}

void save_image(const std::filesystem::path& path, const Image& img) {
  if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * img.channels)
    throw InvalidDimensions("pixel buffer does not match image dimensions");
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), as_mat(img));
  } catch (const cv::Exception& e) {
    throw IoError("cannot encode " + path.string() + ": " + e.what());
  }
  if (!ok) throw IoError("cannot write image " + path.string());
}

Image resize_image(const Image& img, int width, int height) {
  if (width < 1 || height < 1) throw InvalidDimensions("resize target must be at least 1x1");
  if (width == img.width && height == img.height) return img;
  cv::Mat dst;
  cv::resize(as_mat(img), dst, cv::Size(width, height), 0, 0, cv::INTER_AREA);
  return from_mat(dst);
}

}  // namespace iqakit
