#include "iqakit/types.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "iqakit/errors.hpp"

namespace iqakit {

namespace {

std::string fold(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(begin, end - begin + 1));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

bool coords_valid(const DistortionBox& b) {
  return 0 <= b.x1 && b.x1 < b.x2 && b.x2 <= kCoordScale && 0 <= b.y1 && b.y1 < b.y2 &&
         b.y2 <= kCoordScale;
}

DistortionTaxonomy::DistortionTaxonomy(std::vector<std::string> labels) {
  if (labels.empty()) throw std::invalid_argument("taxonomy has no labels");
  labels_.reserve(labels.size());
  for (const auto& raw : labels) {
    auto label = fold(raw);
    if (label.empty()) throw std::invalid_argument("taxonomy label is empty");
    if (std::find(labels_.begin(), labels_.end(), label) != labels_.end())
      throw std::invalid_argument("duplicate taxonomy label: " + label);
    labels_.push_back(std::move(label));
  }
}

DistortionTaxonomy DistortionTaxonomy::defaults() {
  return DistortionTaxonomy({"blur", "motion blur", "noise", "overexposure", "underexposure",
                             "low contrast", "compression artifact", "color distortion",
                             "banding", "aliasing"});
}

DistortionTaxonomy DistortionTaxonomy::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read taxonomy file " + path.string());
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    auto folded = fold(line);
    if (folded.empty() || folded.front() == '#') continue;
    labels.push_back(std::move(folded));
  }
  return DistortionTaxonomy(std::move(labels));
}

bool DistortionTaxonomy::contains(std::string_view label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::optional<std::string> DistortionTaxonomy::normalize(std::string_view label) const {
  auto folded = fold(label);
  if (contains(folded)) return folded;
  return std::nullopt;
}

MosScore::MosScore(double value) : value_(value) {
  if (!(value >= 1.0 && value <= 5.0))
    throw OutOfRange("MOS " + std::to_string(value) + " outside [1,5]");
}

const AnnotatedImage* CorpusBundle::find_image(std::string_view id) const {
  for (const auto& img : images)
    if (img.id == id) return &img;
  return nullptr;
}

}  // namespace iqakit
