#include "iqakit/corpus.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "iqakit/errors.hpp"
#include "iqakit/quality_levels.hpp"

namespace iqakit {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
  return *it;
}

std::string get_string(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_string()) throw std::invalid_argument(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

int get_int(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_number_integer())
    throw std::invalid_argument(std::string("field '") + key + "' must be an integer");
  auto n = v.get<long long>();
  if (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max())
    throw std::invalid_argument(std::string("field '") + key + "' out of integer range");
  return static_cast<int>(n);
}

double get_double(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_number()) throw std::invalid_argument(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

const json& get_array(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_array()) throw std::invalid_argument(std::string("field '") + key + "' must be an array");
  return v;
}

std::vector<DistortionBox> boxes_from_json(const json& arr, const DistortionTaxonomy& taxonomy) {
  std::vector<DistortionBox> out;
  out.reserve(arr.size());
  for (const auto& b : arr) out.push_back(box_from_json(b, taxonomy));
  return out;
}

ordered_json boxes_to_json(const std::vector<DistortionBox>& boxes) {
  auto arr = ordered_json::array();
  for (const auto& b : boxes) arr.push_back(box_to_json(b));
  return arr;
}

int positive_dim(const json& j, const char* key) {
  int v = get_int(j, key);
  if (v < 1) throw std::invalid_argument(std::string(key) + " must be >= 1");
  return v;
}

// Reads one JSONL file, calling `consume` for every non-blank line. Parse and
// decode failures become diagnostics (or InvalidRecord in strict mode).
void read_jsonl(const fs::path& root, const char* name, const LoadOptions& options,
                std::vector<Diagnostic>& diagnostics,
                const std::function<void(const json&)>& consume) {
  auto path = root / name;
  if (!fs::is_regular_file(path)) throw MissingCorpusFile(path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::string reason;
    try {
      auto j = json::parse(line);
      if (!j.is_object()) throw std::invalid_argument("line is not a JSON object");
      consume(j);
      continue;
    } catch (const json::exception& e) {
      reason = std::string("malformed JSON: ") + e.what();
    } catch (const std::invalid_argument& e) {
      reason = e.what();
    } catch (const OutOfRange& e) {
      reason = e.what();
    }
    if (options.strict) throw InvalidRecord(name, lineno, reason);
    diagnostics.push_back({name, lineno, reason});
  }
}

class RecordChecker {
 public:
  explicit RecordChecker(const std::vector<AnnotatedImage>& images) {
    for (const auto& img : images) dims_.emplace(img.id, std::make_pair(img.width, img.height));
  }

  void image_exists(const std::string& image_id) const {
    if (!dims_.count(image_id))
      throw std::invalid_argument("image '" + image_id + "' does not resolve to an annotated image");
  }

  void grounding_dims(const GroundingRecord& r) const {
    image_exists(r.image);
    auto [w, h] = dims_.at(r.image);
    if (w != r.width || h != r.height)
      throw std::invalid_argument("record size " + std::to_string(r.width) + "x" +
                                  std::to_string(r.height) + " does not match image '" + r.image + "'");
  }

  void unique_id(const std::string& scope, const std::string& id) {
    if (!seen_[scope].insert(id).second)
      throw std::invalid_argument("duplicate record id '" + id + "'");
  }

 private:
  std::unordered_map<std::string, std::pair<int, int>> dims_;
  std::unordered_map<std::string, std::unordered_set<std::string>> seen_;
};

}  // namespace

std::string Diagnostic::to_string() const {
  return file + ":" + std::to_string(line) + ": " + reason;
}

ordered_json box_to_json(const DistortionBox& b) {
  ordered_json j;
  j["label"] = b.label;
  j["x1"] = b.x1;
  j["y1"] = b.y1;
  j["x2"] = b.x2;
  j["y2"] = b.y2;
  return j;
}

ordered_json to_json(const AnnotatedImage& r) {
  ordered_json j;
  j["id"] = r.id;
  j["path"] = r.path;
  j["width"] = r.width;
  j["height"] = r.height;
  j["mos"] = r.mos.value();
  j["boxes"] = boxes_to_json(r.boxes);
  return j;
}

ordered_json to_json(const GroundingRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  j["image"] = r.image;
  j["width"] = r.width;
  j["height"] = r.height;
  auto conv = ordered_json::array();
  for (const auto& t : r.conversations) {
    ordered_json turn;
    turn["role"] = t.role;
    turn["text"] = t.text;
    conv.push_back(std::move(turn));
  }
  j["conversations"] = std::move(conv);
  j["boxes"] = boxes_to_json(r.boxes);
  return j;
}

ordered_json to_json(const McqSample& r) {
  ordered_json j;
  j["id"] = r.id;
  j["image"] = r.image;
  j["question"] = r.question;
  j["options"] = r.options;
  j["answer"] = r.answer_index;
  return j;
}

ordered_json to_json(const DescriptionSample& r) {
  ordered_json j;
  j["id"] = r.id;
  j["image"] = r.image;
  j["text"] = r.assessment_text;
  j["detections"] = boxes_to_json(r.detections);
  j["key_distortions"] = boxes_to_json(r.key_distortions);
  j["quality_label"] = r.quality_label;
  if (r.mos)
    j["mos"] = r.mos->value();
  else
    j["mos"] = nullptr;
  return j;
}

DistortionBox box_from_json(const json& j, const DistortionTaxonomy& taxonomy) {
  if (!j.is_object()) throw std::invalid_argument("box must be an object");
  auto raw = get_string(j, "label");
  auto label = taxonomy.normalize(raw);
  if (!label) throw std::invalid_argument("label '" + raw + "' is not in the distortion taxonomy");
  DistortionBox b{*label, get_int(j, "x1"), get_int(j, "y1"), get_int(j, "x2"), get_int(j, "y2")};
  if (!coords_valid(b))
    throw std::invalid_argument("box invariant violated: need 0 <= x1 < x2 <= 1000 and 0 <= y1 < y2 <= 1000, got [" +
                                std::to_string(b.x1) + "," + std::to_string(b.y1) + "," +
                                std::to_string(b.x2) + "," + std::to_string(b.y2) + "]");
  return b;
}

AnnotatedImage image_from_json(const json& j, const DistortionTaxonomy& taxonomy) {
  AnnotatedImage r;
  r.id = get_string(j, "id");
  r.path = get_string(j, "path");
  r.width = positive_dim(j, "width");
  r.height = positive_dim(j, "height");
  r.mos = MosScore(get_double(j, "mos"));
  r.boxes = boxes_from_json(get_array(j, "boxes"), taxonomy);
  return r;
}

GroundingRecord grounding_from_json(const json& j, const DistortionTaxonomy& taxonomy) {
  GroundingRecord r;
  r.id = get_string(j, "id");
  r.image = get_string(j, "image");
  r.width = positive_dim(j, "width");
  r.height = positive_dim(j, "height");
  for (const auto& t : get_array(j, "conversations"))
    r.conversations.push_back({get_string(t, "role"), get_string(t, "text")});
  r.boxes = boxes_from_json(get_array(j, "boxes"), taxonomy);
  return r;
}

McqSample mcq_from_json(const json& j) {
  McqSample r;
  r.id = get_string(j, "id");
  r.image = get_string(j, "image");
  r.question = get_string(j, "question");
  for (const auto& o : get_array(j, "options")) {
    if (!o.is_string()) throw std::invalid_argument("options must be strings");
    r.options.push_back(o.get<std::string>());
  }
  r.answer_index = get_int(j, "answer");
  if (auto why = check_record(r); !why.empty()) throw std::invalid_argument(why);
  return r;
}

DescriptionSample description_from_json(const json& j, const DistortionTaxonomy& taxonomy) {
  DescriptionSample r;
  r.id = get_string(j, "id");
  r.image = get_string(j, "image");
  r.assessment_text = get_string(j, "text");
  r.detections = boxes_from_json(get_array(j, "detections"), taxonomy);
  r.key_distortions = boxes_from_json(get_array(j, "key_distortions"), taxonomy);
  r.quality_label = get_string(j, "quality_label");
  if (auto it = j.find("mos"); it != j.end() && !it->is_null()) r.mos = MosScore(get_double(j, "mos"));
  if (auto why = check_record(r, false); !why.empty()) throw std::invalid_argument(why);
  return r;
}

std::string check_record(const McqSample& r) {
  if (r.options.size() < 2) return "mcq needs at least two options";
  if (r.answer_index < 0 || static_cast<std::size_t>(r.answer_index) >= r.options.size())
    return "answer index " + std::to_string(r.answer_index) + " outside [0," +
           std::to_string(r.options.size()) + ")";
  std::set<std::string> distinct(r.options.begin(), r.options.end());
  if (distinct.size() != r.options.size()) return "mcq options are not distinct";
  return {};
}

std::string check_record(const DescriptionSample& r, bool require_key_distortions) {
  if (!is_scale_label(r.quality_label))
    return "quality_label '" + r.quality_label + "' is not a known quality level";
  if (require_key_distortions && r.key_distortions.empty()) return "key_distortions is empty";
  for (const auto& k : r.key_distortions) {
    if (std::find(r.detections.begin(), r.detections.end(), k) == r.detections.end())
      return "key distortion '" + k.label + "' is not among the detections";
  }
  return {};
}

LoadResult load_corpus(const fs::path& root, const DistortionTaxonomy& taxonomy, LoadOptions options) {
  if (!fs::is_directory(root)) throw MissingCorpusFile(root.string());
  LoadResult result;
  auto& b = result.bundle;
  auto& diags = result.diagnostics;

  std::unordered_set<std::string> image_ids;
  read_jsonl(root, corpus_files::kImages, options, diags, [&](const json& j) {
    auto img = image_from_json(j, taxonomy);
    if (!image_ids.insert(img.id).second)
      throw std::invalid_argument("duplicate image id '" + img.id + "'");
    b.images.push_back(std::move(img));
  });

  RecordChecker check(b.images);
  auto grounding = [&](std::vector<GroundingRecord>& dst) {
    return [&](const json& j) {
      auto r = grounding_from_json(j, taxonomy);
      check.grounding_dims(r);
      check.unique_id("grounding", r.id);
      dst.push_back(std::move(r));
    };
  };
  read_jsonl(root, corpus_files::kRegGrounding, options, diags, grounding(b.reg_grounding));
  read_jsonl(root, corpus_files::kDistDetect, options, diags, grounding(b.dist_detect));

  read_jsonl(root, corpus_files::kMcq, options, diags, [&](const json& j) {
    auto r = mcq_from_json(j);
    check.image_exists(r.image);
    check.unique_id("mcq", r.id);
    b.mcq.push_back(std::move(r));
  });

  auto description = [&](std::vector<DescriptionSample>& dst, const char* scope, bool need_keys) {
    return [&, scope, need_keys](const json& j) {
      auto r = description_from_json(j, taxonomy);
      if (auto why = check_record(r, need_keys); !why.empty()) throw std::invalid_argument(why);
      check.image_exists(r.image);
      check.unique_id(scope, r.id);
      dst.push_back(std::move(r));
    };
  };
  read_jsonl(root, corpus_files::kAssess, options, diags, description(b.assess, "assess", true));
  read_jsonl(root, corpus_files::kBriefAssess, options, diags,
             description(b.brief_assess, "brief_assess", false));
  read_jsonl(root, corpus_files::kScores, options, diags, description(b.scores, "scores", false));

  auto meta_path = root / corpus_files::kMetadata;
  if (fs::exists(meta_path)) {
    std::ifstream in(meta_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + meta_path.string());
    try {
      b.metadata = json::parse(in);
    } catch (const json::exception& e) {
      std::string reason = std::string("malformed JSON: ") + e.what();
      if (options.strict) throw InvalidRecord(corpus_files::kMetadata, 0, reason);
      diags.push_back({corpus_files::kMetadata, 0, reason});
    }
  }
  return result;
}

std::vector<Diagnostic> validate_bundle(const CorpusBundle& b, const DistortionTaxonomy& taxonomy) {
  std::vector<Diagnostic> diags;
  auto guard = [&](const char* file, std::size_t line, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      diags.push_back({file, line, e.what()});
    } catch (const Error& e) {
      diags.push_back({file, line, e.what()});
    }
  };
  auto boxes_ok = [&](const std::vector<DistortionBox>& boxes) {
    for (const auto& box : boxes) box_from_json(box_to_json(box), taxonomy);
  };

  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < b.images.size(); ++i) {
    guard(corpus_files::kImages, i + 1, [&] {
      const auto& img = b.images[i];
      if (img.width < 1 || img.height < 1) throw std::invalid_argument("image dimensions must be >= 1");
      boxes_ok(img.boxes);
      if (!ids.insert(img.id).second) throw std::invalid_argument("duplicate image id '" + img.id + "'");
    });
  }
  RecordChecker check(b.images);
  auto grounding = [&](const std::vector<GroundingRecord>& records, const char* file) {
    for (std::size_t i = 0; i < records.size(); ++i)
      guard(file, i + 1, [&] {
        boxes_ok(records[i].boxes);
        check.grounding_dims(records[i]);
        check.unique_id("grounding", records[i].id);
      });
  };
  grounding(b.reg_grounding, corpus_files::kRegGrounding);
  grounding(b.dist_detect, corpus_files::kDistDetect);
  for (std::size_t i = 0; i < b.mcq.size(); ++i)
    guard(corpus_files::kMcq, i + 1, [&] {
      if (auto why = check_record(b.mcq[i]); !why.empty()) throw std::invalid_argument(why);
      check.image_exists(b.mcq[i].image);
      check.unique_id("mcq", b.mcq[i].id);
    });
  auto description = [&](const std::vector<DescriptionSample>& records, const char* file,
                         bool need_keys) {
    for (std::size_t i = 0; i < records.size(); ++i)
      guard(file, i + 1, [&] {
        boxes_ok(records[i].detections);
        boxes_ok(records[i].key_distortions);
        if (auto why = check_record(records[i], need_keys); !why.empty()) throw std::invalid_argument(why);
        check.image_exists(records[i].image);
        check.unique_id(file, records[i].id);
      });
  };
  description(b.assess, corpus_files::kAssess, true);
  description(b.brief_assess, corpus_files::kBriefAssess, false);
  description(b.scores, corpus_files::kScores, false);
  return diags;
}

void write_jsonl(const fs::path& path, const std::vector<std::string>& lines) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::size_t count_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::size_t n = 0;
  char c;
  while (in.get(c))
    if (c == '\n') ++n;
  return n;
}

void save_corpus(const CorpusBundle& bundle, const fs::path& root) {
  auto dump = [](const auto& records) {
    std::vector<std::string> lines;
    lines.reserve(records.size());
    for (const auto& r : records) lines.push_back(to_json(r).dump());
    return lines;
  };
  write_jsonl(root / corpus_files::kImages, dump(bundle.images));
  write_jsonl(root / corpus_files::kRegGrounding, dump(bundle.reg_grounding));
  write_jsonl(root / corpus_files::kDistDetect, dump(bundle.dist_detect));
  write_jsonl(root / corpus_files::kMcq, dump(bundle.mcq));
  write_jsonl(root / corpus_files::kAssess, dump(bundle.assess));
  write_jsonl(root / corpus_files::kBriefAssess, dump(bundle.brief_assess));
  write_jsonl(root / corpus_files::kScores, dump(bundle.scores));
  write_jsonl(root / corpus_files::kMetadata, {bundle.metadata.dump(2)});
}

std::optional<std::string> metadata_attribute(const json& metadata, const std::string& image_id,
                                              const std::string& key) {
  auto images = metadata.find("images");
  if (images == metadata.end() || !images->is_object()) return std::nullopt;
  auto img = images->find(image_id);
  if (img == images->end() || !img->is_object()) return std::nullopt;
  auto v = img->find(key);
  if (v == img->end()) return std::nullopt;
  if (v->is_string()) return v->get<std::string>();
  if (v->is_number() || v->is_boolean()) return v->dump();
  return std::nullopt;
}

}  // namespace iqakit
