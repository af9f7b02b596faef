#include "iqakit/output_parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace iqakit {

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

class Cursor {
 public:
  explicit Cursor(std::string_view text, std::size_t pos = 0) : text_(text), pos_(pos) {}

  std::size_t pos() const { return pos_; }
  void reset(std::size_t p) { pos_ = p; }
  bool done() const { return pos_ >= text_.size(); }
  char peek() const { return done() ? '\0' : text_[pos_]; }

  void skip_ws() {
    while (!done() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }

  // Optionally signed integer, saturating far beyond the coordinate range.
  std::optional<long long> integer() {
    auto start = pos_;
    bool neg = false;
    if (peek() == '-' || peek() == '+') {
      neg = peek() == '-';
      ++pos_;
    }
    long long v = 0;
    std::size_t digits = 0;
    while (!done() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      if (v < 1'000'000'000LL) v = v * 10 + (text_[pos_] - '0');
      ++pos_;
      ++digits;
    }
    if (digits == 0) {
      pos_ = start;
      return std::nullopt;
    }
    return neg ? -v : v;
  }

 private:
  std::string_view text_;
  std::size_t pos_;
};

using Group = std::array<long long, 4>;

std::optional<Group> parse_group(Cursor& c, bool strict) {
  auto start = c.pos();
  char close;
  if (c.eat('['))
    close = ']';
  else if (!strict && c.eat('('))
    close = ')';
  else
    return std::nullopt;
  Group g{};
  for (std::size_t i = 0; i < 4; ++i) {
    c.skip_ws();
    auto v = c.integer();
    if (!v) {
      c.reset(start);
      return std::nullopt;
    }
    g[i] = *v;
    c.skip_ws();
    if (i < 3 && !c.eat(',')) {
      c.reset(start);
      return std::nullopt;
    }
  }
  if (!c.eat(close)) {
    c.reset(start);
    return std::nullopt;
  }
  return g;
}

// Coordinate groups following a label. Leaves the cursor after the last
// consumed character; on failure the cursor is where it started.
std::vector<Group> parse_entry_groups(Cursor& c, bool strict) {
  std::vector<Group> groups;
  auto start = c.pos();
  c.skip_ws();
  if (strict) {
    if (!c.eat(':')) {
      c.reset(start);
      return {};
    }
    c.skip_ws();
    if (!c.eat('[')) {
      c.reset(start);
      return {};
    }
    for (;;) {
      c.skip_ws();
      auto g = parse_group(c, true);
      if (!g) {
        c.reset(start);
        return {};
      }
      groups.push_back(*g);
      c.skip_ws();
      if (c.eat(',')) continue;
      if (c.eat(']')) return groups;
      c.reset(start);
      return {};
    }
  }

  if (c.peek() == ':' || c.peek() == '-' || c.peek() == '=') c.eat(c.peek());
  c.skip_ws();
  bool outer = false;
  if (c.peek() == '[') {
    auto here = c.pos();
    c.eat('[');
    c.skip_ws();
    if (c.peek() == '[' || c.peek() == '(')
      outer = true;
    else
      c.reset(here);
  }
  for (;;) {
    auto before = c.pos();
    c.skip_ws();
    auto g = parse_group(c, false);
    if (!g) {
      c.reset(before);
      break;
    }
    groups.push_back(*g);
    auto after = c.pos();
    c.skip_ws();
    if (!c.eat(',') && !c.eat(';')) c.reset(after);
  }
  if (groups.empty()) {
    c.reset(start);
    return {};
  }
  if (outer) {
    auto here = c.pos();
    c.skip_ws();
    if (!c.eat(']')) c.reset(here);
  }
  return groups;
}

std::string group_text(const Group& g) {
  return "[" + std::to_string(g[0]) + ", " + std::to_string(g[1]) + ", " + std::to_string(g[2]) + ", " +
         std::to_string(g[3]) + "]";
}

// Position of the last case-insensitive occurrence of `header` in `low`.
std::size_t find_header(const std::string& low, std::string_view header) { return low.rfind(header); }

}  // namespace

DetectionParse parse_detections(std::string_view text, const DistortionTaxonomy& taxonomy,
                                ParseOptions options) {
  DetectionParse out;
  const std::string low = lower(text);
  std::vector<std::string> labels = taxonomy.labels();
  std::stable_sort(labels.begin(), labels.end(),
                   [](const std::string& a, const std::string& b) { return a.size() > b.size(); });

  std::size_t pos = 0;
  while (pos < low.size()) {
    if (pos > 0 && is_word_char(low[pos - 1])) {
      ++pos;
      continue;
    }
    const std::string* matched = nullptr;
    for (const auto& label : labels) {
      if (low.compare(pos, label.size(), label) != 0) continue;
      auto end = pos + label.size();
      if (end < low.size() && is_word_char(low[end])) continue;
      matched = &label;
      break;
    }
    if (!matched) {
      ++pos;
      continue;
    }
    Cursor c(low, pos + matched->size());
    auto groups = parse_entry_groups(c, options.strict);
    if (groups.empty()) {
      pos += matched->size();
      continue;
    }
    for (const auto& g : groups) {
      Group clamped = g;
      for (auto& v : clamped) v = std::clamp<long long>(v, 0, kCoordScale);
      if (clamped != g)
        out.diagnostics.push_back("clamped " + *matched + " " + group_text(g) + " to " + group_text(clamped));
      DistortionBox b{*matched, static_cast<int>(clamped[0]), static_cast<int>(clamped[1]),
                      static_cast<int>(clamped[2]), static_cast<int>(clamped[3])};
      if (!coords_valid(b)) {
        out.diagnostics.push_back("dropped " + *matched + " " + group_text(clamped) +
                                  ": needs x1 < x2 and y1 < y2");
        continue;
      }
      out.boxes.push_back(std::move(b));
    }
    pos = c.pos();
  }
  if (out.boxes.empty()) out.diagnostics.push_back("no detections");
  return out;
}

std::string serialize_detections(std::span<const DistortionBox> boxes) {
  std::string out;
  for (std::size_t i = 0; i < boxes.size();) {
    if (!out.empty()) out += '\n';
    out += boxes[i].label;
    out += ": [";
    std::size_t j = i;
    for (; j < boxes.size() && boxes[j].label == boxes[i].label; ++j) {
      if (j > i) out += ", ";
      out += group_text({boxes[j].x1, boxes[j].y1, boxes[j].x2, boxes[j].y2});
    }
    out += ']';
    i = j;
  }
  return out;
}

std::optional<int> parse_mcq_choice(std::string_view text, int option_count) {
  if (option_count < 1) return std::nullopt;
  const int letters = std::min(option_count, 26);
  for (char base : {'A', 'a'}) {
    for (std::size_t i = 0; i < text.size(); ++i) {
      char ch = text[i];
      if (ch < base || ch >= base + 26) continue;
      if (i > 0 && is_word_char(text[i - 1])) continue;
      if (i + 1 < text.size() && is_word_char(text[i + 1])) continue;
      int idx = ch - base;
      if (idx < letters) return idx;
    }
  }
  return std::nullopt;
}

std::optional<int> parse_mcq_choice(std::string_view text, std::span<const std::string> options,
                                    ParseOptions parse) {
  if (auto idx = parse_mcq_choice(text, static_cast<int>(options.size()))) return idx;
  if (parse.strict) return std::nullopt;
  const std::string low = lower(text);
  std::optional<int> best;
  std::size_t best_len = 0;
  for (std::size_t i = 0; i < options.size(); ++i) {
    auto opt = lower(options[i]);
    if (opt.empty() || opt.size() <= best_len) continue;
    if (low.find(opt) != std::string::npos) {
      best = static_cast<int>(i);
      best_len = opt.size();
    }
  }
  return best;
}

std::optional<QualityWord> parse_quality_word(std::string_view text) {
  const std::string low = lower(text);
  std::optional<QualityWord> last;
  std::size_t i = 0;
  while (i < low.size()) {
    if (!is_word_char(low[i])) {
      ++i;
      continue;
    }
    auto j = i;
    while (j < low.size() && is_word_char(low[j])) ++j;
    if (auto w = parse_quality_word_exact(std::string_view(low).substr(i, j - i))) last = w;
    i = j;
  }
  return last;
}

ParsedPrediction parse_description_response(std::string_view text, const DistortionTaxonomy& taxonomy,
                                            ParseOptions options) {
  ParsedPrediction out;
  const std::string low = lower(text);
  constexpr std::string_view kDet = "detections:";
  constexpr std::string_view kKey = "key distortions:";
  constexpr std::string_view kQual = "quality:";
  auto dpos = find_header(low, kDet);
  auto kpos = find_header(low, kKey);
  auto qpos = find_header(low, kQual);
  auto end_of = [&](std::size_t from) {
    std::size_t end = text.size();
    for (auto p : {dpos, kpos, qpos})
      if (p != std::string::npos && p > from && p < end) end = p;
    return end;
  };

  auto take = [&](std::size_t header, std::string_view name, std::vector<DistortionBox>& dst) {
    auto from = header + name.size();
    auto part = text.substr(from, end_of(header) - from);
    auto parsed = parse_detections(part, taxonomy, options);
    dst = std::move(parsed.boxes);
    for (auto& d : parsed.diagnostics) out.diagnostics.push_back(std::string(name) + " " + d);
  };

  if (dpos != std::string::npos) {
    take(dpos, kDet, out.detections);
  } else if (!options.strict && kpos == std::string::npos) {
    auto parsed = parse_detections(text.substr(0, qpos == std::string::npos ? text.size() : qpos),
                                   taxonomy, options);
    out.detections = std::move(parsed.boxes);
    for (auto& d : parsed.diagnostics) out.diagnostics.push_back(std::move(d));
  } else {
    out.diagnostics.push_back("missing 'Detections:' section");
  }

  if (kpos != std::string::npos)
    take(kpos, kKey, out.key_distortions);
  else
    out.diagnostics.push_back("missing 'Key distortions:' section");

  std::string_view quality_part = text;
  if (qpos != std::string::npos) {
    quality_part = text.substr(qpos + kQual.size());
  } else if (options.strict) {
    out.diagnostics.push_back("missing 'Quality:' section");
    return out;
  }
  out.quality_word = parse_quality_word(quality_part);
  if (!out.quality_word) {
    // A bare k-level letter means the response was never mapped back.
    auto ql = lower(quality_part);
    for (std::size_t i = 0; i < ql.size(); ++i) {
      if (ql[i] < 'a' || ql[i] >= 'a' + 20) continue;
      if ((i > 0 && is_word_char(ql[i - 1])) || (i + 1 < ql.size() && is_word_char(ql[i + 1]))) continue;
      out.diagnostics.push_back(std::string("k-level label '") + ql[i] +
                                "' must be mapped back to a five-level word before scoring");
      return out;
    }
    out.diagnostics.push_back("no quality word");
  }
  return out;
}

std::string render_description_response(std::string_view assessment,
                                        std::span<const DistortionBox> detections,
                                        std::span<const DistortionBox> key_distortions,
                                        std::optional<QualityWord> quality) {
  std::string out(assessment);
  if (!out.empty() && out.back() != '\n') out += '\n';
  out += "Detections:\n" + serialize_detections(detections) + "\n";
  out += "Key distortions:\n" + serialize_detections(key_distortions) + "\n";
  out += "Quality: ";
  if (quality) out += to_string(*quality);
  return out;
}

std::string render_mcq_answer(int index) { return std::string("Answer: ") + static_cast<char>('A' + index); }

}  // namespace iqakit
