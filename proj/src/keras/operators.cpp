#include "hubscan/keras/operators.hpp"

#include <sstream>
#include <unordered_set>

namespace hubscan::keras {

const std::vector<RiskyOperator>& default_risky_operators() {
  static const std::vector<RiskyOperator> kOps{
      {"tf.io.read_file", {"ReadFile"}},
      {"tf.io.write_file", {"WriteFile"}},
  };
  return kOps;
}

std::vector<RiskyOperator> parse_risky_operators(std::string_view text) {
  std::vector<RiskyOperator> out;
  std::unordered_set<std::string> names;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream words(line);
    RiskyOperator op;
    if (!(words >> op.name)) continue;
    for (std::string alias; words >> alias;) op.aliases.push_back(alias);
    if (!names.insert(op.name).second) {
      throw Error("risky operator list line " + std::to_string(lineno) + ": duplicate operator " + op.name);
    }
    out.push_back(std::move(op));
  }
  return out;
}

namespace {

bool contains_any(std::string_view text, const RiskyOperator& op) {
  if (text.find(op.name) != std::string_view::npos) return true;
  for (const auto& a : op.aliases) {
    if (!a.empty() && text.find(a) != std::string_view::npos) return true;
  }
  return false;
}

}  // namespace

UnsafeOperatorSet check_unsafe_operators(const std::vector<LayerConfig>& layers,
                                         const std::vector<std::string>& raw_strings,
                                         const std::vector<RiskyOperator>& risky) {
  UnsafeOperatorSet out;
  std::vector<std::string> texts;
  texts.reserve(layers.size());
  for (const auto& l : layers) texts.push_back(l.text());
  for (const auto& op : risky) {
    bool hit = false;
    for (const auto& t : texts) hit = hit || contains_any(t, op);
    for (const auto& s : raw_strings) hit = hit || contains_any(s, op);
    if (hit) out.ops.insert(op.name);
  }
  return out;
}

namespace {

constexpr int kMaxDepth = 48;

struct WireError {
  std::size_t offset;
  std::string what;
};

struct Field {
  std::uint64_t number = 0;
  int wire_type = 0;
  std::size_t begin = 0, end = 0;  // payload range for length-delimited fields
};

// Parses the fields of one message occupying b[begin, end). Throws WireError.
std::vector<Field> parse_fields(ByteView b, std::size_t begin, std::size_t end) {
  std::vector<Field> fields;
  std::size_t pos = begin;
  const auto varint = [&]() -> std::uint64_t {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      if (pos >= end) throw WireError{pos, "varint runs past the end of the message"};
      const auto byte = b[pos++];
      v |= static_cast<std::uint64_t>(byte & 0x7F) << shift;
      if (!(byte & 0x80)) return v;
    }
    throw WireError{pos, "varint longer than 10 bytes"};
  };
  const auto skip = [&](std::uint64_t n) {
    if (n > end - pos) throw WireError{pos, "field runs past the end of the message"};
    pos += static_cast<std::size_t>(n);
  };
  std::vector<std::uint64_t> groups;
  while (pos < end) {
    const auto at = pos;
    const auto tag = varint();
    Field f;
    f.number = tag >> 3;
    f.wire_type = static_cast<int>(tag & 7);
    if (f.number == 0) throw WireError{at, "field number 0"};
    switch (f.wire_type) {
      case 0: varint(); break;
      case 1: skip(8); break;
      case 5: skip(4); break;
      case 2: {
        const auto len = varint();
        f.begin = pos;
        skip(len);
        f.end = pos;
        break;
      }
      case 3: groups.push_back(f.number); break;
      case 4:
        if (groups.empty() || groups.back() != f.number) throw WireError{at, "unmatched end-group"};
        groups.pop_back();
        break;
      default: throw WireError{at, "invalid wire type " + std::to_string(f.wire_type)};
    }
    fields.push_back(f);
  }
  if (!groups.empty()) throw WireError{end, "unterminated group"};
  return fields;
}

bool printable(std::string_view s) {
  if (s.empty()) return false;
  for (unsigned char c : s) {
    if ((c < 0x20 && c != '\t' && c != '\n' && c != '\r') || c == 0x7f) return false;
  }
  return utf8_lossy(as_bytes(s)) == s;
}

// Keras SavedModel node identifiers: layer nodes are kept, while
// model and metric nodes (whose metadata repeats their sublayers) are not.
bool keeps_layer_json(std::string_view identifier) {
  return identifier.empty() || identifier.ends_with("_layer");
}

class Walker {
 public:
  Walker(ByteView b, SavedModelScan& out) : b_(b), out_(out) {}

  void message(std::size_t begin, std::size_t end, int depth, bool top) {
    std::vector<Field> fields;
    try {
      fields = parse_fields(b_, begin, end);
    } catch (const WireError&) {
      if (top) throw;
      return;
    }
    std::string identifier;
    std::vector<std::string_view> json_candidates;
    for (const auto& f : fields) {
      if (f.wire_type != 2) continue;
      const std::string_view s(reinterpret_cast<const char*>(b_.data() + f.begin), f.end - f.begin);
      if (printable(s)) {
        add_string(s);
        if (s.starts_with("_tf_keras_")) identifier = s;
        if (s.starts_with("{")) json_candidates.push_back(s);
      }
      if (depth < kMaxDepth && f.end > f.begin) message(f.begin, f.end, depth + 1, false);
    }
    if (!keeps_layer_json(identifier)) return;
    for (const auto s : json_candidates) add_layer_json(s);
  }

  void add_string(std::string_view s) {
    if (seen_.emplace(s).second) out_.strings.emplace_back(s);
  }

  void add_layer_json(std::string_view s) {
    auto doc = nlohmann::json::parse(s, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return;
    const auto cls = doc.find("class_name");
    if (cls == doc.end() || !cls->is_string() || cls->get<std::string>().empty()) return;
    LayerConfig layer;
    layer.class_name = cls->get<std::string>();
    layer.source = LayerSource::SavedModelNode;
    if (const auto n = doc.find("name"); n != doc.end() && n->is_string()) layer.name = *n;
    if (layer.name.empty()) {
      if (const auto c = doc.find("config"); c != doc.end() && c->is_object()) {
        if (const auto n = c->find("name"); n != c->end() && n->is_string()) layer.name = *n;
      }
    }
    layer.config_json = std::move(doc);
    out_.layers.push_back(std::move(layer));
  }

 private:
  ByteView b_;
  SavedModelScan& out_;
  std::unordered_set<std::string> seen_;
};

// The balanced `{...}` prefix of `s`, honoring JSON string quoting.
std::string_view balanced_object(std::string_view s) {
  int depth = 0;
  bool in_string = false, escaped = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
    } else if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}' && --depth == 0) {
      return s.substr(0, i + 1);
    }
  }
  return {};
}

// Printable runs of at least four bytes, the way `strings` reports them.
void raw_scan(ByteView b, Walker& w) {
  std::size_t i = 0;
  while (i < b.size()) {
    std::size_t j = i;
    while (j < b.size() && ((b[j] >= 0x20 && b[j] < 0x7f) || b[j] == '\t' || b[j] == '\n' || b[j] == '\r')) ++j;
    if (j - i >= 4) {
      const std::string_view run(reinterpret_cast<const char*>(b.data() + i), j - i);
      w.add_string(run);
      for (auto brace = run.find('{'); brace != std::string_view::npos; brace = run.find('{', brace + 1)) {
        if (brace + 1 >= run.size() || run[brace + 1] != '"') continue;
        const auto obj = balanced_object(run.substr(brace));
        if (obj.find("\"class_name\"") == std::string_view::npos) continue;
        w.add_layer_json(obj);
        brace += obj.size() - 1;
      }
    }
    i = j + 1;
  }
}

}  // namespace

SavedModelScan scan_saved_model_detailed(ByteView bytes) {
  SavedModelScan out;
  Walker w(bytes, out);
  try {
    w.message(0, bytes.size(), 0, true);
  } catch (const WireError& e) {
    out = SavedModelScan{};
    out.degraded = true;
    out.error_offset = e.offset;
    out.error = e.what;
    Walker fresh(bytes, out);
    raw_scan(bytes, fresh);
  }
  return out;
}

std::vector<LayerConfig> scan_saved_model(ByteView bytes) { return scan_saved_model_detailed(bytes).layers; }

}  // namespace hubscan::keras
