#include "hubscan/keras/lambda.hpp"

#include <openssl/evp.h>

#include <cctype>
#include <charconv>
#include <unordered_set>

namespace hubscan::keras {

std::optional<PythonVersion> parse_python_version(std::string_view text) {
  const auto dot = text.find('.');
  if (dot == std::string_view::npos) return std::nullopt;
  PythonVersion v;
  const auto a = std::from_chars(text.data(), text.data() + dot, v.major);
  const auto b = std::from_chars(text.data() + dot + 1, text.data() + text.size(), v.minor);
  if (a.ec != std::errc{} || a.ptr != text.data() + dot || b.ec != std::errc{} || b.ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return v;
}

std::string to_string(PythonVersion v) { return std::to_string(v.major) + "." + std::to_string(v.minor); }

std::optional<std::uint16_t> pyc_magic(PythonVersion v) {
  if (v.major != 3) return std::nullopt;
  switch (v.minor) {
    case 6: return 3379;
    case 7: return 3394;
    case 8: return 3413;
    case 9: return 3425;
    case 10: return 3439;
    case 11: return 3495;
    case 12: return 3531;
    case 13: return 3571;
    default: return std::nullopt;
  }
}

Bytes pyc_image(ByteView marshal_blob, PythonVersion v) {
  const auto magic = pyc_magic(v);
  if (!magic) throw Error("no .pyc magic number known for Python " + to_string(v));
  Bytes out{static_cast<std::uint8_t>(*magic & 0xFF), static_cast<std::uint8_t>(*magic >> 8), '\r', '\n'};
  // 3.7+ adds a flags word ahead of mtime and source size.
  out.resize(v.minor >= 7 ? 16 : 12, 0);
  out.insert(out.end(), marshal_blob.begin(), marshal_blob.end());
  return out;
}

std::string_view marshal_layout_name(MarshalLayout l) {
  switch (l) {
    case MarshalLayout::Py36To37: return "py3.6-3.7";
    case MarshalLayout::Py38To310: return "py3.8-3.10";
    case MarshalLayout::Py311Plus: return "py3.11+";
    case MarshalLayout::Unknown: return "unknown";
  }
  return "unknown";
}

PythonVersion default_python_version(MarshalLayout l) {
  switch (l) {
    case MarshalLayout::Py36To37: return {3, 7};
    case MarshalLayout::Py311Plus: return {3, 11};
    default: return {3, 10};
  }
}

namespace {

struct Truncated {};

// Valid UTF-8 without control characters other than tab and newlines.
bool printable_text(std::string_view s) {
  for (unsigned char c : s) {
    if ((c < 0x20 && c != '\t' && c != '\n' && c != '\r') || c == 0x7f) return false;
  }
  return utf8_lossy(as_bytes(s)) == s;
}

class MarshalWalker {
 public:
  MarshalWalker(ByteView b, MarshalLayout layout) : b_(b), layout_(layout) {}

  bool run(std::vector<std::string>& out) {
    try {
      if (b_.empty() || (b_[0] & 0x7F) != 'c') return false;
      object(0);
      if (pos_ != b_.size()) return false;
    } catch (const Truncated&) {
      return false;
    }
    out = std::move(strings_);
    return true;
  }

 private:
  std::uint8_t u8() {
    if (pos_ >= b_.size()) throw Truncated{};
    return b_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  void need(std::size_t n) {
    if (n > b_.size() - pos_) throw Truncated{};
  }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }
  void text(std::size_t n) {
    need(n);
    strings_.emplace_back(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
  }

  void object(int depth) {
    if (depth > 256) throw Truncated{};
    const auto code = u8();
    if (code & 0x80) ++refs_;
    switch (code & 0x7F) {
      case '0': case 'N': case 'F': case 'T': case '.': case 'S': return;
      case 'i': skip(4); return;
      case 'I': case 'g': skip(8); return;
      case 'y': skip(16); return;
      case 'f': skip(u8()); return;
      case 'x': skip(u8()); skip(u8()); return;
      case 'l': {
        const auto n = static_cast<std::int32_t>(u32());
        const std::uint64_t digits = n < 0 ? -static_cast<std::int64_t>(n) : n;
        skip(static_cast<std::size_t>(digits * 2));
        return;
      }
      case 's': skip(u32()); return;
      case 't': case 'u': case 'a': case 'A': text(u32()); return;
      case 'z': case 'Z': text(u8()); return;
      case '(': case '[': case '<': case '>': {
        const auto n = u32();
        need(n);  // every element takes at least one byte
        for (std::uint32_t i = 0; i < n; ++i) object(depth + 1);
        return;
      }
      case ')': {
        const auto n = u8();
        for (int i = 0; i < n; ++i) object(depth + 1);
        return;
      }
      case '{':
        while (true) {
          need(1);
          if (b_[pos_] == '0') {
            ++pos_;
            return;
          }
          object(depth + 1);
          object(depth + 1);
        }
      case 'r':
        if (u32() >= refs_) throw Truncated{};
        return;
      case 'c': code_object(depth); return;
      default: throw Truncated{};
    }
  }

  void code_object(int depth) {
    int ints = 5, leading = 8, trailing = 1;
    if (layout_ == MarshalLayout::Py38To310) ints = 6;
    if (layout_ == MarshalLayout::Py311Plus) trailing = 2;
    skip(4 * static_cast<std::size_t>(ints));
    for (int i = 0; i < leading; ++i) object(depth + 1);
    skip(4);  // co_firstlineno
    for (int i = 0; i < trailing; ++i) object(depth + 1);
  }

  ByteView b_;
  MarshalLayout layout_;
  std::size_t pos_ = 0;
  std::uint32_t refs_ = 0;
  std::vector<std::string> strings_;
};

std::vector<std::string> scan_string_records(ByteView b) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < b.size()) {
    const int t = b[i] & 0x7F;
    std::size_t len = 0, header = 0;
    if ((t == 'z' || t == 'Z') && i + 1 < b.size()) {
      len = b[i + 1];
      header = 2;
    } else if ((t == 'a' || t == 'A' || t == 'u' || t == 't') && i + 4 < b.size()) {
      len = static_cast<std::size_t>(b[i + 1]) | static_cast<std::size_t>(b[i + 2]) << 8 |
            static_cast<std::size_t>(b[i + 3]) << 16 | static_cast<std::size_t>(b[i + 4]) << 24;
      header = 5;
    }
    if (header != 0 && len > 0 && len <= b.size() - i - header) {
      const std::string_view s(reinterpret_cast<const char*>(b.data() + i + header), len);
      if (printable_text(s)) {
        out.emplace_back(s);
        i += header + len;
        continue;
      }
    }
    ++i;
  }
  return out;
}

std::vector<std::string> dedupe(std::vector<std::string> in) {
  std::unordered_set<std::string> seen;
  std::vector<std::string> out;
  for (auto& s : in) {
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

MarshalStrings extract_marshal_strings(ByteView blob) {
  for (const auto layout : {MarshalLayout::Py38To310, MarshalLayout::Py311Plus, MarshalLayout::Py36To37}) {
    std::vector<std::string> strings;
    if (MarshalWalker(blob, layout).run(strings)) return {dedupe(std::move(strings)), layout};
  }
  return {dedupe(scan_string_records(blob)), MarshalLayout::Unknown};
}

Bytes decode_base64(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) clean.push_back(c);
  }
  if (clean.size() % 4 != 0) throw LambdaError(LambdaErrorCode::Base64Error, "base64 length is not a multiple of 4");
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const char c = clean[i];
    const bool pad_ok = c == '=' && i + 2 >= clean.size() && (i + 1 == clean.size() || clean[i + 1] == '=');
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '/' && !pad_ok) {
      throw LambdaError(LambdaErrorCode::Base64Error, "invalid base64 character at " + std::to_string(i));
    }
  }
  Bytes out(clean.size() / 4 * 3);
  if (clean.empty()) return out;
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) throw LambdaError(LambdaErrorCode::Base64Error, "base64 decode failed");
  std::size_t pad = 0;
  if (clean.ends_with("==")) pad = 2;
  else if (clean.ends_with("=")) pad = 1;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

namespace {

const nlohmann::json* member(const nlohmann::json& obj, const char* key) {
  if (!obj.is_object()) return nullptr;
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

std::string string_member(const nlohmann::json& obj, const char* key) {
  const auto* v = member(obj, key);
  return v && v->is_string() ? v->get<std::string>() : std::string{};
}

LambdaPayload named_function(std::string module, std::string name, std::string key) {
  LambdaPayload p;
  p.payload_key = std::move(key);
  p.embedded_strings.push_back(name);
  if (!module.empty()) p.embedded_strings.push_back(module + "." + name);
  return p;
}

LambdaPayload decode_payload(const std::string& b64, std::string key) {
  LambdaPayload p;
  p.payload_key = std::move(key);
  p.bytecode = decode_base64(b64);
  auto strings = extract_marshal_strings(p.bytecode);
  p.embedded_strings = std::move(strings.strings);
  p.layout = strings.layout;
  return p;
}

}  // namespace

LambdaPayload extract_lambda_bytecode(const LayerConfig& layer) {
  const auto* cfg = member(layer.config_json, "config");
  const auto* fn = cfg ? member(*cfg, "function") : nullptr;
  if (fn == nullptr || fn->is_null()) {
    throw LambdaError(LambdaErrorCode::MissingFunctionField, "Lambda layer has no config.function");
  }
  // Keras 2: a base64 string, or [code, defaults, closure]; function_type
  // "function" means `function` names a module-level callable instead.
  if (fn->is_string()) {
    if (string_member(*cfg, "function_type") == "function") {
      return named_function(string_member(*cfg, "module"), fn->get<std::string>(), "function");
    }
    return decode_payload(fn->get<std::string>(), "function");
  }
  if (fn->is_array() && !fn->empty() && (*fn)[0].is_string()) {
    return decode_payload((*fn)[0].get<std::string>(), "function[0]");
  }
  // Keras 3: {"class_name": "__lambda__", "config": {"code": ...}} or a
  // registered-function reference {"class_name": "function", "config": name}.
  if (const auto* inner = member(*fn, "config")) {
    if (const auto* code = member(*inner, "code"); code && code->is_string()) {
      return decode_payload(code->get<std::string>(), "function.config.code");
    }
    if (inner->is_string()) return named_function(string_member(*fn, "module"), inner->get<std::string>(), "function.config");
  }
  throw LambdaError(LambdaErrorCode::MissingFunctionField, "config.function has no recognizable payload");
}

LambdaFinding detect_lambda(const std::vector<LayerConfig>& layers) {
  LambdaFinding f;
  for (const auto& layer : layers) {
    if (layer.class_name != "Lambda") continue;
    f.has_lambda = true;
    LambdaLayer l;
    l.layer_name = layer.name;
    try {
      auto p = extract_lambda_bytecode(layer);
      if (!p.bytecode.empty()) l.bytecode = std::move(p.bytecode);
      l.embedded_strings = std::move(p.embedded_strings);
      l.payload_key = std::move(p.payload_key);
      l.layout = p.layout;
    } catch (const LambdaError& e) {
      l.error = e.code();
      l.error_detail = e.what();
    }
    f.lambdas.push_back(std::move(l));
  }
  return f;
}

}  // namespace hubscan::keras
