#include "hubscan/pickle/disassembler.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>

namespace hubscan::pickle {

DisassemblyError::DisassemblyError(DisasmErrorCode code, std::size_t offset, std::string message,
                                   std::optional<std::uint8_t> byte)
    : Error(std::move(message) + " at offset " + std::to_string(offset)),
      code_(code),
      offset_(offset),
      byte_(byte) {}

namespace {

[[noreturn]] void truncated(std::size_t op_offset, std::string_view what) {
  throw DisassemblyError(DisasmErrorCode::TruncatedStream, op_offset,
                         "truncated " + std::string(what) + " argument");
}

[[noreturn]] void malformed(std::size_t op_offset, std::string_view what) {
  throw DisassemblyError(DisasmErrorCode::MalformedArgument, op_offset,
                         "malformed " + std::string(what) + " argument");
}

std::uint64_t read_le(ByteView s, std::size_t pos, std::size_t n) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(s[pos + i]) << (8 * i);
  return v;
}

// Reads through the next '\n'; returns the line without it.
ByteView read_line(ByteView s, std::size_t pos, std::size_t op_offset, std::string_view what) {
  for (std::size_t i = pos; i < s.size(); ++i) {
    if (s[i] == '\n') return s.subspan(pos, i - pos);
  }
  truncated(op_offset, what);
}

std::string strip_ascii_ws(std::string_view t) {
  const auto b = t.find_first_not_of(" \t\r\f\v");
  if (b == std::string_view::npos) return {};
  const auto e = t.find_last_not_of(" \t\r\f\v");
  return std::string(t.substr(b, e - b + 1));
}

// Canonical decimal for `int(text)`: optional sign, digits, optional single
// underscores between digits.
std::optional<PickleArg> parse_decimal(std::string_view raw) {
  std::string t = strip_ascii_ws(raw);
  if (t.empty()) return std::nullopt;
  bool neg = false;
  std::size_t i = 0;
  if (t[0] == '+' || t[0] == '-') {
    neg = t[0] == '-';
    i = 1;
  }
  std::string digits;
  bool last_us = true;
  for (; i < t.size(); ++i) {
    char c = t[i];
    if (c >= '0' && c <= '9') {
      digits.push_back(c);
      last_us = false;
    } else if (c == '_' && !last_us) {
      last_us = true;
    } else {
      return std::nullopt;
    }
  }
  if (digits.empty() || last_us) return std::nullopt;
  const auto nz = digits.find_first_not_of('0');
  digits = nz == std::string::npos ? "0" : digits.substr(nz);
  std::string canon = (neg && digits != "0" ? "-" : "") + digits;
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(canon.data(), canon.data() + canon.size(), v);
  if (ec == std::errc() && p == canon.data() + canon.size()) return PickleArg{v};
  return PickleArg{BigInt{canon}};
}

// Two's-complement little-endian integer of arbitrary width.
PickleArg decode_long(ByteView data) {
  if (data.empty()) return PickleArg{std::int64_t{0}};
  const bool neg = (data.back() & 0x80) != 0;
  if (data.size() <= 8) {
    std::uint64_t u = read_le(data, 0, data.size());
    if (neg && data.size() < 8) u |= ~std::uint64_t{0} << (8 * data.size());
    return PickleArg{static_cast<std::int64_t>(u)};
  }
  std::vector<std::uint8_t> mag(data.begin(), data.end());
  if (neg) {
    // magnitude = ~x + 1
    unsigned carry = 1;
    for (auto& b : mag) {
      unsigned v = static_cast<std::uint8_t>(~b) + carry;
      b = static_cast<std::uint8_t>(v & 0xFF);
      carry = v >> 8;
    }
  }
  std::string digits;
  while (std::any_of(mag.begin(), mag.end(), [](auto b) { return b != 0; })) {
    unsigned rem = 0;
    for (auto it = mag.rbegin(); it != mag.rend(); ++it) {
      unsigned cur = (rem << 8) | *it;
      *it = static_cast<std::uint8_t>(cur / 10);
      rem = cur % 10;
    }
    digits.push_back(static_cast<char>('0' + rem));
  }
  if (digits.empty()) digits = "0";
  std::reverse(digits.begin(), digits.end());
  std::string canon = (neg ? "-" : "") + digits;
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(canon.data(), canon.data() + canon.size(), v);
  if (ec == std::errc() && p == canon.data() + canon.size()) return PickleArg{v};
  return PickleArg{BigInt{canon}};
}

int hex_value(std::uint8_t c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// Python's codecs.escape_decode over a bytes literal body.
std::optional<Bytes> escape_decode(ByteView in) {
  Bytes out;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] != '\\') {
      out.push_back(in[i]);
      continue;
    }
    if (++i >= in.size()) return std::nullopt;  // trailing backslash
    const std::uint8_t c = in[i];
    switch (c) {
      case '\n': break;
      case '\\': out.push_back('\\'); break;
      case '\'': out.push_back('\''); break;
      case '"': out.push_back('"'); break;
      case 'a': out.push_back('\a'); break;
      case 'b': out.push_back('\b'); break;
      case 'f': out.push_back('\f'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      case 't': out.push_back('\t'); break;
      case 'v': out.push_back('\v'); break;
      case 'x': {
        if (i + 2 >= in.size()) return std::nullopt;
        const int h = hex_value(in[i + 1]);
        const int l = hex_value(in[i + 2]);
        if (h < 0 || l < 0) return std::nullopt;
        out.push_back(static_cast<std::uint8_t>(h * 16 + l));
        i += 2;
        break;
      }
      default:
        if (c >= '0' && c <= '7') {
          int v = c - '0';
          for (int k = 0; k < 2 && i + 1 < in.size() && in[i + 1] >= '0' && in[i + 1] <= '7'; ++k) {
            v = v * 8 + (in[++i] - '0');
          }
          out.push_back(static_cast<std::uint8_t>(v & 0xFF));
        } else {
          out.push_back('\\');
          out.push_back(c);
        }
    }
  }
  return out;
}

// raw-unicode-escape: only \uXXXX and \UXXXXXXXX are escapes, everything
// else is latin-1.
std::optional<std::string> raw_unicode_escape(ByteView in) {
  std::string out;
  std::size_t i = 0;
  while (i < in.size()) {
    if (in[i] != '\\') {
      append_utf8(out, in[i++]);
      continue;
    }
    std::size_t run = 0;
    while (i < in.size() && in[i] == '\\') {
      ++run;
      ++i;
    }
    const bool escape = (run % 2 == 1) && i < in.size() && (in[i] == 'u' || in[i] == 'U');
    for (std::size_t k = 0; k < (escape ? run - 1 : run); ++k) out.push_back('\\');
    if (!escape) continue;
    const std::size_t n = in[i] == 'u' ? 4 : 8;
    if (i + 1 + n > in.size()) return std::nullopt;
    std::uint32_t cp = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const int h = hex_value(in[i + 1 + k]);
      if (h < 0) return std::nullopt;
      cp = cp * 16 + static_cast<std::uint32_t>(h);
    }
    if (cp > 0x10FFFF) return std::nullopt;
    append_utf8(out, cp);
    i += 1 + n;
  }
  return out;
}

std::string format_double(double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

}  // namespace

std::size_t decode_argument(ByteView s, std::size_t op_offset, const OpcodeInfo& info, PickleArg& out) {
  std::size_t pos = op_offset + 1;
  const std::size_t remaining = pos <= s.size() ? s.size() - pos : 0;
  auto need = [&](std::size_t n, std::string_view what) {
    if (remaining < n) truncated(op_offset, what);
  };
  auto sized = [&](std::size_t header, std::uint64_t n, std::string_view what) {
    if (n > remaining - header) truncated(op_offset, what);
    return s.subspan(pos + header, static_cast<std::size_t>(n));
  };

  switch (info.arg) {
    case ArgFormat::None:
      out = std::monostate{};
      return pos;
    case ArgFormat::Uint1:
      need(1, "uint1");
      out = std::int64_t{s[pos]};
      return pos + 1;
    case ArgFormat::Uint2:
      need(2, "uint2");
      out = static_cast<std::int64_t>(read_le(s, pos, 2));
      return pos + 2;
    case ArgFormat::Int4:
      need(4, "int4");
      out = static_cast<std::int64_t>(static_cast<std::int32_t>(read_le(s, pos, 4)));
      return pos + 4;
    case ArgFormat::Uint4:
      need(4, "uint4");
      out = static_cast<std::int64_t>(read_le(s, pos, 4));
      return pos + 4;
    case ArgFormat::Uint8: {
      need(8, "uint8");
      std::uint64_t v = read_le(s, pos, 8);
      if (v > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        out = BigInt{std::to_string(v)};
      } else {
        out = static_cast<std::int64_t>(v);
      }
      return pos + 8;
    }
    case ArgFormat::DecimalNlShort: {
      auto line = read_line(s, pos, op_offset, "decimalnl_short");
      auto text = as_chars(line);
      if (text == "00") {
        out = false;
      } else if (text == "01") {
        out = true;
      } else {
        auto v = parse_decimal(text);
        if (!v) malformed(op_offset, "decimalnl_short");
        out = *v;
      }
      return pos + line.size() + 1;
    }
    case ArgFormat::DecimalNlLong: {
      auto line = read_line(s, pos, op_offset, "decimalnl_long");
      auto text = as_chars(line);
      if (!text.empty() && text.back() == 'L') text.remove_suffix(1);
      auto v = parse_decimal(text);
      if (!v) malformed(op_offset, "decimalnl_long");
      out = *v;
      return pos + line.size() + 1;
    }
    case ArgFormat::FloatNl: {
      auto line = read_line(s, pos, op_offset, "floatnl");
      std::string text = strip_ascii_ws(as_chars(line));
      if (text.empty() || text.find_first_of("xX") != std::string::npos) malformed(op_offset, "floatnl");
      char* end = nullptr;
      double d = std::strtod(text.c_str(), &end);
      if (end != text.c_str() + text.size()) malformed(op_offset, "floatnl");
      out = d;
      return pos + line.size() + 1;
    }
    case ArgFormat::StringNl: {
      auto line = read_line(s, pos, op_offset, "stringnl");
      if (line.size() < 2 || (line[0] != '\'' && line[0] != '"') || line.back() != line[0]) {
        malformed(op_offset, "stringnl");
      }
      auto decoded = escape_decode(line.subspan(1, line.size() - 2));
      if (!decoded) malformed(op_offset, "stringnl");
      out = latin1_to_utf8(*decoded);
      return pos + line.size() + 1;
    }
    case ArgFormat::StringNlNoEscape: {
      auto line = read_line(s, pos, op_offset, "stringnl_noescape");
      out = utf8_lossy(line);
      return pos + line.size() + 1;
    }
    case ArgFormat::StringNlNoEscapePair: {
      auto first = read_line(s, pos, op_offset, "stringnl_noescape_pair");
      auto second = read_line(s, pos + first.size() + 1, op_offset, "stringnl_noescape_pair");
      out = utf8_lossy(first) + " " + utf8_lossy(second);
      return pos + first.size() + second.size() + 2;
    }
    case ArgFormat::UnicodeStringNl: {
      auto line = read_line(s, pos, op_offset, "unicodestringnl");
      auto decoded = raw_unicode_escape(line);
      if (!decoded) malformed(op_offset, "unicodestringnl");
      out = std::move(*decoded);
      return pos + line.size() + 1;
    }
    case ArgFormat::String1:
    case ArgFormat::Bytes1:
    case ArgFormat::UnicodeString1: {
      need(1, "length");
      auto data = sized(1, s[pos], "string1");
      if (info.arg == ArgFormat::Bytes1) {
        out = Bytes(data.begin(), data.end());
      } else if (info.arg == ArgFormat::String1) {
        out = latin1_to_utf8(data);
      } else {
        out = utf8_lossy(data);
      }
      return pos + 1 + data.size();
    }
    case ArgFormat::String4:
    case ArgFormat::Bytes4:
    case ArgFormat::UnicodeString4: {
      need(4, "length");
      std::uint64_t n = read_le(s, pos, 4);
      if (info.arg == ArgFormat::String4 && static_cast<std::int32_t>(n) < 0) malformed(op_offset, "string4");
      auto data = sized(4, n, "string4");
      if (info.arg == ArgFormat::Bytes4) {
        out = Bytes(data.begin(), data.end());
      } else if (info.arg == ArgFormat::String4) {
        out = latin1_to_utf8(data);
      } else {
        out = utf8_lossy(data);
      }
      return pos + 4 + data.size();
    }
    case ArgFormat::Bytes8:
    case ArgFormat::ByteArray8:
    case ArgFormat::UnicodeString8: {
      need(8, "length");
      auto data = sized(8, read_le(s, pos, 8), "bytes8");
      if (info.arg == ArgFormat::UnicodeString8) {
        out = utf8_lossy(data);
      } else {
        out = Bytes(data.begin(), data.end());
      }
      return pos + 8 + data.size();
    }
    case ArgFormat::Float8: {
      need(8, "float8");
      std::uint64_t be = 0;
      for (int i = 0; i < 8; ++i) be = (be << 8) | s[pos + i];
      out = std::bit_cast<double>(be);
      return pos + 8;
    }
    case ArgFormat::Long1: {
      need(1, "long1");
      auto data = sized(1, s[pos], "long1");
      out = decode_long(data);
      return pos + 1 + data.size();
    }
    case ArgFormat::Long4: {
      need(4, "long4");
      auto n = static_cast<std::int32_t>(read_le(s, pos, 4));
      if (n < 0) malformed(op_offset, "long4");
      auto data = sized(4, static_cast<std::uint64_t>(n), "long4");
      out = decode_long(data);
      return pos + 4 + data.size();
    }
  }
  malformed(op_offset, "unknown");
}

Disassembly disassemble(ByteView stream) {
  Disassembly result;
  std::size_t pos = 0;
  while (pos < stream.size()) {
    const auto* info = opcode_info(stream[pos]);
    if (info == nullptr) {
      char buf[8];
      std::snprintf(buf, sizeof buf, "0x%02x", stream[pos]);
      throw DisassemblyError(DisasmErrorCode::UnknownOpcode, pos, std::string("unknown opcode ") + buf,
                             stream[pos]);
    }
    PickleInstruction instr;
    instr.offset = pos;
    instr.opcode = info->code;
    pos = decode_argument(stream, pos, *info, instr.arg);
    result.instructions.push_back(std::move(instr));
    if (info->code == Opcode::STOP) {
      result.trailing_bytes = stream.size() - pos;
      return result;
    }
  }
  throw DisassemblyError(DisasmErrorCode::MissingStop, stream.size(), "end of stream before STOP");
}

std::string json_ascii_quote(std::string_view s) {
  std::string out = "\"";
  char buf[16];
  auto emit_unit = [&](std::uint32_t u) {
    std::snprintf(buf, sizeof buf, "\\u%04x", u);
    out += buf;
  };
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
      switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        case '\b': out += "\\b"; break;
        case '\f': out += "\\f"; break;
        default:
          if (c < 0x20 || c == 0x7f) {
            emit_unit(c);
          } else {
            out.push_back(static_cast<char>(c));
          }
      }
      ++i;
      continue;
    }
    // Input is produced by utf8_lossy/append_utf8, so sequences are well formed.
    std::uint32_t cp = 0;
    std::size_t len = (c & 0xE0) == 0xC0 ? 2 : (c & 0xF0) == 0xE0 ? 3 : 4;
    cp = c & (len == 2 ? 0x1F : len == 3 ? 0x0F : 0x07);
    for (std::size_t k = 1; k < len && i + k < s.size(); ++k) {
      cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    }
    i += len;
    if (cp >= 0x10000) {
      cp -= 0x10000;
      emit_unit(0xD800 + (cp >> 10));
      emit_unit(0xDC00 + (cp & 0x3FF));
    } else {
      emit_unit(cp);
    }
  }
  out += "\"";
  return out;
}

std::string format_arg(const PickleArg& arg) {
  struct Visitor {
    std::string operator()(std::monostate) const { return {}; }
    std::string operator()(bool b) const { return b ? "True" : "False"; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(const BigInt& v) const { return v.decimal; }
    std::string operator()(double d) const { return format_double(d); }
    std::string operator()(const std::string& s) const { return json_ascii_quote(s); }
    std::string operator()(const Bytes& b) const { return "b:" + to_hex(b); }
  };
  return std::visit(Visitor{}, arg);
}

std::string dump(const std::vector<PickleInstruction>& instrs) {
  std::string out;
  for (const auto& in : instrs) {
    out += std::to_string(in.offset);
    out += ' ';
    out += opcode_info(in.opcode).name;
    auto a = format_arg(in.arg);
    if (!a.empty()) {
      out += ' ';
      out += a;
    }
    out += '\n';
  }
  return out;
}

}  // namespace hubscan::pickle
