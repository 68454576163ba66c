#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hubscan {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline std::string_view as_chars(ByteView b) {
  return {reinterpret_cast<const char*>(b.data()), b.size()};
}

inline Bytes to_bytes(std::string_view s) {
  auto v = as_bytes(s);
  return {v.begin(), v.end()};
}

// Base for every recoverable analysis error. `what()` is human readable;
// subclasses carry the machine-readable code for their module.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Severity { Info, Low, Medium, High, Critical };

std::string_view severity_name(Severity s);
// Accepts the lower-case names; throws Error otherwise.
Severity parse_severity(std::string_view s);

struct SourceLoc {
  int line = 0;
  int column = 0;

  friend bool operator==(const SourceLoc&, const SourceLoc&) = default;
  friend auto operator<=>(const SourceLoc&, const SourceLoc&) = default;
};

// Decodes UTF-8, replacing malformed sequences with U+FFFD.
std::string utf8_lossy(ByteView bytes);

// Appends the UTF-8 encoding of `cp` to `out`.
void append_utf8(std::string& out, std::uint32_t cp);

std::string latin1_to_utf8(ByteView bytes);

std::string to_hex(ByteView bytes);

bool ends_with_ci(std::string_view s, std::string_view suffix);

std::string to_lower_ascii(std::string_view s);

}  // namespace hubscan
