#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hubscan/common.hpp"
#include "hubscan/pickle/opcode.hpp"

namespace hubscan::pickle {

// An integer that does not fit in int64, kept as canonical decimal text.
struct BigInt {
  std::string decimal;
  friend bool operator==(const BigInt&, const BigInt&) = default;
};

// Decoded opcode argument. Text is always UTF-8; raw bytes literals keep
// their exact contents.
using PickleArg = std::variant<std::monostate, bool, std::int64_t, BigInt, double, std::string, Bytes>;

struct PickleInstruction {
  std::size_t offset = 0;
  Opcode opcode = Opcode::STOP;
  PickleArg arg;
};

enum class DisasmErrorCode { TruncatedStream, UnknownOpcode, MissingStop, MalformedArgument };

class DisassemblyError : public Error {
 public:
  DisassemblyError(DisasmErrorCode code, std::size_t offset, std::string message,
                   std::optional<std::uint8_t> byte = std::nullopt);

  DisasmErrorCode code() const { return code_; }
  std::size_t offset() const { return offset_; }
  // The offending byte for UnknownOpcode.
  std::optional<std::uint8_t> byte() const { return byte_; }

 private:
  DisasmErrorCode code_;
  std::size_t offset_;
  std::optional<std::uint8_t> byte_;
};

struct Disassembly {
  std::vector<PickleInstruction> instructions;
  // Bytes after STOP; reported, never consumed.
  std::size_t trailing_bytes = 0;
};

// Decodes opcodes up to and including the first STOP.
Disassembly disassemble(ByteView stream);

// Canonical argument rendering used by the debug dump: integers in decimal,
// booleans as True/False, floats as %.17g, text as an ASCII-only JSON string,
// bytes as `b:` followed by lowercase hex. Empty for opcodes without an argument.
std::string format_arg(const PickleArg& arg);

// One instruction per line: `OFFSET OPCODE ARG`.
std::string dump(const std::vector<PickleInstruction>& instrs);

// Python-compatible ASCII JSON string literal (json.dumps with ensure_ascii).
std::string json_ascii_quote(std::string_view utf8);

// Incremental decoder shared with the format probe: decodes the argument of
// `info` starting at `pos` and returns the position after it. Throws
// DisassemblyError on truncation or malformed text arguments.
std::size_t decode_argument(ByteView stream, std::size_t opcode_offset, const OpcodeInfo& info,
                            PickleArg& out);

}  // namespace hubscan::pickle
