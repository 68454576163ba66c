#include "hubscan/pickle/opcode.hpp"

#include <array>
#include <stdexcept>

namespace hubscan::pickle {
namespace {

using enum Opcode;
using A = ArgFormat;

constexpr std::array<OpcodeInfo, kOpcodeCount> kTable{{
    {INT, "INT", A::DecimalNlShort, 0},
    {BININT, "BININT", A::Int4, 1},
    {BININT1, "BININT1", A::Uint1, 1},
    {BININT2, "BININT2", A::Uint2, 1},
    {LONG, "LONG", A::DecimalNlLong, 0},
    {LONG1, "LONG1", A::Long1, 2},
    {LONG4, "LONG4", A::Long4, 2},
    {STRING, "STRING", A::StringNl, 0},
    {BINSTRING, "BINSTRING", A::String4, 1},
    {SHORT_BINSTRING, "SHORT_BINSTRING", A::String1, 1},
    {BINBYTES, "BINBYTES", A::Bytes4, 3},
    {SHORT_BINBYTES, "SHORT_BINBYTES", A::Bytes1, 3},
    {BINBYTES8, "BINBYTES8", A::Bytes8, 4},
    {BYTEARRAY8, "BYTEARRAY8", A::ByteArray8, 5},
    {NEXT_BUFFER, "NEXT_BUFFER", A::None, 5},
    {READONLY_BUFFER, "READONLY_BUFFER", A::None, 5},
    {NONE, "NONE", A::None, 0},
    {NEWTRUE, "NEWTRUE", A::None, 2},
    {NEWFALSE, "NEWFALSE", A::None, 2},
    {UNICODE, "UNICODE", A::UnicodeStringNl, 0},
    {SHORT_BINUNICODE, "SHORT_BINUNICODE", A::UnicodeString1, 4},
    {BINUNICODE, "BINUNICODE", A::UnicodeString4, 1},
    {BINUNICODE8, "BINUNICODE8", A::UnicodeString8, 4},
    {FLOAT, "FLOAT", A::FloatNl, 0},
    {BINFLOAT, "BINFLOAT", A::Float8, 1},
    {EMPTY_LIST, "EMPTY_LIST", A::None, 1},
    {APPEND, "APPEND", A::None, 0},
    {APPENDS, "APPENDS", A::None, 1},
    {LIST, "LIST", A::None, 0},
    {EMPTY_TUPLE, "EMPTY_TUPLE", A::None, 1},
    {TUPLE, "TUPLE", A::None, 0},
    {TUPLE1, "TUPLE1", A::None, 2},
    {TUPLE2, "TUPLE2", A::None, 2},
    {TUPLE3, "TUPLE3", A::None, 2},
    {EMPTY_DICT, "EMPTY_DICT", A::None, 1},
    {DICT, "DICT", A::None, 0},
    {SETITEM, "SETITEM", A::None, 0},
    {SETITEMS, "SETITEMS", A::None, 1},
    {EMPTY_SET, "EMPTY_SET", A::None, 4},
    {ADDITEMS, "ADDITEMS", A::None, 4},
    {FROZENSET, "FROZENSET", A::None, 4},
    {POP, "POP", A::None, 0},
    {DUP, "DUP", A::None, 0},
    {MARK, "MARK", A::None, 0},
    {POP_MARK, "POP_MARK", A::None, 1},
    {GET, "GET", A::DecimalNlShort, 0},
    {BINGET, "BINGET", A::Uint1, 1},
    {LONG_BINGET, "LONG_BINGET", A::Uint4, 1},
    {PUT, "PUT", A::DecimalNlShort, 0},
    {BINPUT, "BINPUT", A::Uint1, 1},
    {LONG_BINPUT, "LONG_BINPUT", A::Uint4, 1},
    {MEMOIZE, "MEMOIZE", A::None, 4},
    {EXT1, "EXT1", A::Uint1, 2},
    {EXT2, "EXT2", A::Uint2, 2},
    {EXT4, "EXT4", A::Int4, 2},
    {GLOBAL, "GLOBAL", A::StringNlNoEscapePair, 0},
    {STACK_GLOBAL, "STACK_GLOBAL", A::None, 4},
    {REDUCE, "REDUCE", A::None, 0},
    {BUILD, "BUILD", A::None, 0},
    {INST, "INST", A::StringNlNoEscapePair, 0},
    {OBJ, "OBJ", A::None, 1},
    {NEWOBJ, "NEWOBJ", A::None, 2},
    {NEWOBJ_EX, "NEWOBJ_EX", A::None, 4},
    {PROTO, "PROTO", A::Uint1, 2},
    {STOP, "STOP", A::None, 0},
    {FRAME, "FRAME", A::Uint8, 4},
    {PERSID, "PERSID", A::StringNlNoEscape, 0},
    {BINPERSID, "BINPERSID", A::None, 1},
}};

struct ByteIndex {
  std::array<const OpcodeInfo*, 256> slots{};
  ByteIndex() {
    for (const auto& info : kTable) slots[static_cast<std::uint8_t>(info.code)] = &info;
  }
};

const ByteIndex& index() {
  static const ByteIndex idx;
  return idx;
}

}  // namespace

const OpcodeInfo* opcode_info(std::uint8_t byte) { return index().slots[byte]; }

const OpcodeInfo& opcode_info(Opcode op) {
  const auto* info = opcode_info(static_cast<std::uint8_t>(op));
  if (info == nullptr) throw std::logic_error("opcode missing from table");
  return *info;
}

std::optional<Opcode> opcode_by_name(std::string_view name) {
  for (const auto& info : kTable) {
    if (info.name == name) return info.code;
  }
  return std::nullopt;
}

}  // namespace hubscan::pickle
