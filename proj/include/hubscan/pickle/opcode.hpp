#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace hubscan::pickle {

// Pickle opcodes for protocols 0-5. Enumerator values are the wire bytes.
enum class Opcode : std::uint8_t {
  MARK = '(',
  STOP = '.',
  POP = '0',
  POP_MARK = '1',
  DUP = '2',
  FLOAT = 'F',
  INT = 'I',
  BININT = 'J',
  BININT1 = 'K',
  LONG = 'L',
  BININT2 = 'M',
  NONE = 'N',
  PERSID = 'P',
  BINPERSID = 'Q',
  REDUCE = 'R',
  STRING = 'S',
  BINSTRING = 'T',
  SHORT_BINSTRING = 'U',
  UNICODE = 'V',
  BINUNICODE = 'X',
  APPEND = 'a',
  BUILD = 'b',
  GLOBAL = 'c',
  DICT = 'd',
  EMPTY_DICT = '}',
  APPENDS = 'e',
  GET = 'g',
  BINGET = 'h',
  INST = 'i',
  LONG_BINGET = 'j',
  LIST = 'l',
  EMPTY_LIST = ']',
  OBJ = 'o',
  PUT = 'p',
  BINPUT = 'q',
  LONG_BINPUT = 'r',
  SETITEM = 's',
  TUPLE = 't',
  EMPTY_TUPLE = ')',
  SETITEMS = 'u',
  BINFLOAT = 'G',
  PROTO = 0x80,
  NEWOBJ = 0x81,
  EXT1 = 0x82,
  EXT2 = 0x83,
  EXT4 = 0x84,
  TUPLE1 = 0x85,
  TUPLE2 = 0x86,
  TUPLE3 = 0x87,
  NEWTRUE = 0x88,
  NEWFALSE = 0x89,
  LONG1 = 0x8a,
  LONG4 = 0x8b,
  BINBYTES = 'B',
  SHORT_BINBYTES = 'C',
  SHORT_BINUNICODE = 0x8c,
  BINUNICODE8 = 0x8d,
  BINBYTES8 = 0x8e,
  EMPTY_SET = 0x8f,
  ADDITEMS = 0x90,
  FROZENSET = 0x91,
  NEWOBJ_EX = 0x92,
  STACK_GLOBAL = 0x93,
  MEMOIZE = 0x94,
  FRAME = 0x95,
  BYTEARRAY8 = 0x96,
  NEXT_BUFFER = 0x97,
  READONLY_BUFFER = 0x98,
};

// How the bytes following an opcode are laid out.
enum class ArgFormat {
  None,
  Uint1,
  Uint2,
  Int4,
  Uint4,
  Uint8,
  DecimalNlShort,
  DecimalNlLong,
  FloatNl,
  StringNl,
  StringNlNoEscape,
  StringNlNoEscapePair,
  UnicodeStringNl,
  String1,
  String4,
  Bytes1,
  Bytes4,
  Bytes8,
  ByteArray8,
  UnicodeString1,
  UnicodeString4,
  UnicodeString8,
  Float8,
  Long1,
  Long4,
};

struct OpcodeInfo {
  Opcode code;
  std::string_view name;
  ArgFormat arg;
  int proto;  // protocol that introduced the opcode
};

// nullptr for bytes outside the opcode table.
const OpcodeInfo* opcode_info(std::uint8_t byte);

const OpcodeInfo& opcode_info(Opcode op);

std::optional<Opcode> opcode_by_name(std::string_view name);

inline constexpr int kOpcodeCount = 68;

}  // namespace hubscan::pickle
