#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hubscan/common.hpp"

namespace hubscan::python::detail {

enum class Tok { Name, Number, String, Op, Newline, Indent, Dedent, End };

struct Token {
  Tok type = Tok::End;
  std::string_view text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct SyntaxFailure {
  std::string message;
  std::size_t offset;
};

// Maps byte offsets to 1-based (line, column).
class LineTable {
 public:
  explicit LineTable(std::string_view src);
  SourceLoc at(std::size_t offset) const;

 private:
  std::vector<std::size_t> starts_;
};

// Tokenizes src[begin, end). In expression mode (f-string replacement
// fields) newlines are insignificant and no INDENT/DEDENT is produced.
// Throws SyntaxFailure.
std::vector<Token> tokenize(std::string_view src, std::size_t begin, std::size_t end, bool expression_mode);

}  // namespace hubscan::python::detail
