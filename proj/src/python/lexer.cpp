#include "lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace hubscan::python::detail {

LineTable::LineTable(std::string_view src) {
  starts_.push_back(0);
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] == '\n') starts_.push_back(i + 1);
  }
}

SourceLoc LineTable::at(std::size_t offset) const {
  const auto it = std::upper_bound(starts_.begin(), starts_.end(), offset);
  const auto line = static_cast<std::size_t>(it - starts_.begin());
  return {static_cast<int>(line), static_cast<int>(offset - starts_[line - 1] + 1)};
}

namespace {

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

constexpr std::array<std::string_view, 46> kOps{
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "+=",
    "-=",  "*=",  "/=",  "%=",  "&=",  "|=", "^=", "@=", "+",  "-",  "*",  "/",  "%",  "@",  "<",
    ">",   "=",   ".",   ",",   ":",   ";",  "(",  ")",  "[",  "]",  "{",  "}",  "&",  "|",  "^"};

class Lexer {
 public:
  Lexer(std::string_view src, std::size_t begin, std::size_t end, bool expr)
      : s_(src), pos_(begin), end_(end), expr_(expr) {}

  std::vector<Token> run() {
    indents_.push_back(0);
    bool line_start = !expr_;
    while (true) {
      if (line_start) {
        line_start = false;
        if (!indentation()) break;
      }
      skip_space();
      if (pos_ >= end_) break;
      const char c = s_[pos_];
      if (c == '#') {
        while (pos_ < end_ && s_[pos_] != '\n') ++pos_;
        continue;
      }
      if (c == '\\' && pos_ + 1 < end_ && (s_[pos_ + 1] == '\n' || s_[pos_ + 1] == '\r')) {
        pos_ += s_[pos_ + 1] == '\r' && pos_ + 2 < end_ && s_[pos_ + 2] == '\n' ? 3 : 2;
        continue;
      }
      if (c == '\n' || c == '\r') {
        const auto at = pos_;
        pos_ += c == '\r' && pos_ + 1 < end_ && s_[pos_ + 1] == '\n' ? 2 : 1;
        if (depth_ == 0 && !expr_) {
          push(Tok::Newline, at, at);
          line_start = true;
        }
        continue;
      }
      if (ident_start(static_cast<unsigned char>(c))) {
        const auto start = pos_;
        while (pos_ < end_ && ident_char(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (pos_ < end_ && (s_[pos_] == '\'' || s_[pos_] == '"') && string_prefix(s_.substr(start, pos_ - start))) {
          string_literal(start);
        } else {
          push(Tok::Name, start, pos_);
        }
        continue;
      }
      if (c == '\'' || c == '"') {
        string_literal(pos_);
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '.' && pos_ + 1 < end_ && std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))) {
        number();
        continue;
      }
      op();
    }
    if (!expr_) {
      if (!tokens_.empty() && tokens_.back().type != Tok::Newline && tokens_.back().type != Tok::Dedent) {
        push(Tok::Newline, end_, end_);
      }
      while (indents_.size() > 1) {
        indents_.pop_back();
        push(Tok::Dedent, end_, end_);
      }
    }
    push(Tok::End, end_, end_);
    return std::move(tokens_);
  }

 private:
  void push(Tok t, std::size_t b, std::size_t e) { tokens_.push_back({t, s_.substr(b, e - b), b, e}); }

  void skip_space() {
    while (pos_ < end_ && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\f')) ++pos_;
  }

  // Measures a logical line's indentation, skipping blank and comment-only
  // lines. Returns false at end of input.
  bool indentation() {
    while (true) {
      int col = 0;
      while (pos_ < end_ && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\f')) {
        if (s_[pos_] == '\t') col = (col / 8 + 1) * 8;
        else if (s_[pos_] == ' ') ++col;
        else col = 0;
        ++pos_;
      }
      if (pos_ >= end_) return false;
      const char c = s_[pos_];
      if (c == '#') {
        while (pos_ < end_ && s_[pos_] != '\n') ++pos_;
      }
      if (pos_ < end_ && (s_[pos_] == '\n' || s_[pos_] == '\r')) {
        pos_ += s_[pos_] == '\r' && pos_ + 1 < end_ && s_[pos_ + 1] == '\n' ? 2 : 1;
        continue;
      }
      if (pos_ >= end_) return false;
      if (col > indents_.back()) {
        indents_.push_back(col);
        push(Tok::Indent, pos_, pos_);
      } else {
        while (col < indents_.back()) {
          indents_.pop_back();
          push(Tok::Dedent, pos_, pos_);
        }
        if (col != indents_.back()) throw SyntaxFailure{"unindent does not match any outer indentation level", pos_};
      }
      return true;
    }
  }

  static bool string_prefix(std::string_view p) {
    if (p.size() > 2) return false;
    std::string lower;
    for (char c : p) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    static constexpr std::array<std::string_view, 8> kPrefixes{"r", "u", "b", "f", "br", "rb", "fr", "rf"};
    return std::find(kPrefixes.begin(), kPrefixes.end(), lower) != kPrefixes.end();
  }

  void string_literal(std::size_t start) {
    const char q = s_[pos_];
    const bool triple = pos_ + 2 < end_ && s_[pos_ + 1] == q && s_[pos_ + 2] == q;
    pos_ += triple ? 3 : 1;
    while (true) {
      if (pos_ >= end_) throw SyntaxFailure{"unterminated string literal", start};
      const char c = s_[pos_];
      if (c == '\\') {
        pos_ += 2;
        continue;
      }
      if (!triple && (c == '\n' || c == '\r')) throw SyntaxFailure{"unterminated string literal", start};
      if (c == q) {
        if (!triple) {
          ++pos_;
          break;
        }
        if (pos_ + 2 < end_ && s_[pos_ + 1] == q && s_[pos_ + 2] == q) {
          pos_ += 3;
          break;
        }
      }
      ++pos_;
    }
    if (pos_ > end_) throw SyntaxFailure{"unterminated string literal", start};
    push(Tok::String, start, pos_);
  }

  void number() {
    const auto start = pos_;
    while (pos_ < end_) {
      const char c = s_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
        ++pos_;
      } else if ((c == '+' || c == '-') && (s_[pos_ - 1] == 'e' || s_[pos_ - 1] == 'E') &&
                 !(s_[start] == '0' && start + 1 < pos_ && (s_[start + 1] == 'x' || s_[start + 1] == 'X'))) {
        ++pos_;
      } else {
        break;
      }
    }
    push(Tok::Number, start, pos_);
  }

  void op() {
    for (const auto o : kOps) {
      if (s_.substr(pos_, o.size()) == o && pos_ + o.size() <= end_) {
        if (o == "(" || o == "[" || o == "{") ++depth_;
        if ((o == ")" || o == "]" || o == "}") && depth_ > 0) --depth_;
        push(Tok::Op, pos_, pos_ + o.size());
        pos_ += o.size();
        return;
      }
    }
    if (s_[pos_] == '!' || s_[pos_] == '~') {
      push(Tok::Op, pos_, pos_ + 1);
      ++pos_;
      return;
    }
    throw SyntaxFailure{std::string("unexpected character '") + s_[pos_] + "'", pos_};
  }

  std::string_view s_;
  std::size_t pos_;
  std::size_t end_;
  bool expr_;
  int depth_ = 0;
  std::vector<int> indents_;
  std::vector<Token> tokens_;
};

}  // namespace

std::vector<Token> tokenize(std::string_view src, std::size_t begin, std::size_t end, bool expression_mode) {
  return Lexer(src, begin, end, expression_mode).run();
}

}  // namespace hubscan::python::detail
