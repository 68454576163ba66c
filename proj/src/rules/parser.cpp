#include <algorithm>
#include <cctype>
#include <set>

#include "hubscan/rules/rules.hpp"
#include "regex_program.hpp"

namespace hubscan::rules {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

const std::set<std::string_view> kKeywords{"rule", "meta", "strings", "condition", "and", "or", "not", "any",
                                           "all", "of", "them", "true", "false", "nocase", "ascii"};

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  std::vector<Rule> rules() {
    std::vector<Rule> out;
    std::set<std::string> names;
    skip_ws();
    while (!eof()) {
      const auto at = loc();
      Rule r = rule();
      if (!names.insert(r.name).second) {
        throw RuleError(RuleErrorCode::DuplicateRule, at, "duplicate rule '" + r.name + "'");
      }
      out.push_back(std::move(r));
      skip_ws();
    }
    return out;
  }

 private:
  bool eof() const { return i_ >= s_.size(); }
  char peek(std::size_t k = 0) const { return i_ + k < s_.size() ? s_[i_ + k] : '\0'; }
  SourceLoc loc() const { return {line_, col_}; }

  void advance() {
    if (s_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw RuleError(RuleErrorCode::Syntax, loc(), msg); }

  void skip_ws() {
    while (!eof()) {
      if (std::isspace(static_cast<unsigned char>(peek()))) {
        advance();
      } else if (peek() == '/' && peek(1) == '/') {
        while (!eof() && peek() != '\n') advance();
      } else if (peek() == '/' && peek(1) == '*') {
        const auto at = loc();
        advance();
        advance();
        while (!eof() && !(peek() == '*' && peek(1) == '/')) advance();
        if (eof()) throw RuleError(RuleErrorCode::Syntax, at, "unterminated comment");
        advance();
        advance();
      } else {
        break;
      }
    }
  }

  std::string ident() {
    if (!ident_start(peek())) fail("expected identifier");
    std::string out;
    while (!eof() && ident_char(peek())) {
      out.push_back(peek());
      advance();
    }
    return out;
  }

  // Identifier without consuming it.
  std::string look_ident() const {
    std::size_t j = i_;
    if (j >= s_.size() || !ident_start(s_[j])) return {};
    while (j < s_.size() && ident_char(s_[j])) ++j;
    return std::string(s_.substr(i_, j - i_));
  }

  void keyword(std::string_view kw) {
    if (look_ident() != kw) fail("expected '" + std::string(kw) + "'");
    for (std::size_t k = 0; k < kw.size(); ++k) advance();
    skip_ws();
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    advance();
    skip_ws();
  }

  std::string quoted() {
    if (peek() != '"') fail("expected string literal");
    const auto at = loc();
    advance();
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') throw RuleError(RuleErrorCode::Syntax, at, "unterminated string");
      const char c = peek();
      if (c == '"') {
        advance();
        break;
      }
      if (c != '\\') {
        out.push_back(c);
        advance();
        continue;
      }
      advance();
      const char e = peek();
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case 't': out.push_back('\t'); break;
        case 'x': {
          const int hi = hex_value(peek(1));
          const int lo = hex_value(peek(2));
          if (hi < 0 || lo < 0) fail("bad \\x escape");
          advance();
          advance();
          out.push_back(static_cast<char>(hi * 16 + lo));
          break;
        }
        default: fail("unknown escape");
      }
      advance();
    }
    return out;
  }

  Rule rule() {
    Rule r;
    r.loc = loc();
    keyword("rule");
    r.name = ident();
    if (kKeywords.count(r.name)) fail("keyword used as rule name");
    skip_ws();
    if (peek() == ':') {
      expect(':');
      while (ident_start(peek())) {
        r.tags.push_back(ident());
        skip_ws();
      }
      if (r.tags.empty()) fail("expected tag");
    }
    expect('{');
    if (look_ident() == "meta") {
      keyword("meta");
      expect(':');
      meta_section(r);
    }
    if (look_ident() == "strings") {
      keyword("strings");
      expect(':');
      strings_section(r);
    }
    keyword("condition");
    expect(':');
    r.condition = expr(r);
    expect('}');

    const auto sev = r.meta.find("severity");
    if (sev == r.meta.end()) {
      throw RuleError(RuleErrorCode::BadMeta, r.loc, "rule '" + r.name + "' has no severity meta");
    }
    try {
      parse_severity(sev->second);
    } catch (const Error&) {
      throw RuleError(RuleErrorCode::BadMeta, r.loc, "rule '" + r.name + "': bad severity '" + sev->second + "'");
    }
    return r;
  }

  void meta_section(Rule& r) {
    while (ident_start(peek()) && look_ident() != "strings" && look_ident() != "condition") {
      const auto key = ident();
      skip_ws();
      expect('=');
      std::string value;
      if (peek() == '"') {
        value = quoted();
      } else if (peek() == '-' || std::isdigit(static_cast<unsigned char>(peek()))) {
        if (peek() == '-') {
          value.push_back('-');
          advance();
        }
        if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected number");
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
          value.push_back(peek());
          advance();
        }
      } else {
        value = ident();
        if (value != "true" && value != "false") fail("meta value must be a string, number or boolean");
      }
      skip_ws();
      r.meta[key] = value;
    }
  }

  void strings_section(Rule& r) {
    std::set<std::string> ids;
    while (peek() == '$') {
      StringPattern p;
      p.loc = loc();
      advance();
      p.id = "$" + ident();
      skip_ws();
      if (!ids.insert(p.id).second) {
        throw RuleError(RuleErrorCode::DuplicateStringId, p.loc, "duplicate string id " + p.id);
      }
      expect('=');
      if (peek() == '"') {
        p.kind = PatternKind::Text;
        p.text = quoted();
        if (p.text.empty()) fail("empty text string");
        skip_ws();
        text_modifiers(p);
      } else if (peek() == '/') {
        p.kind = PatternKind::Regex;
        p.text = regex_body();
        while (peek() == 'i' || peek() == 's') {
          (peek() == 'i' ? p.nocase : p.dotall) = true;
          advance();
        }
        if (ident_char(peek())) fail("unknown regex modifier");
        skip_ws();
        text_modifiers(p);
        try {
          p.regex = std::make_shared<const RegexProgram>(p.text, p.nocase, p.dotall);
        } catch (const boost::regex_error& e) {
          throw RuleError(RuleErrorCode::RegexCompile, p.loc, p.id + ": " + e.what());
        }
      } else if (peek() == '{') {
        p.kind = PatternKind::Hex;
        p.hex = hex_body();
        skip_ws();
      } else {
        fail("expected \"text\", /regex/ or { hex }");
      }
      if (ident_start(peek()) && look_ident() != "condition") fail("unsupported string modifier '" + look_ident() + "'");
      r.strings.push_back(std::move(p));
    }
  }

  void text_modifiers(StringPattern& p) {
    while (true) {
      const auto m = look_ident();
      if (m == "nocase") p.nocase = true;
      else if (m != "ascii") break;
      keyword(m);
    }
  }

  std::string regex_body() {
    const auto at = loc();
    advance();
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') throw RuleError(RuleErrorCode::Syntax, at, "unterminated regex");
      if (peek() == '/') break;
      if (peek() == '\\' && peek(1) == '/') {
        out.push_back('/');
        advance();
        advance();
        continue;
      }
      if (peek() == '\\' && peek(1) != '\0' && peek(1) != '\n') {
        out.push_back('\\');
        advance();
      }
      out.push_back(peek());
      advance();
    }
    advance();
    if (out.empty()) throw RuleError(RuleErrorCode::Syntax, at, "empty regex");
    return out;
  }

  std::vector<HexByte> hex_body() {
    const auto at = loc();
    advance();
    std::vector<HexByte> out;
    std::string nibbles;
    while (true) {
      skip_ws();
      if (eof()) throw RuleError(RuleErrorCode::Syntax, at, "unterminated hex string");
      const char c = peek();
      if (c == '}') break;
      if (c != '?' && hex_value(c) < 0) fail(std::string("unexpected '") + c + "' in hex string");
      nibbles.push_back(c);
      advance();
      if (nibbles.size() == 2) {
        HexByte b;
        b.value = 0;
        b.mask = 0;
        if (nibbles[0] != '?') {
          b.value |= static_cast<std::uint8_t>(hex_value(nibbles[0]) << 4);
          b.mask |= 0xF0;
        }
        if (nibbles[1] != '?') {
          b.value |= static_cast<std::uint8_t>(hex_value(nibbles[1]));
          b.mask |= 0x0F;
        }
        out.push_back(b);
        nibbles.clear();
      } else if (!std::isxdigit(static_cast<unsigned char>(peek())) && peek() != '?') {
        fail("hex string has an odd number of nibbles");
      }
    }
    advance();
    if (out.empty()) throw RuleError(RuleErrorCode::Syntax, at, "empty hex string");
    return out;
  }

  std::string string_ref() {
    advance();
    return "$" + ident();
  }

  void check_declared(const Rule& r, const std::string& id, SourceLoc at) const {
    const auto hit = std::any_of(r.strings.begin(), r.strings.end(), [&](const auto& p) { return p.id == id; });
    if (!hit) throw RuleError(RuleErrorCode::UndeclaredIdInCondition, at, "undeclared string " + id);
  }

  Condition expr(const Rule& r) {
    Condition left = conj(r);
    if (look_ident() != "or") return left;
    Condition c;
    c.kind = Condition::Or;
    c.kids.push_back(std::move(left));
    while (look_ident() == "or") {
      keyword("or");
      c.kids.push_back(conj(r));
    }
    return c;
  }

  Condition conj(const Rule& r) {
    Condition left = negation(r);
    if (look_ident() != "and") return left;
    Condition c;
    c.kind = Condition::And;
    c.kids.push_back(std::move(left));
    while (look_ident() == "and") {
      keyword("and");
      c.kids.push_back(negation(r));
    }
    return c;
  }

  Condition negation(const Rule& r) {
    if (look_ident() == "not") {
      keyword("not");
      Condition c;
      c.kind = Condition::Not;
      c.kids.push_back(negation(r));
      return c;
    }
    return primary(r);
  }

  Condition primary(const Rule& r) {
    const auto at = loc();
    Condition c;
    if (peek() == '(') {
      expect('(');
      c = expr(r);
      expect(')');
      return c;
    }
    if (peek() == '$') {
      c.kind = Condition::Ref;
      c.id = string_ref();
      if (peek() == '*') fail("wildcard ids are only allowed in 'of' sets");
      skip_ws();
      check_declared(r, c.id, at);
      return c;
    }
    const auto word = look_ident();
    if (word == "true" || word == "false") {
      keyword(word);
      c.kind = word == "true" ? Condition::True : Condition::False;
      return c;
    }
    if (word == "any" || word == "all") {
      keyword(word);
      c.kind = word == "any" ? Condition::AnyOf : Condition::AllOf;
    } else if (std::isdigit(static_cast<unsigned char>(peek()))) {
      std::string digits;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        digits.push_back(peek());
        advance();
      }
      if (digits.size() > 6) fail("count too large");
      skip_ws();
      c.kind = Condition::CountOf;
      c.count = std::stoul(digits);
    } else {
      fail("expected condition");
    }
    keyword("of");
    c.set = of_set(r);
    return c;
  }

  std::vector<std::string> of_set(const Rule& r) {
    std::vector<std::string> ids;
    if (look_ident() == "them") {
      keyword("them");
      for (const auto& p : r.strings) ids.push_back(p.id);
      return ids;
    }
    expect('(');
    while (true) {
      const auto at = loc();
      if (peek() != '$') fail("expected string id");
      const auto id = string_ref();
      if (peek() == '*') {
        advance();
        bool any = false;
        for (const auto& p : r.strings) {
          if (p.id.starts_with(id) && std::find(ids.begin(), ids.end(), p.id) == ids.end()) {
            ids.push_back(p.id);
            any = true;
          }
        }
        if (!any) throw RuleError(RuleErrorCode::UndeclaredIdInCondition, at, "no string matches " + id + "*");
      } else {
        check_declared(r, id, at);
        if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
      }
      skip_ws();
      if (peek() == ')') break;
      expect(',');
    }
    expect(')');
    return ids;
  }

  std::string_view s_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace

std::string_view rule_error_code_name(RuleErrorCode c) {
  switch (c) {
    case RuleErrorCode::Syntax: return "SyntaxError";
    case RuleErrorCode::DuplicateStringId: return "DuplicateStringId";
    case RuleErrorCode::UndeclaredIdInCondition: return "UndeclaredIdInCondition";
    case RuleErrorCode::RegexCompile: return "RegexCompileError";
    case RuleErrorCode::DuplicateRule: return "DuplicateRule";
    case RuleErrorCode::BadMeta: return "BadMeta";
  }
  return "?";
}

RuleError::RuleError(RuleErrorCode code, SourceLoc loc, const std::string& msg)
    : Error(std::string(rule_error_code_name(code)) + " at " + std::to_string(loc.line) + ":" +
            std::to_string(loc.column) + ": " + msg),
      code_(code),
      loc_(loc) {}

Severity Rule::severity() const { return parse_severity(meta.at("severity")); }

std::string Rule::taint_source_category() const {
  const auto it = meta.find("taint_source_category");
  return it == meta.end() ? std::string() : it->second;
}

std::vector<Rule> parse_rules(std::string_view text) { return Parser(text).rules(); }

}  // namespace hubscan::rules
