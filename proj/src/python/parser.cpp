#include <algorithm>
#include <array>
#include <cctype>

#include "hubscan/python/ast.hpp"
#include "lexer.hpp"

namespace hubscan::python {

using detail::LineTable;
using detail::SyntaxFailure;
using detail::Tok;
using detail::Token;

std::string_view node_kind_name(NodeKind k) {
  static constexpr std::array<std::string_view, 66> kNames{
      "Module",     "Block",        "FunctionDef", "ClassDef",  "DecoratorList", "Arguments", "Arg",
      "Return",     "Delete",       "Assign",      "AugAssign", "AnnAssign",     "For",       "While",
      "If",         "With",         "WithItem",    "Match",     "MatchCase",     "Raise",     "Try",
      "ExceptHandler", "Assert",    "Import",      "ImportFrom", "Alias",        "Global",    "Nonlocal",
      "Expr",       "Pass",         "Break",       "Continue",  "BoolOp",        "NamedExpr", "BinOp",
      "UnaryOp",    "Compare",      "Lambda",      "IfExp",     "Dict",          "DictEntry", "Set",
      "List",       "Tuple",        "ListComp",    "SetComp",   "DictComp",      "GeneratorExp", "Comprehension",
      "Await",      "Yield",        "YieldFrom",   "Call",      "Keyword",       "Attribute", "Subscript",
      "Slice",      "Starred",      "DoubleStarred", "Name",    "Constant",      "JoinedStr", "FormattedValue",
      "MatchClass"};
  const auto i = static_cast<std::size_t>(k);
  return i < kNames.size() ? kNames[i] : "?";
}

std::string_view PyAst::text_of(const Node& n) const {
  if (n.begin >= source.size() || n.end < n.begin) return {};
  return std::string_view(source).substr(n.begin, n.end - n.begin);
}

namespace {

constexpr std::array<std::string_view, 35> kKeywords{
    "False", "None",   "True",    "and",      "as",   "assert", "async",  "await", "break",
    "class", "continue", "def",   "del",      "elif", "else",   "except", "finally", "for",
    "from",  "global", "if",      "import",   "in",   "is",     "lambda", "nonlocal", "not",
    "or",    "pass",   "raise",   "return",   "try",  "while",  "with",   "yield"};

bool is_keyword(std::string_view s) { return std::find(kKeywords.begin(), kKeywords.end(), s) != kKeywords.end(); }

constexpr std::array<std::string_view, 13> kAugOps{"+=", "-=", "*=", "/=", "//=", "%=", "@=",
                                                   "&=", "|=", "^=", ">>=", "<<=", "**="};

int hexval(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// Decodes backslash escapes of a non-raw literal body.
std::string decode_escapes(std::string_view body, bool bytes) {
  std::string out;
  out.reserve(body.size());
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (c != '\\' || i + 1 >= body.size()) {
      out.push_back(c);
      continue;
    }
    const char e = body[++i];
    switch (e) {
      case '\n': break;
      case '\r':
        if (i + 1 < body.size() && body[i + 1] == '\n') ++i;
        break;
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
        if (i + 2 < body.size() && hexval(body[i + 1]) >= 0 && hexval(body[i + 2]) >= 0) {
          const int v = hexval(body[i + 1]) * 16 + hexval(body[i + 2]);
          if (bytes) out.push_back(static_cast<char>(v));
          else append_utf8(out, static_cast<std::uint32_t>(v));
          i += 2;
        } else {
          out += "\\x";
        }
        break;
      }
      case 'u':
      case 'U': {
        const std::size_t n = e == 'u' ? 4 : 8;
        std::uint32_t v = 0;
        bool ok = !bytes && i + n < body.size();
        for (std::size_t k = 1; ok && k <= n; ++k) {
          if (i + k >= body.size() || hexval(body[i + k]) < 0) ok = false;
          else v = v * 16 + static_cast<std::uint32_t>(hexval(body[i + k]));
        }
        if (ok && v <= 0x10FFFF) {
          append_utf8(out, v);
          i += n;
        } else {
          out.push_back('\\');
          out.push_back(e);
        }
        break;
      }
      default:
        if (e >= '0' && e <= '7') {
          int v = e - '0';
          for (int k = 0; k < 2 && i + 1 < body.size() && body[i + 1] >= '0' && body[i + 1] <= '7'; ++k) {
            v = v * 8 + (body[++i] - '0');
          }
          if (bytes) out.push_back(static_cast<char>(v & 0xFF));
          else append_utf8(out, static_cast<std::uint32_t>(v));
        } else {
          // Unknown escapes (and \N{...}) keep their backslash.
          out.push_back('\\');
          out.push_back(e);
        }
    }
  }
  return out;
}

struct StringParts {
  std::string prefix;  // lower-cased
  std::size_t body_begin = 0, body_end = 0;
};

StringParts split_string(std::string_view src, const Token& t) {
  StringParts p;
  std::size_t i = t.begin;
  while (src[i] != '\'' && src[i] != '"') {
    p.prefix.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(src[i]))));
    ++i;
  }
  const char q = src[i];
  const bool triple = i + 2 < t.end && src[i + 1] == q && src[i + 2] == q && t.end - i >= 6;
  const std::size_t qlen = triple ? 3 : 1;
  p.body_begin = i + qlen;
  p.body_end = t.end - qlen;
  return p;
}

class Parser {
 public:
  Parser(std::string_view src, const LineTable& lines, std::vector<Token> toks)
      : src_(src), lines_(lines), toks_(std::move(toks)) {}

  NodePtr file() {
    auto mod = node(NodeKind::Module, 0);
    while (!at(Tok::End)) {
      if (at(Tok::Newline)) {
        ++pos_;
        continue;
      }
      statement(mod->kids);
    }
    mod->end = src_.size();
    return mod;
  }

  // A lone expression list, as in an f-string replacement field.
  NodePtr field_expression() {
    NodePtr e = at_kw("yield") ? yield_expr() : testlist_star_expr();
    if (!at(Tok::End)) fail("unexpected token in f-string expression");
    return e;
  }

 private:
  // ---- token helpers ----
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at(Tok t) const { return peek().type == t; }
  bool at_op(std::string_view o, std::size_t k = 0) const { return peek(k).type == Tok::Op && peek(k).text == o; }
  bool at_kw(std::string_view k, std::size_t ahead = 0) const {
    return peek(ahead).type == Tok::Name && peek(ahead).text == k;
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    if (t.type != Tok::Newline && t.type != Tok::Indent && t.type != Tok::Dedent && t.type != Tok::End) {
      prev_end_ = t.end;
    }
    return t;
  }
  bool accept_op(std::string_view o) {
    if (!at_op(o)) return false;
    next();
    return true;
  }
  bool accept_kw(std::string_view k) {
    if (!at_kw(k)) return false;
    next();
    return true;
  }
  void expect_op(std::string_view o) {
    if (!accept_op(o)) fail("expected '" + std::string(o) + "'");
  }
  void expect_kw(std::string_view k) {
    if (!accept_kw(k)) fail("expected '" + std::string(k) + "'");
  }
  std::string expect_name() {
    if (!at(Tok::Name) || is_keyword(peek().text)) fail("expected a name");
    return std::string(next().text);
  }
  [[noreturn]] void fail(const std::string& msg) const { throw SyntaxFailure{msg, peek().begin}; }

  NodePtr node(NodeKind k, std::size_t begin) {
    auto n = std::make_unique<Node>();
    n->kind = k;
    n->begin = begin;
    n->loc = lines_.at(begin);
    return n;
  }
  NodePtr done(NodePtr n) {
    n->end = std::max(prev_end_, n->begin);
    return n;
  }
  // `begin` is where the leftmost operand's tokens start, which precedes
  // first->begin when that operand is parenthesized.
  NodePtr wrap(NodeKind k, NodePtr first, std::size_t begin) {
    auto n = node(k, std::min(begin, first->begin));
    n->kids.push_back(std::move(first));
    return n;
  }
  NodePtr wrap(NodeKind k, NodePtr first) {
    const auto begin = first->begin;
    return wrap(k, std::move(first), begin);
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p_(p) {
      if (++p_.depth_ > 300) p_.fail("nesting too deep");
    }
    ~DepthGuard() { --p_.depth_; }
    Parser& p_;
  };

  // ---- statements ----
  void statement(std::vector<NodePtr>& out) {
    DepthGuard guard(*this);
    if (at(Tok::Name)) {
      const auto t = peek().text;
      if (t == "if") return out.push_back(if_stmt());
      if (t == "while") return out.push_back(while_stmt());
      if (t == "for") return out.push_back(for_stmt(false, peek().begin));
      if (t == "try") return out.push_back(try_stmt());
      if (t == "with") return out.push_back(with_stmt(false, peek().begin));
      if (t == "def") return out.push_back(funcdef(nullptr, false, peek().begin));
      if (t == "class") return out.push_back(classdef(nullptr, peek().begin));
      if (t == "async") {
        const auto begin = next().begin;
        if (at_kw("def")) return out.push_back(funcdef(nullptr, true, begin));
        if (at_kw("for")) return out.push_back(for_stmt(true, begin));
        if (at_kw("with")) return out.push_back(with_stmt(true, begin));
        fail("expected def, for or with after async");
      }
      if (t == "match") {
        if (auto m = try_match()) return out.push_back(std::move(m));
      }
    }
    if (at_op("@")) return out.push_back(decorated());
    simple_stmts(out);
  }

  void simple_stmts(std::vector<NodePtr>& out) {
    while (true) {
      out.push_back(small_stmt());
      if (!accept_op(";")) break;
      if (at(Tok::Newline) || at(Tok::End)) break;
    }
    if (at(Tok::End)) return;
    if (!at(Tok::Newline)) fail("expected end of statement");
    next();
  }

  NodePtr small_stmt() {
    const auto begin = peek().begin;
    if (at(Tok::Name)) {
      const auto t = peek().text;
      if (t == "pass" || t == "break" || t == "continue") {
        next();
        return done(node(t == "pass" ? NodeKind::Pass : t == "break" ? NodeKind::Break : NodeKind::Continue, begin));
      }
      if (t == "return") {
        next();
        auto n = node(NodeKind::Return, begin);
        n->kids.push_back(end_of_simple() ? nullptr : testlist_star_expr());
        return done(std::move(n));
      }
      if (t == "raise") {
        next();
        auto n = node(NodeKind::Raise, begin);
        if (end_of_simple()) {
          n->kids.push_back(nullptr);
          n->kids.push_back(nullptr);
        } else {
          n->kids.push_back(test());
          n->kids.push_back(accept_kw("from") ? test() : nullptr);
        }
        return done(std::move(n));
      }
      if (t == "global" || t == "nonlocal") {
        next();
        auto n = node(t == "global" ? NodeKind::Global : NodeKind::Nonlocal, begin);
        do {
          const auto b = peek().begin;
          auto name = node(NodeKind::Name, b);
          name->text = expect_name();
          n->kids.push_back(done(std::move(name)));
        } while (accept_op(","));
        return done(std::move(n));
      }
      if (t == "del") {
        next();
        auto n = node(NodeKind::Delete, begin);
        n->kids.push_back(exprlist());
        return done(std::move(n));
      }
      if (t == "assert") {
        next();
        auto n = node(NodeKind::Assert, begin);
        n->kids.push_back(test());
        n->kids.push_back(accept_op(",") ? test() : nullptr);
        return done(std::move(n));
      }
      if (t == "import") return import_name();
      if (t == "from") return import_from();
    }
    return expr_stmt();
  }

  bool end_of_simple() const { return at(Tok::Newline) || at(Tok::End) || at_op(";"); }

  NodePtr expr_stmt() {
    const auto begin = peek().begin;
    auto first = at_kw("yield") ? yield_expr() : testlist_star_expr();
    if (at_op(":")) {
      next();
      auto n = node(NodeKind::AnnAssign, begin);
      n->kids.push_back(std::move(first));
      n->kids.push_back(test());
      n->kids.push_back(accept_op("=") ? (at_kw("yield") ? yield_expr() : testlist_star_expr()) : nullptr);
      return done(std::move(n));
    }
    if (peek().type == Tok::Op && std::find(kAugOps.begin(), kAugOps.end(), peek().text) != kAugOps.end()) {
      auto n = node(NodeKind::AugAssign, begin);
      n->text = std::string(next().text);
      n->kids.push_back(std::move(first));
      n->kids.push_back(at_kw("yield") ? yield_expr() : testlist_star_expr());
      return done(std::move(n));
    }
    if (at_op("=")) {
      auto n = node(NodeKind::Assign, begin);
      n->kids.push_back(std::move(first));
      while (accept_op("=")) n->kids.push_back(at_kw("yield") ? yield_expr() : testlist_star_expr());
      return done(std::move(n));
    }
    auto n = node(NodeKind::Expr, begin);
    n->kids.push_back(std::move(first));
    return done(std::move(n));
  }

  std::string dotted_name() {
    std::string s = expect_name();
    while (accept_op(".")) s += "." + expect_name();
    return s;
  }

  NodePtr import_name() {
    const auto begin = next().begin;
    auto n = node(NodeKind::Import, begin);
    do {
      auto a = node(NodeKind::Alias, peek().begin);
      a->text = dotted_name();
      if (accept_kw("as")) a->aux = expect_name();
      n->kids.push_back(done(std::move(a)));
    } while (accept_op(","));
    return done(std::move(n));
  }

  NodePtr import_from() {
    const auto begin = next().begin;
    auto n = node(NodeKind::ImportFrom, begin);
    std::string module;
    while (at_op(".") || at_op("...")) module += next().text;
    if (!at_kw("import")) module += dotted_name();
    n->text = module;
    expect_kw("import");
    if (at_op("*")) {
      auto a = node(NodeKind::Alias, next().begin);
      a->text = "*";
      n->kids.push_back(done(std::move(a)));
      return done(std::move(n));
    }
    const bool paren = accept_op("(");
    do {
      if (paren && at_op(")")) break;
      auto a = node(NodeKind::Alias, peek().begin);
      a->text = expect_name();
      if (accept_kw("as")) a->aux = expect_name();
      n->kids.push_back(done(std::move(a)));
    } while (accept_op(","));
    if (paren) expect_op(")");
    return done(std::move(n));
  }

  NodePtr suite(std::string tag = {}) {
    expect_op(":");
    auto b = node(NodeKind::Block, peek().begin);
    b->text = std::move(tag);
    if (at(Tok::Newline)) {
      next();
      if (!at(Tok::Indent)) fail("expected an indented block");
      next();
      while (!at(Tok::Dedent) && !at(Tok::End)) statement(b->kids);
      if (at(Tok::Dedent)) next();
    } else {
      simple_stmts(b->kids);
    }
    if (b->kids.empty()) fail("empty block");
    b->begin = b->kids.front()->begin;
    b->loc = b->kids.front()->loc;
    b->end = b->kids.back()->end;
    return b;
  }

  NodePtr if_stmt() {
    const auto begin = next().begin;  // `if` or `elif`
    auto n = node(NodeKind::If, begin);
    n->kids.push_back(namedexpr_test());
    n->kids.push_back(suite());
    if (at_kw("elif")) {
      auto inner = if_stmt();
      auto b = node(NodeKind::Block, inner->begin);
      b->end = inner->end;
      b->kids.push_back(std::move(inner));
      n->kids.push_back(std::move(b));
    } else if (accept_kw("else")) {
      n->kids.push_back(suite("else"));
    } else {
      n->kids.push_back(nullptr);
    }
    return done(std::move(n));
  }

  NodePtr while_stmt() {
    const auto begin = next().begin;
    auto n = node(NodeKind::While, begin);
    n->kids.push_back(namedexpr_test());
    n->kids.push_back(suite());
    n->kids.push_back(accept_kw("else") ? suite("else") : nullptr);
    return done(std::move(n));
  }

  NodePtr for_stmt(bool is_async, std::size_t begin) {
    expect_kw("for");
    auto n = node(NodeKind::For, begin);
    n->flag = is_async;
    n->kids.push_back(exprlist());
    expect_kw("in");
    n->kids.push_back(testlist_star_expr());
    n->kids.push_back(suite());
    n->kids.push_back(accept_kw("else") ? suite("else") : nullptr);
    return done(std::move(n));
  }

  NodePtr try_stmt() {
    const auto begin = next().begin;
    auto n = node(NodeKind::Try, begin);
    n->kids.push_back(suite());
    bool any = false;
    while (at_kw("except")) {
      any = true;
      auto h = node(NodeKind::ExceptHandler, next().begin);
      accept_op("*");
      if (at_op(":")) {
        h->kids.push_back(nullptr);
      } else {
        h->kids.push_back(test());
        if (accept_op(",")) {
          // Parenthesis-free tuple of exception types is a syntax error in
          // Python 3; reject it like the interpreter.
          fail("multiple exception types must be parenthesized");
        }
        if (accept_kw("as")) h->text = expect_name();
      }
      h->kids.push_back(suite());
      n->kids.push_back(done(std::move(h)));
    }
    if (any && accept_kw("else")) n->kids.push_back(suite("else"));
    if (accept_kw("finally")) {
      any = true;
      n->kids.push_back(suite("finally"));
    }
    if (!any) fail("try without except or finally");
    return done(std::move(n));
  }

  NodePtr with_item() {
    auto item = node(NodeKind::WithItem, peek().begin);
    item->kids.push_back(test());
    item->kids.push_back(accept_kw("as") ? star_target() : nullptr);
    return done(std::move(item));
  }

  NodePtr with_stmt(bool is_async, std::size_t begin) {
    expect_kw("with");
    auto n = node(NodeKind::With, begin);
    n->flag = is_async;
    if (at_op("(")) {
      const auto save = pos_;
      const auto save_end = prev_end_;
      try {
        next();
        std::vector<NodePtr> items;
        do {
          if (at_op(")")) break;
          items.push_back(with_item());
        } while (accept_op(","));
        expect_op(")");
        if (!at_op(":")) fail("not a parenthesized with");
        for (auto& i : items) n->kids.push_back(std::move(i));
        n->kids.push_back(suite());
        return done(std::move(n));
      } catch (const SyntaxFailure&) {
        pos_ = save;
        prev_end_ = save_end;
      }
    }
    do n->kids.push_back(with_item());
    while (accept_op(","));
    n->kids.push_back(suite());
    return done(std::move(n));
  }

  NodePtr try_match() {
    const auto save = pos_;
    const auto save_end = prev_end_;
    try {
      const auto begin = next().begin;
      auto n = node(NodeKind::Match, begin);
      n->kids.push_back(testlist_star_expr());
      expect_op(":");
      if (!at(Tok::Newline)) fail("not a match statement");
      next();
      if (!at(Tok::Indent)) fail("not a match statement");
      next();
      while (at_kw("case")) {
        auto c = node(NodeKind::MatchCase, next().begin);
        auto pattern = pattern_list();
        c->kids.push_back(std::move(pattern));
        c->kids.push_back(accept_kw("if") ? namedexpr_test() : nullptr);
        c->kids.push_back(suite());
        n->kids.push_back(done(std::move(c)));
      }
      if (n->kids.size() < 2 || !at(Tok::Dedent)) fail("not a match statement");
      next();
      return done(std::move(n));
    } catch (const SyntaxFailure&) {
      pos_ = save;
      prev_end_ = save_end;
      return nullptr;
    }
  }

  // Patterns are built from expression nodes: `|` is BinOp, `as` is
  // NamedExpr, class patterns are MatchClass, `*rest` is Starred.
  NodePtr pattern_list() {
    const auto begin = peek().begin;
    auto first = pattern_item();
    if (!at_op(",")) return first;
    auto t = node(NodeKind::Tuple, begin);
    t->kids.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_op(":") || at_kw("if")) break;
      t->kids.push_back(pattern_item());
    }
    return done(std::move(t));
  }

  NodePtr pattern_item() { return at_op("*") ? star_pattern() : pattern(); }

  NodePtr star_pattern() {
    const auto begin = next().begin;
    auto n = node(NodeKind::Starred, begin);
    auto name = node(NodeKind::Name, peek().begin);
    name->text = expect_name();
    n->kids.push_back(done(std::move(name)));
    return done(std::move(n));
  }

  NodePtr pattern() {
    DepthGuard guard(*this);
    const auto begin = peek().begin;
    auto p = closed_pattern();
    while (at_op("|")) {
      next();
      auto n = wrap(NodeKind::BinOp, std::move(p), begin);
      n->text = "|";
      n->kids.push_back(closed_pattern());
      p = done(std::move(n));
    }
    if (!accept_kw("as")) return p;
    auto bound = node(NodeKind::NamedExpr, begin);
    auto name = node(NodeKind::Name, peek().begin);
    name->text = expect_name();
    bound->kids.push_back(done(std::move(name)));
    bound->kids.push_back(std::move(p));
    return done(std::move(bound));
  }

  // Comma-separated patterns up to `close`, appended to seq.
  void pattern_seq(Node& seq, std::string_view close) {
    while (!at_op(close)) {
      seq.kids.push_back(pattern_item());
      if (!accept_op(",")) break;
    }
    expect_op(close);
  }

  NodePtr closed_pattern() {
    const auto begin = peek().begin;
    if (at_op("(")) {
      next();
      if (accept_op(")")) return done(node(NodeKind::Tuple, begin));
      auto first = pattern_item();
      if (accept_op(")")) return first;
      expect_op(",");
      auto t = node(NodeKind::Tuple, begin);
      t->kids.push_back(std::move(first));
      pattern_seq(*t, ")");
      return done(std::move(t));
    }
    if (at_op("[")) {
      next();
      auto l = node(NodeKind::List, begin);
      pattern_seq(*l, "]");
      return done(std::move(l));
    }
    if (at_op("{")) {
      next();
      auto d = node(NodeKind::Dict, begin);
      while (!at_op("}")) {
        if (at_op("**")) {
          auto ds = node(NodeKind::DoubleStarred, next().begin);
          auto name = node(NodeKind::Name, peek().begin);
          name->text = expect_name();
          ds->kids.push_back(done(std::move(name)));
          d->kids.push_back(done(std::move(ds)));
        } else {
          auto key = at(Tok::Name) ? dotted_value() : arith_expr();
          expect_op(":");
          auto entry = wrap(NodeKind::DictEntry, std::move(key));
          entry->kids.push_back(pattern());
          d->kids.push_back(done(std::move(entry)));
        }
        if (!accept_op(",")) break;
      }
      expect_op("}");
      return done(std::move(d));
    }
    if (!at(Tok::Name) || peek().text == "None" || peek().text == "True" || peek().text == "False") return arith_expr();
    auto value = dotted_value();
    if (!at_op("(")) return value;
    next();
    auto cls = wrap(NodeKind::MatchClass, std::move(value));
    while (!at_op(")")) {
      if (at(Tok::Name) && at_op("=", 1)) {
        auto kw = node(NodeKind::Keyword, peek().begin);
        kw->text = std::string(next().text);
        next();
        kw->kids.push_back(pattern());
        cls->kids.push_back(done(std::move(kw)));
      } else {
        cls->kids.push_back(pattern());
      }
      if (!accept_op(",")) break;
    }
    expect_op(")");
    return done(std::move(cls));
  }

  NodePtr dotted_value() {
    auto n = node(NodeKind::Name, peek().begin);
    n->text = expect_name();
    NodePtr v = done(std::move(n));
    while (accept_op(".")) {
      auto attr = wrap(NodeKind::Attribute, std::move(v));
      attr->text = expect_name();
      v = done(std::move(attr));
    }
    return v;
  }

  NodePtr decorated() {
    const auto begin = peek().begin;
    auto decos = node(NodeKind::DecoratorList, begin);
    while (accept_op("@")) {
      decos->kids.push_back(namedexpr_test());
      if (!at(Tok::Newline)) fail("expected newline after decorator");
      next();
    }
    decos = done(std::move(decos));
    if (at_kw("def")) return funcdef(std::move(decos), false, begin);
    if (at_kw("class")) return classdef(std::move(decos), begin);
    if (accept_kw("async") && at_kw("def")) return funcdef(std::move(decos), true, begin);
    fail("expected def or class after decorator");
  }

  NodePtr funcdef(NodePtr decos, bool is_async, std::size_t begin) {
    expect_kw("def");
    auto n = node(NodeKind::FunctionDef, begin);
    n->flag = is_async;
    n->text = expect_name();
    if (!decos) decos = node(NodeKind::DecoratorList, begin);
    n->kids.push_back(std::move(decos));
    expect_op("(");
    n->kids.push_back(parameters(")", true));
    expect_op(")");
    n->kids.push_back(accept_op("->") ? test() : nullptr);
    n->kids.push_back(suite());
    return done(std::move(n));
  }

  NodePtr classdef(NodePtr decos, std::size_t begin) {
    expect_kw("class");
    auto n = node(NodeKind::ClassDef, begin);
    n->text = expect_name();
    if (!decos) decos = node(NodeKind::DecoratorList, begin);
    n->kids.push_back(std::move(decos));
    if (accept_op("(")) {
      arglist(n->kids);
      expect_op(")");
    }
    n->kids.push_back(suite());
    return done(std::move(n));
  }

  NodePtr parameters(std::string_view closing, bool annotations) {
    auto args = node(NodeKind::Arguments, peek().begin);
    bool kwonly = false;
    while (!at_op(closing)) {
      if (accept_op("/")) {
        for (auto& a : args->kids) a->aux = "posonly";
      } else if (at_op("*") || at_op("**")) {
        const bool dbl = at_op("**");
        const auto b = next().begin;
        if (!dbl && (at_op(",") || at_op(closing))) {
          kwonly = true;
        } else {
          args->kids.push_back(param(b, dbl ? "**" : "*", annotations));
          if (!dbl) kwonly = true;
        }
      } else {
        args->kids.push_back(param(peek().begin, kwonly ? "kwonly" : "", annotations));
      }
      if (!accept_op(",")) break;
    }
    return done(std::move(args));
  }

  NodePtr param(std::size_t begin, std::string aux, bool annotations) {
    auto a = node(NodeKind::Arg, begin);
    a->text = expect_name();
    a->aux = std::move(aux);
    a->kids.push_back(annotations && accept_op(":") ? test() : nullptr);
    a->kids.push_back(accept_op("=") ? test() : nullptr);
    return done(std::move(a));
  }

  // ---- expressions ----
  NodePtr testlist_star_expr() {
    const auto begin = peek().begin;
    auto first = at_op("*") ? star_expr() : namedexpr_test();
    if (!at_op(",")) return first;
    auto t = node(NodeKind::Tuple, begin);
    t->kids.push_back(std::move(first));
    while (accept_op(",")) {
      if (!starts_expression()) break;
      t->kids.push_back(at_op("*") ? star_expr() : namedexpr_test());
    }
    return done(std::move(t));
  }

  bool starts_expression() const {
    const auto& t = peek();
    if (t.type == Tok::Name) {
      static constexpr std::array<std::string_view, 8> kExprKw{"None", "True", "False", "not", "lambda", "await", "yield", "async"};
      return !is_keyword(t.text) || std::find(kExprKw.begin(), kExprKw.end(), t.text) != kExprKw.end();
    }
    if (t.type == Tok::Number || t.type == Tok::String) return true;
    if (t.type != Tok::Op) return false;
    static constexpr std::array<std::string_view, 9> kStarts{"(", "[", "{", "-", "+", "~", "*", "...", "**"};
    return std::find(kStarts.begin(), kStarts.end(), t.text) != kStarts.end();
  }

  NodePtr exprlist() {
    const auto begin = peek().begin;
    auto first = at_op("*") ? star_expr() : expr();
    if (!at_op(",")) return first;
    auto t = node(NodeKind::Tuple, begin);
    t->kids.push_back(std::move(first));
    while (accept_op(",")) {
      if (!starts_expression() || at_kw("in")) break;
      t->kids.push_back(at_op("*") ? star_expr() : expr());
    }
    return done(std::move(t));
  }

  NodePtr star_target() {
    return at_op("*") ? star_expr() : expr();
  }

  NodePtr star_expr() {
    const auto begin = next().begin;
    auto n = node(NodeKind::Starred, begin);
    n->kids.push_back(expr());
    return done(std::move(n));
  }

  NodePtr namedexpr_test() {
    if (at(Tok::Name) && at_op(":=", 1) && !is_keyword(peek().text)) {
      const auto begin = peek().begin;
      auto n = node(NodeKind::NamedExpr, begin);
      auto name = node(NodeKind::Name, begin);
      name->text = std::string(next().text);
      n->kids.push_back(done(std::move(name)));
      next();
      n->kids.push_back(test());
      return done(std::move(n));
    }
    return test();
  }

  NodePtr test() {
    DepthGuard guard(*this);
    if (at_kw("lambda")) return lambdef();
    const auto begin = peek().begin;
    auto body = or_test();
    if (at_kw("if")) {
      next();
      auto n = node(NodeKind::IfExp, std::min(begin, body->begin));
      auto cond = or_test();
      expect_kw("else");
      n->kids.push_back(std::move(cond));
      n->kids.push_back(std::move(body));
      n->kids.push_back(test());
      return done(std::move(n));
    }
    return body;
  }

  NodePtr lambdef() {
    const auto begin = next().begin;
    auto n = node(NodeKind::Lambda, begin);
    n->kids.push_back(parameters(":", false));
    expect_op(":");
    n->kids.push_back(test());
    return done(std::move(n));
  }

  NodePtr bool_chain(std::string_view op, NodePtr (Parser::*sub)()) {
    const auto begin = peek().begin;
    auto first = (this->*sub)();
    if (!at_kw(op)) return first;
    auto n = wrap(NodeKind::BoolOp, std::move(first), begin);
    n->text = std::string(op);
    while (accept_kw(op)) n->kids.push_back((this->*sub)());
    return done(std::move(n));
  }

  NodePtr or_test() { return bool_chain("or", &Parser::and_test); }
  NodePtr and_test() { return bool_chain("and", &Parser::not_test); }

  NodePtr not_test() {
    if (at_kw("not")) {
      DepthGuard guard(*this);
      const auto begin = next().begin;
      auto n = node(NodeKind::UnaryOp, begin);
      n->text = "not";
      n->kids.push_back(not_test());
      return done(std::move(n));
    }
    return comparison();
  }

  std::string comp_op() {
    if (peek().type == Tok::Op) {
      static constexpr std::array<std::string_view, 6> kOps{"<", ">", "==", ">=", "<=", "!="};
      if (std::find(kOps.begin(), kOps.end(), peek().text) != kOps.end()) return std::string(next().text);
      return {};
    }
    if (accept_kw("in")) return "in";
    if (at_kw("not") && at_kw("in", 1)) {
      next();
      next();
      return "not in";
    }
    if (accept_kw("is")) return accept_kw("not") ? "is not" : "is";
    return {};
  }

  NodePtr comparison() {
    const auto begin = peek().begin;
    auto first = expr();
    auto op = comp_op();
    if (op.empty()) return first;
    auto n = wrap(NodeKind::Compare, std::move(first), begin);
    std::string ops;
    while (!op.empty()) {
      if (!ops.empty()) ops += " ";
      ops += op;
      n->kids.push_back(expr());
      op = comp_op();
    }
    n->text = std::move(ops);
    return done(std::move(n));
  }

  template <std::size_t N>
  NodePtr binary(const std::array<std::string_view, N>& ops, NodePtr (Parser::*sub)()) {
    const auto begin = peek().begin;
    auto left = (this->*sub)();
    while (peek().type == Tok::Op && std::find(ops.begin(), ops.end(), peek().text) != ops.end()) {
      auto n = wrap(NodeKind::BinOp, std::move(left), begin);
      n->text = std::string(next().text);
      n->kids.push_back((this->*sub)());
      left = done(std::move(n));
    }
    return left;
  }

  NodePtr expr() { return binary(std::array<std::string_view, 1>{"|"}, &Parser::xor_expr); }
  NodePtr xor_expr() { return binary(std::array<std::string_view, 1>{"^"}, &Parser::and_expr); }
  NodePtr and_expr() { return binary(std::array<std::string_view, 1>{"&"}, &Parser::shift_expr); }
  NodePtr shift_expr() { return binary(std::array<std::string_view, 2>{"<<", ">>"}, &Parser::arith_expr); }
  NodePtr arith_expr() { return binary(std::array<std::string_view, 2>{"+", "-"}, &Parser::term); }
  NodePtr term() { return binary(std::array<std::string_view, 5>{"*", "/", "%", "//", "@"}, &Parser::factor); }

  NodePtr factor() {
    if (at_op("+") || at_op("-") || at_op("~")) {
      DepthGuard guard(*this);
      const auto& t = next();
      auto n = node(NodeKind::UnaryOp, t.begin);
      n->text = std::string(t.text);
      n->kids.push_back(factor());
      return done(std::move(n));
    }
    return power();
  }

  NodePtr power() {
    const auto begin = peek().begin;
    NodePtr base;
    if (at_kw("await")) {
      const auto begin = next().begin;
      auto n = node(NodeKind::Await, begin);
      n->kids.push_back(primary());
      base = done(std::move(n));
    } else {
      base = primary();
    }
    if (at_op("**")) {
      next();
      auto n = wrap(NodeKind::BinOp, std::move(base), begin);
      n->text = "**";
      n->kids.push_back(factor());
      return done(std::move(n));
    }
    return base;
  }

  NodePtr primary() {
    const auto begin = peek().begin;
    auto e = atom();
    while (true) {
      if (at_op("(")) {
        next();
        auto call = wrap(NodeKind::Call, std::move(e), begin);
        arglist(call->kids);
        expect_op(")");
        e = done(std::move(call));
      } else if (at_op("[")) {
        next();
        auto sub = wrap(NodeKind::Subscript, std::move(e), begin);
        sub->kids.push_back(subscriptlist());
        expect_op("]");
        e = done(std::move(sub));
      } else if (at_op(".")) {
        next();
        auto attr = wrap(NodeKind::Attribute, std::move(e), begin);
        if (!at(Tok::Name)) fail("expected attribute name");
        attr->text = std::string(next().text);
        e = done(std::move(attr));
      } else {
        return e;
      }
    }
  }

  void arglist(std::vector<NodePtr>& out) {
    while (!at_op(")")) {
      const auto begin = peek().begin;
      if (at_op("*")) {
        out.push_back(star_expr_test());
      } else if (at_op("**")) {
        next();
        auto n = node(NodeKind::DoubleStarred, begin);
        n->kids.push_back(test());
        out.push_back(done(std::move(n)));
      } else if (at(Tok::Name) && at_op("=", 1) && !is_keyword(peek().text)) {
        auto n = node(NodeKind::Keyword, begin);
        n->text = std::string(next().text);
        next();
        n->kids.push_back(test());
        out.push_back(done(std::move(n)));
      } else {
        auto value = namedexpr_test();
        if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) value = comprehension(NodeKind::GeneratorExp, std::move(value));
        out.push_back(std::move(value));
      }
      if (!accept_op(",")) break;
    }
  }

  NodePtr star_expr_test() {
    const auto begin = next().begin;
    auto n = node(NodeKind::Starred, begin);
    n->kids.push_back(test());
    return done(std::move(n));
  }

  NodePtr subscriptlist() {
    const auto begin = peek().begin;
    auto first = subscript();
    if (!at_op(",")) return first;
    auto t = node(NodeKind::Tuple, begin);
    t->kids.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_op("]")) break;
      t->kids.push_back(subscript());
    }
    return done(std::move(t));
  }

  NodePtr subscript() {
    const auto begin = peek().begin;
    if (at_op("*")) return star_expr();
    NodePtr lower;
    if (!at_op(":")) {
      lower = namedexpr_test();
      if (!at_op(":")) return lower;
    }
    auto s = node(NodeKind::Slice, begin);
    next();  // ':'
    s->kids.push_back(std::move(lower));
    s->kids.push_back(at_op(":") || at_op("]") || at_op(",") ? nullptr : test());
    if (accept_op(":")) {
      s->kids.push_back(at_op("]") || at_op(",") ? nullptr : test());
    } else {
      s->kids.push_back(nullptr);
    }
    return done(std::move(s));
  }

  NodePtr comprehension(NodeKind kind, NodePtr elt, NodePtr value = nullptr) {
    auto n = wrap(kind, std::move(elt));
    if (value) n->kids.push_back(std::move(value));
    while (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
      auto c = node(NodeKind::Comprehension, peek().begin);
      c->flag = accept_kw("async");
      expect_kw("for");
      c->kids.push_back(exprlist());
      expect_kw("in");
      c->kids.push_back(or_test());
      while (at_kw("if")) {
        next();
        c->kids.push_back(at_kw("lambda") ? lambdef() : or_test());
      }
      n->kids.push_back(done(std::move(c)));
    }
    return done(std::move(n));
  }

  NodePtr yield_expr() {
    const auto begin = next().begin;
    if (accept_kw("from")) {
      auto n = node(NodeKind::YieldFrom, begin);
      n->kids.push_back(test());
      return done(std::move(n));
    }
    auto n = node(NodeKind::Yield, begin);
    n->kids.push_back(starts_expression() ? testlist_star_expr() : nullptr);
    return done(std::move(n));
  }

  NodePtr atom() {
    DepthGuard guard(*this);
    const Token& t = peek();
    const auto begin = t.begin;
    if (t.type == Tok::Op) {
      if (t.text == "(") {
        next();
        if (accept_op(")")) return done(node(NodeKind::Tuple, begin));
        if (at_kw("yield")) {
          auto y = yield_expr();
          expect_op(")");
          return y;
        }
        auto first = at_op("*") ? star_expr() : namedexpr_test();
        if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
          auto g = comprehension(NodeKind::GeneratorExp, std::move(first));
          expect_op(")");
          g->begin = begin;
          g->loc = lines_.at(begin);
          return done(std::move(g));
        }
        if (at_op(",")) {
          auto tup = node(NodeKind::Tuple, begin);
          tup->kids.push_back(std::move(first));
          while (accept_op(",")) {
            if (at_op(")")) break;
            tup->kids.push_back(at_op("*") ? star_expr() : namedexpr_test());
          }
          expect_op(")");
          return done(std::move(tup));
        }
        expect_op(")");
        return first;
      }
      if (t.text == "[") {
        next();
        auto list = node(NodeKind::List, begin);
        if (accept_op("]")) return done(std::move(list));
        auto first = at_op("*") ? star_expr() : namedexpr_test();
        if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
          auto c = comprehension(NodeKind::ListComp, std::move(first));
          expect_op("]");
          c->begin = begin;
          c->loc = lines_.at(begin);
          return done(std::move(c));
        }
        list->kids.push_back(std::move(first));
        while (accept_op(",")) {
          if (at_op("]")) break;
          list->kids.push_back(at_op("*") ? star_expr() : namedexpr_test());
        }
        expect_op("]");
        return done(std::move(list));
      }
      if (t.text == "{") return brace_atom();
      if (t.text == "...") {
        next();
        auto c = node(NodeKind::Constant, begin);
        c->aux = "Ellipsis";
        c->text = "...";
        return done(std::move(c));
      }
      fail("unexpected '" + std::string(t.text) + "'");
    }
    if (t.type == Tok::Number) {
      auto c = node(NodeKind::Constant, begin);
      c->aux = "num";
      c->text = std::string(next().text);
      return done(std::move(c));
    }
    if (t.type == Tok::String) return strings();
    if (t.type == Tok::Name) {
      if (t.text == "None" || t.text == "True" || t.text == "False") {
        auto c = node(NodeKind::Constant, begin);
        c->aux = std::string(t.text);
        c->text = std::string(next().text);
        return done(std::move(c));
      }
      if (is_keyword(t.text)) fail("unexpected keyword '" + std::string(t.text) + "'");
      auto n = node(NodeKind::Name, begin);
      n->text = std::string(next().text);
      return done(std::move(n));
    }
    fail("unexpected end of input");
  }

  NodePtr brace_atom() {
    const auto begin = next().begin;
    if (accept_op("}")) return done(node(NodeKind::Dict, begin));
    // Dict display or comprehension
    if (at_op("**")) return dict_rest(begin, nullptr);
    auto first = at_op("*") ? star_expr() : namedexpr_test();
    if (at_op(":")) {
      next();
      auto value = test();
      if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
        auto c = comprehension(NodeKind::DictComp, std::move(first), std::move(value));
        expect_op("}");
        c->begin = begin;
        c->loc = lines_.at(begin);
        return done(std::move(c));
      }
      auto entry = wrap(NodeKind::DictEntry, std::move(first));
      entry->kids.push_back(std::move(value));
      return dict_rest(begin, done(std::move(entry)));
    }
    if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
      auto c = comprehension(NodeKind::SetComp, std::move(first));
      expect_op("}");
      c->begin = begin;
      c->loc = lines_.at(begin);
      return done(std::move(c));
    }
    auto set = node(NodeKind::Set, begin);
    set->kids.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_op("}")) break;
      set->kids.push_back(at_op("*") ? star_expr() : namedexpr_test());
    }
    expect_op("}");
    return done(std::move(set));
  }

  NodePtr dict_rest(std::size_t begin, NodePtr first) {
    auto d = node(NodeKind::Dict, begin);
    bool need_comma = false;
    if (first) {
      d->kids.push_back(std::move(first));
      need_comma = true;
    }
    while (true) {
      if (need_comma && !accept_op(",")) break;
      if (at_op("}")) break;
      if (at_op("**")) {
        const auto b = next().begin;
        auto ds = node(NodeKind::DoubleStarred, b);
        ds->kids.push_back(expr());
        d->kids.push_back(done(std::move(ds)));
      } else {
        auto key = test();
        expect_op(":");
        auto entry = wrap(NodeKind::DictEntry, std::move(key));
        entry->kids.push_back(test());
        d->kids.push_back(done(std::move(entry)));
      }
      need_comma = true;
    }
    expect_op("}");
    return done(std::move(d));
  }

  // ---- string literals ----
  NodePtr strings() {
    const auto begin = peek().begin;
    std::vector<NodePtr> parts;
    std::string literal;
    bool fstring = false, bytes = false;
    const std::function<void(std::size_t)> flush = [&](std::size_t at) {
      if (literal.empty()) return;
      auto c = node(NodeKind::Constant, at);
      c->aux = "str";
      c->text = std::move(literal);
      c->end = at;
      parts.push_back(std::move(c));
      literal.clear();
    };
    while (at(Tok::String)) {
      const Token& t = next();
      const auto sp = split_string(src_, t);
      const bool raw = sp.prefix.find('r') != std::string::npos;
      if (sp.prefix.find('b') != std::string::npos) bytes = true;
      if (sp.prefix.find('f') != std::string::npos) {
        fstring = true;
        fstring_parts(sp.body_begin, sp.body_end, raw, parts, literal, flush, 0);
      } else {
        const auto body = src_.substr(sp.body_begin, sp.body_end - sp.body_begin);
        literal += raw ? std::string(body) : decode_escapes(body, bytes);
      }
    }
    if (!fstring) {
      auto c = node(NodeKind::Constant, begin);
      c->aux = bytes ? "bytes" : "str";
      c->text = std::move(literal);
      return done(std::move(c));
    }
    flush(prev_end_);
    auto j = node(NodeKind::JoinedStr, begin);
    j->kids = std::move(parts);
    return done(std::move(j));
  }

  // End of a replacement field's expression: the first top-level `}`, `:`,
  // `!` (not `!=`) or `=` debug marker.
  std::size_t field_expr_end(std::size_t i, std::size_t end) const {
    int depth = 0;
    char quote = 0;
    for (; i < end; ++i) {
      const char c = src_[i];
      if (quote) {
        if (c == '\\') ++i;
        else if (c == quote) quote = 0;
        continue;
      }
      if (c == '\'' || c == '"') quote = c;
      else if (c == '(' || c == '[' || c == '{') ++depth;
      else if ((c == ')' || c == ']' || c == '}') && depth > 0) --depth;
      else if (depth == 0) {
        if (c == '}' || c == ':') return i;
        if (c == '!' && (i + 1 >= end || src_[i + 1] != '=')) return i;
        if (c == '=' && (i + 1 >= end || src_[i + 1] != '=') && i > 0 &&
            std::string_view("=!<>:").find(src_[i - 1]) == std::string_view::npos) {
          return i;
        }
        if ((c == '=' || c == '!' || c == '<' || c == '>') && i + 1 < end && src_[i + 1] == '=') ++i;
      }
    }
    throw SyntaxFailure{"unterminated f-string replacement field", i};
  }

  void fstring_parts(std::size_t i, std::size_t end, bool raw, std::vector<NodePtr>& parts, std::string& literal,
                     const std::function<void(std::size_t)>& flush, int depth) {
    if (depth > 2) throw SyntaxFailure{"f-string format spec nested too deeply", i};
    std::size_t seg = i;
    const auto take_segment = [&](std::size_t upto) {
      const auto body = src_.substr(seg, upto - seg);
      literal += raw ? std::string(body) : decode_escapes(body, false);
    };
    while (i < end) {
      const char c = src_[i];
      if (c == '\\' && !raw) {
        if (i + 2 < end && src_[i + 1] == 'N' && src_[i + 2] == '{') {
          while (i < end && src_[i] != '}') ++i;
          ++i;
        } else {
          i += 2;
        }
        continue;
      }
      if (c == '{' || c == '}') {
        take_segment(i);
        if (i + 1 < end && src_[i + 1] == c) {
          literal.push_back(c);
          i += 2;
          seg = i;
          continue;
        }
        if (c == '}') throw SyntaxFailure{"single '}' in f-string", i};
        flush(i);
        const auto field_begin = i;
        const auto expr_begin = i + 1;
        const auto expr_end = field_expr_end(expr_begin, end);
        auto fv = node(NodeKind::FormattedValue, field_begin);
        {
          Parser sub(src_, lines_, detail::tokenize(src_, expr_begin, expr_end, true));
          fv->kids.push_back(sub.field_expression());
        }
        i = expr_end;
        if (i < end && src_[i] == '=') {
          ++i;
          while (i < end && (src_[i] == ' ' || src_[i] == '\t' || src_[i] == '\n')) ++i;
        }
        if (i < end && src_[i] == '!') {
          fv->aux = std::string(1, i + 1 < end ? src_[i + 1] : '?');
          i += 2;
        }
        if (i < end && src_[i] == ':') {
          ++i;
          // The format spec runs to the matching `}` and may hold fields.
          int d = 0;
          std::size_t j = i;
          for (; j < end; ++j) {
            if (src_[j] == '{') ++d;
            else if (src_[j] == '}') {
              if (d == 0) break;
              --d;
            }
          }
          auto spec = node(NodeKind::JoinedStr, i);
          std::string spec_literal;
          std::vector<NodePtr> spec_parts;
          const std::function<void(std::size_t)> spec_flush = [&](std::size_t at) {
            if (spec_literal.empty()) return;
            auto k = node(NodeKind::Constant, at);
            k->aux = "str";
            k->text = std::move(spec_literal);
            k->end = at;
            spec_parts.push_back(std::move(k));
            spec_literal.clear();
          };
          fstring_parts(i, j, raw, spec_parts, spec_literal, spec_flush, depth + 1);
          spec_flush(j);
          spec->kids = std::move(spec_parts);
          spec->end = j;
          fv->kids.push_back(std::move(spec));
          i = j;
        } else {
          fv->kids.push_back(nullptr);
        }
        if (i >= end || src_[i] != '}') throw SyntaxFailure{"expected '}' in f-string", i};
        ++i;
        fv->end = i;
        parts.push_back(std::move(fv));
        seg = i;
        continue;
      }
      ++i;
    }
    take_segment(std::min(i, end));
  }

  std::string_view src_;
  const LineTable& lines_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t prev_end_ = 0;
  int depth_ = 0;
};

}  // namespace

PyAst parse_python(std::string_view source) {
  PyAst ast;
  ast.source = utf8_lossy(as_bytes(source));
  std::string_view src = ast.source;
  std::size_t start = 0;
  if (src.starts_with("\xEF\xBB\xBF")) start = 3;
  const LineTable lines(src);
  try {
    Parser p(src, lines, detail::tokenize(src, start, src.size(), false));
    ast.root = p.file();
  } catch (const SyntaxFailure& e) {
    ast.root.reset();
    ast.error = ParseError{e.message, lines.at(std::min(e.offset, src.size()))};
  }
  return ast;
}

void walk(const Node& root, const std::function<bool(const Node&)>& fn) {
  std::vector<const Node*> stack{&root};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!fn(*n)) continue;
    for (auto it = n->kids.rbegin(); it != n->kids.rend(); ++it) {
      if (*it) stack.push_back(it->get());
    }
  }
}

std::string dump(const Node& n) {
  std::string out = "(" + std::string(node_kind_name(n.kind));
  if (!n.text.empty()) out += " " + n.text;
  if (!n.aux.empty()) out += " :" + n.aux;
  for (const auto& k : n.kids) out += k ? " " + dump(*k) : " _";
  return out + ")";
}

}  // namespace hubscan::python
