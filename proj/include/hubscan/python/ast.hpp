#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hubscan/common.hpp"

namespace hubscan::python {

enum class NodeKind {
  // Statements
  Module,
  Block,  // text: "" for a body, "else" / "finally" for those Try clauses
  FunctionDef,
  ClassDef,
  DecoratorList,
  Arguments,
  Arg,
  Return,
  Delete,
  Assign,
  AugAssign,
  AnnAssign,
  For,
  While,
  If,
  With,
  WithItem,
  Match,
  MatchCase,
  Raise,
  Try,
  ExceptHandler,
  Assert,
  Import,
  ImportFrom,
  Alias,
  Global,
  Nonlocal,
  Expr,
  Pass,
  Break,
  Continue,
  // Expressions
  BoolOp,
  NamedExpr,
  BinOp,
  UnaryOp,
  Compare,
  Lambda,
  IfExp,
  Dict,
  DictEntry,
  Set,
  List,
  Tuple,
  ListComp,
  SetComp,
  DictComp,
  GeneratorExp,
  Comprehension,
  Await,
  Yield,
  YieldFrom,
  Call,
  Keyword,
  Attribute,
  Subscript,
  Slice,
  Starred,
  DoubleStarred,
  Name,
  Constant,
  JoinedStr,
  FormattedValue,
  MatchClass,  // class pattern in a case clause, laid out like Call
};

std::string_view node_kind_name(NodeKind k);

struct Node;
using NodePtr = std::unique_ptr<Node>;

// Child layout per kind (null entries mark absent optional parts):
//   Module/Block: statements
//   FunctionDef(text=name, flag=async): [DecoratorList, Arguments, returns?, Block]
//   ClassDef(text=name): [DecoratorList, bases and Keywords..., Block] (Block is last)
//   Arguments: Arg...; Arg(text=name, aux=""|"*"|"**"|"kwonly"|"posonly"): [annotation?, default?]
//   Return/Yield: [value?]; Delete/Global/Nonlocal: targets or Names
//   Assign: [target..., value]; AugAssign(text=op): [target, value]
//   AnnAssign: [target, annotation, value?]
//   For(flag=async): [target, iter, Block, orelse?]; While/If: [test, Block, orelse?]
//   With(flag=async): [WithItem..., Block]; WithItem: [context, target?]
//   Match: [subject, MatchCase...]; MatchCase: [pattern, guard?, Block]
//   Raise: [exc?, cause?]; Assert: [test, msg?]
//   Try: [Block, ExceptHandler..., Block("else")?, Block("finally")?]
//   ExceptHandler(text=bound name): [type?, Block]
//   Import: Alias(text=dotted module, aux=asname)...
//   ImportFrom(text=module with leading dots): Alias(text=name or "*", aux=asname)...
//   Expr: [value]
//   BoolOp(text=and|or), BinOp(text=op): operands; UnaryOp(text=op): [operand]
//   Compare(text=space separated ops): [left, comparators...]
//   NamedExpr: [Name, value]; Lambda: [Arguments, body]; IfExp: [test, body, orelse]
//   Dict: DictEntry[key, value] or DoubleStarred[value]...; Set/List/Tuple: elements
//   ListComp/SetComp/GeneratorExp: [elt, Comprehension...]; DictComp: [key, value, Comprehension...]
//   Comprehension(flag=async): [target, iter, conditions...]
//   Call: [func, args...] where args are exprs, Starred, Keyword(text=name)[value], DoubleStarred[value]
//   Attribute(text=attr): [value]; Subscript: [value, slice]; Slice: [lower?, upper?, step?]
//   Name(text=id); Constant(text=decoded value, aux=str|bytes|num|None|True|False|Ellipsis)
//   JoinedStr: Constant and FormattedValue[value, format_spec?] parts
struct Node {
  NodeKind kind = NodeKind::Pass;
  std::string text;
  std::string aux;
  bool flag = false;
  SourceLoc loc;           // 1-based line and 1-based byte column of the first token
  std::size_t begin = 0;   // byte span in the source
  std::size_t end = 0;
  std::vector<NodePtr> kids;

  const Node* kid(std::size_t i) const { return i < kids.size() ? kids[i].get() : nullptr; }
};

struct ParseError {
  std::string message;
  SourceLoc loc;
};

struct PyAst {
  std::string source;  // UTF-8 (lossy-decoded input)
  NodePtr root;        // Module; null when degraded
  std::optional<ParseError> error;

  bool degraded() const { return root == nullptr; }
  // (line, column) of a node; the source map is carried by the nodes.
  SourceLoc location(const Node& n) const { return n.loc; }
  std::string_view text_of(const Node& n) const;
};

// Python 3 parser (3.10-era grammar, including match statements, walrus,
// positional-only parameters and f-strings). A syntax error leaves root
// null and records the error; callers switch to a regex scan.
PyAst parse_python(std::string_view source);

// Pre-order traversal; `fn` returning false skips the node's children.
void walk(const Node& root, const std::function<bool(const Node&)>& fn);

// Compact S-expression dump used by tests.
std::string dump(const Node& n);

}  // namespace hubscan::python
