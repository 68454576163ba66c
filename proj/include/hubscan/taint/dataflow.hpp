#pragma once

#include <string>
#include <vector>

#include "hubscan/common.hpp"
#include "hubscan/python/ast.hpp"
#include "hubscan/script/api_table.hpp"

namespace hubscan::taint {

enum class DfKind {
  Def,      // a variable binding (assignment, loop target, write-through)
  Param,    // a function parameter
  Return,   // the values a function returns or yields
  Call,     // the result of a call
  Ref,      // a read of an unsafe-API table symbol that is not called, e.g. os.environ
  Literal,  // a string, bytes or f-string literal
  Arg,      // one argument of a call with a resolved callee
  Field,    // an attribute of `self` shared by the methods of a class
};

std::string_view df_kind_name(DfKind k);

struct DfNode {
  DfKind kind = DfKind::Def;
  std::string label;  // variable, parameter, argument ("arg0", "kw:data", "*"), or literal excerpt
  std::string api;    // canonical callee path for Call and Arg, symbol path for Ref
  std::string scope;  // qualified function name, "<module>" at top level, class name for Field
  SourceLoc loc;      // Arg nodes carry the location of their call
  std::size_t begin = 0;  // byte span of the AST node in PyAst::source
  std::size_t end = 0;
};

struct DfEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  bool call = false;  // argument-to-parameter or return-to-call-site binding

  friend bool operator==(const DfEdge&, const DfEdge&) = default;
  friend auto operator<=>(const DfEdge&, const DfEdge&) = default;
};

struct DefUseGraph {
  std::vector<DfNode> nodes;
  std::vector<DfEdge> edges;                   // sorted, unique by (from, to)
  std::vector<std::vector<std::size_t>> succ;  // node -> successor nodes, ascending
  std::vector<std::vector<std::size_t>> pred;  // node -> predecessor nodes, ascending

  bool has_edge(std::size_t from, std::size_t to) const;
  const DfEdge* edge(std::size_t from, std::size_t to) const;
};

inline constexpr std::string_view kModuleScope = "<module>";

// Flow-sensitive def-use graph of a parsed script. Names are resolved through
// the file's imports; reads of names that are not bound yet fall back to every
// binding of the name in the enclosing scopes. Calls to functions and classes
// defined in the same file bind arguments to parameters and the callee's
// returns to the call result, one call level per edge. A degraded AST yields
// an empty graph.
DefUseGraph build_dataflow(const python::PyAst& ast, const script::ApiTable& table = script::ApiTable::builtin());

}  // namespace hubscan::taint
