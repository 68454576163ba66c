#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hubscan/common.hpp"
#include "hubscan/python/ast.hpp"
#include "hubscan/script/api_table.hpp"

namespace hubscan::script {

struct ImportMap {
  std::map<std::string, std::string> aliases;  // local name -> canonical dotted path
  std::vector<std::string> star_imports;       // modules, in import order

  std::optional<std::string> lookup(std::string_view name) const;
};

// Every binding made by an import statement anywhere in the file. Degraded
// ASTs are handled by scanning import lines with regular expressions.
ImportMap collect_imports(const python::PyAst& ast);

// Strips `builtins.` / `__builtin__.` / `__builtins__.` so builtins match by
// their bare name.
std::string canonicalize(std::string_view path);

// A load-context Name, Attribute or Call expression with a resolved canonical
// path. `call` is the Call whose callee the expression is, if any.
struct Reference {
  const python::Node* node = nullptr;
  std::string path;
  const python::Node* call = nullptr;
};

// Resolves references in source order. Resolution order for a bare name:
// simple assignment aliases seen so far, imports, star-imported table members,
// then the name itself (builtins). `getattr(x, "lit")`, `__import__("m")` and
// `importlib.import_module("m")` resolve when their string arguments are
// literals. An attribute on an object created by calling `a.b.C(...)` resolves
// as `a.b.<attr>`.
std::vector<Reference> resolve_references(const python::PyAst& ast, const ImportMap& imports, const ApiTable& table);

struct UnsafeApiFinding {
  std::string api;  // canonical path, never the local alias
  ApiCategory category = ApiCategory::BuiltinFunctions;
  Severity severity = Severity::Low;
  int line = 0;
  int column = 0;            // 1-based byte column
  std::string call_snippet;  // at most 200 bytes
  bool degraded = false;     // found by the regex fallback
};

inline constexpr std::size_t kMaxSnippet = 200;

// One finding per distinct (api, line, column) reference that matches the
// table, sorted by location. Degraded ASTs go through regex_scan.
std::vector<UnsafeApiFinding> find_unsafe_api_calls(const python::PyAst& ast, const ImportMap& imports,
                                                    const ApiTable& table);

// Regex-only scan for sources that do not parse: dotted names outside
// strings and comments, resolved through import lines.
std::vector<UnsafeApiFinding> regex_scan(std::string_view source, const ApiTable& table);

// Collapses whitespace runs and truncates to kMaxSnippet bytes on a UTF-8
// boundary.
std::string make_snippet(std::string_view text);

}  // namespace hubscan::script
