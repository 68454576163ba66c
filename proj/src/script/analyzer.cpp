#include "hubscan/script/analyzer.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <tuple>

#include "imports.hpp"

namespace hubscan::script {

using python::Node;
using python::NodeKind;

namespace {

// Python 3.10 builtins plus the Python 2 names scripts still use.
constexpr std::array<std::string_view, 81> kBuiltins{
    "__build_class__", "__builtins__", "__import__", "abs", "aiter", "all", "anext", "any", "ascii", "bin", "bool",
    "breakpoint", "bytearray", "bytes", "callable", "chr", "classmethod", "compile", "complex", "copyright", "credits",
    "delattr", "dict", "dir", "divmod", "enumerate", "eval", "exec", "execfile", "exit", "filter", "float", "format",
    "frozenset", "getattr", "globals", "hasattr", "hash", "help", "hex", "id", "input", "int", "isinstance",
    "issubclass", "iter", "len", "license", "list", "locals", "map", "max", "memoryview", "min", "next", "object", "oct",
    "open", "ord", "pow", "print", "property", "quit", "range", "raw_input", "reload", "repr", "reversed", "round",
    "set", "setattr", "slice", "sorted", "staticmethod", "str", "sum", "super", "tuple", "type", "vars", "zip"};

bool is_builtin(std::string_view name) {
  return std::find(kBuiltins.begin(), kBuiltins.end(), name) != kBuiltins.end();
}

std::string parent_path(std::string_view p) {
  const auto dot = p.rfind('.');
  return dot == std::string_view::npos ? std::string() : std::string(p.substr(0, dot));
}

const Node* string_arg(const Node& call, std::size_t i) {
  const Node* a = call.kid(i + 1);
  return a && a->kind == NodeKind::Constant && a->aux == "str" ? a : nullptr;
}

// What an expression denotes: a module-level symbol, or an object created by
// calling a symbol (`path` is then the owning module or class path).
struct Value {
  enum Kind { Unknown, Symbol, Instance } kind = Unknown;
  std::string path;
};

class Resolver {
 public:
  Resolver(const ImportMap& imports, const ApiTable& table) : imports_(imports), table_(table) {}

  std::vector<Reference> run(const Node& root) {
    visit(root, nullptr);
    return std::move(refs_);
  }

 private:
  Value eval(const Node& n) const {
    switch (n.kind) {
      case NodeKind::Name: return eval_name(n.text);
      case NodeKind::Attribute: {
        const auto base = eval(*n.kid(0));
        if (base.kind == Value::Unknown || base.path.empty()) return {};
        return {Value::Symbol, canonicalize(base.path + "." + n.text)};
      }
      case NodeKind::Call: return eval_call(n);
      default: return {};
    }
  }

  Value eval_name(const std::string& name) const {
    if (const auto it = bound_.find(name); it != bound_.end()) return it->second;
    if (auto p = imports_.lookup(name)) return {Value::Symbol, canonicalize(*p)};
    for (const auto& m : imports_.star_imports) {
      if (table_.match(m + "." + name)) return {Value::Symbol, m + "." + name};
    }
    if (is_builtin(name)) return {Value::Symbol, name == "__builtins__" ? "builtins" : name};
    return {};
  }

  Value eval_call(const Node& call) const {
    const auto f = eval(*call.kid(0));
    if (f.kind == Value::Symbol) {
      if (f.path == "getattr") {
        if (const Node* lit = string_arg(call, 1); lit && call.kid(1)) {
          const auto base = eval(*call.kid(1));
          if (base.kind != Value::Unknown && !base.path.empty()) {
            return {Value::Symbol, canonicalize(base.path + "." + lit->text)};
          }
        }
        return {};
      }
      if (f.path == "__import__" || f.path == "importlib.import_module") {
        if (const Node* lit = string_arg(call, 0)) {
          auto mod = lit->text;
          if (f.path == "__import__") mod = mod.substr(0, mod.find('.'));
          if (!mod.empty()) return {Value::Symbol, canonicalize(mod)};
        }
        return {};
      }
      auto owner = parent_path(f.path);
      if (owner.empty()) return {};
      return {Value::Instance, std::move(owner)};
    }
    return {};
  }

  void record(const Node& n, const Node* call) {
    if (n.kind != NodeKind::Name && n.kind != NodeKind::Attribute && n.kind != NodeKind::Call) return;
    auto v = eval(n);
    if (v.kind == Value::Symbol) refs_.push_back({&n, std::move(v.path), call});
  }

  void bind(const Node& target, const Node* value) {
    if (target.kind == NodeKind::Name) {
      Value v = value ? eval(*value) : Value{};
      if (v.kind == Value::Unknown) bound_.erase(target.text);
      else bound_[target.text] = std::move(v);
      return;
    }
    if (target.kind == NodeKind::Tuple || target.kind == NodeKind::List) {
      const bool paired = value && (value->kind == NodeKind::Tuple || value->kind == NodeKind::List) &&
                          value->kids.size() == target.kids.size();
      for (std::size_t i = 0; i < target.kids.size(); ++i) {
        if (target.kids[i]) bind(*target.kids[i], paired ? value->kids[i].get() : nullptr);
      }
      return;
    }
    if (target.kind == NodeKind::Starred && target.kid(0)) bind(*target.kid(0), nullptr);
  }

  // Assignment targets: names are not references, but the objects that
  // attributes and subscripts are taken from are.
  void visit_store(const Node& n) {
    switch (n.kind) {
      case NodeKind::Name: return;
      case NodeKind::Attribute: visit(*n.kid(0), nullptr); return;
      case NodeKind::Tuple:
      case NodeKind::List:
      case NodeKind::Starred:
        for (const auto& k : n.kids) {
          if (k) visit_store(*k);
        }
        return;
      default: visit(n, nullptr);
    }
  }

  void visit_kids(const Node& n, std::size_t from = 0) {
    for (std::size_t i = from; i < n.kids.size(); ++i) {
      if (n.kids[i]) visit(*n.kids[i], nullptr);
    }
  }

  void visit(const Node& n, const Node* call) {
    switch (n.kind) {
      case NodeKind::Assign: {
        const Node& value = *n.kids.back();
        visit(value, nullptr);
        for (std::size_t i = 0; i + 1 < n.kids.size(); ++i) visit_store(*n.kids[i]);
        for (std::size_t i = 0; i + 1 < n.kids.size(); ++i) bind(*n.kids[i], &value);
        return;
      }
      case NodeKind::AnnAssign:
        if (n.kid(2)) visit(*n.kid(2), nullptr);
        visit(*n.kid(1), nullptr);
        visit_store(*n.kid(0));
        if (n.kid(2)) bind(*n.kid(0), n.kid(2));
        return;
      case NodeKind::AugAssign:
        visit(*n.kid(1), nullptr);
        if (n.kid(0)->kind == NodeKind::Name) bound_.erase(n.kid(0)->text);
        else visit_store(*n.kid(0));
        return;
      case NodeKind::NamedExpr:
        visit(*n.kid(1), nullptr);
        bind(*n.kid(0), n.kid(1));
        return;
      case NodeKind::For:
        visit(*n.kid(1), nullptr);
        visit_store(*n.kid(0));
        bind(*n.kid(0), nullptr);
        visit_kids(n, 2);
        return;
      case NodeKind::Comprehension:
        visit(*n.kid(1), nullptr);
        visit_store(*n.kid(0));
        bind(*n.kid(0), nullptr);
        visit_kids(n, 2);
        return;
      case NodeKind::WithItem:
        visit(*n.kid(0), nullptr);
        if (n.kid(1)) {
          visit_store(*n.kid(1));
          bind(*n.kid(1), n.kid(0));
        }
        return;
      case NodeKind::Import:
      case NodeKind::ImportFrom:
        for (const auto& a : n.kids) {
          if (a->text == "*") continue;
          const auto& local = !a->aux.empty() ? a->aux : a->text.substr(0, a->text.find('.'));
          bound_.erase(local);
        }
        return;
      case NodeKind::Global:
      case NodeKind::Nonlocal:
        return;
      case NodeKind::Call:
        record(n, call);
        visit(*n.kid(0), &n);
        visit_kids(n, 1);
        return;
      case NodeKind::Name:
      case NodeKind::Attribute:
        record(n, call);
        visit_kids(n);
        return;
      default:
        visit_kids(n);
    }
  }

  const ImportMap& imports_;
  const ApiTable& table_;
  std::map<std::string, Value> bound_;
  std::vector<Reference> refs_;
};

}  // namespace

std::optional<std::string> ImportMap::lookup(std::string_view name) const {
  const auto it = aliases.find(std::string(name));
  if (it == aliases.end()) return std::nullopt;
  return it->second;
}

std::string canonicalize(std::string_view path) {
  for (std::string_view prefix : {"builtins.", "__builtin__.", "__builtins__."}) {
    if (path.starts_with(prefix)) return std::string(path.substr(prefix.size()));
  }
  return std::string(path);
}

ImportMap collect_imports(const python::PyAst& ast) {
  if (ast.degraded()) return detail::scan_import_lines(ast.source);
  ImportMap map;
  python::walk(*ast.root, [&](const Node& n) {
    if (n.kind == NodeKind::Import) {
      for (const auto& a : n.kids) {
        if (!a->aux.empty()) {
          map.aliases[a->aux] = a->text;
        } else {
          const auto top = a->text.substr(0, a->text.find('.'));
          map.aliases[top] = top;
        }
      }
    } else if (n.kind == NodeKind::ImportFrom) {
      for (const auto& a : n.kids) {
        if (a->text == "*") {
          if (std::find(map.star_imports.begin(), map.star_imports.end(), n.text) == map.star_imports.end()) {
            map.star_imports.push_back(n.text);
          }
          continue;
        }
        const auto local = a->aux.empty() ? a->text : a->aux;
        map.aliases[local] = n.text.empty() || n.text.back() == '.' ? n.text + a->text : n.text + "." + a->text;
      }
    }
    return true;
  });
  return map;
}

std::vector<Reference> resolve_references(const python::PyAst& ast, const ImportMap& imports, const ApiTable& table) {
  if (ast.degraded()) return {};
  return Resolver(imports, table).run(*ast.root);
}

std::string make_snippet(std::string_view text) {
  std::string out;
  bool space = false;
  for (const char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f') {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  if (out.size() > kMaxSnippet) {
    std::size_t cut = kMaxSnippet;
    while (cut > 0 && (static_cast<unsigned char>(out[cut]) & 0xC0) == 0x80) --cut;
    out.resize(cut);
  }
  return out;
}

std::vector<UnsafeApiFinding> find_unsafe_api_calls(const python::PyAst& ast, const ImportMap& imports,
                                                    const ApiTable& table) {
  if (ast.degraded()) return regex_scan(ast.source, table);
  std::vector<UnsafeApiFinding> out;
  std::set<std::tuple<std::string, int, int>> seen;
  for (const auto& ref : resolve_references(ast, imports, table)) {
    const ApiEntry* e = table.match(ref.path);
    if (!e) continue;
    const auto loc = ast.location(*ref.node);
    if (!seen.emplace(ref.path, loc.line, loc.column).second) continue;
    UnsafeApiFinding f;
    f.api = ref.path;
    f.category = e->category;
    f.severity = e->severity;
    f.line = loc.line;
    f.column = loc.column;
    f.call_snippet = make_snippet(ast.text_of(ref.call ? *ref.call : *ref.node));
    out.push_back(std::move(f));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.line, a.column, a.api) < std::tie(b.line, b.column, b.api);
  });
  return out;
}

}  // namespace hubscan::script
