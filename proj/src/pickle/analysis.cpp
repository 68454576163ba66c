#include "hubscan/pickle/analysis.hpp"

#include <algorithm>
#include <set>

namespace hubscan::pickle {

bool is_unsafe_opcode(Opcode op) { return !unsafe_opcode_description(op).empty(); }

std::string_view unsafe_opcode_description(Opcode op) {
  switch (op) {
    case Opcode::REDUCE: return "calls a callable with an argument tuple";
    case Opcode::GLOBAL: return "imports a named module attribute";
    case Opcode::STACK_GLOBAL: return "imports a module attribute named by stack operands";
    case Opcode::OBJ: return "instantiates a class taken from the marked operands";
    case Opcode::INST: return "imports a class and instantiates it";
    case Opcode::NEWOBJ: return "creates an object through cls.__new__";
    case Opcode::NEWOBJ_EX: return "creates an object through cls.__new__ with keyword arguments";
    default: return {};
  }
}

std::vector<UnsafeOpcodeHit> find_unsafe_opcodes(const std::vector<PickleInstruction>& instrs) {
  std::vector<UnsafeOpcodeHit> hits;
  for (const auto& in : instrs) {
    const auto desc = unsafe_opcode_description(in.opcode);
    if (!desc.empty()) hits.push_back({in, in.opcode, desc});
  }
  return hits;
}

std::string_view snippet_origin_name(SnippetOrigin o) {
  switch (o) {
    case SnippetOrigin::Pickle: return "Pickle";
    case SnippetOrigin::KerasLambda: return "KerasLambda";
    case SnippetOrigin::TfOperator: return "TfOperator";
  }
  return "Pickle";
}

const std::vector<std::string>& default_model_unsafe_callees() {
  static const std::vector<std::string> kCallees{
      "builtins.exec",   "builtins.eval", "builtins.compile", "builtins.getattr", "runpy._run_code",
      "os.system",       "posix.system",  "nt.system",        "subprocess.*",     "webbrowser.open",
      "operator.attrgetter",
  };
  return kCallees;
}

std::string canonical_global(std::string_view module, std::string_view name) {
  std::string m(module == "__builtin__" ? "builtins" : module);
  if (name.empty()) return m;
  return m + "." + std::string(name);
}

bool callee_matches(std::string_view dotted, const std::vector<std::string>& patterns) {
  for (const auto& p : patterns) {
    if (p.size() >= 2 && p.ends_with(".*")) {
      const std::string_view prefix(p.data(), p.size() - 1);  // keeps the dot
      if (dotted.size() > prefix.size() && dotted.starts_with(prefix)) return true;
    } else if (dotted == p) {
      return true;
    }
  }
  return false;
}

namespace {

const std::string* string_literal(const LiftResult& result, const ValuePtr& v) {
  const auto r = resolve(result, v);
  if (!r || r->kind != ValueKind::Literal) return nullptr;
  return std::get_if<std::string>(&r->literal);
}

// The string-literal first argument of a call to `fn`, e.g.
// __import__("os") -> "os".
std::string builtin_call_target(const LiftResult& result, const SymbolicValue& call, std::string_view fn) {
  const auto f = resolve(result, call.callee);
  if (!f || f->kind != ValueKind::SymbolRef || f->dynamic || canonical_global(f->module, f->name) != fn) return {};
  if (call.items.empty()) return {};
  const auto* s = string_literal(result, call.items[0]);
  return s ? *s : std::string{};
}

}  // namespace

std::string callee_path(const LiftResult& result, const ValuePtr& callee) {
  const auto c = resolve(result, callee);
  if (!c) return {};
  if (c->kind == ValueKind::SymbolRef) {
    if (c->dynamic || c->module.empty() || c->name.empty()) return {};
    return canonical_global(c->module, c->name);
  }
  if (c->kind != ValueKind::Call || c->items.size() != 2) return {};
  const auto fn = resolve(result, c->callee);
  if (!fn || fn->kind != ValueKind::SymbolRef || fn->dynamic ||
      canonical_global(fn->module, fn->name) != "builtins.getattr") {
    return {};
  }
  const auto* attr = string_literal(result, c->items[1]);
  if (attr == nullptr || attr->empty()) return {};
  const auto base = resolve(result, c->items[0]);
  if (!base) return {};
  std::string base_path;
  if (base->kind == ValueKind::SymbolRef && !base->dynamic) {
    base_path = canonical_global(base->module, base->name);
  } else if (base->kind == ValueKind::Call) {
    base_path = builtin_call_target(result, *base, "builtins.__import__");
  }
  if (base_path.empty()) return {};
  return base_path + "." + *attr;
}

std::vector<SuspiciousSnippet> extract_snippets(const LiftResult& result, const std::vector<std::string>& patterns) {
  std::vector<SuspiciousSnippet> out;
  for_each_node(result, [&](const SymbolicValue& n) {
    if (n.kind != ValueKind::Call && n.kind != ValueKind::Instance) return;
    auto path = callee_path(result, n.callee);
    if (path.empty() || !callee_matches(path, patterns)) return;
    SuspiciousSnippet s;
    s.callee = std::move(path);
    s.source_offset = n.offset;
    for (const auto& a : n.items) {
      const auto v = resolve(result, a);
      const std::string* text = nullptr;
      if (v && v->kind == ValueKind::Literal) text = std::get_if<std::string>(&v->literal);
      if (text) s.arg_strings.push_back(*text);
      else ++s.non_string_args;
    }
    out.push_back(std::move(s));
  });
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.source_offset < b.source_offset; });
  return out;
}

std::vector<std::string> symbol_refs(const LiftResult& result) {
  std::set<std::string> refs;
  for_each_node(result, [&](const SymbolicValue& n) {
    if (n.kind == ValueKind::SymbolRef && !n.dynamic) refs.insert(n.module + " " + n.name);
  });
  return {refs.begin(), refs.end()};
}

}  // namespace hubscan::pickle
