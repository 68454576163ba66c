#include "hubscan/taint/dataflow.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <tuple>
#include <unordered_map>

#include "hubscan/script/analyzer.hpp"

namespace hubscan::taint {

using python::Node;
using python::NodeKind;

std::string_view df_kind_name(DfKind k) {
  switch (k) {
    case DfKind::Def: return "def";
    case DfKind::Param: return "param";
    case DfKind::Return: return "return";
    case DfKind::Call: return "call";
    case DfKind::Ref: return "ref";
    case DfKind::Literal: return "literal";
    case DfKind::Arg: return "arg";
    case DfKind::Field: return "field";
  }
  return "?";
}

bool DefUseGraph::has_edge(std::size_t from, std::size_t to) const { return edge(from, to) != nullptr; }

const DfEdge* DefUseGraph::edge(std::size_t from, std::size_t to) const {
  const DfEdge probe{from, to, false};
  auto it = std::lower_bound(edges.begin(), edges.end(), probe,
                             [](const DfEdge& a, const DfEdge& b) { return std::tie(a.from, a.to) < std::tie(b.from, b.to); });
  if (it == edges.end() || it->from != from || it->to != to) return nullptr;
  return &*it;
}

namespace {

using Deps = std::set<std::size_t>;
using Env = std::map<std::string, Deps>;

void unite(Deps& into, const Deps& from) { into.insert(from.begin(), from.end()); }

void merge(Env& into, const Env& from) {
  for (const auto& [k, v] : from) unite(into[k], v);
}

struct Scope {
  enum Kind { Module, Function, Class } kind = Module;
  std::string name;
  const Node* node = nullptr;
  Scope* parent = nullptr;
  std::map<std::string, Deps> all_defs;
  std::set<std::string> globals, nonlocals;
  std::map<std::string, Scope*> functions;  // defs made directly in this scope
  std::map<std::string, Scope*> classes;
  std::string self_name;                    // methods: name of the first parameter
  Scope* cls = nullptr;                     // methods: the owning class
};

bool has_decorator(const Node& def, std::string_view name) {
  const Node* decos = def.kid(0);
  if (!decos) return false;
  return std::any_of(decos->kids.begin(), decos->kids.end(),
                     [&](const auto& d) { return d && d->kind == NodeKind::Name && d->text == name; });
}

std::string excerpt(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (out.size() >= 40) {
      out += "...";
      break;
    }
    out += (c == '\n' || c == '\r' || c == '\t') ? ' ' : c;
  }
  return out;
}

class Builder {
 public:
  Builder(const python::PyAst& ast, const script::ApiTable& table) : ast_(ast), table_(table) {
    const auto imports = script::collect_imports(ast);
    for (auto& r : script::resolve_references(ast, imports, table)) resolved_.emplace(r.node, std::move(r.path));
  }

  DefUseGraph run() {
    auto& module = scopes_.emplace_back();
    module.kind = Scope::Module;
    module.name = std::string(kModuleScope);
    module.node = ast_.root.get();
    by_node_[module.node] = &module;
    collect(*ast_.root, &module);

    // Calls may precede the definitions they reach, so the whole file is
    // re-analysed until no node, edge or binding is added.
    for (int round = 0; round < 16; ++round) {
      const auto before = signature();
      Ctx top{&module, nullptr, {}};
      exec_block(*ast_.root, top);
      for (auto& s : scopes_) {
        if (s.kind == Scope::Function) analyse_function(s);
      }
      if (signature() == before) break;
    }

    DefUseGraph g;
    g.nodes = std::move(nodes_);
    for (const auto& [k, call] : edges_) g.edges.push_back({k.first, k.second, call});
    g.succ.resize(g.nodes.size());
    g.pred.resize(g.nodes.size());
    for (const auto& e : g.edges) {
      g.succ[e.from].push_back(e.to);
      g.pred[e.to].push_back(e.from);
    }
    for (auto& v : g.pred) std::sort(v.begin(), v.end());
    return g;
  }

 private:
  struct Ctx {
    Scope* scope;
    Scope* fn;  // function whose Return node receives returns and yields
    Env env;
  };

  const python::PyAst& ast_;
  const script::ApiTable& table_;
  std::unordered_map<const Node*, std::string> resolved_;
  std::deque<Scope> scopes_;
  std::unordered_map<const Node*, Scope*> by_node_;
  std::set<std::string> module_globals_;  // names some function declares `global`
  std::vector<DfNode> nodes_;
  std::map<std::tuple<int, const Node*, std::string>, std::size_t> memo_;
  std::map<std::pair<std::size_t, std::size_t>, bool> edges_;

  std::size_t signature() const {
    std::size_t n = nodes_.size() + edges_.size();
    for (const auto& s : scopes_) {
      for (const auto& [_, d] : s.all_defs) n += d.size();
    }
    return n;
  }

  // ---- graph primitives

  std::size_t node(DfKind kind, const Node* key, const std::string& label, const Scope* scope, std::string api = {}) {
    auto [it, fresh] = memo_.try_emplace({static_cast<int>(kind), key, label}, nodes_.size());
    if (fresh) {
      DfNode n;
      n.kind = kind;
      n.label = label;
      n.api = std::move(api);
      n.scope = scope ? scope->name : std::string(kModuleScope);
      if (key) {
        n.loc = ast_.location(*key);
        n.begin = key->begin;
        n.end = key->end;
      }
      nodes_.push_back(std::move(n));
    }
    return it->second;
  }

  void edge(std::size_t from, std::size_t to, bool call = false) {
    if (from == to) return;
    auto [it, fresh] = edges_.try_emplace({from, to}, call);
    if (!fresh) it->second = it->second && call;
  }

  void edges_to(const Deps& from, std::size_t to, bool call = false) {
    for (auto f : from) edge(f, to, call);
  }

  std::size_t field(Scope* cls, const std::string& attr) { return node(DfKind::Field, cls->node, attr, cls); }

  std::size_t return_node(Scope* fn) { return node(DfKind::Return, fn->node, "return", fn); }

  const std::string* path_of(const Node* n) const {
    auto it = resolved_.find(n);
    return it == resolved_.end() ? nullptr : &it->second;
  }

  // ---- pre-pass: scopes, definitions, global/nonlocal declarations

  Scope* new_scope(Scope::Kind kind, const Node& def, Scope* parent) {
    auto& s = scopes_.emplace_back();
    s.kind = kind;
    s.node = &def;
    s.parent = parent;
    s.name = parent->kind == Scope::Module ? def.text : parent->name + "." + def.text;
    by_node_[&def] = &s;
    return &s;
  }

  void collect(const Node& n, Scope* scope) {
    for (const auto& k : n.kids) {
      if (!k) continue;
      switch (k->kind) {
        case NodeKind::FunctionDef: {
          Scope* f = new_scope(Scope::Function, *k, scope);
          scope->functions[k->text] = f;
          if (scope->kind == Scope::Class && !has_decorator(*k, "staticmethod")) {
            f->cls = scope;
            const Node* args = k->kid(1);
            if (args && !args->kids.empty() && args->kids[0]->aux != "*" && args->kids[0]->aux != "**") {
              f->self_name = args->kids[0]->text;
            }
          }
          collect(*k->kids.back(), f);
          break;
        }
        case NodeKind::ClassDef: {
          Scope* c = new_scope(Scope::Class, *k, scope);
          scope->classes[k->text] = c;
          collect(*k->kids.back(), c);
          break;
        }
        case NodeKind::Global:
          for (const auto& name : k->kids) {
            scope->globals.insert(name->text);
            module_globals_.insert(name->text);
          }
          break;
        case NodeKind::Nonlocal:
          for (const auto& name : k->kids) scope->nonlocals.insert(name->text);
          break;
        default:
          collect(*k, scope);
      }
    }
  }

  // ---- name resolution

  Deps lookup(const std::string& name, const Ctx& ctx) {
    Deps d;
    if (auto it = ctx.env.find(name); it != ctx.env.end()) {
      d = it->second;
    } else {
      for (Scope* s = ctx.scope; s; s = s->parent) {
        if (s->kind == Scope::Class && s != ctx.scope) continue;
        if (auto a = s->all_defs.find(name); a != s->all_defs.end()) {
          d = a->second;
          break;
        }
      }
    }
    if (module_globals_.count(name)) unite(d, scopes_.front().all_defs[name]);
    return d;
  }

  bool is_variable(const std::string& name, const Ctx& ctx) const {
    if (ctx.env.count(name)) return true;
    for (Scope* s = ctx.scope; s; s = s->parent) {
      if (s->kind == Scope::Class && s != ctx.scope) continue;
      if (s->all_defs.count(name)) return true;
    }
    return false;
  }

  std::size_t define(const std::string& name, const Deps& deps, const Node& key, Ctx& ctx) {
    const auto d = node(DfKind::Def, &key, name, ctx.scope);
    edges_to(deps, d);
    ctx.env[name] = {d};
    ctx.scope->all_defs[name].insert(d);
    if (ctx.scope->globals.count(name)) scopes_.front().all_defs[name].insert(d);
    if (ctx.scope->nonlocals.count(name)) {
      for (Scope* s = ctx.scope->parent; s; s = s->parent) {
        if (s->kind == Scope::Function && s->all_defs.count(name)) {
          s->all_defs[name].insert(d);
          break;
        }
      }
    }
    if (ctx.scope->kind == Scope::Class) edge(d, field(ctx.scope, name));
    return d;
  }

  bool is_self(const Node* n, const Ctx& ctx) const {
    if (!n || n->kind != NodeKind::Name) return false;
    Scope* f = ctx.scope;
    if (!f || f->kind != Scope::Function || !f->cls || f->self_name.empty() || n->text != f->self_name) return false;
    // `self` counts as the receiver until it is rebound.
    auto it = ctx.env.find(n->text);
    if (it == ctx.env.end() || it->second.size() != 1) return false;
    return nodes_[*it->second.begin()].kind == DfKind::Param;
  }

  // ---- expressions

  Deps eval(const Node* n, Ctx& ctx) {
    if (!n) return {};
    switch (n->kind) {
      case NodeKind::Name: {
        Deps d = lookup(n->text, ctx);
        if (const auto* p = path_of(n); p && !is_variable(n->text, ctx) && table_.match(*p)) {
          d.insert(node(DfKind::Ref, n, n->text, ctx.scope, *p));
        }
        return d;
      }
      case NodeKind::Constant:
        if (n->aux == "str" || n->aux == "bytes") {
          return {node(DfKind::Literal, n, excerpt(n->text), ctx.scope)};
        }
        return {};
      case NodeKind::JoinedStr: {
        Deps d{node(DfKind::Literal, n, excerpt(ast_.text_of(*n)), ctx.scope)};
        for (const auto& k : n->kids) {
          if (k && k->kind == NodeKind::FormattedValue) unite(d, eval(k.get(), ctx));
        }
        return d;
      }
      case NodeKind::Attribute: {
        if (is_self(n->kid(0), ctx)) return {field(ctx.scope->cls, n->text)};
        Deps d = eval(n->kid(0), ctx);
        if (const auto* p = path_of(n); p && table_.match(*p)) d.insert(node(DfKind::Ref, n, n->text, ctx.scope, *p));
        return d;
      }
      case NodeKind::Call:
        return {eval_call(*n, ctx)};
      case NodeKind::NamedExpr: {
        Deps v = eval(n->kid(1), ctx);
        define(n->kid(0)->text, v, *n->kid(0), ctx);
        return v;
      }
      case NodeKind::Lambda: {
        Ctx inner{ctx.scope, ctx.fn, ctx.env};
        for (const auto& a : n->kid(0)->kids) {
          const auto p = node(DfKind::Param, a.get(), a->text, ctx.scope);
          if (a->kid(1)) edges_to(eval(a->kid(1), ctx), p);
          inner.env[a->text] = {p};
        }
        const auto r = node(DfKind::Return, n, "return", ctx.scope);
        edges_to(eval(n->kid(1), inner), r);
        return {r};
      }
      case NodeKind::ListComp:
      case NodeKind::SetComp:
      case NodeKind::GeneratorExp:
      case NodeKind::DictComp: {
        Ctx inner{ctx.scope, ctx.fn, ctx.env};
        const std::size_t first = n->kind == NodeKind::DictComp ? 2 : 1;
        for (std::size_t i = first; i < n->kids.size(); ++i) {
          const Node* c = n->kid(i);
          Deps it = eval(c->kid(1), inner);
          assign(c->kid(0), it, inner);
          for (std::size_t j = 2; j < c->kids.size(); ++j) eval(c->kid(j), inner);
        }
        Deps d = eval(n->kid(0), inner);
        if (first == 2) unite(d, eval(n->kid(1), inner));
        return d;
      }
      case NodeKind::Yield:
      case NodeKind::YieldFrom: {
        Deps v = eval(n->kid(0), ctx);
        if (ctx.fn) edges_to(v, return_node(ctx.fn));
        return {};
      }
      case NodeKind::Compare:
      case NodeKind::Keyword:
      default: {
        Deps d;
        for (const auto& k : n->kids) unite(d, eval(k.get(), ctx));
        return d;
      }
    }
  }

  struct Target {
    Scope* fn = nullptr;
    const Node* lambda = nullptr;
    std::size_t skip = 0;  // positional parameters consumed by the receiver
  };

  Scope* find_def(const std::string& name, const Ctx& ctx, bool want_class) const {
    for (Scope* s = ctx.scope; s; s = s->parent) {
      if (s->kind == Scope::Class && s != ctx.scope) continue;
      const auto& m = want_class ? s->classes : s->functions;
      if (auto it = m.find(name); it != m.end()) return it->second;
      if ((want_class ? s->functions : s->classes).count(name)) return nullptr;
    }
    return nullptr;
  }

  Target local_target(const Node* callee, const Ctx& ctx) {
    if (callee->kind == NodeKind::Name) {
      if (ctx.env.count(callee->text) && !ctx.env.at(callee->text).empty()) {
        for (auto d : ctx.env.at(callee->text)) {
          if (auto it = lambda_def_.find(d); it != lambda_def_.end()) return {nullptr, it->second, 0};
        }
        return {};
      }
      if (Scope* f = find_def(callee->text, ctx, false)) return {f, nullptr, f->cls ? 1u : 0u};
      if (Scope* c = find_def(callee->text, ctx, true)) {
        if (auto it = c->functions.find("__init__"); it != c->functions.end()) return {it->second, nullptr, 1};
      }
      return {};
    }
    if (callee->kind == NodeKind::Attribute && callee->kid(0)) {
      const Node* base = callee->kid(0);
      Scope* cls = nullptr;
      std::size_t skip = 0;
      if (is_self(base, ctx)) {
        cls = ctx.scope->cls;
        skip = 1;
      } else if (base->kind == NodeKind::Name && !is_variable(base->text, ctx)) {
        cls = find_def(base->text, ctx, true);
      } else if (base->kind == NodeKind::Name) {
        cls = class_of(lookup(base->text, ctx));
        skip = 1;
      }
      if (cls) {
        if (auto it = cls->functions.find(callee->text); it != cls->functions.end()) {
          const bool bound = skip == 1 && !it->second->self_name.empty();
          return {it->second, nullptr, bound ? 1u : 0u};
        }
      }
    }
    return {};
  }

  Scope* class_of(const Deps& deps) const {
    for (auto d : deps) {
      if (auto it = instance_of_.find(d); it != instance_of_.end()) return it->second;
    }
    return nullptr;
  }

  std::vector<const Node*> params_of(const Scope* fn) const {
    std::vector<const Node*> out;
    if (const Node* args = fn->node->kid(1)) {
      for (const auto& a : args->kids) out.push_back(a.get());
    }
    return out;
  }

  void bind_args(const Node& call, const Target& t, const Scope* scope, const std::vector<Deps>& arg_deps) {
    std::vector<const Node*> params;
    if (t.fn) params = params_of(t.fn);
    else for (const auto& a : t.lambda->kid(0)->kids) params.push_back(a.get());
    std::vector<const Node*> positional;
    const Node* vararg = nullptr;
    const Node* kwarg = nullptr;
    for (const Node* p : params) {
      if (p->aux == "" || p->aux == "posonly") positional.push_back(p);
      else if (p->aux == "*") vararg = p;
      else if (p->aux == "**") kwarg = p;
    }
    const auto param = [&](const Node* p) { return node(DfKind::Param, p, p->text, t.fn ? t.fn : scope); };
    std::size_t pos = t.skip;
    for (std::size_t i = 1; i < call.kids.size(); ++i) {
      const Node* a = call.kid(i);
      const Deps& d = arg_deps[i - 1];
      switch (a->kind) {
        case NodeKind::Keyword: {
          const Node* hit = nullptr;
          for (const Node* p : params) {
            if (p->text == a->text && (p->aux == "" || p->aux == "kwonly")) hit = p;
          }
          if (!hit) hit = kwarg;
          if (hit) edges_to(d, param(hit), true);
          break;
        }
        case NodeKind::Starred:
          for (std::size_t j = pos; j < positional.size(); ++j) edges_to(d, param(positional[j]), true);
          if (vararg) edges_to(d, param(vararg), true);
          break;
        case NodeKind::DoubleStarred:
          for (const Node* p : params) {
            if (p->aux == "" || p->aux == "kwonly" || p->aux == "**") edges_to(d, param(p), true);
          }
          break;
        default:
          if (pos < positional.size()) edges_to(d, param(positional[pos]), true);
          else if (vararg) edges_to(d, param(vararg), true);
          ++pos;
      }
    }
  }

  std::size_t eval_call(const Node& call, Ctx& ctx) {
    const Node* callee = call.kid(0);
    const std::string* api = path_of(callee);
    std::string label = api ? *api : excerpt(ast_.text_of(*callee));
    const auto c = node(DfKind::Call, &call, label, ctx.scope, api ? *api : std::string());

    if (callee->kind == NodeKind::Attribute) {
      edges_to(eval(callee->kid(0), ctx), c);
    } else if (callee->kind == NodeKind::Name) {
      if (!api) edges_to(lookup(callee->text, ctx), c);
    } else {
      edges_to(eval(callee, ctx), c);
    }

    std::vector<Deps> arg_deps;
    Deps all_args;
    for (std::size_t i = 1; i < call.kids.size(); ++i) {
      const Node* a = call.kid(i);
      Deps d = eval(a->kind == NodeKind::Keyword || a->kind == NodeKind::Starred || a->kind == NodeKind::DoubleStarred
                        ? a->kid(0)
                        : a,
                    ctx);
      edges_to(d, c);
      unite(all_args, d);
      if (api) {
        std::string arg_label = a->kind == NodeKind::Keyword         ? "kw:" + a->text
                                : a->kind == NodeKind::Starred       ? std::string("*")
                                : a->kind == NodeKind::DoubleStarred ? std::string("**")
                                                                     : "arg" + std::to_string(i - 1);
        auto an = node(DfKind::Arg, &call, arg_label, ctx.scope, *api);
        edges_to(d, an);
      }
      arg_deps.push_back(std::move(d));
    }

    if (const Target t = local_target(callee, ctx); t.fn || t.lambda) {
      bind_args(call, t, ctx.scope, arg_deps);
      edge(t.fn ? return_node(t.fn) : node(DfKind::Return, t.lambda, "return", ctx.scope), c, true);
    }

    // A method call on a local container (`buf.append(x)`, `d.update(x)`)
    // makes the receiver carry its arguments.
    if (callee->kind == NodeKind::Attribute && !all_args.empty()) write_through(callee->kid(0), all_args, call, ctx);
    return c;
  }

  // ---- stores

  void write_through(const Node* target, const Deps& deps, const Node& key, Ctx& ctx) {
    if (!target) return;
    switch (target->kind) {
      case NodeKind::Name:
        if (is_variable(target->text, ctx) && !is_self(target, ctx)) {
          Deps d = lookup(target->text, ctx);
          Scope* cls = class_of(d);
          unite(d, deps);
          const auto def = define(target->text, d, key, ctx);
          if (cls) instance_of_[def] = cls;
        }
        break;
      case NodeKind::Attribute:
        if (is_self(target->kid(0), ctx)) edges_to(deps, field(ctx.scope->cls, target->text));
        else write_through(target->kid(0), deps, key, ctx);
        break;
      case NodeKind::Subscript:
        write_through(target->kid(0), deps, key, ctx);
        break;
      default:
        break;
    }
  }

  void assign(const Node* target, const Deps& value, Ctx& ctx, const Node* value_node = nullptr) {
    if (!target) return;
    switch (target->kind) {
      case NodeKind::Name: {
        const auto def = define(target->text, value, *target, ctx);
        if (value_node && value_node->kind == NodeKind::Lambda) lambda_def_[def] = value_node;
        if (value_node && value_node->kind == NodeKind::Call && value_node->kid(0)->kind == NodeKind::Name) {
          if (Scope* cls = find_def(value_node->kid(0)->text, ctx, true)) instance_of_[def] = cls;
        }
        break;
      }
      case NodeKind::Tuple:
      case NodeKind::List: {
        const bool starred = std::any_of(target->kids.begin(), target->kids.end(),
                                         [](const auto& k) { return k->kind == NodeKind::Starred; });
        if (value_node && !starred && (value_node->kind == NodeKind::Tuple || value_node->kind == NodeKind::List) &&
            value_node->kids.size() == target->kids.size() &&
            std::none_of(value_node->kids.begin(), value_node->kids.end(),
                         [](const auto& k) { return k->kind == NodeKind::Starred; })) {
          for (std::size_t i = 0; i < target->kids.size(); ++i) {
            assign(target->kid(i), element_deps_[value_node->kid(i)], ctx, value_node->kid(i));
          }
        } else {
          for (const auto& k : target->kids) assign(k.get(), value, ctx);
        }
        break;
      }
      case NodeKind::Starred:
        assign(target->kid(0), value, ctx);
        break;
      case NodeKind::Attribute:
        if (is_self(target->kid(0), ctx)) {
          edges_to(value, field(ctx.scope->cls, target->text));
        } else {
          eval(target->kid(0), ctx);
          write_through(target->kid(0), value, *target, ctx);
        }
        break;
      case NodeKind::Subscript: {
        Deps d = value;
        unite(d, eval(target->kid(1), ctx));
        eval(target->kid(0), ctx);
        write_through(target->kid(0), d, *target, ctx);
        break;
      }
      default:
        break;
    }
  }

  // Evaluates a right-hand side, remembering per-element deps of tuple and
  // list displays for positional unpacking.
  Deps eval_value(const Node* v, Ctx& ctx) {
    if (v && (v->kind == NodeKind::Tuple || v->kind == NodeKind::List)) {
      Deps all;
      for (const auto& k : v->kids) {
        Deps d = eval_value(k.get(), ctx);
        element_deps_[k.get()] = d;
        unite(all, d);
      }
      return all;
    }
    return eval(v, ctx);
  }

  std::unordered_map<const Node*, Deps> element_deps_;
  std::unordered_map<std::size_t, Scope*> instance_of_;       // Def node -> class of the constructed object
  std::unordered_map<std::size_t, const Node*> lambda_def_;  // Def node -> Lambda bound to it

  // ---- statements

  void exec_block(const Node& block, Ctx& ctx) {
    for (const auto& s : block.kids) {
      if (s) exec(*s, ctx);
    }
  }

  void exec_opt(const Node* n, Ctx& ctx) {
    if (!n) return;
    if (n->kind == NodeKind::Block) exec_block(*n, ctx);
    else exec(*n, ctx);
  }

  void loop(const Node& body, const Node* orelse, Ctx& ctx, const std::function<void(Ctx&)>& head) {
    Env entry = ctx.env;
    for (int i = 0; i < 64; ++i) {
      Ctx iter{ctx.scope, ctx.fn, entry};
      head(iter);
      exec_block(body, iter);
      Env next = entry;
      merge(next, iter.env);
      if (next == entry) break;
      entry = std::move(next);
    }
    ctx.env = entry;
    Ctx tail{ctx.scope, ctx.fn, entry};
    head(tail);
    merge(ctx.env, tail.env);
    if (orelse) {
      Ctx e{ctx.scope, ctx.fn, ctx.env};
      exec_opt(orelse, e);
      merge(ctx.env, e.env);
    }
  }

  static void capture_names(const Node* p, std::vector<const Node*>& out) {
    if (!p) return;
    switch (p->kind) {
      case NodeKind::Name:
        if (p->text != "_") out.push_back(p);
        return;
      case NodeKind::Attribute:
      case NodeKind::Constant:
        return;
      case NodeKind::MatchClass:
        for (std::size_t i = 1; i < p->kids.size(); ++i) capture_names(p->kid(i), out);
        return;
      case NodeKind::DictEntry:
        capture_names(p->kid(1), out);
        return;
      default:
        for (const auto& k : p->kids) capture_names(k.get(), out);
    }
  }

  void exec(const Node& s, Ctx& ctx) {
    switch (s.kind) {
      case NodeKind::Expr:
        eval(s.kid(0), ctx);
        break;
      case NodeKind::Assign: {
        const Node* value = s.kids.back().get();
        const Deps v = eval_value(value, ctx);
        for (std::size_t i = 0; i + 1 < s.kids.size(); ++i) assign(s.kid(i), v, ctx, value);
        break;
      }
      case NodeKind::AnnAssign:
        if (s.kid(2)) {
          const Deps v = eval_value(s.kid(2), ctx);
          assign(s.kid(0), v, ctx, s.kid(2));
        }
        break;
      case NodeKind::AugAssign: {
        Deps v = eval(s.kid(1), ctx);
        unite(v, eval(s.kid(0), ctx));
        assign(s.kid(0), v, ctx);
        break;
      }
      case NodeKind::Return: {
        const Deps v = eval(s.kid(0), ctx);
        if (ctx.fn) edges_to(v, return_node(ctx.fn));
        break;
      }
      case NodeKind::If: {
        eval(s.kid(0), ctx);
        Ctx then{ctx.scope, ctx.fn, ctx.env};
        exec_block(*s.kid(1), then);
        Ctx other{ctx.scope, ctx.fn, ctx.env};
        exec_opt(s.kid(2), other);
        ctx.env = std::move(then.env);
        merge(ctx.env, other.env);
        break;
      }
      case NodeKind::While:
        loop(*s.kid(1), s.kid(2), ctx, [&](Ctx& c) { eval(s.kid(0), c); });
        break;
      case NodeKind::For:
        loop(*s.kid(2), s.kid(3), ctx, [&](Ctx& c) {
          const Deps it = eval(s.kid(1), c);
          assign(s.kid(0), it, c);
        });
        break;
      case NodeKind::With: {
        for (std::size_t i = 0; i + 1 < s.kids.size(); ++i) {
          const Node* item = s.kid(i);
          const Deps v = eval(item->kid(0), ctx);
          assign(item->kid(1), v, ctx);
        }
        exec_block(*s.kids.back(), ctx);
        break;
      }
      case NodeKind::Try: {
        const Env entry = ctx.env;
        exec_block(*s.kid(0), ctx);
        Env out = ctx.env;
        Env handler_entry = entry;
        merge(handler_entry, ctx.env);
        const Node* finally = nullptr;
        for (std::size_t i = 1; i < s.kids.size(); ++i) {
          const Node* k = s.kid(i);
          if (k->kind == NodeKind::ExceptHandler) {
            Ctx h{ctx.scope, ctx.fn, handler_entry};
            eval(k->kid(0), h);
            if (!k->text.empty()) h.env.erase(k->text);
            exec_block(*k->kid(1), h);
            merge(out, h.env);
          } else if (k->text == "else") {
            Ctx e{ctx.scope, ctx.fn, ctx.env};
            exec_block(*k, e);
            merge(out, e.env);
          } else if (k->text == "finally") {
            finally = k;
          }
        }
        ctx.env = std::move(out);
        if (finally) exec_block(*finally, ctx);
        break;
      }
      case NodeKind::Match: {
        const Deps subject = eval(s.kid(0), ctx);
        Env out = ctx.env;
        for (std::size_t i = 1; i < s.kids.size(); ++i) {
          const Node* mc = s.kid(i);
          Ctx c{ctx.scope, ctx.fn, ctx.env};
          std::vector<const Node*> names;
          capture_names(mc->kid(0), names);
          for (const Node* n : names) define(n->text, subject, *n, c);
          if (mc->kids.size() == 3) eval(mc->kid(1), c);
          exec_block(*mc->kids.back(), c);
          merge(out, c.env);
        }
        ctx.env = std::move(out);
        break;
      }
      case NodeKind::FunctionDef: {
        Scope* f = by_node_.at(&s);
        eval(s.kid(0), ctx);
        if (const Node* args = s.kid(1)) {
          for (const auto& a : args->kids) {
            eval(a->kid(0), ctx);
            if (const Node* def = a->kid(1)) edges_to(eval(def, ctx), node(DfKind::Param, a.get(), a->text, f));
          }
        }
        ctx.env.erase(s.text);
        break;
      }
      case NodeKind::ClassDef: {
        Scope* c = by_node_.at(&s);
        for (std::size_t i = 0; i + 1 < s.kids.size(); ++i) eval(s.kid(i), ctx);
        Ctx body{c, nullptr, {}};
        body.env = ctx.env;
        exec_block(*s.kids.back(), body);
        ctx.env.erase(s.text);
        break;
      }
      case NodeKind::Import:
      case NodeKind::ImportFrom:
        for (const auto& a : s.kids) {
          std::string bound = !a->aux.empty() ? a->aux : a->text.substr(0, a->text.find('.'));
          ctx.env.erase(bound);
        }
        break;
      case NodeKind::Delete:
        for (const auto& t : s.kids) {
          if (t->kind == NodeKind::Name) ctx.env.erase(t->text);
          else eval(t.get(), ctx);
        }
        break;
      case NodeKind::Raise:
      case NodeKind::Assert:
        for (const auto& k : s.kids) eval(k.get(), ctx);
        break;
      default:
        break;
    }
  }

  void analyse_function(Scope& f) {
    Ctx ctx{&f, &f, {}};
    for (const Node* p : params_of(&f)) ctx.env[p->text] = {node(DfKind::Param, p, p->text, &f)};
    exec_block(*f.node->kids.back(), ctx);
  }
};

}  // namespace

DefUseGraph build_dataflow(const python::PyAst& ast, const script::ApiTable& table) {
  if (ast.degraded()) return {};
  return Builder(ast, table).run();
}

}  // namespace hubscan::taint
