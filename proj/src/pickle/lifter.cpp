#include "hubscan/pickle/lifter.hpp"

#include <set>

namespace hubscan::pickle {

ValuePtr make_literal(PickleArg v) {
  auto n = std::make_shared<SymbolicValue>();
  n->kind = ValueKind::Literal;
  n->literal = std::move(v);
  return n;
}

ValuePtr make_symbol(std::string module, std::string name, bool dynamic) {
  auto n = std::make_shared<SymbolicValue>();
  n->kind = ValueKind::SymbolRef;
  n->module = std::move(module);
  n->name = std::move(name);
  n->dynamic = dynamic;
  return n;
}

ValuePtr make_opaque(std::string reason, std::vector<ValuePtr> operands) {
  auto n = std::make_shared<SymbolicValue>();
  n->kind = ValueKind::Opaque;
  n->reason = std::move(reason);
  n->items = std::move(operands);
  return n;
}

ValuePtr make_container(ContainerKind kind, std::vector<ValuePtr> items) {
  auto n = std::make_shared<SymbolicValue>();
  n->kind = ValueKind::Container;
  n->container = kind;
  n->items = std::move(items);
  return n;
}

namespace {

ValuePtr make_memo_ref(std::uint64_t index) {
  auto n = std::make_shared<SymbolicValue>();
  n->kind = ValueKind::MemoRef;
  n->memo_index = index;
  return n;
}

class Machine {
 public:
  LiftResult run(const std::vector<PickleInstruction>& instrs) {
    for (const auto& in : instrs) {
      off_ = in.offset;
      if (step(in)) return std::move(out_);
    }
    throw LiftError(LiftErrorCode::StackUnderflow, off_, "instruction list does not end with STOP");
  }

 private:
  std::size_t floor() const { return marks_.empty() ? 0 : marks_.back(); }

  ValuePtr pop() {
    if (stack_.size() <= floor()) throw LiftError(LiftErrorCode::StackUnderflow, off_, "stack underflow");
    auto v = std::move(stack_.back());
    stack_.pop_back();
    return v;
  }

  ValuePtr& top() {
    if (stack_.size() <= floor()) throw LiftError(LiftErrorCode::StackUnderflow, off_, "stack underflow");
    return stack_.back();
  }

  std::vector<ValuePtr> pop_mark() {
    if (marks_.empty()) throw LiftError(LiftErrorCode::UnbalancedMark, off_, "no MARK on the stack");
    const auto m = marks_.back();
    marks_.pop_back();
    std::vector<ValuePtr> items(std::make_move_iterator(stack_.begin() + static_cast<std::ptrdiff_t>(m)),
                                std::make_move_iterator(stack_.end()));
    stack_.resize(m);
    return items;
  }

  // The node a mutating opcode acts on: memo references are followed so the
  // memoized object itself is updated.
  ValuePtr target(const ValuePtr& v) {
    auto r = resolve(out_, v);
    return r ? r : v;
  }

  std::uint64_t memo_index(const PickleArg& arg) {
    std::int64_t i = 0;
    if (const auto* b = std::get_if<bool>(&arg)) i = *b ? 1 : 0;
    else if (const auto* n = std::get_if<std::int64_t>(&arg)) i = *n;
    else throw LiftError(LiftErrorCode::UnboundMemo, off_, "memo index out of range");
    if (i < 0) throw LiftError(LiftErrorCode::UnboundMemo, off_, "negative memo index");
    return static_cast<std::uint64_t>(i);
  }

  static const std::string* literal_string(const ValuePtr& v) {
    if (v && v->kind == ValueKind::Literal) return std::get_if<std::string>(&v->literal);
    return nullptr;
  }

  void add_items(const ValuePtr& raw, std::vector<ValuePtr> items, ContainerKind want) {
    auto t = target(raw);
    if (t->kind == ValueKind::Container && t->container == want) {
      if (want == ContainerKind::Dict && items.size() % 2 != 0) {
        out_.notes.push_back("odd SETITEMS operand count at offset " + std::to_string(off_));
      }
      for (auto& i : items) t->items.push_back(std::move(i));
      return;
    }
    for (auto& i : items) t->extras.push_back(std::move(i));
  }

  ValuePtr instance(ValuePtr cls, std::vector<ValuePtr> args, ValuePtr kwargs = nullptr) {
    auto n = std::make_shared<SymbolicValue>();
    n->kind = ValueKind::Instance;
    n->callee = std::move(cls);
    n->items = std::move(args);
    n->kwargs = std::move(kwargs);
    n->offset = off_;
    return n;
  }

  static std::pair<std::string, std::string> split_global(const std::string& text) {
    const auto sp = text.find(' ');
    if (sp == std::string::npos) return {text, ""};
    return {text.substr(0, sp), text.substr(sp + 1)};
  }

  static std::vector<ValuePtr> tuple_items(const ValuePtr& resolved, const ValuePtr& raw) {
    if (resolved && resolved->kind == ValueKind::Container && resolved->container == ContainerKind::Tuple) {
      return resolved->items;
    }
    return {raw};
  }

  // Returns true at STOP.
  bool step(const PickleInstruction& in) {
    switch (in.opcode) {
      case Opcode::PROTO:
      case Opcode::FRAME:
        return false;
      case Opcode::STOP: {
        out_.root = pop();
        if (!marks_.empty()) out_.notes.push_back("unclosed MARK at STOP");
        for (auto& v : stack_) out_.discarded.push_back(std::move(v));
        if (!stack_.empty()) out_.notes.push_back(std::to_string(stack_.size()) + " value(s) left under the root");
        stack_.clear();
        return true;
      }

      case Opcode::MARK:
        marks_.push_back(stack_.size());
        return false;
      case Opcode::POP:
        if (stack_.size() > floor()) {
          out_.discarded.push_back(pop());
        } else {
          for (auto& v : pop_mark()) out_.discarded.push_back(std::move(v));
        }
        return false;
      case Opcode::POP_MARK:
        for (auto& v : pop_mark()) out_.discarded.push_back(std::move(v));
        return false;
      case Opcode::DUP: {
        // A shallow copy keeps ownership acyclic if the duplicate is later
        // appended to the original.
        auto copy = std::make_shared<SymbolicValue>(*top());
        stack_.push_back(std::move(copy));
        return false;
      }

      case Opcode::NONE:
        stack_.push_back(make_literal(std::monostate{}));
        return false;
      case Opcode::NEWTRUE:
        stack_.push_back(make_literal(true));
        return false;
      case Opcode::NEWFALSE:
        stack_.push_back(make_literal(false));
        return false;
      case Opcode::INT:
      case Opcode::BININT:
      case Opcode::BININT1:
      case Opcode::BININT2:
      case Opcode::LONG:
      case Opcode::LONG1:
      case Opcode::LONG4:
      case Opcode::FLOAT:
      case Opcode::BINFLOAT:
      case Opcode::STRING:
      case Opcode::BINSTRING:
      case Opcode::SHORT_BINSTRING:
      case Opcode::UNICODE:
      case Opcode::BINUNICODE:
      case Opcode::SHORT_BINUNICODE:
      case Opcode::BINUNICODE8:
      case Opcode::BINBYTES:
      case Opcode::SHORT_BINBYTES:
      case Opcode::BINBYTES8:
      case Opcode::BYTEARRAY8:
        stack_.push_back(make_literal(in.arg));
        return false;

      case Opcode::EMPTY_LIST:
        stack_.push_back(make_container(ContainerKind::List));
        return false;
      case Opcode::EMPTY_DICT:
        stack_.push_back(make_container(ContainerKind::Dict));
        return false;
      case Opcode::EMPTY_TUPLE:
        stack_.push_back(make_container(ContainerKind::Tuple));
        return false;
      case Opcode::EMPTY_SET:
        stack_.push_back(make_container(ContainerKind::Set));
        return false;
      case Opcode::LIST:
        stack_.push_back(make_container(ContainerKind::List, pop_mark()));
        return false;
      case Opcode::TUPLE:
        stack_.push_back(make_container(ContainerKind::Tuple, pop_mark()));
        return false;
      case Opcode::FROZENSET:
        stack_.push_back(make_container(ContainerKind::FrozenSet, pop_mark()));
        return false;
      case Opcode::DICT: {
        auto items = pop_mark();
        if (items.size() % 2 != 0) {
          stack_.push_back(make_opaque("odd-dict-items", std::move(items)));
        } else {
          stack_.push_back(make_container(ContainerKind::Dict, std::move(items)));
        }
        return false;
      }
      case Opcode::TUPLE1:
      case Opcode::TUPLE2:
      case Opcode::TUPLE3: {
        const std::size_t n = in.opcode == Opcode::TUPLE1 ? 1 : in.opcode == Opcode::TUPLE2 ? 2 : 3;
        std::vector<ValuePtr> items(n);
        for (std::size_t i = n; i-- > 0;) items[i] = pop();
        stack_.push_back(make_container(ContainerKind::Tuple, std::move(items)));
        return false;
      }
      case Opcode::APPEND: {
        auto v = pop();
        add_items(top(), {std::move(v)}, ContainerKind::List);
        return false;
      }
      case Opcode::APPENDS: {
        auto items = pop_mark();
        add_items(top(), std::move(items), ContainerKind::List);
        return false;
      }
      case Opcode::SETITEM: {
        auto v = pop();
        auto k = pop();
        add_items(top(), {std::move(k), std::move(v)}, ContainerKind::Dict);
        return false;
      }
      case Opcode::SETITEMS: {
        auto items = pop_mark();
        add_items(top(), std::move(items), ContainerKind::Dict);
        return false;
      }
      case Opcode::ADDITEMS: {
        auto items = pop_mark();
        add_items(top(), std::move(items), ContainerKind::Set);
        return false;
      }

      case Opcode::PUT:
      case Opcode::BINPUT:
      case Opcode::LONG_BINPUT:
        out_.memo[memo_index(in.arg)] = target(top());
        return false;
      case Opcode::MEMOIZE:
        out_.memo[out_.memo.size()] = target(top());
        return false;
      case Opcode::GET:
      case Opcode::BINGET:
      case Opcode::LONG_BINGET: {
        const auto idx = memo_index(in.arg);
        if (!out_.memo.count(idx)) {
          throw LiftError(LiftErrorCode::UnboundMemo, off_, "memo index " + std::to_string(idx) + " read before write");
        }
        stack_.push_back(make_memo_ref(idx));
        return false;
      }

      case Opcode::GLOBAL: {
        auto [mod, name] = split_global(std::get<std::string>(in.arg));
        stack_.push_back(make_symbol(std::move(mod), std::move(name)));
        return false;
      }
      case Opcode::STACK_GLOBAL: {
        auto name_raw = pop();
        auto mod_raw = pop();
        const auto* name = literal_string(target(name_raw));
        const auto* mod = literal_string(target(mod_raw));
        if (name && mod) {
          stack_.push_back(make_symbol(*mod, *name));
        } else {
          auto sym = make_symbol(mod ? *mod : "", name ? *name : "", true);
          sym->items = {std::move(mod_raw), std::move(name_raw)};
          stack_.push_back(std::move(sym));
        }
        return false;
      }
      case Opcode::REDUCE: {
        auto args_raw = pop();
        auto callee = pop();
        auto n = std::make_shared<SymbolicValue>();
        n->kind = ValueKind::Call;
        n->callee = std::move(callee);
        n->items = tuple_items(target(args_raw), args_raw);
        n->offset = off_;
        stack_.push_back(std::move(n));
        return false;
      }
      case Opcode::BUILD: {
        auto state = pop();
        auto t = target(top());
        if (!t->state) t->state = std::move(state);
        else t->extras.push_back(std::move(state));
        return false;
      }
      case Opcode::INST: {
        auto [mod, name] = split_global(std::get<std::string>(in.arg));
        auto args = pop_mark();
        stack_.push_back(instance(make_symbol(std::move(mod), std::move(name)), std::move(args)));
        return false;
      }
      case Opcode::OBJ: {
        auto items = pop_mark();
        if (items.empty()) throw LiftError(LiftErrorCode::StackUnderflow, off_, "OBJ without a class operand");
        auto cls = std::move(items.front());
        items.erase(items.begin());
        stack_.push_back(instance(std::move(cls), std::move(items)));
        return false;
      }
      case Opcode::NEWOBJ: {
        auto args_raw = pop();
        auto cls = pop();
        stack_.push_back(instance(std::move(cls), tuple_items(target(args_raw), args_raw)));
        return false;
      }
      case Opcode::NEWOBJ_EX: {
        auto kwargs = pop();
        auto args_raw = pop();
        auto cls = pop();
        stack_.push_back(instance(std::move(cls), tuple_items(target(args_raw), args_raw), std::move(kwargs)));
        return false;
      }

      case Opcode::PERSID:
        stack_.push_back(make_opaque("persistent-id", {make_literal(in.arg)}));
        return false;
      case Opcode::BINPERSID: {
        auto pid = pop();
        stack_.push_back(make_opaque("persistent-id", {std::move(pid)}));
        return false;
      }
      case Opcode::EXT1:
      case Opcode::EXT2:
      case Opcode::EXT4:
        stack_.push_back(make_opaque("extension-registry", {make_literal(in.arg)}));
        return false;
      case Opcode::NEXT_BUFFER:
        stack_.push_back(make_opaque("out-of-band-buffer"));
        return false;
      case Opcode::READONLY_BUFFER:
        top();
        return false;
    }
    stack_.push_back(make_opaque("unmodeled-opcode"));
    return false;
  }

  LiftResult out_;
  std::vector<ValuePtr> stack_;
  std::vector<std::size_t> marks_;
  std::size_t off_ = 0;
};

void append_truncated(std::string& out, std::string_view s, std::size_t max_len) {
  if (out.size() >= max_len) return;
  out.append(s.substr(0, max_len - out.size()));
}

void render_into(const LiftResult& r, const ValuePtr& v, std::string& out, std::size_t max_len, int depth) {
  if (out.size() >= max_len) return;
  if (!v) {
    append_truncated(out, "?", max_len);
    return;
  }
  if (depth > 32) {
    append_truncated(out, "...", max_len);
    return;
  }
  auto list = [&](const std::vector<ValuePtr>& items, std::string_view sep) {
    for (std::size_t i = 0; i < items.size() && out.size() < max_len; ++i) {
      if (i) append_truncated(out, sep, max_len);
      render_into(r, items[i], out, max_len, depth + 1);
    }
  };
  switch (v->kind) {
    case ValueKind::Literal:
      if (std::holds_alternative<std::monostate>(v->literal)) append_truncated(out, "None", max_len);
      else if (const auto* b = std::get_if<Bytes>(&v->literal)) append_truncated(out, "b<" + std::to_string(b->size()) + " bytes>", max_len);
      else append_truncated(out, format_arg(v->literal), max_len);
      return;
    case ValueKind::SymbolRef:
      append_truncated(out, v->dynamic ? "<dynamic-global>" : v->module + "." + v->name, max_len);
      return;
    case ValueKind::Call:
    case ValueKind::Instance:
      render_into(r, v->callee, out, max_len, depth + 1);
      append_truncated(out, "(", max_len);
      list(v->items, ", ");
      append_truncated(out, ")", max_len);
      return;
    case ValueKind::Container: {
      static constexpr std::string_view kOpen[] = {"[", "(", "{", "{", "frozenset({"};
      static constexpr std::string_view kClose[] = {"]", ")", "}", "}", "})"};
      const auto k = static_cast<int>(v->container);
      append_truncated(out, kOpen[k], max_len);
      if (v->container == ContainerKind::Dict) {
        for (std::size_t i = 0; i + 1 < v->items.size() && out.size() < max_len; i += 2) {
          if (i) append_truncated(out, ", ", max_len);
          render_into(r, v->items[i], out, max_len, depth + 1);
          append_truncated(out, ": ", max_len);
          render_into(r, v->items[i + 1], out, max_len, depth + 1);
        }
      } else {
        list(v->items, ", ");
      }
      append_truncated(out, kClose[k], max_len);
      return;
    }
    case ValueKind::Opaque:
      append_truncated(out, "<" + v->reason + ">", max_len);
      return;
    case ValueKind::MemoRef: {
      auto it = r.memo.find(v->memo_index);
      if (it == r.memo.end()) append_truncated(out, "<unbound-memo>", max_len);
      else render_into(r, it->second, out, max_len, depth + 1);
      return;
    }
  }
}

}  // namespace

LiftResult lift(const std::vector<PickleInstruction>& instrs) { return Machine{}.run(instrs); }

ValuePtr resolve(const LiftResult& result, const ValuePtr& v) {
  ValuePtr cur = v;
  for (std::size_t hops = 0; cur && cur->kind == ValueKind::MemoRef; ++hops) {
    if (hops > result.memo.size()) return nullptr;
    auto it = result.memo.find(cur->memo_index);
    if (it == result.memo.end()) return nullptr;
    cur = it->second;
  }
  return cur;
}

std::string render(const LiftResult& result, const ValuePtr& v, std::size_t max_len) {
  std::string out;
  render_into(result, v, out, max_len, 0);
  return out;
}

namespace detail {

void walk_nodes(const LiftResult& result, const std::function<void(const SymbolicValue&)>& fn) {
  std::set<const SymbolicValue*> seen;
  std::vector<const SymbolicValue*> work;
  auto push = [&](const ValuePtr& v) {
    if (v && seen.insert(v.get()).second) work.push_back(v.get());
  };
  auto drain = [&] {
    while (!work.empty()) {
      const auto* n = work.back();
      work.pop_back();
      fn(*n);
      // Reverse push keeps a left-to-right pre-order.
      std::vector<const ValuePtr*> kids;
      kids.push_back(&n->callee);
      for (const auto& i : n->items) kids.push_back(&i);
      kids.push_back(&n->kwargs);
      kids.push_back(&n->state);
      for (const auto& e : n->extras) kids.push_back(&e);
      for (auto it = kids.rbegin(); it != kids.rend(); ++it) push(**it);
    }
  };
  push(result.root);
  drain();
  for (const auto& d : result.discarded) {
    push(d);
    drain();
  }
  for (const auto& [idx, v] : result.memo) {
    push(v);
    drain();
  }
}

}  // namespace detail

}  // namespace hubscan::pickle
