#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hubscan/pickle/disassembler.hpp"

namespace hubscan::pickle {

enum class ValueKind { Literal, SymbolRef, Call, Container, Instance, Opaque, MemoRef };

enum class ContainerKind { List, Tuple, Dict, Set, FrozenSet };

struct SymbolicValue;
using ValuePtr = std::shared_ptr<SymbolicValue>;

// One node of the lifted value tree. Fields are meaningful per kind:
//   Literal    literal (monostate is None)
//   SymbolRef  module, name, dynamic
//   Call       callee, items = positional args, offset
//   Container  container, items (Dict: alternating key, value)
//   Instance   callee = class, items = args, kwargs, offset
//   Opaque     reason, items = operands that were consumed
//   MemoRef    memo_index
// `state` and `extras` record BUILD states and items appended to
// non-container targets (e.g. SETITEMS onto an OrderedDict call result).
struct SymbolicValue {
  ValueKind kind = ValueKind::Opaque;
  PickleArg literal;
  std::string module;
  std::string name;
  bool dynamic = false;
  ContainerKind container = ContainerKind::Tuple;
  ValuePtr callee;
  std::vector<ValuePtr> items;
  ValuePtr kwargs;
  ValuePtr state;
  std::vector<ValuePtr> extras;
  std::string reason;
  std::uint64_t memo_index = 0;
  std::size_t offset = 0;
};

ValuePtr make_literal(PickleArg v);
ValuePtr make_symbol(std::string module, std::string name, bool dynamic = false);
ValuePtr make_opaque(std::string reason, std::vector<ValuePtr> operands = {});
ValuePtr make_container(ContainerKind kind, std::vector<ValuePtr> items = {});

struct LiftResult {
  ValuePtr root;
  std::map<std::uint64_t, ValuePtr> memo;
  // Values popped by POP/POP_MARK or left under the root at STOP. They never
  // reach the root but were still constructed by the loader.
  std::vector<ValuePtr> discarded;
  std::vector<std::string> notes;
};

enum class LiftErrorCode { StackUnderflow, UnbalancedMark, UnboundMemo };

class LiftError : public Error {
 public:
  LiftError(LiftErrorCode code, std::size_t offset, std::string message)
      : Error(std::move(message)), code_(code), offset_(offset) {}
  LiftErrorCode code() const { return code_; }
  std::size_t offset() const { return offset_; }

 private:
  LiftErrorCode code_;
  std::size_t offset_;
};

// Symbolically executes the pickle stack machine. Nothing is imported or
// called. Throws LiftError on malformed streams.
LiftResult lift(const std::vector<PickleInstruction>& instrs);

// Follows MemoRef links (with cycle protection); returns nullptr for an
// unbound index.
ValuePtr resolve(const LiftResult& result, const ValuePtr& v);

// Visits every node reachable from the root, the discarded values and the
// memo table, each node once, in that order.
template <typename F>
void for_each_node(const LiftResult& result, F&& fn);

// Renders a value as a compact Python-like expression for reports.
std::string render(const LiftResult& result, const ValuePtr& v, std::size_t max_len = 200);

namespace detail {
void walk_nodes(const LiftResult& result, const std::function<void(const SymbolicValue&)>& fn);
}

template <typename F>
void for_each_node(const LiftResult& result, F&& fn) {
  detail::walk_nodes(result, std::function<void(const SymbolicValue&)>(std::forward<F>(fn)));
}

}  // namespace hubscan::pickle
