#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hubscan/pickle/lifter.hpp"

namespace hubscan::pickle {

struct UnsafeOpcodeHit {
  PickleInstruction instruction;
  Opcode opcode_class;
  std::string_view description;
};

// REDUCE, GLOBAL, OBJ, INST, NEWOBJ, NEWOBJ_EX and STACK_GLOBAL.
bool is_unsafe_opcode(Opcode op);

// Short description of what an unsafe opcode does on load; empty for safe ones.
std::string_view unsafe_opcode_description(Opcode op);

std::vector<UnsafeOpcodeHit> find_unsafe_opcodes(const std::vector<PickleInstruction>& instrs);

enum class SnippetOrigin { Pickle, KerasLambda, TfOperator };

struct SuspiciousSnippet {
  std::string callee;  // dotted, `__builtin__` normalized to `builtins`
  std::vector<std::string> arg_strings;
  std::size_t non_string_args = 0;
  std::size_t source_offset = 0;
  SnippetOrigin origin = SnippetOrigin::Pickle;
};

std::string_view snippet_origin_name(SnippetOrigin o);

// Callees that make a pickle call suspicious. Entries ending in `.*` match
// any attribute of the module.
const std::vector<std::string>& default_model_unsafe_callees();

// `module.name` with `__builtin__` folded into `builtins`.
std::string canonical_global(std::string_view module, std::string_view name);

bool callee_matches(std::string_view dotted, const std::vector<std::string>& patterns);

// Dotted path of a call target: a static global, or getattr(<global>, "lit")
// one level deep. Empty when it cannot be named statically.
std::string callee_path(const LiftResult& result, const ValuePtr& callee);

// Every Call or Instance in the lift whose callee matches `patterns`, ordered
// by source offset.
std::vector<SuspiciousSnippet> extract_snippets(const LiftResult& result,
                                                const std::vector<std::string>& patterns = default_model_unsafe_callees());

// Collects the static (module, name) pairs of every SymbolRef, formatted as
// "module name", sorted and deduplicated.
std::vector<std::string> symbol_refs(const LiftResult& result);

}  // namespace hubscan::pickle
