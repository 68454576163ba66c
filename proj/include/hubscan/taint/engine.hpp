#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hubscan/common.hpp"
#include "hubscan/python/ast.hpp"
#include "hubscan/rules/rules.hpp"
#include "hubscan/taint/config.hpp"
#include "hubscan/taint/dataflow.hpp"

namespace hubscan::taint {

struct Seed {
  std::size_t node = 0;
  std::string source;  // config item that matched: an API path or `pattern:<rule>`
};

struct CategoryTaint {
  ThreatCategory category = ThreatCategory::SensitiveInfoLeak;
  std::vector<Seed> seeds;     // ascending by node
  std::vector<bool> tainted;   // per graph node
};

struct TaintState {
  std::vector<CategoryTaint> categories;  // config order
  std::size_t iterations = 0;             // BFS layers of the slowest category, at most |nodes|
};

// Seeds every Call or Ref node whose API is a category source, and every
// literal that is the innermost literal around an offset matched by a rule the
// category lists as `pattern:<rule>` or whose taint_source_category meta names
// it. Taint then follows def-use edges; it does not enter calls to the
// category's sanitizers.
TaintState seed_and_propagate(const DefUseGraph& graph, const TaintConfig& config,
                              const std::vector<rules::RuleMatch>& pattern_hits);

enum class Confidence { Medium, High };

std::string_view confidence_name(Confidence c);

struct FlowEnd {
  std::string name;  // API path, or `pattern:<rule>` for a literal source
  SourceLoc loc;
  std::size_t node = 0;
};

struct TaintFlow {
  ThreatCategory category = ThreatCategory::SensitiveInfoLeak;
  FlowEnd source;
  FlowEnd sink;
  std::vector<std::size_t> path;  // graph node ids from the seed to the sink argument
  Confidence confidence = Confidence::Medium;
};

// One flow per (category, source node, sink call): the shortest def-use path
// from a seed to a tainted argument of a sink call. High confidence when the
// source and the sink sit in the same function, Medium when the path crosses
// a call boundary. Sorted by sink location, category, then source location.
std::vector<TaintFlow> detect_flows(const DefUseGraph& graph, const TaintConfig& config, const TaintState& state);

struct ScriptTaint {
  DefUseGraph graph;
  std::vector<rules::RuleMatch> pattern_hits;
  TaintState state;
  std::vector<TaintFlow> flows;
};

// Builds the graph, scans the source with `rules`, then seeds, propagates and
// reports flows.
ScriptTaint analyze_script(const python::PyAst& ast, const TaintConfig& config, const std::vector<rules::Rule>& rules,
                           const script::ApiTable& table = script::ApiTable::builtin());

}  // namespace hubscan::taint
