#include "hubscan/taint/engine.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <tuple>

namespace hubscan::taint {

namespace {

bool any_matches(const std::vector<std::string>& items, std::string_view path) {
  if (path.empty()) return false;
  return std::any_of(items.begin(), items.end(), [&](const auto& i) {
    return !i.starts_with(kPatternPrefix) && api_item_matches(i, path);
  });
}

const std::string* matching_item(const std::vector<std::string>& items, std::string_view path) {
  if (path.empty()) return nullptr;
  for (const auto& i : items) {
    if (!i.starts_with(kPatternPrefix) && api_item_matches(i, path)) return &i;
  }
  return nullptr;
}

// Innermost literal whose byte span contains `offset`.
std::optional<std::size_t> literal_at(const DefUseGraph& g, std::size_t offset) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& n = g.nodes[i];
    if (n.kind != DfKind::Literal || offset < n.begin || offset >= n.end) continue;
    if (!best || n.end - n.begin < g.nodes[*best].end - g.nodes[*best].begin) best = i;
  }
  return best;
}

}  // namespace

std::string_view confidence_name(Confidence c) { return c == Confidence::High ? "high" : "medium"; }

TaintState seed_and_propagate(const DefUseGraph& graph, const TaintConfig& config,
                              const std::vector<rules::RuleMatch>& pattern_hits) {
  TaintState state;
  const auto n = graph.nodes.size();
  for (const auto& cat : config.categories) {
    CategoryTaint ct;
    ct.category = cat.category;
    ct.tainted.assign(n, false);
    std::map<std::size_t, std::string> seeds;

    for (std::size_t i = 0; i < n; ++i) {
      const auto& node = graph.nodes[i];
      if (node.kind != DfKind::Call && node.kind != DfKind::Ref) continue;
      if (const auto* item = matching_item(cat.sources, node.api)) seeds.try_emplace(i, *item);
    }
    const auto cat_name = threat_category_name(cat.category);
    for (const auto& hit : pattern_hits) {
      const std::string item = std::string(kPatternPrefix) + hit.rule_name;
      const bool listed = std::find(cat.sources.begin(), cat.sources.end(), item) != cat.sources.end();
      if (!listed && hit.taint_source_category != cat_name) continue;
      for (const auto& sm : hit.matched) {
        for (auto off : sm.offsets) {
          if (auto lit = literal_at(graph, off)) seeds.try_emplace(*lit, item);
        }
      }
    }

    std::vector<std::size_t> frontier;
    for (const auto& [id, src] : seeds) {
      ct.seeds.push_back({id, src});
      ct.tainted[id] = true;
      frontier.push_back(id);
    }
    std::size_t layers = 0;
    while (!frontier.empty()) {
      ++layers;
      std::vector<std::size_t> next;
      for (auto u : frontier) {
        for (auto v : graph.succ[u]) {
          if (ct.tainted[v]) continue;
          const auto& node = graph.nodes[v];
          if (node.kind == DfKind::Call && any_matches(cat.sanitizers, node.api)) continue;
          ct.tainted[v] = true;
          next.push_back(v);
        }
      }
      frontier = std::move(next);
    }
    state.iterations = std::max(state.iterations, layers);
    state.categories.push_back(std::move(ct));
  }
  return state;
}

std::vector<TaintFlow> detect_flows(const DefUseGraph& graph, const TaintConfig& config, const TaintState& state) {
  std::vector<TaintFlow> flows;
  for (const auto& ct : state.categories) {
    const auto* cat = config.find(ct.category);
    if (!cat) continue;
    std::map<std::size_t, const Seed*> seed_of;
    for (const auto& s : ct.seeds) seed_of[s.node] = &s;

    // (source node, sink call span) -> index into flows
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::size_t> seen;
    for (std::size_t sink = 0; sink < graph.nodes.size(); ++sink) {
      const auto& sn = graph.nodes[sink];
      if (sn.kind != DfKind::Arg || !ct.tainted[sink]) continue;
      const auto* sink_item = matching_item(cat->sinks, sn.api);
      if (!sink_item) continue;

      // Backward BFS over tainted nodes gives a shortest path to every seed.
      std::map<std::size_t, std::size_t> parent{{sink, sink}};
      std::deque<std::size_t> queue{sink};
      std::vector<std::size_t> reached;
      while (!queue.empty()) {
        const auto u = queue.front();
        queue.pop_front();
        if (seed_of.count(u)) reached.push_back(u);
        for (auto p : graph.pred[u]) {
          if (!ct.tainted[p] || parent.count(p)) continue;
          parent[p] = u;
          queue.push_back(p);
        }
      }
      for (auto seed : reached) {
        std::vector<std::size_t> path{seed};
        for (auto u = seed; u != sink;) {
          u = parent[u];
          path.push_back(u);
        }
        const auto key = std::make_tuple(seed, sn.begin, sn.end);
        if (auto it = seen.find(key); it != seen.end()) {
          if (flows[it->second].path.size() <= path.size()) continue;
          flows[it->second].path = std::move(path);
          continue;
        }
        const auto& src = graph.nodes[seed];
        TaintFlow f;
        f.category = ct.category;
        f.source = {seed_of[seed]->source.starts_with(kPatternPrefix) ? seed_of[seed]->source : src.api, src.loc, seed};
        f.sink = {sn.api, sn.loc, sink};
        f.path = std::move(path);
        f.confidence = src.scope == sn.scope ? Confidence::High : Confidence::Medium;
        seen.emplace(key, flows.size());
        flows.push_back(std::move(f));
      }
    }
  }
  std::sort(flows.begin(), flows.end(), [](const TaintFlow& a, const TaintFlow& b) {
    return std::tie(a.sink.loc, a.category, a.source.loc, a.source.name, a.sink.node) <
           std::tie(b.sink.loc, b.category, b.source.loc, b.source.name, b.sink.node);
  });
  return flows;
}

ScriptTaint analyze_script(const python::PyAst& ast, const TaintConfig& config, const std::vector<rules::Rule>& rules,
                           const script::ApiTable& table) {
  ScriptTaint out;
  out.graph = build_dataflow(ast, table);
  for (const auto& r : rules) {
    if (auto m = rules::match(r, as_bytes(ast.source), "script")) out.pattern_hits.push_back(std::move(*m));
  }
  out.state = seed_and_propagate(out.graph, config, out.pattern_hits);
  out.flows = detect_flows(out.graph, config, out.state);
  return out;
}

}  // namespace hubscan::taint
