#pragma once

#include <algorithm>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "hubscan/python/ast.hpp"

namespace testsupport {

namespace python = hubscan::python;

// Consistently renames import aliases and simple assignment aliases to fresh
// identifiers. `import m` becomes `import m as fresh`; every Name node with
// the old identifier is rewritten.
inline std::string rename_aliases(const std::string& src, std::mt19937& rng, int& renamed) {
  const auto ast = python::parse_python(src);
  if (ast.degraded()) throw std::runtime_error("rename_aliases: source does not parse");
  std::map<std::string, std::string> fresh;
  struct Edit {
    std::size_t begin, end;
    std::string text;
  };
  std::vector<Edit> edits;
  const auto new_name = [&](const std::string& old) -> const std::string* {
    if (auto it = fresh.find(old); it != fresh.end()) return &it->second;
    if (rng() % 4 == 0) return nullptr;
    std::string n = "zq";
    for (int i = 0; i < 6; ++i) n.push_back(static_cast<char>('a' + rng() % 26));
    n += std::to_string(fresh.size());
    return &(fresh[old] = n);
  };
  python::walk(*ast.root, [&](const python::Node& n) {
    if (n.kind == python::NodeKind::Import || n.kind == python::NodeKind::ImportFrom) {
      for (const auto& a : n.kids) {
        if (a->text == "*") continue;
        if (n.kind == python::NodeKind::Import && a->aux.empty() && a->text.find('.') != std::string::npos) continue;
        const auto& local = a->aux.empty() ? a->text : a->aux;
        const std::string* to = new_name(local);
        if (!to) continue;
        if (a->aux.empty()) edits.push_back({a->end, a->end, " as " + *to});
        else edits.push_back({a->end - a->aux.size(), a->end, *to});
      }
    }
    if (n.kind == python::NodeKind::Assign && n.kids.size() == 2 && n.kid(0)->kind == python::NodeKind::Name &&
        (n.kid(1)->kind == python::NodeKind::Attribute || n.kid(1)->kind == python::NodeKind::Name)) {
      new_name(n.kid(0)->text);
    }
    return true;
  });
  python::walk(*ast.root, [&](const python::Node& n) {
    if (n.kind == python::NodeKind::Name) {
      if (auto it = fresh.find(n.text); it != fresh.end()) edits.push_back({n.begin, n.end, it->second});
    }
    return true;
  });
  std::sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) { return a.begin > b.begin; });
  std::string out = src;
  for (const auto& e : edits) out.replace(e.begin, e.end - e.begin, e.text);
  renamed = static_cast<int>(fresh.size());
  return out;
}

}  // namespace testsupport
