#pragma once

#include <random>
#include <string>
#include <vector>

#include "hubscan/common.hpp"

namespace testsupport {

// Test-side condition tree, rendered to rule text and evaluated directly.
struct Expr {
  enum Kind { Id, And, Or, Not, Any, All, Count, Lit } kind;
  int id = 0;  // Id: index; Lit: 0/1; Count: N
  std::vector<int> set;  // empty means `them`
  std::vector<Expr> kids;
};

inline Expr random_expr(std::mt19937& rng, int n, int depth) {
  const int pick = static_cast<int>(rng() % (depth <= 0 ? 5 : 8));
  Expr e{};
  switch (pick) {
    case 0:
    case 1: e.kind = Expr::Id; e.id = static_cast<int>(rng() % n); break;
    case 2:
    case 3:
    case 4: {
      e.kind = pick == 2 ? Expr::Any : pick == 3 ? Expr::All : Expr::Count;
      if (rng() % 2) {
        for (int i = 0; i < n; ++i) {
          if (rng() % 2) e.set.push_back(i);
        }
        if (e.set.empty()) e.set.push_back(static_cast<int>(rng() % n));
      }
      const int size = e.set.empty() ? n : static_cast<int>(e.set.size());
      e.id = static_cast<int>(rng() % (size + 2));
      break;
    }
    case 5: e.kind = Expr::Not; e.kids.push_back(random_expr(rng, n, depth - 1)); break;
    case 6:
    case 7: {
      e.kind = pick == 6 ? Expr::And : Expr::Or;
      const int k = 2 + static_cast<int>(rng() % 2);
      for (int i = 0; i < k; ++i) e.kids.push_back(random_expr(rng, n, depth - 1));
      break;
    }
  }
  if (pick == 0 && rng() % 8 == 0) {
    e.kind = Expr::Lit;
    e.id = static_cast<int>(rng() % 2);
  }
  return e;
}

inline std::string render(const Expr& e) {
  const auto id = [](int i) { return "$s" + std::to_string(i); };
  std::string out;
  switch (e.kind) {
    case Expr::Id: return id(e.id);
    case Expr::Lit: return e.id ? "true" : "false";
    case Expr::Not: return "not " + render(e.kids[0]);
    case Expr::And:
    case Expr::Or:
      out = "(";
      for (std::size_t i = 0; i < e.kids.size(); ++i) {
        if (i) out += e.kind == Expr::And ? " and " : " or ";
        out += render(e.kids[i]);
      }
      return out + ")";
    case Expr::Any:
    case Expr::All:
    case Expr::Count: {
      out = e.kind == Expr::Any ? "any" : e.kind == Expr::All ? "all" : std::to_string(e.id);
      out += " of ";
      if (e.set.empty()) return out + "them";
      out += "(";
      for (std::size_t i = 0; i < e.set.size(); ++i) out += (i ? ", " : "") + id(e.set[i]);
      return out + ")";
    }
  }
  return out;
}

inline bool brute(const Expr& e, unsigned mask, int n) {
  switch (e.kind) {
    case Expr::Id: return mask >> e.id & 1;
    case Expr::Lit: return e.id;
    case Expr::Not: return !brute(e.kids[0], mask, n);
    case Expr::And: {
      bool v = true;
      for (const auto& k : e.kids) v = v && brute(k, mask, n);
      return v;
    }
    case Expr::Or: {
      bool v = false;
      for (const auto& k : e.kids) v = v || brute(k, mask, n);
      return v;
    }
    default: {
      std::vector<int> ids = e.set;
      if (ids.empty()) {
        for (int i = 0; i < n; ++i) ids.push_back(i);
      }
      int hits = 0;
      for (int i : ids) hits += mask >> i & 1;
      if (e.kind == Expr::Any) return hits >= 1;
      if (e.kind == Expr::All) return hits == static_cast<int>(ids.size());
      return hits >= e.id;
    }
  }
}

// Pattern i in each of four encodings, plus a data fragment it matches. The
// fragments share no pattern, so absent ids never match.
struct Planted {
  std::string decl;
  std::string fragment;
};

inline Planted planted(int i, int kind) {
  const std::string tag = "QX" + std::string(1, static_cast<char>('A' + i));
  switch (kind) {
    case 0: return {"\"" + tag + "alpha\"", tag + "alpha"};
    case 1: return {"\"" + tag + "beta\" nocase", tag + "BeTa"};
    case 2: return {"/" + tag + "g[0-9]{2,3}z/", tag + "g417z"};
    default: {
      std::string hex;
      for (char c : tag) hex += hubscan::to_hex(hubscan::as_bytes(std::string(1, c))) + " ";
      return {"{ " + hex + "?? 6D 7? }", tag + "\x01mq"};
    }
  }
}

}  // namespace testsupport
