#include <algorithm>
#include <cstring>

#include "hubscan/rules/rules.hpp"
#include "regex_program.hpp"

namespace hubscan::rules {

namespace {

std::uint8_t fold(std::uint8_t c) { return c >= 'A' && c <= 'Z' ? static_cast<std::uint8_t>(c + 32) : c; }

bool text_at(const StringPattern& p, ByteView data, std::size_t off) {
  if (off > data.size() || data.size() - off < p.text.size()) return false;
  for (std::size_t k = 0; k < p.text.size(); ++k) {
    const auto a = data[off + k];
    const auto b = static_cast<std::uint8_t>(p.text[k]);
    if (p.nocase ? fold(a) != fold(b) : a != b) return false;
  }
  return true;
}

bool hex_at(const StringPattern& p, ByteView data, std::size_t off) {
  if (off > data.size() || data.size() - off < p.hex.size()) return false;
  for (std::size_t k = 0; k < p.hex.size(); ++k) {
    if ((data[off + k] & p.hex[k].mask) != p.hex[k].value) return false;
  }
  return true;
}

using Iter = const char*;

}  // namespace

bool matches_at(const StringPattern& p, ByteView data, std::size_t offset) {
  switch (p.kind) {
    case PatternKind::Text: return text_at(p, data, offset);
    case PatternKind::Hex: return hex_at(p, data, offset);
    case PatternKind::Regex: {
      if (offset > data.size()) return false;
      const auto chars = as_chars(data);
      boost::match_results<Iter> m;
      auto flags = boost::match_continuous | boost::match_not_null;
      if (offset > 0) flags |= boost::match_prev_avail | boost::match_not_bob;
      return boost::regex_search(chars.data() + offset, chars.data() + chars.size(), m, p.regex->re, flags);
    }
  }
  return false;
}

std::vector<std::size_t> find_occurrences(const StringPattern& p, ByteView data, std::size_t limit) {
  std::vector<std::size_t> out;
  if (limit == 0) return out;
  switch (p.kind) {
    case PatternKind::Text: {
      if (p.text.size() > data.size()) break;
      const auto first = static_cast<std::uint8_t>(p.text[0]);
      for (std::size_t i = 0; i + p.text.size() <= data.size(); ++i) {
        if (p.nocase ? fold(data[i]) != fold(first) : data[i] != first) continue;
        if (text_at(p, data, i)) {
          out.push_back(i);
          if (out.size() == limit) break;
        }
      }
      break;
    }
    case PatternKind::Hex: {
      for (std::size_t i = 0; i + p.hex.size() <= data.size(); ++i) {
        if (hex_at(p, data, i)) {
          out.push_back(i);
          if (out.size() == limit) break;
        }
      }
      break;
    }
    case PatternKind::Regex: {
      const auto chars = as_chars(data);
      const Iter begin = chars.data(), end = chars.data() + chars.size();
      Iter pos = begin;
      boost::match_results<Iter> m;
      while (pos <= end) {
        auto flags = boost::match_not_null;
        if (pos != begin) flags |= boost::match_prev_avail | boost::match_not_bob;
        if (!boost::regex_search(pos, end, m, p.regex->re, flags)) break;
        out.push_back(static_cast<std::size_t>(m[0].first - begin));
        if (out.size() == limit) break;
        pos = m[0].second;
      }
      break;
    }
  }
  return out;
}

bool evaluate(const Condition& c, const std::function<bool(std::string_view)>& present) {
  switch (c.kind) {
    case Condition::True: return true;
    case Condition::False: return false;
    case Condition::Ref: return present(c.id);
    case Condition::Not: return !evaluate(c.kids[0], present);
    case Condition::And:
      return std::all_of(c.kids.begin(), c.kids.end(), [&](const auto& k) { return evaluate(k, present); });
    case Condition::Or:
      return std::any_of(c.kids.begin(), c.kids.end(), [&](const auto& k) { return evaluate(k, present); });
    case Condition::AnyOf:
    case Condition::AllOf:
    case Condition::CountOf: {
      const auto n = static_cast<std::size_t>(std::count_if(c.set.begin(), c.set.end(), present));
      if (c.kind == Condition::AnyOf) return n >= 1;
      if (c.kind == Condition::AllOf) return n == c.set.size();
      return n >= c.count;
    }
  }
  return false;
}

std::optional<RuleMatch> match(const Rule& rule, ByteView data, std::string_view target) {
  RuleMatch rm;
  rm.rule_name = rule.name;
  rm.target = std::string(target);
  rm.severity = rule.severity();
  rm.taint_source_category = rule.taint_source_category();
  for (const auto& p : rule.strings) {
    auto offsets = find_occurrences(p, data, kMaxOffsetsPerString);
    if (!offsets.empty()) rm.matched.push_back({p.id, std::move(offsets)});
  }
  const auto present = [&](std::string_view id) {
    return std::any_of(rm.matched.begin(), rm.matched.end(), [&](const auto& s) { return s.id == id; });
  };
  if (!evaluate(rule.condition, present)) return std::nullopt;
  return rm;
}

std::vector<RuleMatch> scan_targets(const std::vector<Rule>& rules, const std::vector<ScanTarget>& targets) {
  std::vector<RuleMatch> out;
  for (const auto& r : rules) {
    for (const auto& t : targets) {
      if (auto m = match(r, t.data, t.id)) out.push_back(std::move(*m));
    }
  }
  return out;
}

}  // namespace hubscan::rules
