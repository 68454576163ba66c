#include "hubscan/taint/config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

namespace hubscan::embedded {
extern const char kTaintConfig[];
}  // namespace hubscan::embedded

namespace hubscan::taint {

namespace {

constexpr std::array<std::pair<ThreatCategory, std::string_view>, 7> kNames{{
    {ThreatCategory::HiddenAuthentication, "HiddenAuthentication"},
    {ThreatCategory::Backdoor, "Backdoor"},
    {ThreatCategory::Cryptojacking, "Cryptojacking"},
    {ThreatCategory::EmbeddedShell, "EmbeddedShell"},
    {ThreatCategory::RemoteControl, "RemoteControl"},
    {ThreatCategory::SensitiveInfoLeak, "SensitiveInfoLeak"},
    {ThreatCategory::SuspiciousExecution, "SuspiciousExecution"},
}};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool valid_item(std::string_view item) {
  if (item.starts_with(kPatternPrefix)) {
    const auto name = item.substr(kPatternPrefix.size());
    return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
      return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    });
  }
  if (item.ends_with('*')) item.remove_suffix(1);
  if (item.empty() || item.front() == '.' || item.back() == '.') return false;
  char prev = '.';
  for (char c : item) {
    if (c == '.' && prev == '.') return false;
    if (c != '.' && !std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    if (c != '.' && prev == '.' && std::isdigit(static_cast<unsigned char>(c))) return false;
    prev = c;
  }
  return true;
}

}  // namespace

std::string_view threat_category_name(ThreatCategory c) {
  for (const auto& [k, n] : kNames) {
    if (k == c) return n;
  }
  return "?";
}

std::optional<ThreatCategory> parse_threat_category(std::string_view s) {
  for (const auto& [k, n] : kNames) {
    if (n == s) return k;
  }
  return std::nullopt;
}

const CategoryConfig* TaintConfig::find(ThreatCategory c) const {
  for (const auto& cat : categories) {
    if (cat.category == c) return &cat;
  }
  return nullptr;
}

TaintConfigError::TaintConfigError(int line, const std::string& msg)
    : Error("taint config line " + std::to_string(line) + ": " + msg), line_(line) {}

TaintConfig parse_taint_config(std::string_view text) {
  TaintConfig cfg;
  std::vector<std::string>* current = nullptr;
  std::set<std::string> seen_keys;
  int line_no = 0;
  int section_line = 0;
  std::size_t pos = 0;

  // Missing keys are reported at the section header.
  const auto finish = [&](int line) {
    if (cfg.categories.empty()) return;
    const auto& c = cfg.categories.back();
    if (c.sources.empty()) throw TaintConfigError(line, std::string(threat_category_name(c.category)) + " has no sources");
    if (c.sinks.empty()) throw TaintConfigError(line, std::string(threat_category_name(c.category)) + " has no sinks");
  };

  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view raw = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const bool continuation = !raw.empty() && (raw.front() == ' ' || raw.front() == '\t');
    std::string_view line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw TaintConfigError(line_no, "unterminated section header");
      const auto name = trim(line.substr(1, line.size() - 2));
      const auto cat = parse_threat_category(name);
      if (!cat) throw TaintConfigError(line_no, "unknown threat category '" + std::string(name) + "'");
      if (cfg.find(*cat)) throw TaintConfigError(line_no, "duplicate category '" + std::string(name) + "'");
      finish(section_line);
      cfg.categories.push_back({*cat, {}, {}, {}});
      section_line = line_no;
      current = nullptr;
      seen_keys.clear();
      continue;
    }

    std::string_view items;
    if (continuation && current) {
      items = line;
    } else {
      const auto colon = line.find(':');
      if (colon == std::string_view::npos) throw TaintConfigError(line_no, "expected 'key: items'");
      if (cfg.categories.empty()) throw TaintConfigError(line_no, "key outside a [category] section");
      const std::string key(trim(line.substr(0, colon)));
      auto& c = cfg.categories.back();
      if (key == "sources") current = &c.sources;
      else if (key == "sinks") current = &c.sinks;
      else if (key == "sanitizers") current = &c.sanitizers;
      else throw TaintConfigError(line_no, "unknown key '" + key + "'");
      if (!seen_keys.insert(key).second) throw TaintConfigError(line_no, "duplicate key '" + key + "'");
      items = line.substr(colon + 1);
    }

    std::size_t i = 0;
    while (i < items.size()) {
      while (i < items.size() && (items[i] == ',' || items[i] == ' ' || items[i] == '\t')) ++i;
      std::size_t j = i;
      while (j < items.size() && items[j] != ',' && items[j] != ' ' && items[j] != '\t') ++j;
      if (j > i) {
        const std::string item(items.substr(i, j - i));
        if (!valid_item(item)) throw TaintConfigError(line_no, "malformed item '" + item + "'");
        if (std::find(current->begin(), current->end(), item) == current->end()) current->push_back(item);
      }
      i = j;
    }
  }
  finish(section_line);
  return cfg;
}

bool api_item_matches(std::string_view item, std::string_view path) {
  if (item.ends_with('*')) {
    item.remove_suffix(1);
    return path.size() > item.size() && path.starts_with(item);
  }
  return item == path;
}

std::vector<std::string> validate_taint_config(const TaintConfig& cfg, const script::ApiTable& table,
                                               const std::vector<std::string>& rule_names) {
  std::vector<std::string> problems;
  const auto check = [&](const CategoryConfig& c, const std::string& item, std::string_view role) {
    const std::string where = std::string(threat_category_name(c.category)) + " " + std::string(role) + " '" + item + "'";
    if (item.starts_with(kPatternPrefix)) {
      const auto name = item.substr(kPatternPrefix.size());
      if (std::find(rule_names.begin(), rule_names.end(), name) == rule_names.end()) {
        problems.push_back(where + ": no such rule");
      }
      return;
    }
    if (item.ends_with('*')) {
      const auto hit = std::any_of(table.entries().begin(), table.entries().end(), [&](const auto& e) {
        return e.pattern() == item || api_item_matches(item, e.path);
      });
      if (!hit) problems.push_back(where + ": covers no unsafe-API table entry");
      return;
    }
    if (!table.match(item)) problems.push_back(where + ": not in the unsafe-API table");
  };
  for (const auto& c : cfg.categories) {
    for (const auto& s : c.sources) check(c, s, "source");
    for (const auto& s : c.sinks) {
      if (s.starts_with(kPatternPrefix)) {
        problems.push_back(std::string(threat_category_name(c.category)) + " sink '" + s + "': patterns can only be sources");
        continue;
      }
      check(c, s, "sink");
    }
  }
  return problems;
}

const TaintConfig& default_taint_config() {
  static const TaintConfig cfg = parse_taint_config(embedded::kTaintConfig);
  return cfg;
}

}  // namespace hubscan::taint
