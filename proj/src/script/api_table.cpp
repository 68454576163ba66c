#include "hubscan/script/api_table.hpp"

#include <array>
#include <cctype>
#include <set>

namespace hubscan::embedded {
extern const char kUnsafeApiTable[];
}

namespace hubscan::script {

namespace {

constexpr std::array<std::pair<ApiCategory, std::string_view>, 7> kCategories{{
    {ApiCategory::BuiltinFunctions, "BuiltinFunctions"},
    {ApiCategory::CommandExecution, "CommandExecution"},
    {ApiCategory::Network, "Network"},
    {ApiCategory::FileSystem, "FileSystem"},
    {ApiCategory::SystemInformation, "SystemInformation"},
    {ApiCategory::Cryptography, "Cryptography"},
    {ApiCategory::YamlLoad, "YamlLoad"},
}};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool valid_path(std::string_view p) {
  if (p.empty() || p.front() == '.' || p.back() == '.') return false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const char c = p[i];
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || (c == '.' && p[i - 1] != '.');
    if (!ok) return false;
  }
  return true;
}

}  // namespace

std::string_view api_category_name(ApiCategory c) {
  for (const auto& [k, n] : kCategories) {
    if (k == c) return n;
  }
  return "?";
}

std::optional<ApiCategory> parse_api_category(std::string_view s) {
  for (const auto& [k, n] : kCategories) {
    if (n == s) return k;
  }
  return std::nullopt;
}

Severity default_severity(ApiCategory c) {
  switch (c) {
    case ApiCategory::BuiltinFunctions:
    case ApiCategory::CommandExecution:
    case ApiCategory::YamlLoad:
      return Severity::Medium;
    default:
      return Severity::Low;
  }
}

bool ApiEntry::matches(std::string_view canonical) const {
  return prefix ? canonical.starts_with(path) && canonical.size() > path.size() : canonical == path;
}

ApiTable ApiTable::parse(std::string_view text) {
  std::vector<ApiEntry> entries;
  std::set<std::string> seen;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto raw = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string_view> cols;
    std::size_t c = 0;
    while (true) {
      const auto tab = line.find('\t', c);
      cols.push_back(trim(line.substr(c, tab == std::string_view::npos ? std::string_view::npos : tab - c)));
      if (tab == std::string_view::npos) break;
      c = tab + 1;
    }
    if (cols.size() < 2 || cols.size() > 3) throw ApiTableError(lineno, "expected category<TAB>path[<TAB>severity]");
    ApiEntry e;
    const auto cat = parse_api_category(cols[0]);
    if (!cat) throw ApiTableError(lineno, "unknown category '" + std::string(cols[0]) + "'");
    e.category = *cat;
    auto path = cols[1];
    if (path.ends_with("*")) {
      e.prefix = true;
      path.remove_suffix(1);
    }
    if (!valid_path(path)) throw ApiTableError(lineno, "invalid dotted path '" + std::string(cols[1]) + "'");
    e.path = std::string(path);
    try {
      e.severity = cols.size() == 3 ? parse_severity(cols[2]) : default_severity(e.category);
    } catch (const Error& err) {
      throw ApiTableError(lineno, err.what());
    }
    if (!seen.insert(e.pattern()).second) throw ApiTableError(lineno, "duplicate entry '" + e.pattern() + "'");
    entries.push_back(std::move(e));
  }
  return ApiTable(std::move(entries));
}

const ApiTable& ApiTable::builtin() {
  static const ApiTable table = parse(embedded::kUnsafeApiTable);
  return table;
}

const ApiEntry* ApiTable::match(std::string_view canonical) const {
  const ApiEntry* best = nullptr;
  for (const auto& e : entries_) {
    if (!e.matches(canonical)) continue;
    if (!e.prefix) return &e;
    if (!best) best = &e;
  }
  return best;
}

}  // namespace hubscan::script
