#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hubscan/common.hpp"

namespace hubscan::script {

enum class ApiCategory {
  BuiltinFunctions,
  CommandExecution,
  Network,
  FileSystem,
  SystemInformation,
  Cryptography,
  YamlLoad,
};

std::string_view api_category_name(ApiCategory c);
std::optional<ApiCategory> parse_api_category(std::string_view s);
// BuiltinFunctions, CommandExecution and YamlLoad are medium; the rest low.
Severity default_severity(ApiCategory c);

struct ApiEntry {
  std::string path;  // without the trailing '*'
  bool prefix = false;
  ApiCategory category = ApiCategory::BuiltinFunctions;
  Severity severity = Severity::Low;

  bool matches(std::string_view canonical) const;
  std::string pattern() const { return prefix ? path + "*" : path; }
};

class ApiTableError : public Error {
 public:
  ApiTableError(int line, const std::string& msg)
      : Error("unsafe-API table line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ApiTable {
 public:
  ApiTable() = default;
  explicit ApiTable(std::vector<ApiEntry> entries) : entries_(std::move(entries)) {}

  // `category<TAB>path[*][<TAB>severity]` per line; '#' comments and blank
  // lines are skipped. Throws ApiTableError on malformed lines and duplicates.
  static ApiTable parse(std::string_view text);
  // The table compiled in from config/unsafe_apis.tsv.
  static const ApiTable& builtin();

  // First matching entry; exact entries win over prefix entries.
  const ApiEntry* match(std::string_view canonical) const;
  const std::vector<ApiEntry>& entries() const { return entries_; }

 private:
  std::vector<ApiEntry> entries_;
};

}  // namespace hubscan::script
