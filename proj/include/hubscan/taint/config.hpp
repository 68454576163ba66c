#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hubscan/common.hpp"
#include "hubscan/script/api_table.hpp"

namespace hubscan::taint {

enum class ThreatCategory {
  HiddenAuthentication,
  Backdoor,
  Cryptojacking,
  EmbeddedShell,
  RemoteControl,
  SensitiveInfoLeak,
  SuspiciousExecution,
};

std::string_view threat_category_name(ThreatCategory c);
std::optional<ThreatCategory> parse_threat_category(std::string_view s);

inline constexpr std::string_view kPatternPrefix = "pattern:";

struct CategoryConfig {
  ThreatCategory category = ThreatCategory::SensitiveInfoLeak;
  // API paths (`os.spawn*` is a prefix match) or `pattern:<rule>`.
  std::vector<std::string> sources;
  std::vector<std::string> sinks;
  // Calls whose results never carry this category's taint.
  std::vector<std::string> sanitizers;
};

struct TaintConfig {
  std::vector<CategoryConfig> categories;

  const CategoryConfig* find(ThreatCategory c) const;
};

class TaintConfigError : public Error {
 public:
  TaintConfigError(int line, const std::string& msg);
  int line() const { return line_; }

 private:
  int line_;
};

// Grammar (line oriented, `#` starts a comment):
//   [CategoryName]
//   sources: item, item ...
//   sinks: item ...
//   sanitizers: item ...
// A line starting with whitespace continues the previous key. Items are
// separated by commas or whitespace. Every category needs sources and sinks.
TaintConfig parse_taint_config(std::string_view text);

// Empty when every source and sink is an unsafe-API table entry (a `*` item
// must name a table prefix entry or cover one) or a `pattern:` naming one of
// `rule_names`.
std::vector<std::string> validate_taint_config(const TaintConfig& cfg, const script::ApiTable& table,
                                               const std::vector<std::string>& rule_names);

// config/taint.conf, compiled in.
const TaintConfig& default_taint_config();

// `item` matches `path` exactly, or as a prefix when it ends in `*`.
bool api_item_matches(std::string_view item, std::string_view path);

}  // namespace hubscan::taint
