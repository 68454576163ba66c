#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hubscan/common.hpp"

namespace hubscan::rules {

enum class PatternKind { Text, Regex, Hex };

// One byte of a hex pattern. `mask` selects the bits that must equal `value`:
// 0xFF exact, 0xF0 / 0x0F for a nibble wildcard, 0x00 for `??`.
struct HexByte {
  std::uint8_t value = 0;
  std::uint8_t mask = 0xFF;
};

class RegexProgram;

struct StringPattern {
  std::string id;  // with the leading `$`
  PatternKind kind = PatternKind::Text;
  std::string text;  // Text: decoded bytes. Regex: the expression source.
  bool nocase = false;
  bool dotall = false;  // regex `s` modifier
  std::vector<HexByte> hex;
  std::shared_ptr<const RegexProgram> regex;
  SourceLoc loc;
};

struct Condition {
  enum Kind { Ref, And, Or, Not, AnyOf, AllOf, CountOf, True, False } kind = False;
  std::string id;                // Ref
  std::size_t count = 0;         // CountOf
  std::vector<std::string> set;  // *Of: ids resolved against the rule's strings
  std::vector<Condition> kids;   // And, Or: two or more; Not: one
};

struct Rule {
  std::string name;
  std::vector<std::string> tags;
  std::map<std::string, std::string> meta;
  std::vector<StringPattern> strings;
  Condition condition;
  SourceLoc loc;

  Severity severity() const;
  // Empty when the rule does not seed taint.
  std::string taint_source_category() const;
};

enum class RuleErrorCode { Syntax, DuplicateStringId, UndeclaredIdInCondition, RegexCompile, DuplicateRule, BadMeta };

std::string_view rule_error_code_name(RuleErrorCode c);

class RuleError : public Error {
 public:
  RuleError(RuleErrorCode code, SourceLoc loc, const std::string& msg);
  RuleErrorCode code() const { return code_; }
  SourceLoc loc() const { return loc_; }

 private:
  RuleErrorCode code_;
  SourceLoc loc_;
};

// Grammar:
//   rule NAME [: tag...] { [meta: (k = "v" | k = 123 | k = true)...]
//                          [strings: ($id = "text" [nocase] [ascii] | $id = /re/[is] | $id = { AA ?? B? })...]
//                          condition: expr }
//   expr := expr or expr | expr and expr | not expr | ( expr ) | $id | true | false
//         | (any | all | N) of (them | ($a, $b*, ...))
// `//` and `/* */` comments. `meta.severity` is required.
std::vector<Rule> parse_rules(std::string_view text);

bool evaluate(const Condition& cond, const std::function<bool(std::string_view id)>& present);

// Offsets of every occurrence, in increasing order, at most `limit`. Text and
// hex occurrences may overlap; regex occurrences are the successive leftmost
// non-empty matches.
std::vector<std::size_t> find_occurrences(const StringPattern& p, ByteView data, std::size_t limit);

// True when the pattern matches starting exactly at `offset`.
bool matches_at(const StringPattern& p, ByteView data, std::size_t offset);

inline constexpr std::size_t kMaxOffsetsPerString = 4096;

struct StringMatch {
  std::string id;
  std::vector<std::size_t> offsets;
};

struct RuleMatch {
  std::string rule_name;
  std::vector<StringMatch> matched;  // strings with at least one occurrence, in declaration order
  std::string target;
  Severity severity = Severity::Low;
  std::string taint_source_category;
};

std::optional<RuleMatch> match(const Rule& rule, ByteView data, std::string_view target = {});

struct ScanTarget {
  std::string id;
  ByteView data;
};

// Rule-major order: every target for the first rule, then the second.
std::vector<RuleMatch> scan_targets(const std::vector<Rule>& rules, const std::vector<ScanTarget>& targets);

struct RuleSource {
  std::string name;  // file name
  std::string text;
};

struct RulePack {
  std::vector<RuleSource> sources;  // sorted by name
  std::vector<Rule> rules;          // in source order
  std::string hash;                 // lower-case hex SHA-256
};

// SHA-256 over `name NUL text NUL` for each source, sorted by name.
std::string rule_pack_hash(std::vector<RuleSource> sources);

// Throws RuleError (message prefixed with the file name) or Error on a
// duplicate rule name across files.
RulePack build_rule_pack(std::vector<RuleSource> sources);

RulePack bundled_rule_pack();

// Every `*.rules` file directly under `dir`.
RulePack load_rule_pack(const std::filesystem::path& dir);

}  // namespace hubscan::rules
