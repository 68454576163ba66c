#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "hubscan/rules/rules.hpp"

namespace hubscan::embedded {
extern const std::pair<std::string_view, std::string_view> kBundledRules[];
extern const std::size_t kBundledRulesCount;
}  // namespace hubscan::embedded

namespace hubscan::rules {

namespace {

void sort_sources(std::vector<RuleSource>& sources) {
  std::sort(sources.begin(), sources.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
}

}  // namespace

std::string rule_pack_hash(std::vector<RuleSource> sources) {
  sort_sources(sources);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256 unavailable");
  }
  const char nul = '\0';
  for (const auto& s : sources) {
    EVP_DigestUpdate(ctx, s.name.data(), s.name.size());
    EVP_DigestUpdate(ctx, &nul, 1);
    EVP_DigestUpdate(ctx, s.text.data(), s.text.size());
    EVP_DigestUpdate(ctx, &nul, 1);
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  return to_hex(ByteView(digest, len));
}

RulePack build_rule_pack(std::vector<RuleSource> sources) {
  sort_sources(sources);
  RulePack pack;
  std::set<std::string> names;
  for (const auto& s : sources) {
    std::vector<Rule> rules;
    try {
      rules = parse_rules(s.text);
    } catch (const RuleError& e) {
      throw RuleError(e.code(), e.loc(), s.name + ": " + e.what());
    }
    for (auto& r : rules) {
      if (!names.insert(r.name).second) throw Error(s.name + ": rule '" + r.name + "' already defined");
      pack.rules.push_back(std::move(r));
    }
  }
  pack.hash = rule_pack_hash(sources);
  pack.sources = std::move(sources);
  return pack;
}

RulePack bundled_rule_pack() {
  std::vector<RuleSource> sources;
  for (std::size_t i = 0; i < embedded::kBundledRulesCount; ++i) {
    sources.push_back({std::string(embedded::kBundledRules[i].first), std::string(embedded::kBundledRules[i].second)});
  }
  return build_rule_pack(std::move(sources));
}

RulePack load_rule_pack(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw Error("rules directory not found: " + dir.string());
  std::vector<RuleSource> sources;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".rules") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    if (!in) throw Error("cannot read " + entry.path().string());
    std::ostringstream ss;
    ss << in.rdbuf();
    sources.push_back({entry.path().filename().string(), ss.str()});
  }
  return build_rule_pack(std::move(sources));
}

}  // namespace hubscan::rules
