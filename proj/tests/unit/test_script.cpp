#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "hubscan/python/ast.hpp"
#include "hubscan/script/analyzer.hpp"
#include "json.hpp"
#include "alias_rename.hpp"
#include "test_support.hpp"

using namespace hubscan;
using namespace hubscan::script;
using python::Node;
using python::NodeKind;
namespace ts = testsupport;
using ts::rename_aliases;

namespace {

using Triple = std::tuple<std::string, std::string, int>;

std::vector<UnsafeApiFinding> scan(std::string_view src) {
  const auto ast = python::parse_python(src);
  return find_unsafe_api_calls(ast, collect_imports(ast), ApiTable::builtin());
}

std::multiset<Triple> triples(const std::vector<UnsafeApiFinding>& fs) {
  std::multiset<Triple> out;
  for (const auto& f : fs) out.emplace(f.api, std::string(api_category_name(f.category)), f.line);
  return out;
}

std::multiset<std::pair<std::string, std::string>> api_categories(const std::vector<UnsafeApiFinding>& fs) {
  std::multiset<std::pair<std::string, std::string>> out;
  for (const auto& f : fs) out.emplace(f.api, std::string(api_category_name(f.category)));
  return out;
}

const nlohmann::json& expected() {
  static const auto j = nlohmann::json::parse(ts::read_text(ts::data_dir() / "scripts" / "expected.json"));
  return j;
}

std::string read_script(const std::string& name) { return ts::read_text(ts::data_dir() / "scripts" / name); }

}  // namespace

TEST_CASE("unsafe-API table file equals the compiled-in table") {
  const auto file = ApiTable::parse(ts::read_text(ts::data_dir() / ".." / ".." / "config" / "unsafe_apis.tsv"));
  const auto& builtin = ApiTable::builtin();
  REQUIRE(file.entries().size() == builtin.entries().size());
  for (std::size_t i = 0; i < file.entries().size(); ++i) {
    CHECK(file.entries()[i].pattern() == builtin.entries()[i].pattern());
    CHECK(file.entries()[i].category == builtin.entries()[i].category);
    CHECK(file.entries()[i].severity == builtin.entries()[i].severity);
  }
}

TEST_CASE("unsafe-API table contains every normative entry") {
  const std::vector<std::pair<std::string, ApiCategory>> normative{
      {"eval", ApiCategory::BuiltinFunctions},           {"exec", ApiCategory::BuiltinFunctions},
      {"execfile", ApiCategory::BuiltinFunctions},       {"__import__", ApiCategory::BuiltinFunctions},
      {"getattr", ApiCategory::BuiltinFunctions},        {"compile", ApiCategory::BuiltinFunctions},
      {"open", ApiCategory::BuiltinFunctions},           {"os.system", ApiCategory::CommandExecution},
      {"os.popen", ApiCategory::CommandExecution},       {"os.spawn*", ApiCategory::CommandExecution},
      {"subprocess.run", ApiCategory::CommandExecution}, {"subprocess.call", ApiCategory::CommandExecution},
      {"subprocess.Popen", ApiCategory::CommandExecution}, {"requests.get", ApiCategory::Network},
      {"requests.post", ApiCategory::Network},           {"urllib.request.urlopen", ApiCategory::Network},
      {"urllib.request.Request", ApiCategory::Network},  {"socket.socket", ApiCategory::Network},
      {"socket.connect", ApiCategory::Network},          {"ftplib.FTP", ApiCategory::Network},
      {"smtplib.SMTP", ApiCategory::Network},            {"shutil.rmtree", ApiCategory::FileSystem},
      {"shutil.move", ApiCategory::FileSystem},          {"pathlib.Path", ApiCategory::FileSystem},
      {"os.path.join", ApiCategory::FileSystem},         {"zipfile.ZipFile", ApiCategory::FileSystem},
      {"tarfile.open", ApiCategory::FileSystem},         {"glob.glob", ApiCategory::FileSystem},
      {"fnmatch.filter", ApiCategory::FileSystem},       {"os.environ", ApiCategory::SystemInformation},
      {"os.getcwd", ApiCategory::SystemInformation},     {"platform.system", ApiCategory::SystemInformation},
      {"platform.release", ApiCategory::SystemInformation}, {"Crypto.Cipher.AES", ApiCategory::Cryptography},
      {"Crypto.Cipher.DES", ApiCategory::Cryptography},  {"cryptography.fernet.Fernet", ApiCategory::Cryptography},
      {"rsa.encrypt", ApiCategory::Cryptography},        {"rsa.decrypt", ApiCategory::Cryptography},
      {"base64.b64encode", ApiCategory::Cryptography},   {"base64.b64decode", ApiCategory::Cryptography},
      {"yaml.load", ApiCategory::YamlLoad},
  };
  const auto& t = ApiTable::builtin();
  for (const auto& [pattern, cat] : normative) {
    CAPTURE(pattern);
    const auto it = std::find_if(t.entries().begin(), t.entries().end(),
                                 [&](const ApiEntry& e) { return e.pattern() == pattern; });
    REQUIRE(it != t.entries().end());
    CHECK(it->category == cat);
  }
}

TEST_CASE("unsafe-API table parsing and matching") {
  const auto t = ApiTable::parse("# c\n\nCommandExecution\tos.spawn*\nCommandExecution\tos.spawnl\tcritical\n"
                                 "FileSystem\tos.path.join\tinfo\r\n");
  REQUIRE(t.entries().size() == 3);
  CHECK(t.match("os.spawnv")->pattern() == "os.spawn*");
  CHECK(t.match("os.spawnl")->severity == Severity::Critical);
  CHECK(t.match("os.spawn") == nullptr);
  CHECK(t.match("os.path.join")->severity == Severity::Info);
  CHECK(t.match("os.path") == nullptr);
  CHECK(t.match("os.path.joinx") == nullptr);
  CHECK(t.entries()[0].severity == Severity::Medium);

  const std::vector<std::pair<std::string, int>> bad{
      {"Network\n", 1},
      {"# ok\nNetwork\trequests.get\nBogus\tx.y\n", 3},
      {"Network\trequests..get\n", 1},
      {"Network\trequests.get\nNetwork\trequests.get\n", 2},
      {"Network\trequests.get\tsevere\n", 1},
      {"Network\ta\tlow\textra\n", 1},
      {"Network\treq uests\n", 1},
  };
  for (const auto& [text, line] : bad) {
    CAPTURE(text);
    try {
      ApiTable::parse(text);
      FAIL("accepted a malformed table");
    } catch (const ApiTableError& e) {
      CHECK(e.line() == line);
    }
  }
  CHECK(default_severity(ApiCategory::Network) == Severity::Low);
  CHECK(ApiTable::builtin().match("getattr")->severity == Severity::Info);
  CHECK(ApiTable::builtin().match("open")->severity == Severity::Info);
  CHECK(ApiTable::builtin().match("pathlib.Path")->severity == Severity::Info);
  CHECK(ApiTable::builtin().match("eval")->severity == Severity::Medium);
}

TEST_CASE("collect_imports") {
  const auto imports = [](std::string_view src) { return collect_imports(python::parse_python(src)); };
  CHECK(imports("import os as o\n").aliases == std::map<std::string, std::string>{{"o", "os"}});
  CHECK(imports("from subprocess import check_output as co\n").aliases ==
        std::map<std::string, std::string>{{"co", "subprocess.check_output"}});
  const auto star = imports("from os import *\n");
  CHECK(star.aliases.empty());
  CHECK(star.star_imports == std::vector<std::string>{"os"});
  CHECK(imports("import os.path, numpy as np\n").aliases ==
        std::map<std::string, std::string>{{"np", "numpy"}, {"os", "os"}});
  CHECK(imports("import urllib.request as ur\nfrom . import x\nfrom ..p import y as z\n").aliases ==
        std::map<std::string, std::string>{{"ur", "urllib.request"}, {"x", ".x"}, {"z", "..p.y"}});
  CHECK(imports("def f():\n    import socket as s\n").aliases == std::map<std::string, std::string>{{"s", "socket"}});

  // Degraded sources fall back to line regexes.
  const auto degraded = imports("import os as o, sys\nfrom subprocess import (run as r, call)\nfrom os import *\n"
                                "# import fake\nx = 'import fake2'\nprint 'py2'\n");
  CHECK(degraded.aliases == std::map<std::string, std::string>{{"call", "subprocess.call"},
                                                               {"o", "os"},
                                                               {"r", "subprocess.run"},
                                                               {"sys", "sys"}});
  CHECK(degraded.star_imports == std::vector<std::string>{"os"});
}

TEST_CASE("find_unsafe_api_calls: reference examples") {
  auto f = scan("import os\nos.system(\"ls\")");
  REQUIRE(f.size() == 1);
  CHECK(f[0].api == "os.system");
  CHECK(f[0].category == ApiCategory::CommandExecution);
  CHECK(f[0].line == 2);
  CHECK(f[0].column == 1);
  CHECK(f[0].call_snippet == "os.system(\"ls\")");
  CHECK(f[0].severity == Severity::Medium);
  CHECK(!f[0].degraded);

  CHECK(scan("print(\"hi\")").empty());
  CHECK(scan("x = 1").empty());

  f = scan("import requests as r\nr.get(u)");
  REQUIRE(f.size() == 1);
  CHECK(f[0].api == "requests.get");
  CHECK(f[0].category == ApiCategory::Network);
  CHECK(f[0].severity == Severity::Low);

  f = scan("from os import *\nsystem('x')\n");
  REQUIRE(f.size() == 1);
  CHECK(f[0].api == "os.system");

  // Builtins through the builtins module, and shadowing by an import.
  CHECK(triples(scan("import builtins\nbuiltins.eval('1')\n__builtins__.exec('x')\n")) ==
        std::multiset<Triple>{{"eval", "BuiltinFunctions", 2}, {"exec", "BuiltinFunctions", 3}});
  CHECK(scan("from io import open\nopen('f')\n").empty());
  // Soundness: a reassigned import still resolves.
  CHECK(triples(scan("try:\n  import requests\nexcept ImportError:\n  requests = None\nrequests.post(u)\n")) ==
        std::multiset<Triple>{{"requests.post", "Network", 5}});
}

TEST_CASE("find_unsafe_api_calls: case-3 shape is attributed to the method") {
  const auto src = read_script("s22_case3_shape.py");
  const auto ast = python::parse_python(src);
  REQUIRE(!ast.degraded());
  const auto f = find_unsafe_api_calls(ast, collect_imports(ast), ApiTable::builtin());
  const auto it = std::find_if(f.begin(), f.end(), [](const auto& x) { return x.api == "subprocess.check_output"; });
  REQUIRE(it != f.end());
  const Node* init = nullptr;
  python::walk(*ast.root, [&](const Node& n) {
    if (n.kind == NodeKind::FunctionDef && n.text == "__init__") init = &n;
    return true;
  });
  REQUIRE(init != nullptr);
  CHECK(it->line > init->loc.line);
  const auto body_end = python::parse_python(src).root ? init->end : 0;
  std::size_t offset = 0;
  for (int l = 1; l < it->line; ++l) offset = src.find('\n', offset) + 1;
  offset += static_cast<std::size_t>(it->column - 1);
  CHECK(offset >= init->begin);
  CHECK(offset < body_end);
  CHECK(it->call_snippet == "subprocess.check_output([\"uname\", \"-a\"])");
}

TEST_CASE("micro-script corpus matches the interpreter-derived triples") {
  const auto& exp = expected();
  REQUIRE(exp.size() >= 20);
  std::set<std::string> categories;
  for (const auto& [name, want] : exp.items()) {
    CAPTURE(name);
    const auto src = read_script(name);
    const auto ast = python::parse_python(src);
    REQUIRE_MESSAGE(!ast.degraded(), ast.error->message);
    const auto found = find_unsafe_api_calls(ast, collect_imports(ast), ApiTable::builtin());
    std::multiset<Triple> w;
    for (const auto& t : want) {
      w.emplace(t[0].get<std::string>(), t[1].get<std::string>(), t[2].get<int>());
      categories.insert(t[1].get<std::string>());
    }
    CHECK(triples(found) == w);

    // Locations point at the reported name in the source.
    std::vector<std::size_t> starts{0};
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (src[i] == '\n') starts.push_back(i + 1);
    }
    for (const auto& f : found) {
      REQUIRE(f.line >= 1);
      REQUIRE(static_cast<std::size_t>(f.line) <= starts.size());
      const auto off = starts[static_cast<std::size_t>(f.line - 1)] + static_cast<std::size_t>(f.column - 1);
      REQUIRE(off < src.size());
      CHECK(f.call_snippet.size() <= kMaxSnippet);
      CHECK(!f.call_snippet.empty());
      CHECK(std::isalpha(static_cast<unsigned char>(src[off])) + (src[off] == '_') > 0);
    }
  }
  CHECK(categories == std::set<std::string>{"BuiltinFunctions", "CommandExecution", "Network", "FileSystem",
                                            "SystemInformation", "Cryptography", "YamlLoad"});
}

TEST_CASE("alias-invariance under random consistent renaming") {
  std::mt19937 rng(7331);
  const auto& exp = expected();
  int trials = 0, effective = 0;
  for (int round = 0; round < 8; ++round) {
    for (const auto& [name, _] : exp.items()) {
      CAPTURE(name);
      const auto src = read_script(name);
      int renamed = 0;
      const auto out = rename_aliases(src, rng, renamed);
      CAPTURE(out);
      const auto before = scan(src);
      const auto after_ast = python::parse_python(out);
      REQUIRE(!after_ast.degraded());
      const auto after = find_unsafe_api_calls(after_ast, collect_imports(after_ast), ApiTable::builtin());
      CHECK(api_categories(after) == api_categories(before));
      CHECK(triples(after) == triples(before));
      ++trials;
      if (renamed > 0 && out != src) ++effective;
    }
  }
  CHECK(trials >= 100);
  CHECK(effective >= 100);
}

TEST_CASE("findings are stable under layout changes") {
  for (const auto& [name, _] : expected().items()) {
    CAPTURE(name);
    const auto src = read_script(name);
    // Trailing comments plus 4-space indentation narrowed to 2 spaces.
    std::string out;
    std::size_t pos = 0;
    while (pos < src.size()) {
      auto nl = src.find('\n', pos);
      if (nl == std::string::npos) nl = src.size();
      std::string line = src.substr(pos, nl - pos);
      std::size_t lead = 0;
      while (lead < line.size() && line[lead] == ' ') ++lead;
      line = std::string(lead / 2, ' ') + line.substr(lead);
      const bool open_bracket = !line.empty() && (line.back() == '(' || line.back() == '{' || line.back() == '[' ||
                                                  line.back() == ',');
      out += line;
      if (!line.empty() && !open_bracket) out += "   # os.system('x') eval(y)";
      out += "\n";
      pos = nl + 1;
    }
    const auto a = scan(src);
    const auto b = scan(out);
    CHECK(triples(a) == triples(b));
  }
}

TEST_CASE("degraded parse falls back to the regex scan") {
  const std::string src =
      "import os as o\nfrom subprocess import *\nprint 'python 2'\n"
      "o.system('id')  # os.system in a comment\n"
      "x = \"eval(not code)\"\n"
      "run(['ls'])\n"
      "o . popen('w')\n"
      "getattr(o, 'x')\n";
  const auto ast = python::parse_python(src);
  REQUIRE(ast.degraded());
  CHECK(ast.error->loc.line == 3);
  const auto f = find_unsafe_api_calls(ast, collect_imports(ast), ApiTable::builtin());
  CHECK(triples(f) == std::multiset<Triple>{{"os.system", "CommandExecution", 4},
                                            {"subprocess.run", "CommandExecution", 6},
                                            {"os.popen", "CommandExecution", 7},
                                            {"getattr", "BuiltinFunctions", 8}});
  for (const auto& x : f) CHECK(x.degraded);
  CHECK(f[0].column == 1);
  CHECK(f[0].call_snippet == "o.system('id') # os.system in a comment");
  CHECK(regex_scan("'''\nos.system\n'''\n", ApiTable::builtin()).empty());
}

TEST_CASE("snippets") {
  CHECK(make_snippet("a(\n    b,\n    c)") == "a( b, c)");
  const std::string long_call = "eval(" + std::string(300, 'x') + ")";
  CHECK(make_snippet(long_call).size() == kMaxSnippet);
  std::string utf = std::string(199, 'a') + "\xC3\xA9" + "tail";
  const auto s = make_snippet(utf);
  CHECK(s.size() == 199);
  const auto f = scan("import subprocess\nsubprocess.run(\n    ['a'],\n    check=True,\n)\n");
  REQUIRE(f.size() == 1);
  CHECK(f[0].call_snippet == "subprocess.run( ['a'], check=True, )");
  CHECK(f[0].line == 2);
}
