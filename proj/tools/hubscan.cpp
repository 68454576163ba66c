// hubscan: scan local model/dataset repositories for code-injection payloads.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hubscan/pipeline/pipeline.hpp"

namespace fs = std::filesystem;
using namespace hubscan;

namespace {

enum Exit { kClean = 0, kFindings = 1, kUsage = 2, kInternal = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw UsageError("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<fs::path> read_manifest(const fs::path& file) {
  std::vector<fs::path> out;
  std::istringstream lines(slurp(file));
  for (std::string line; std::getline(lines, line);) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    fs::path p = line.substr(b, e - b + 1);
    out.push_back(p.is_absolute() ? p : file.parent_path() / p);
  }
  return out;
}

std::string safe_name(std::string s) {
  for (auto& c : s) {
    if (c == '/' || c == ':' || c == '\\') c = '_';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Supply-chain scanner for ML model hub repositories"};
  app.require_subcommand(1);
  auto* scan = app.add_subcommand("scan", "Scan repository trees and print a report");

  std::vector<std::string> paths;
  std::string manifest, rules_dir, taint_file, api_file, ops_file, format = "json", fail_on = "high", out_file,
                                                                        pyc_dir, pyc_version;
  unsigned jobs = 1;
  bool deterministic = false;
  scan->add_option("path", paths, "Repository, or mirror root holding models/ and datasets/");
  scan->add_option("--manifest", manifest, "File listing one repository path per line");
  scan->add_option("--rules", rules_dir, "Directory of .rules files (default: bundled pack)");
  scan->add_option("--taint-config", taint_file, "Taint source/sink configuration");
  scan->add_option("--api-table", api_file, "Unsafe-API table (TSV)");
  scan->add_option("--operators", ops_file, "Risky TensorFlow operator list");
  scan->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "text"}));
  scan->add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1u, 256u));
  scan->add_option("--fail-on", fail_on, "Exit 1 when a finding reaches this severity")
      ->check(CLI::IsMember({"info", "low", "medium", "high", "critical"}));
  scan->add_flag("--deterministic", deterministic, "Zero durations for reproducible output");
  scan->add_option("--out", out_file, "Write the report here instead of stdout");
  scan->add_option("--pyc-dir", pyc_dir, "Write Lambda bytecode as .pyc files under this directory");
  scan->add_option("--pyc-version", pyc_version, "Python version for .pyc headers, e.g. 3.10");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kClean : kUsage;
  }

  pipeline::ScanConfig config;
  std::vector<fs::path> repos;
  try {
    if (!api_file.empty()) config.api_table = script::ApiTable::parse(slurp(api_file));
    if (!rules_dir.empty()) config.rules = rules::load_rule_pack(rules_dir);
    if (!taint_file.empty()) config.taint = taint::parse_taint_config(slurp(taint_file));
    if (!ops_file.empty()) config.risky_ops = keras::parse_risky_operators(slurp(ops_file));
    if (!pyc_version.empty()) {
      config.pyc_version = keras::parse_python_version(pyc_version);
      if (!config.pyc_version || !keras::pyc_magic(*config.pyc_version)) {
        throw UsageError("unsupported --pyc-version " + pyc_version);
      }
    }
    std::vector<std::string> rule_names;
    for (const auto& r : config.rules.rules) rule_names.push_back(r.name);
    const auto problems = taint::validate_taint_config(config.taint, config.api_table, rule_names);
    if (!problems.empty()) {
      std::string msg = "invalid taint configuration:";
      for (const auto& p : problems) msg += "\n  " + p;
      throw UsageError(msg);
    }

    std::vector<fs::path> roots(paths.begin(), paths.end());
    if (!manifest.empty()) {
      auto more = read_manifest(manifest);
      roots.insert(roots.end(), more.begin(), more.end());
    }
    if (roots.empty()) throw UsageError("no repository paths given");
    for (const auto& r : roots) {
      if (!fs::is_directory(r)) throw UsageError("not a directory: " + r.string());
      for (auto& p : pipeline::discover_repos(r)) repos.push_back(std::move(p));
    }
  } catch (const std::exception& e) {
    std::cerr << "hubscan: " << e.what() << "\n";
    return kUsage;
  }

  try {
    const auto reports = pipeline::scan_repos(repos, config, {jobs, deterministic});
    std::string text;
    if (format == "json") {
      text = pipeline::reports_json(reports);
    } else {
      for (const auto& r : reports) text += pipeline::report_text(r);
    }
    if (out_file.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(out_file, std::ios::binary);
      out << text;
      if (!out) throw std::runtime_error("cannot write " + out_file);
    }
    if (!pyc_dir.empty()) {
      for (const auto& r : reports) {
        const auto dir = fs::path(pyc_dir) / safe_name(r.repo_id);
        for (const auto& a : r.side_artifacts) {
          fs::create_directories(dir);
          std::ofstream pyc(dir / safe_name(a.name), std::ios::binary);
          pyc.write(reinterpret_cast<const char*>(a.bytes.data()), static_cast<std::streamsize>(a.bytes.size()));
        }
      }
    }
    const auto threshold = parse_severity(fail_on);
    for (const auto& r : reports) {
      for (const auto& f : r.findings) {
        if (f.severity >= threshold) return kFindings;
      }
    }
    return kClean;
  } catch (const std::exception& e) {
    std::cerr << "hubscan: internal error: " << e.what() << "\n";
    return kInternal;
  }
}
