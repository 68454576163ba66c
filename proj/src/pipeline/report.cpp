#include <algorithm>
#include <iomanip>
#include <sstream>

#include "hubscan/pipeline/pipeline.hpp"
#include "json.hpp"

#ifndef HUBSCAN_VERSION
#define HUBSCAN_VERSION "0.0.0"
#endif

namespace hubscan::pipeline {

using ojson = nlohmann::ordered_json;

std::string_view tool_version() { return HUBSCAN_VERSION; }

ScanReport aggregate_report(const RepoListing& listing, std::vector<ArtifactResult> results,
                            const std::string& rule_pack_hash, std::uint64_t duration_ms) {
  ScanReport r;
  r.repo_id = listing.repo_id;
  r.repo_kind = listing.kind;
  r.tool_version = std::string(tool_version());
  r.rule_pack_hash = rule_pack_hash;
  r.duration_ms = duration_ms;
  r.findings = listing.errors;
  r.notes = listing.notes;
  for (const auto& a : listing.artifacts) {
    if (ingest::classify_vulnerability(a.format) != ingest::VulnClass::Safe) ++r.scanned_files;
  }
  for (auto& res : results) {
    std::move(res.findings.begin(), res.findings.end(), std::back_inserter(r.findings));
    std::move(res.notes.begin(), res.notes.end(), std::back_inserter(r.notes));
    std::move(res.side_artifacts.begin(), res.side_artifacts.end(), std::back_inserter(r.side_artifacts));
  }
  std::sort(r.findings.begin(), r.findings.end(), finding_less);
  std::sort(r.notes.begin(), r.notes.end());
  std::sort(r.side_artifacts.begin(), r.side_artifacts.end(),
            [](const SideArtifact& a, const SideArtifact& b) { return a.name < b.name; });
  r.behavior = classify_behavior(r.findings);
  r.verdict = verdict_for(r.findings);
  return r;
}

namespace {

ojson to_json(const Finding& f) {
  ojson j;
  j["kind"] = finding_kind_name(f.kind);
  j["severity"] = severity_name(f.severity);
  j["path"] = f.path;
  if (f.line) j["line"] = *f.line;
  if (f.offset) j["offset"] = *f.offset;
  if (!f.api.empty()) j["api"] = f.api;
  if (!f.source.empty()) j["source"] = f.source;
  if (!f.rule.empty()) j["rule"] = f.rule;
  if (!f.category.empty()) j["category"] = f.category;
  if (!f.snippet.empty()) j["snippet"] = f.snippet;
  j["detail"] = f.detail;
  if (f.inert) j["inert"] = true;
  return j;
}

ojson to_json(const ScanReport& r) {
  ojson j;
  j["schema_version"] = kSchemaVersion;
  j["repo_id"] = r.repo_id;
  j["repo_kind"] = repo_kind_name(r.repo_kind);
  j["verdict"] = verdict_name(r.verdict);
  j["behavior"] = behavior_name(r.behavior);
  j["scanned_files"] = r.scanned_files;
  j["findings"] = ojson::array();
  for (const auto& f : r.findings) j["findings"].push_back(to_json(f));
  j["tool_version"] = r.tool_version;
  j["rule_pack_hash"] = r.rule_pack_hash;
  j["duration_ms"] = r.duration_ms;
  j["notes"] = r.notes;
  return j;
}

std::string dump(const ojson& j) { return j.dump(2, ' ', false, ojson::error_handler_t::replace) + "\n"; }

}  // namespace

std::string report_json(const ScanReport& r) { return dump(to_json(r)); }

std::string reports_json(const std::vector<ScanReport>& reports) {
  if (reports.size() == 1) return report_json(reports.front());
  ojson arr = ojson::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  return dump(arr);
}

std::string report_text(const ScanReport& r) {
  std::ostringstream o;
  o << r.repo_id << " (" << repo_kind_name(r.repo_kind) << "): " << verdict_name(r.verdict) << ", "
    << behavior_name(r.behavior) << "\n";
  o << "  files scanned: " << r.scanned_files << "  findings: " << r.findings.size()
    << "  rules: " << r.rule_pack_hash.substr(0, 12) << "  version: " << r.tool_version
    << "  duration: " << r.duration_ms << " ms\n";
  if (!r.findings.empty()) {
    o << "  " << std::left << std::setw(9) << "SEVERITY" << std::setw(18) << "KIND" << std::setw(36) << "LOCATION"
      << "WHAT\n";
  }
  for (const auto& f : r.findings) {
    std::string loc = f.path;
    if (f.line) loc += ":" + std::to_string(*f.line);
    else if (f.offset) loc += "@" + std::to_string(*f.offset);
    std::string what;
    for (const auto* part : {&f.category, &f.rule, &f.source, &f.api}) {
      if (part->empty()) continue;
      if (!what.empty()) what += part == &f.api && !f.source.empty() ? " -> " : " ";
      what += *part;
    }
    if (!f.detail.empty()) what += (what.empty() ? "" : ": ") + f.detail;
    if (f.inert) what += " [inert]";
    o << "  " << std::left << std::setw(9) << severity_name(f.severity) << std::setw(18)
      << finding_kind_name(f.kind) << std::setw(35) << loc << " " << what << "\n";
  }
  for (const auto& n : r.notes) o << "  note: " << n << "\n";
  return o.str();
}

}  // namespace hubscan::pipeline
