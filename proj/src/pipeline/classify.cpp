#include <algorithm>
#include <array>
#include <tuple>

#include "hubscan/pipeline/pipeline.hpp"

namespace hubscan::pipeline {

std::string_view repo_kind_name(RepoKind k) { return k == RepoKind::Dataset ? "dataset" : "model"; }

std::string_view finding_kind_name(FindingKind k) {
  switch (k) {
    case FindingKind::UnsafeOpcode: return "UnsafeOpcode";
    case FindingKind::SuspiciousSnippet: return "SuspiciousSnippet";
    case FindingKind::LambdaLayer: return "LambdaLayer";
    case FindingKind::UnsafeOperator: return "UnsafeOperator";
    case FindingKind::UnsafeApi: return "UnsafeApi";
    case FindingKind::TaintFlow: return "TaintFlow";
    case FindingKind::RuleMatch: return "RuleMatch";
    case FindingKind::ParserDegradation: return "ParserDegradation";
  }
  return "?";
}

std::string_view behavior_name(Behavior b) {
  switch (b) {
    case Behavior::RemoteControl: return "RemoteControl";
    case Behavior::SensitiveInfoTheft: return "SensitiveInfoTheft";
    case Behavior::CredentialTheft: return "CredentialTheft";
    case Behavior::SystemReconnaissance: return "SystemReconnaissance";
    case Behavior::ProofOfConcept: return "ProofOfConcept";
    case Behavior::Downloader: return "Downloader";
    case Behavior::Unclassified: return "Unclassified";
  }
  return "?";
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Malicious: return "Malicious";
    case Verdict::Suspicious: return "Suspicious";
    case Verdict::Clean: return "Clean";
  }
  return "?";
}

bool finding_less(const Finding& a, const Finding& b) {
  auto key = [](const Finding& f) {
    return std::tie(f.path, f.offset, f.kind, f.line, f.severity, f.api, f.source, f.rule, f.category, f.snippet,
                    f.detail, f.inert);
  };
  return key(a) < key(b);
}

namespace {

// Sources that describe the host rather than its user or secrets.
bool is_system_info_source(std::string_view s) {
  static constexpr std::array<std::string_view, 9> kExact{
      "os.uname",         "socket.gethostname",   "os.getlogin",
      "getpass.getuser",  "os.getcwd",            "subprocess.check_output",
      "subprocess.getoutput", "subprocess.getstatusoutput", "os.cpu_count",
  };
  if (s.starts_with("platform.")) return true;
  return std::find(kExact.begin(), kExact.end(), s) != kExact.end();
}

bool has_rule(const std::vector<Finding>& fs, std::string_view rule) {
  return std::any_of(fs.begin(), fs.end(),
                     [&](const Finding& f) { return f.kind == FindingKind::RuleMatch && f.rule == rule; });
}

bool has_flow(const std::vector<Finding>& fs, std::string_view category) {
  return std::any_of(fs.begin(), fs.end(),
                     [&](const Finding& f) { return f.kind == FindingKind::TaintFlow && f.category == category; });
}

}  // namespace

Behavior classify_behavior(const std::vector<Finding>& findings) {
  if (has_rule(findings, "reverse_shell") || has_flow(findings, "RemoteControl")) return Behavior::RemoteControl;
  if (has_rule(findings, "chrome_credentials")) return Behavior::CredentialTheft;

  bool leak = false;
  for (const auto& f : findings) {
    if (f.kind != FindingKind::TaintFlow || f.category != "SensitiveInfoLeak") continue;
    if (is_system_info_source(f.source)) return Behavior::SystemReconnaissance;
    leak = true;
  }
  if (leak) return Behavior::SensitiveInfoTheft;
  if (has_flow(findings, "Backdoor")) return Behavior::Downloader;

  bool payload = false;
  for (const auto& f : findings) {
    if (f.kind == FindingKind::TaintFlow) return Behavior::Unclassified;
    if (f.kind == FindingKind::RuleMatch && f.severity >= Severity::High) return Behavior::Unclassified;
    if (f.kind != FindingKind::SuspiciousSnippet && f.kind != FindingKind::LambdaLayer) continue;
    if (f.severity == Severity::Info) continue;
    if (!f.inert) return Behavior::Unclassified;
    payload = true;
  }
  return payload ? Behavior::ProofOfConcept : Behavior::Unclassified;
}

Verdict verdict_for(const std::vector<Finding>& findings) {
  if (findings.empty()) return Verdict::Clean;
  const auto top = std::max_element(findings.begin(), findings.end(), [](const Finding& a, const Finding& b) {
                     return a.severity < b.severity;
                   })->severity;
  if (top >= Severity::High) return Verdict::Malicious;
  if (top >= Severity::Low) return Verdict::Suspicious;
  return Verdict::Clean;
}

}  // namespace hubscan::pipeline
