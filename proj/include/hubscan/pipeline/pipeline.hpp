#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hubscan/common.hpp"
#include "hubscan/ingest/format.hpp"
#include "hubscan/keras/lambda.hpp"
#include "hubscan/keras/operators.hpp"
#include "hubscan/rules/rules.hpp"
#include "hubscan/script/api_table.hpp"
#include "hubscan/taint/config.hpp"

namespace hubscan::pipeline {

enum class RepoKind { Model, Dataset };

std::string_view repo_kind_name(RepoKind k);

struct ArtifactRef {
  std::string repo_id;   // owner/name
  RepoKind repo_kind = RepoKind::Model;
  std::string rel_path;  // '/'-separated, inside the repo root
  ingest::ArtifactFormat format;
};

enum class FindingKind {
  UnsafeOpcode,
  SuspiciousSnippet,
  LambdaLayer,
  UnsafeOperator,
  UnsafeApi,
  TaintFlow,
  RuleMatch,
  ParserDegradation,
};

std::string_view finding_kind_name(FindingKind k);

struct Finding {
  FindingKind kind = FindingKind::ParserDegradation;
  Severity severity = Severity::Info;
  std::string path;  // artifact rel_path; archive members as `file:member`
  std::optional<int> line;
  std::optional<std::size_t> offset;
  std::string api;       // callee, unsafe API, or taint sink
  std::string source;    // taint source (API path or pattern:<rule>)
  std::string rule;
  std::string category;  // API category, threat category, opcode class, or stage
  std::string snippet;
  std::string detail;
  bool inert = false;    // payload only prints, sleeps or echoes

  friend bool operator==(const Finding&, const Finding&) = default;
};

// Path, then offset (absent first), then kind, then the remaining fields.
bool finding_less(const Finding& a, const Finding& b);

enum class Behavior {
  RemoteControl,
  SensitiveInfoTheft,
  CredentialTheft,
  SystemReconnaissance,
  ProofOfConcept,
  Downloader,
  Unclassified,
};

std::string_view behavior_name(Behavior b);

enum class Verdict { Malicious, Suspicious, Clean };

std::string_view verdict_name(Verdict v);

struct ScanConfig {
  script::ApiTable api_table = script::ApiTable::builtin();
  taint::TaintConfig taint = taint::default_taint_config();
  rules::RulePack rules = rules::bundled_rule_pack();
  std::vector<keras::RiskyOperator> risky_ops = keras::default_risky_operators();
  std::uint64_t max_file_size = 1ull << 30;
  // Header version for emitted Lambda .pyc files; the marshal layout decides when unset.
  std::optional<keras::PythonVersion> pyc_version;
};

struct SideArtifact {
  std::string name;  // `<rel_path>.lambda<N>.pyc`
  Bytes bytes;
};

struct ArtifactResult {
  std::vector<Finding> findings;
  std::vector<std::string> notes;
  std::vector<SideArtifact> side_artifacts;
};

struct RepoListing {
  std::string repo_id;
  RepoKind kind = RepoKind::Model;
  std::filesystem::path root;
  std::vector<ArtifactRef> artifacts;  // sorted by rel_path
  std::vector<Finding> errors;         // unreadable files
  std::vector<std::string> notes;
  bool empty = false;
};

// Repo id is the last two path components. A repo is a Dataset when a
// `datasets` directory sits above it, a Model otherwise. Model repos list
// every file of a known format (safe formats included, to record the skip);
// dataset repos list their root-level `.py` files. `.git` is not entered and
// symlinks are not followed. A repo holding only .gitattributes and README.md
// is empty.
RepoListing walk_repo(const std::filesystem::path& root);

// A mirror root (holding `models/` or `datasets/`) expands to its
// `<kind>/<owner>/<name>` repos; any other directory is a repo itself.
std::vector<std::filesystem::path> discover_repos(const std::filesystem::path& path);

// Dispatches one artifact to the analyzers for its format. Stage failures
// become ParserDegradation findings naming the stage.
ArtifactResult scan_artifact(const ArtifactRef& ref, ByteView bytes, const ScanConfig& config);

// Priority-ordered:
//   reverse_shell rule or RemoteControl flow            -> RemoteControl
//   chrome_credentials rule                             -> CredentialTheft
//   SensitiveInfoLeak flow from a system-info source    -> SystemReconnaissance
//   other SensitiveInfoLeak flow                        -> SensitiveInfoTheft
//   Backdoor flow (fetched content executed)            -> Downloader
//   payload findings, all inert, no flows or high rules -> ProofOfConcept
//   otherwise                                           -> Unclassified
Behavior classify_behavior(const std::vector<Finding>& findings);

// Malicious iff some finding is High or Critical, Suspicious iff the maximum
// is Low or Medium, Clean otherwise.
Verdict verdict_for(const std::vector<Finding>& findings);

inline constexpr int kSchemaVersion = 1;

struct ScanReport {
  std::string repo_id;
  RepoKind repo_kind = RepoKind::Model;
  std::size_t scanned_files = 0;
  std::vector<Finding> findings;
  Behavior behavior = Behavior::Unclassified;
  Verdict verdict = Verdict::Clean;
  std::string tool_version;
  std::string rule_pack_hash;
  std::uint64_t duration_ms = 0;
  std::vector<std::string> notes;
  std::vector<SideArtifact> side_artifacts;
};

std::string_view tool_version();

// Sorts findings and notes, derives behavior and verdict.
ScanReport aggregate_report(const RepoListing& listing, std::vector<ArtifactResult> results,
                            const std::string& rule_pack_hash, std::uint64_t duration_ms);

struct ScanOptions {
  unsigned jobs = 1;
  bool deterministic = false;  // zero durations
};

// Walks, reads and scans each repo. Artifacts of all repos are spread over
// `jobs` workers; reports come back in `repos` order and do not depend on
// the worker count.
std::vector<ScanReport> scan_repos(const std::vector<std::filesystem::path>& repos, const ScanConfig& config,
                                   const ScanOptions& options);

std::string report_json(const ScanReport& r);
// One report is an object, several an array.
std::string reports_json(const std::vector<ScanReport>& reports);
std::string report_text(const ScanReport& r);

}  // namespace hubscan::pipeline
