#include <atomic>
#include <chrono>
#include <fstream>
#include <iterator>
#include <thread>

#include "hubscan/pipeline/pipeline.hpp"

namespace hubscan::pipeline {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t ms_since(Clock::time_point t0) {
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count());
}

ArtifactResult read_and_scan(const RepoListing& repo, const ArtifactRef& ref, const ScanConfig& config) {
  auto fail = [&](const std::string& what) {
    ArtifactResult r;
    auto& f = r.findings.emplace_back();
    f.kind = FindingKind::ParserDegradation;
    f.severity = Severity::Low;
    f.path = ref.rel_path;
    f.category = "io";
    f.detail = what;
    return r;
  };
  if (ingest::classify_vulnerability(ref.format) == ingest::VulnClass::Safe) return scan_artifact(ref, {}, config);

  const auto path = repo.root / ref.rel_path;
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) return fail("cannot read file: " + ec.message());
  if (size > config.max_file_size) {
    return fail("file exceeds the " + std::to_string(config.max_file_size) + " byte limit");
  }
  std::ifstream in(path, std::ios::binary);
  Bytes bytes(size);
  if (!in || !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
    return fail("cannot read file: read failed");
  }
  return scan_artifact(ref, bytes, config);
}

}  // namespace

std::vector<ScanReport> scan_repos(const std::vector<fs::path>& repos, const ScanConfig& config,
                                   const ScanOptions& options) {
  std::vector<RepoListing> listings;
  std::vector<std::uint64_t> walk_ms;
  for (const auto& r : repos) {
    const auto t0 = Clock::now();
    listings.push_back(walk_repo(r));
    walk_ms.push_back(ms_since(t0));
  }

  struct Task {
    std::size_t repo;
    std::size_t artifact;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < listings.size(); ++i) {
    for (std::size_t j = 0; j < listings[i].artifacts.size(); ++j) tasks.push_back({i, j});
  }
  std::vector<ArtifactResult> results(tasks.size());
  std::vector<std::uint64_t> task_ms(tasks.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) {
      const auto t0 = Clock::now();
      const auto& repo = listings[tasks[i].repo];
      results[i] = read_and_scan(repo, repo.artifacts[tasks[i].artifact], config);
      task_ms[i] = ms_since(t0);
    }
  };
  const auto jobs = std::max(1u, options.jobs);
  if (jobs == 1 || tasks.size() <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < jobs && k < tasks.size(); ++k) pool.emplace_back(worker);
  }

  std::vector<ScanReport> reports;
  std::size_t t = 0;
  for (std::size_t i = 0; i < listings.size(); ++i) {
    std::vector<ArtifactResult> mine;
    std::uint64_t ms = walk_ms[i];
    for (; t < tasks.size() && tasks[t].repo == i; ++t) {
      mine.push_back(std::move(results[t]));
      ms += task_ms[t];
    }
    reports.push_back(aggregate_report(listings[i], std::move(mine), config.rules.hash,
                                       options.deterministic ? 0 : ms));
  }
  return reports;
}

}  // namespace hubscan::pipeline
