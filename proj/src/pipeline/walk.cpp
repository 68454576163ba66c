#include <algorithm>
#include <fstream>
#include <set>

#include "hubscan/pipeline/pipeline.hpp"

namespace hubscan::pipeline {

namespace fs = std::filesystem;

namespace {

fs::path clean(const fs::path& p) {
  auto n = p.lexically_normal();
  if (!n.has_filename() && n.has_parent_path()) n = n.parent_path();
  return n;
}

Finding io_error(const std::string& rel, const std::string& what) {
  Finding f;
  f.kind = FindingKind::ParserDegradation;
  f.severity = Severity::Low;
  f.path = rel;
  f.category = "io";
  f.detail = "cannot read file: " + what;
  return f;
}

}  // namespace

RepoListing walk_repo(const fs::path& root_in) {
  RepoListing out;
  const auto root = clean(root_in);
  out.root = root;

  const auto name = root.filename().string();
  const auto owner = root.parent_path().filename().string();
  out.repo_id = owner.empty() ? name : owner + "/" + name;
  for (const auto& part : fs::absolute(root).parent_path()) {
    if (part == "datasets") out.kind = RepoKind::Dataset;
  }

  std::vector<std::string> files;
  std::error_code ec;
  fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec), end;
  if (ec) {
    out.errors.push_back(io_error(".", ec.message()));
    return out;
  }
  for (; it != end; it.increment(ec)) {
    if (ec) {
      out.errors.push_back(io_error(".", ec.message()));
      break;
    }
    const auto st = it->symlink_status(ec);
    const auto rel = it->path().lexically_relative(root).generic_string();
    if (ec) {
      out.errors.push_back(io_error(rel, ec.message()));
      ec.clear();
      continue;
    }
    if (fs::is_symlink(st)) {
      out.notes.push_back(rel + ": symlink not followed");
      if (fs::is_directory(it->path(), ec)) it.disable_recursion_pending();
      ec.clear();
      continue;
    }
    if (fs::is_directory(st)) {
      if (it->path().filename() == ".git") it.disable_recursion_pending();
      continue;
    }
    if (fs::is_regular_file(st)) files.push_back(rel);
  }
  std::sort(files.begin(), files.end());

  out.empty = std::all_of(files.begin(), files.end(),
                          [](const std::string& f) { return f == ".gitattributes" || f == "README.md"; });
  if (out.empty) {
    out.notes.push_back("empty repo");
    return out;
  }

  for (const auto& rel : files) {
    if (out.kind == RepoKind::Dataset && (rel.find('/') != std::string::npos || !ends_with_ci(rel, ".py"))) continue;
    std::ifstream in(root / rel, std::ios::binary);
    if (!in) {
      out.errors.push_back(io_error(rel, "open failed"));
      continue;
    }
    std::uint8_t head[ingest::kIdentifyHeadSize];
    in.read(reinterpret_cast<char*>(head), sizeof head);
    if (in.bad()) {
      out.errors.push_back(io_error(rel, "read failed"));
      continue;
    }
    const auto fmt = ingest::identify_format(rel, ByteView(head, static_cast<std::size_t>(in.gcount())));
    if (fmt.kind == ingest::FormatKind::Unknown) continue;
    out.artifacts.push_back({out.repo_id, out.kind, rel, fmt});
  }
  return out;
}

std::vector<fs::path> discover_repos(const fs::path& path_in) {
  const auto path = clean(path_in);
  std::vector<fs::path> repos;
  std::error_code ec;
  bool mirror = false;
  for (const char* kind : {"models", "datasets"}) {
    const auto dir = path / kind;
    if (!fs::is_directory(dir, ec)) continue;
    mirror = true;
    std::set<fs::path> found;
    for (const auto& owner : fs::directory_iterator(dir, ec)) {
      if (!owner.is_directory(ec) || owner.is_symlink(ec)) continue;
      for (const auto& repo : fs::directory_iterator(owner.path(), ec)) {
        if (repo.is_directory(ec) && !repo.is_symlink(ec)) found.insert(repo.path());
      }
    }
    repos.insert(repos.end(), found.begin(), found.end());
  }
  if (!mirror) repos.push_back(path);
  return repos;
}

}  // namespace hubscan::pipeline
