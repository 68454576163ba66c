#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hubscan/common.hpp"

namespace hubscan::ingest {

struct ArchiveEntry {
  std::string path;  // normalized, archive-internal
  Bytes bytes;
  std::uint64_t declared_size = 0;
};

enum class ZipErrorCode { CorruptArchive, UnsupportedCompression, PathTraversal, EntryTooLarge };

class ZipError : public Error {
 public:
  ZipError(ZipErrorCode code, std::string message) : Error(std::move(message)), code_(code) {}
  ZipErrorCode code() const { return code_; }

 private:
  ZipErrorCode code_;
};

struct ZipOptions {
  // Per-entry cap on decompressed size.
  std::uint64_t max_entry_size = 512ull * 1024 * 1024;
};

struct ZipDirectoryEntry {
  std::string path;  // normalized
  std::uint16_t method = 0;
  std::uint16_t flags = 0;
  std::uint32_t crc32 = 0;
  std::uint64_t compressed_size = 0;
  std::uint64_t uncompressed_size = 0;
  std::uint64_t local_header_offset = 0;
};

// Central-directory listing in directory order. Throws ZipError.
std::vector<ZipDirectoryEntry> list_zip(ByteView zip);

// Decompresses one entry and verifies its size and CRC-32.
ArchiveEntry read_zip_entry(ByteView zip, const ZipDirectoryEntry& entry, const ZipOptions& options = {});

// Every `.pkl` member at any depth, in central-directory order.
std::vector<ArchiveEntry> extract_pickle_members(ByteView zip, const ZipOptions& options = {});

// The member whose normalized path equals `path`, if present.
std::optional<ArchiveEntry> extract_member(ByteView zip, std::string_view path, const ZipOptions& options = {});

// Collapses `.`/`..`/duplicate separators; throws PathTraversal when the
// result would leave the archive root.
std::string normalize_entry_path(std::string_view raw);

}  // namespace hubscan::ingest
