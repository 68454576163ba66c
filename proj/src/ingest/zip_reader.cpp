#include "hubscan/ingest/zip_reader.hpp"

#include <zlib.h>

#include <algorithm>

namespace hubscan::ingest {
namespace {

constexpr std::uint32_t kEocdSig = 0x06054b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::size_t kEocdSize = 22;
constexpr std::size_t kCentralSize = 46;
constexpr std::size_t kLocalSize = 30;

[[noreturn]] void corrupt(const std::string& why) { throw ZipError(ZipErrorCode::CorruptArchive, why); }

std::uint16_t u16(ByteView b, std::size_t p) {
  if (p + 2 > b.size()) corrupt("record extends past end of archive");
  return static_cast<std::uint16_t>(b[p] | (b[p + 1] << 8));
}

std::uint32_t u32(ByteView b, std::size_t p) {
  if (p + 4 > b.size()) corrupt("record extends past end of archive");
  return static_cast<std::uint32_t>(b[p]) | (static_cast<std::uint32_t>(b[p + 1]) << 8) |
         (static_cast<std::uint32_t>(b[p + 2]) << 16) | (static_cast<std::uint32_t>(b[p + 3]) << 24);
}

std::size_t find_eocd(ByteView zip) {
  if (zip.size() < kEocdSize) corrupt("archive too small for end-of-central-directory record");
  const std::size_t lowest = zip.size() > kEocdSize + 0xFFFF ? zip.size() - kEocdSize - 0xFFFF : 0;
  for (std::size_t p = zip.size() - kEocdSize + 1; p-- > lowest;) {
    if (u32(zip, p) == kEocdSig && p + kEocdSize + u16(zip, p + 20) <= zip.size()) return p;
  }
  corrupt("missing end-of-central-directory record");
}

Bytes inflate_raw(ByteView data, std::uint64_t expected, const ZipOptions& options) {
  Bytes out(static_cast<std::size_t>(expected));
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) corrupt("inflate init failed");
  zs.next_in = const_cast<Bytef*>(data.data());
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = inflate(&zs, Z_FINISH);
  std::uint64_t produced = zs.total_out;
  if (rc == Z_BUF_ERROR || rc == Z_OK) {
    // Output buffer full before the stream ended: probe for excess data.
    std::uint8_t probe[1];
    zs.next_out = probe;
    zs.avail_out = 1;
    rc = inflate(&zs, Z_FINISH);
    produced = zs.total_out;
  }
  inflateEnd(&zs);
  if (produced > options.max_entry_size) {
    throw ZipError(ZipErrorCode::EntryTooLarge, "entry inflates beyond the size cap");
  }
  if (rc != Z_STREAM_END) corrupt("deflate stream is damaged or longer than declared");
  if (produced != expected) corrupt("decompressed size does not match declared size");
  return out;
}

}  // namespace

std::string normalize_entry_path(std::string_view raw) {
  std::string p(raw);
  std::replace(p.begin(), p.end(), '\\', '/');
  if (!p.empty() && p.front() == '/') {
    throw ZipError(ZipErrorCode::PathTraversal, "absolute entry path: " + p);
  }
  if (p.size() >= 2 && p[1] == ':') {
    throw ZipError(ZipErrorCode::PathTraversal, "drive-qualified entry path: " + p);
  }
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= p.size()) {
    auto end = p.find('/', start);
    if (end == std::string::npos) end = p.size();
    std::string seg = p.substr(start, end - start);
    if (seg == "..") {
      if (parts.empty()) throw ZipError(ZipErrorCode::PathTraversal, "entry path escapes archive root: " + p);
      parts.pop_back();
    } else if (!seg.empty() && seg != ".") {
      parts.push_back(std::move(seg));
    }
    start = end + 1;
  }
  std::string out;
  for (const auto& s : parts) {
    if (!out.empty()) out += '/';
    out += s;
  }
  if (!p.empty() && p.back() == '/' && !out.empty()) out += '/';
  return out;
}

std::vector<ZipDirectoryEntry> list_zip(ByteView zip) {
  const std::size_t eocd = find_eocd(zip);
  const std::uint16_t disk = u16(zip, eocd + 4);
  const std::uint16_t cd_disk = u16(zip, eocd + 6);
  const std::uint16_t count = u16(zip, eocd + 10);
  const std::uint32_t cd_size = u32(zip, eocd + 12);
  const std::uint32_t cd_offset = u32(zip, eocd + 16);
  if (count == 0xFFFF || cd_size == 0xFFFFFFFF || cd_offset == 0xFFFFFFFF) corrupt("ZIP64 archives are not supported");
  if (disk != 0 || cd_disk != 0) corrupt("multi-disk archives are not supported");
  if (static_cast<std::uint64_t>(cd_offset) + cd_size > eocd) corrupt("central directory outside archive");

  std::vector<ZipDirectoryEntry> entries;
  std::size_t p = cd_offset;
  for (std::uint16_t i = 0; i < count; ++i) {
    if (p + kCentralSize > eocd || u32(zip, p) != kCentralSig) corrupt("invalid central directory entry");
    ZipDirectoryEntry e;
    e.flags = u16(zip, p + 8);
    e.method = u16(zip, p + 10);
    e.crc32 = u32(zip, p + 16);
    e.compressed_size = u32(zip, p + 20);
    e.uncompressed_size = u32(zip, p + 24);
    const std::uint16_t name_len = u16(zip, p + 28);
    const std::uint16_t extra_len = u16(zip, p + 30);
    const std::uint16_t comment_len = u16(zip, p + 32);
    e.local_header_offset = u32(zip, p + 42);
    if (p + kCentralSize + name_len > eocd) corrupt("central directory name past end");
    if (e.compressed_size == 0xFFFFFFFF || e.uncompressed_size == 0xFFFFFFFF ||
        e.local_header_offset == 0xFFFFFFFF) {
      corrupt("ZIP64 entries are not supported");
    }
    e.path = normalize_entry_path(as_chars(zip.subspan(p + kCentralSize, name_len)));
    entries.push_back(std::move(e));
    p += kCentralSize + name_len + extra_len + comment_len;
  }
  return entries;
}

ArchiveEntry read_zip_entry(ByteView zip, const ZipDirectoryEntry& entry, const ZipOptions& options) {
  if (entry.flags & 0x1) throw ZipError(ZipErrorCode::UnsupportedCompression, "encrypted entry: " + entry.path);
  if (entry.method != 0 && entry.method != 8) {
    throw ZipError(ZipErrorCode::UnsupportedCompression,
                   "compression method " + std::to_string(entry.method) + " in " + entry.path);
  }
  if (entry.uncompressed_size > options.max_entry_size) {
    throw ZipError(ZipErrorCode::EntryTooLarge, "entry exceeds the size cap: " + entry.path);
  }
  const std::size_t lh = static_cast<std::size_t>(entry.local_header_offset);
  if (lh + kLocalSize > zip.size() || u32(zip, lh) != kLocalSig) corrupt("invalid local header for " + entry.path);
  const std::size_t data_start = lh + kLocalSize + u16(zip, lh + 26) + u16(zip, lh + 28);
  if (data_start > zip.size() || entry.compressed_size > zip.size() - data_start) {
    corrupt("entry data past end of archive: " + entry.path);
  }
  auto data = zip.subspan(data_start, static_cast<std::size_t>(entry.compressed_size));

  ArchiveEntry out;
  out.path = entry.path;
  out.declared_size = entry.uncompressed_size;
  if (entry.method == 0) {
    if (entry.compressed_size != entry.uncompressed_size) corrupt("stored entry size mismatch: " + entry.path);
    out.bytes.assign(data.begin(), data.end());
  } else {
    out.bytes = inflate_raw(data, entry.uncompressed_size, options);
  }
  const auto crc = static_cast<std::uint32_t>(
      ::crc32(::crc32(0L, Z_NULL, 0), out.bytes.data(), static_cast<uInt>(out.bytes.size())));
  if (crc != entry.crc32) corrupt("CRC mismatch in " + entry.path);
  return out;
}

std::vector<ArchiveEntry> extract_pickle_members(ByteView zip, const ZipOptions& options) {
  std::vector<ArchiveEntry> out;
  for (const auto& e : list_zip(zip)) {
    if (e.path.size() >= 4 && e.path.ends_with(".pkl")) out.push_back(read_zip_entry(zip, e, options));
  }
  return out;
}

std::optional<ArchiveEntry> extract_member(ByteView zip, std::string_view path, const ZipOptions& options) {
  for (const auto& e : list_zip(zip)) {
    if (e.path == path) return read_zip_entry(zip, e, options);
  }
  return std::nullopt;
}

}  // namespace hubscan::ingest
