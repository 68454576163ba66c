#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "hubscan/common.hpp"

namespace hubscan::ingest {

enum class FormatKind {
  PickleRaw,
  PyTorchZip,
  Joblib,
  Dill,
  CloudPickle,
  Marshal,
  Hdf5Keras,
  KerasZip,
  SavedModel,
  Checkpoint,
  TfLite,
  Gguf,
  Onnx,
  Json,
  MsgPack,
  Safetensors,
  NpyNpz,
  PythonScript,
  Unknown,
};

enum class DetectedBy { Extension, Magic, Both };

struct ArtifactFormat {
  FormatKind kind = FormatKind::Unknown;
  // Absent iff kind == Unknown.
  std::optional<DetectedBy> detected_by;

  friend bool operator==(const ArtifactFormat&, const ArtifactFormat&) = default;
};

enum class VulnClass { Vulnerable, Partial, Safe, Unknown };

inline constexpr std::string_view kZipMagic{"PK\x03\x04", 4};
inline constexpr std::string_view kHdf5Magic{"\x89HDF\r\n\x1a\n", 8};

// Number of leading bytes callers should pass to identify_format. Shorter
// heads are accepted; the protocol-0 pickle probe just sees less.
inline constexpr std::size_t kIdentifyHeadSize = 64;

ArtifactFormat identify_format(std::string_view filename, ByteView head);

VulnClass classify_vulnerability(const ArtifactFormat& fmt);

std::string_view format_name(FormatKind kind);
std::string_view detected_by_name(DetectedBy by);
std::string_view vuln_class_name(VulnClass v);

// True when `head` plausibly starts a protocol 0/1 pickle: every opcode that
// fits in the head decodes with well-formed text arguments.
bool looks_like_text_pickle(ByteView head);

}  // namespace hubscan::ingest
