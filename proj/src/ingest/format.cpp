#include "hubscan/ingest/format.hpp"

#include <array>
#include <cctype>
#include <utility>

#include "hubscan/pickle/disassembler.hpp"

namespace hubscan::ingest {
namespace {

struct ExtensionRule {
  std::string_view suffix;
  FormatKind kind;
};

// Longest suffixes first so `.safetensors` never loses to a shorter match.
constexpr std::array<ExtensionRule, 21> kExtensions{{
    {".safetensors", FormatKind::Safetensors},
    {".msgpack", FormatKind::MsgPack},
    {".pickle", FormatKind::PickleRaw},
    {".joblib", FormatKind::Joblib},
    {".tflite", FormatKind::TfLite},
    {".keras", FormatKind::KerasZip},
    {".hdf5", FormatKind::Hdf5Keras},
    {".gguf", FormatKind::Gguf},
    {".onnx", FormatKind::Onnx},
    {".json", FormatKind::Json},
    {".ckpt", FormatKind::Checkpoint},
    {".dill", FormatKind::Dill},
    {".pkl", FormatKind::PickleRaw},
    {".bin", FormatKind::PickleRaw},
    {".pth", FormatKind::PickleRaw},
    {".npy", FormatKind::NpyNpz},
    {".npz", FormatKind::NpyNpz},
    {".pt", FormatKind::PickleRaw},
    {".pb", FormatKind::SavedModel},
    {".h5", FormatKind::Hdf5Keras},
    {".py", FormatKind::PythonScript},
}};

std::optional<FormatKind> kind_from_extension(std::string_view filename) {
  for (const auto& rule : kExtensions) {
    if (ends_with_ci(filename, rule.suffix)) return rule.kind;
  }
  return std::nullopt;
}

bool is_pickle_family(FormatKind k) {
  return k == FormatKind::PickleRaw || k == FormatKind::Joblib || k == FormatKind::Dill ||
         k == FormatKind::CloudPickle;
}

bool starts_with(ByteView head, std::string_view magic) {
  return head.size() >= magic.size() && as_chars(head.subspan(0, magic.size())) == magic;
}

bool is_identifier_path(std::string_view s, bool dotted) {
  if (s.empty()) return false;
  bool start = true;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (c == '.' && dotted && !start) {
      start = true;
      continue;
    }
    if (!(std::isalpha(u) || c == '_' || u >= 0x80 || (!start && std::isdigit(u)))) return false;
    start = false;
  }
  return !start;
}

}  // namespace

bool looks_like_text_pickle(ByteView head) {
  using pickle::Opcode;
  if (head.empty()) return false;
  const auto* first = pickle::opcode_info(head[0]);
  if (first == nullptr || first->proto > 1 || !std::isprint(head[0])) return false;
  static constexpr std::string_view kStarters = "(}])cNILSVFJKMTUPXGi";
  if (kStarters.find(static_cast<char>(head[0])) == std::string_view::npos) return false;

  std::size_t pos = 0;
  int decoded = 0;
  while (pos < head.size()) {
    const auto* info = pickle::opcode_info(head[pos]);
    if (info == nullptr || info->proto > 1) return false;
    pickle::PickleArg arg;
    std::size_t next = 0;
    try {
      next = pickle::decode_argument(head, pos, *info, arg);
    } catch (const pickle::DisassemblyError& e) {
      if (e.code() == pickle::DisasmErrorCode::TruncatedStream) break;
      return false;
    }
    if (info->code == Opcode::GLOBAL || info->code == Opcode::INST) {
      const auto& text = std::get<std::string>(arg);
      const auto space = text.find(' ');
      if (space == std::string::npos || !is_identifier_path(text.substr(0, space), true) ||
          !is_identifier_path(text.substr(space + 1), true)) {
        return false;
      }
    }
    ++decoded;
    pos = next;
    if (info->code == Opcode::STOP) return true;
  }
  return decoded >= 2 || (decoded == 1 && pos == head.size());
}

ArtifactFormat identify_format(std::string_view filename, ByteView head) {
  const auto ext = kind_from_extension(filename);

  std::optional<FormatKind> magic;
  if (starts_with(head, kZipMagic)) {
    magic = ends_with_ci(filename, ".keras") ? FormatKind::KerasZip : FormatKind::PyTorchZip;
  } else if (starts_with(head, kHdf5Magic)) {
    magic = FormatKind::Hdf5Keras;
  } else if (head.size() >= 2 && head[0] == 0x80 && head[1] >= 2 && head[1] <= 5) {
    magic = FormatKind::PickleRaw;
  } else if (looks_like_text_pickle(head)) {
    magic = FormatKind::PickleRaw;
  }

  if (magic) {
    if (ext) {
      // A pickle-family extension on a pickle stream keeps its more specific kind.
      if (*magic == FormatKind::PickleRaw && is_pickle_family(*ext)) return {*ext, DetectedBy::Both};
      if (*magic == *ext) return {*magic, DetectedBy::Both};
      // `.pt/.pth/.bin/.ckpt` name the PyTorch family, zipped or not.
      if (*magic == FormatKind::PyTorchZip &&
          (*ext == FormatKind::PickleRaw || *ext == FormatKind::Checkpoint) &&
          !ends_with_ci(filename, ".pkl") && !ends_with_ci(filename, ".pickle")) {
        return {*magic, DetectedBy::Both};
      }
    }
    return {*magic, DetectedBy::Magic};
  }
  if (ext) return {*ext, DetectedBy::Extension};
  return {};
}

VulnClass classify_vulnerability(const ArtifactFormat& fmt) {
  switch (fmt.kind) {
    case FormatKind::PickleRaw:
    case FormatKind::PyTorchZip:
    case FormatKind::Joblib:
    case FormatKind::Dill:
    case FormatKind::CloudPickle:
    case FormatKind::Marshal:
      return VulnClass::Vulnerable;
    case FormatKind::Hdf5Keras:
    case FormatKind::KerasZip:
    case FormatKind::SavedModel:
    case FormatKind::Checkpoint:
    case FormatKind::TfLite:
      return VulnClass::Partial;
    case FormatKind::Gguf:
    case FormatKind::Onnx:
    case FormatKind::Json:
    case FormatKind::MsgPack:
    case FormatKind::Safetensors:
    case FormatKind::NpyNpz:
      return VulnClass::Safe;
    case FormatKind::PythonScript:
    case FormatKind::Unknown:
      return VulnClass::Unknown;
  }
  return VulnClass::Unknown;
}

std::string_view format_name(FormatKind kind) {
  switch (kind) {
    case FormatKind::PickleRaw: return "PickleRaw";
    case FormatKind::PyTorchZip: return "PyTorchZip";
    case FormatKind::Joblib: return "Joblib";
    case FormatKind::Dill: return "Dill";
    case FormatKind::CloudPickle: return "CloudPickle";
    case FormatKind::Marshal: return "Marshal";
    case FormatKind::Hdf5Keras: return "Hdf5Keras";
    case FormatKind::KerasZip: return "KerasZip";
    case FormatKind::SavedModel: return "SavedModel";
    case FormatKind::Checkpoint: return "Checkpoint";
    case FormatKind::TfLite: return "TfLite";
    case FormatKind::Gguf: return "Gguf";
    case FormatKind::Onnx: return "Onnx";
    case FormatKind::Json: return "Json";
    case FormatKind::MsgPack: return "MsgPack";
    case FormatKind::Safetensors: return "Safetensors";
    case FormatKind::NpyNpz: return "NpyNpz";
    case FormatKind::PythonScript: return "PythonScript";
    case FormatKind::Unknown: return "Unknown";
  }
  return "Unknown";
}

std::string_view detected_by_name(DetectedBy by) {
  switch (by) {
    case DetectedBy::Extension: return "Extension";
    case DetectedBy::Magic: return "Magic";
    case DetectedBy::Both: return "Both";
  }
  return "Extension";
}

std::string_view vuln_class_name(VulnClass v) {
  switch (v) {
    case VulnClass::Vulnerable: return "Vulnerable";
    case VulnClass::Partial: return "Partial";
    case VulnClass::Safe: return "Safe";
    case VulnClass::Unknown: return "Unknown";
  }
  return "Unknown";
}

}  // namespace hubscan::ingest
