#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hubscan/common.hpp"
#include "hubscan/keras/model.hpp"

namespace hubscan::keras {

struct PythonVersion {
  int major = 3;
  int minor = 10;

  friend bool operator==(const PythonVersion&, const PythonVersion&) = default;
};

// "3.10" -> {3, 10}.
std::optional<PythonVersion> parse_python_version(std::string_view text);
std::string to_string(PythonVersion v);

// importlib MAGIC_NUMBER low word for 3.6 through 3.13.
std::optional<std::uint16_t> pyc_magic(PythonVersion v);

// A loadable .pyc image: magic, then zeroed flags/mtime/size fields (the
// flags word is absent before 3.7), then the marshal blob.
// Throws Error for versions without a known magic.
Bytes pyc_image(ByteView marshal_blob, PythonVersion v);

// Code-object field layout families in the marshal format.
enum class MarshalLayout {
  Py36To37,   // 5 header ints, lnotab
  Py38To310,  // 6 header ints (posonlyargcount added)
  Py311Plus,  // 5 header ints, qualname + exception table
  Unknown,    // structured walk failed; strings came from a byte scan
};

std::string_view marshal_layout_name(MarshalLayout l);

// Version written into the .pyc header when none is configured.
PythonVersion default_python_version(MarshalLayout l);

struct MarshalStrings {
  std::vector<std::string> strings;  // first-occurrence order, deduplicated
  MarshalLayout layout = MarshalLayout::Unknown;
};

// Collects every str object (names, constants, filenames) from a marshalled
// code object. Tries each known code-object layout and accepts the one that
// consumes the blob exactly; falls back to scanning for string-typed records.
// Never throws.
MarshalStrings extract_marshal_strings(ByteView blob);

enum class LambdaErrorCode { MissingFunctionField, Base64Error };

class LambdaError : public Error {
 public:
  LambdaError(LambdaErrorCode code, std::string message) : Error(std::move(message)), code_(code) {}
  LambdaErrorCode code() const { return code_; }

 private:
  LambdaErrorCode code_;
};

struct LambdaPayload {
  // Decoded marshal blob; empty when the layer references a named function.
  Bytes bytecode;
  std::vector<std::string> embedded_strings;
  // Where the payload sat: "function", "function[0]", "function.config.code",
  // or "function.config" for a named-function reference.
  std::string payload_key;
  MarshalLayout layout = MarshalLayout::Unknown;
};

// Whitespace-tolerant standard base64. Throws LambdaError(Base64Error).
Bytes decode_base64(std::string_view text);

// Throws LambdaError.
LambdaPayload extract_lambda_bytecode(const LayerConfig& layer);

struct LambdaLayer {
  std::string layer_name;
  std::optional<Bytes> bytecode;
  std::vector<std::string> embedded_strings;
  std::string payload_key;
  MarshalLayout layout = MarshalLayout::Unknown;
  // Set when extraction failed ("opaque Lambda payload").
  std::optional<LambdaErrorCode> error;
  std::string error_detail;
};

struct LambdaFinding {
  bool has_lambda = false;
  std::vector<LambdaLayer> lambdas;  // one per Lambda layer, in layer order
};

LambdaFinding detect_lambda(const std::vector<LayerConfig>& layers);

}  // namespace hubscan::keras
