#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hubscan/common.hpp"
#include "hubscan/keras/model.hpp"

namespace hubscan::keras {

struct RiskyOperator {
  std::string name;                  // reported name, e.g. tf.io.read_file
  std::vector<std::string> aliases;  // graph op names, e.g. ReadFile
};

// tf.io.read_file (ReadFile) and tf.io.write_file (WriteFile).
const std::vector<RiskyOperator>& default_risky_operators();

// One operator per line: `name [alias...]`, `#` comments. Throws Error on a
// duplicate name.
std::vector<RiskyOperator> parse_risky_operators(std::string_view text);

struct UnsafeOperatorSet {
  std::set<std::string> ops;
};

// Substring match of every operator name and alias against each layer's JSON
// text and each raw string. Hits are reported under the operator name.
UnsafeOperatorSet check_unsafe_operators(const std::vector<LayerConfig>& layers,
                                         const std::vector<std::string>& raw_strings,
                                         const std::vector<RiskyOperator>& risky = default_risky_operators());

struct SavedModelScan {
  std::vector<LayerConfig> layers;
  std::vector<std::string> strings;  // every printable string payload, deduplicated
  bool degraded = false;             // wire format was malformed; strings come from a byte scan
  std::optional<std::size_t> error_offset;
  std::string error;
};

// Schema-less protobuf walk. Never throws.
SavedModelScan scan_saved_model_detailed(ByteView bytes);

std::vector<LayerConfig> scan_saved_model(ByteView bytes);

}  // namespace hubscan::keras
