#pragma once

#include <string_view>

#include "hubscan/script/analyzer.hpp"

namespace hubscan::script::detail {

// Import bindings recovered line by line with regular expressions, for
// sources the parser rejects.
ImportMap scan_import_lines(std::string_view source);

}  // namespace hubscan::script::detail
