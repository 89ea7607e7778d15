#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cedi/model.hpp"

namespace cedi::model {

// One naming scheme for CediConfig keys, shared by the checkpoint format and
// the run-config file.

// Applies "key = value"; returns false when the key is not a model key.
bool apply_config_key(CediConfig& config, const std::string& key,
                      const std::string& value);

// All model keys in a stable order, values formatted to round-trip exactly.
std::vector<std::pair<std::string, std::string>> config_entries(
    const CediConfig& config);

// %.17g: shortest text that reparses to the identical double.
std::string format_double_exact(double v);

}  // namespace cedi::model
