#pragma once

#include "ebm/params.hpp"

#include <json.hpp>

#include <string>

namespace ebm {

struct RunConfig {
    PhysicalParams p;
    double Q = 247.0;
    ContinentConfig cfg = aquaplanet_config();
};

// JSON document whose keys are PhysicalParams field names, Q, and the
// continent keys (either dotted, "continent.l", or nested in a "continent"
// object). Missing keys keep their defaults. Unknown keys, non-numeric values
// and syntax errors throw InvalidParameter naming the key or line.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

nlohmann::json to_json(const RunConfig& rc);

} // namespace ebm
