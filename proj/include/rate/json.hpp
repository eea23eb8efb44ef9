#pragma once

#include <string>

#include <json.hpp>

#include "rate/model.hpp"

namespace rate {

// Compact JSON with keys in sorted order and floating-point numbers rendered
// with 17 significant digits; non-finite numbers become null.
std::string canonical_json(const nlohmann::json& value);

nlohmann::json to_json(const RateEstimate& estimate);

}  // namespace rate
