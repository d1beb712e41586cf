#pragma once

#include <nlohmann/json.hpp>

#include "flowrl/params.hpp"

namespace flowrl::ad {

nlohmann::ordered_json paramset_to_json(const ParamSet& params);
ParamSet paramset_from_json(const nlohmann::json& j);

/// Copies values from `src` into `dst`; names and shapes must match exactly.
void copy_param_values(const ParamSet& src, ParamSet& dst);

}  // namespace flowrl::ad
