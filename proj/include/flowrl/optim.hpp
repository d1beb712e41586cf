#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "flowrl/params.hpp"

#include <nlohmann/json_fwd.hpp>

namespace flowrl::ad {

enum class OptMode { kSgd, kAdam };

std::string opt_mode_name(OptMode mode);
OptMode opt_mode_from_name(const std::string& name);

struct OptimizerConfig {
    OptMode mode = OptMode::kAdam;
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// SGD / Adam over a ParamSet. Adam keeps first/second moments per parameter
/// and a shared step counter; state is serializable for checkpoints.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

    const OptimizerConfig& config() const { return cfg_; }
    std::size_t step_count() const { return step_; }

    /// One update using the accumulated gradients. Throws on a non-finite
    /// gradient, naming the offending parameter.
    void step(ParamSet& params);

    nlohmann::json state_to_json() const;
    void state_from_json(const nlohmann::json& j, const ParamSet& params);

private:
    void ensure_state(const ParamSet& params);

    OptimizerConfig cfg_;
    std::size_t step_ = 0;
    std::vector<Array> m_;
    std::vector<Array> v_;
};

}  // namespace flowrl::ad
