#pragma once

#include <cstddef>
#include <vector>

#include "flowrl/params.hpp"
#include "flowrl/rng.hpp"
#include "flowrl/tape.hpp"

namespace flowrl::ad {

/// Fully connected net with tanh hidden layers and a linear output layer.
/// Parameters are named w0/b0 .. wK/bK inside the owning ParamSet.
struct MlpSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden;
    std::size_t output_dim = 0;

    std::size_t layer_count() const { return hidden.size() + 1; }
    std::vector<std::size_t> layer_dims() const;  // input, hidden..., output
};

/// Gaussian entries scaled 1/sqrt(fan_in); zero biases.
void init_mlp_params(ParamSet& params, const MlpSpec& spec, RngStream& rng);

/// Forward on the tape. Input is [in] or [in,B] (columns are batch members).
Slot mlp_forward(Tape& tape, ParamSet& params, const MlpSpec& spec, Slot input);

/// Plain evaluation without a tape. Loop order matches mlp_forward exactly,
/// so results are bit-identical to the tape path.
Array mlp_eval(const ParamSet& params, const MlpSpec& spec, const Array& input);

}  // namespace flowrl::ad
