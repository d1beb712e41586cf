#include "flowrl/mlp.hpp"

#include <cmath>

#include "flowrl/errors.hpp"

namespace flowrl::ad {

std::vector<std::size_t> MlpSpec::layer_dims() const {
    std::vector<std::size_t> dims;
    dims.push_back(input_dim);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(output_dim);
    return dims;
}

void init_mlp_params(ParamSet& params, const MlpSpec& spec, RngStream& rng) {
    auto dims = spec.layer_dims();
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        std::size_t fan_in = dims[l];
        std::size_t fan_out = dims[l + 1];
        Array w({fan_out, fan_in});
        double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = s * rng.normal();
        params.add("w" + std::to_string(l), std::move(w));
        params.add("b" + std::to_string(l), Array({fan_out}));
    }
}

Slot mlp_forward(Tape& tape, ParamSet& params, const MlpSpec& spec, Slot input) {
    const Array& in = tape.value(input);
    require(in.rows() == spec.input_dim, "mlp: input shape ", shape_str(in),
            " does not match input_dim ", spec.input_dim);
    bool batched = in.rank() == 2;
    Slot h = input;
    std::size_t layers = spec.layer_count();
    for (std::size_t l = 0; l < layers; ++l) {
        Slot w = tape.param(params, "w" + std::to_string(l));
        Slot b = tape.param(params, "b" + std::to_string(l));
        Slot z = tape.matmul(w, h);
        z = batched ? tape.add_cols(z, b) : tape.add(z, b);
        h = (l + 1 < layers) ? tape.tanh(z) : z;
    }
    return h;
}

Array mlp_eval(const ParamSet& params, const MlpSpec& spec, const Array& input) {
    require(input.rows() == spec.input_dim, "mlp: input shape ", shape_str(input),
            " does not match input_dim ", spec.input_dim);
    std::size_t cols = input.rank() == 2 ? input.cols() : 1;
    Array h = input;
    std::size_t layers = spec.layer_count();
    for (std::size_t l = 0; l < layers; ++l) {
        const Array& w = params.value("w" + std::to_string(l));
        const Array& b = params.value("b" + std::to_string(l));
        std::size_t m = w.rows();
        std::size_t k = w.cols();
        Array z(input.rank() == 2 ? std::vector<std::size_t>{m, cols}
                                  : std::vector<std::size_t>{m});
        // same accumulation order as the tape matmul, then bias, then tanh
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < cols; ++j) {
                double s = 0.0;
                for (std::size_t t = 0; t < k; ++t) s += w[i * k + t] * h[t * cols + j];
                z[i * cols + j] = s;
            }
        }
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < cols; ++j) z[i * cols + j] += b[i];
        }
        if (l + 1 < layers) {
            for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::tanh(z[i]);
        }
        h = std::move(z);
    }
    return h;
}

}  // namespace flowrl::ad
