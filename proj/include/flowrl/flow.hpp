#pragma once

#include <cstdint>
#include <vector>

#include "flowrl/mlp.hpp"
#include "flowrl/optim.hpp"
#include "flowrl/rng.hpp"
#include "flowrl/tape.hpp"

namespace flowrl::flow {

/// Linear noise schedule sigma(t) = sigma_max * (1 - t) over t in [0,1],
/// discretized into `steps` Euler steps of width dt = 1/steps. Time runs from
/// pure noise at t=0 to data at t=1.
struct NoiseSchedule {
    double sigma_max = 0.6;
    std::size_t steps = 10;

    double dt() const { return 1.0 / static_cast<double>(steps); }
    double time_at(std::size_t k) const { return static_cast<double>(k) / static_cast<double>(steps); }
    double sigma(double t) const { return sigma_max * (1.0 - t); }
    /// Transition variance sigma(t_k)^2 * dt of step k.
    double sigma2dt(std::size_t k) const;
    bool stochastic() const { return sigma_max > 0.0; }
    void validate() const;
};

struct GeneratorSpec {
    std::size_t sample_dim = 2;
    std::size_t condition_count = 8;
    std::vector<std::size_t> hidden = {64, 64, 64};

    /// Input is [x ; t, sin 2*pi*t, cos 2*pi*t ; one-hot condition].
    ad::MlpSpec mlp_spec() const;
};

/// One input column per (x, t, c) triple; columns form the batch.
ad::Array assemble_inputs(const GeneratorSpec& spec,
                          const std::vector<const ad::Array*>& xs,
                          const std::vector<double>& ts,
                          const std::vector<std::size_t>& cs);

/// Conditional velocity MLP; the drift of the sampling policy.
class VelocityField {
public:
    VelocityField(GeneratorSpec spec, std::uint64_t init_seed);
    VelocityField(GeneratorSpec spec, ad::ParamSet params);

    const GeneratorSpec& spec() const { return spec_; }
    ad::ParamSet& params() { return params_; }
    const ad::ParamSet& params() const { return params_; }

    ad::Array velocity(const ad::Array& x, double t, std::size_t c) const;

    /// Euler mean of the next state: x + v(x, t_k, c) * dt.
    ad::Array step_mean(const ad::Array& x, std::size_t k, std::size_t c,
                        const NoiseSchedule& sched) const;

    /// MLP forward for a pre-assembled input matrix (gradients flow to theta).
    ad::Slot forward_on_tape(ad::Tape& tape, const ad::Array& input_cols);

private:
    GeneratorSpec spec_;
    ad::ParamSet params_;
};

/// Immutable deep copy of the policy parameters at snapshot time.
class PolicySnapshot {
public:
    explicit PolicySnapshot(const VelocityField& src)
        : field_(src.spec(), src.params().clone()) {}

    const VelocityField& field() const { return field_; }

private:
    VelocityField field_;
};

/// A sampled denoising path: states x_0..x_T, per-step Euler means and the
/// Gaussian transition log-probs under the sampling policy (empty when the
/// schedule is deterministic).
struct Trajectory {
    std::size_t condition = 0;
    std::uint64_t seed_key = 0;
    std::vector<ad::Array> states;
    std::vector<ad::Array> means;
    std::vector<double> logprobs;

    const ad::Array& final_state() const { return states.back(); }
};

Trajectory sample_ode(const VelocityField& field, const NoiseSchedule& sched,
                      std::size_t condition, std::uint64_t stream_key);
Trajectory sample_sde(const VelocityField& field, const NoiseSchedule& sched,
                      std::size_t condition, std::uint64_t stream_key);

/// log N(x_next; mu, sigma2dt * I).
double transition_logprob(const ad::Array& mu, double sigma2dt, const ad::Array& x_next);

/// Batched tape version: mu_cols is [D,B], x_next_cols a constant [D,B];
/// returns the per-column log-probs [B].
ad::Slot transition_logprob_on_tape(ad::Tape& tape, ad::Slot mu_cols, double sigma2dt,
                                    const ad::Array& x_next_cols);

/// KL between the step-k transition kernels of two policies at state x:
/// ||mu_theta - mu_old||^2 / (2 sigma(t_k)^2 dt), the equal-covariance
/// Gaussian closed form.
double transition_kl(const VelocityField& current, const PolicySnapshot& snapshot,
                     const ad::Array& x, std::size_t k, std::size_t condition,
                     const NoiseSchedule& sched);

struct LabeledSample {
    ad::Array x;
    std::size_t condition = 0;
};

struct PretrainConfig {
    std::size_t steps = 2000;
    double lr = 1e-3;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
};

/// Flow-matching regression: v_theta(x_t, t, c) -> x1 - z with
/// x_t = (1-t) z + t x1, z ~ N(0,I), t ~ U[0,1]. Returns per-step losses.
std::vector<double> pretrain_flow_matching(VelocityField& field,
                                           const std::vector<LabeledSample>& dataset,
                                           const PretrainConfig& cfg);

}  // namespace flowrl::flow
