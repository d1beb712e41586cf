#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "flowrl/flow.hpp"
#include "flowrl/optim.hpp"
#include "flowrl/rewards.hpp"
#include "flowrl/world.hpp"

namespace flowrl::grpo {

struct GrpoConfig {
    std::size_t group_size = 16;
    double clip_range = 0.2;
    double kl_weight = 0.0;
    double lr = 3e-4;
    std::size_t iterations = 1000;
    std::size_t timesteps_per_update = 2;
    // noise-level window: a step k qualifies when the remaining noise
    // fraction 1 - t_k lies in (noise_window_lo, noise_window_hi]
    double noise_window_lo = 0.5;
    double noise_window_hi = 1.0;
    std::uint64_t seed = 0;

    void validate(const flow::NoiseSchedule& sched) const;
};

/// Steps whose noise level falls inside the configured window.
std::vector<std::size_t> noise_window_steps(const flow::NoiseSchedule& sched, double lo, double hi);

struct AdvantageSet {
    std::vector<double> advantages;
    double mean = 0.0;
    double stddev = 0.0;  // population
    bool degenerate = false;
};

/// Within-group standardization with population std. Degenerate groups
/// (std below 1e-12) yield all-zero advantages.
AdvantageSet compute_advantages(const std::vector<double>& rewards);

double clip_ratio(double ratio, double eps);

/// Density ratio of the stored step-k transition under the current policy
/// versus the snapshot that sampled it.
double importance_ratio(flow::VelocityField& current, const flow::PolicySnapshot& snapshot,
                        const flow::Trajectory& traj, std::size_t k,
                        const flow::NoiseSchedule& sched);

/// Value form of the clipped objective: mean(min(r*A, clip(r)*A)) - beta * mean(kl)
/// over flat per-(member, timestep) lists.
double clipped_surrogate(std::span<const double> ratios, std::span<const double> clipped_ratios,
                         std::span<const double> advantages, std::span<const double> kl_terms,
                         double beta);

struct Group {
    std::size_t condition = 0;
    std::vector<flow::Trajectory> members;
    std::vector<double> rewards;
    AdvantageSet advantages;
};

struct IterationStats {
    std::size_t iteration = 0;
    double mean_reward = 0.0;
    double mean_abs_advantage = 0.0;
    double mean_ratio = 0.0;
    double clip_fraction = 0.0;
    double mean_kl = 0.0;
    double surrogate = 0.0;
    std::size_t degenerate_groups = 0;
};

/// One GRPO step: snapshot theta, roll out G SDE trajectories per condition
/// under the snapshot, score finals, normalize advantages per group, sample
/// timesteps from the noise window and take one ascent step on the clipped
/// objective. Groups are exposed for reward-model updates.
IterationStats grpo_iteration(flow::VelocityField& theta, const flow::NoiseSchedule& sched,
                              rewards::RewardModel& reward,
                              std::span<const std::size_t> conditions, const GrpoConfig& cfg,
                              ad::Optimizer& opt, std::size_t iter_index,
                              std::vector<Group>* out_groups = nullptr);

struct TrainRecord {
    IterationStats stats;
    double ref_reward = 0.0;        // current reward model on the reference set
    std::size_t reward_updates = 0;
    double reward_update_loss = 0.0;
    double gen_running_mean = 0.0;  // schedule window means (trigger mode)
    double ref_running_mean = 0.0;
};

struct TrainHooks {
    /// Called after every iteration (generator step + scheduled reward
    /// updates). Groups hold the iteration's trajectories.
    std::function<void(const TrainRecord&, const std::vector<Group>&)> on_iteration;
};

/// The outer loop: grpo_iteration interleaved with schedule-gated reward
/// updates (references positive, this iteration's generations negative),
/// from start_iteration up to cfg.iterations.
void train(flow::VelocityField& theta, const flow::NoiseSchedule& sched,
           rewards::RewardModel& reward, rewards::AdversarialSchedule& schedule,
           const GrpoConfig& cfg, const world::ReferenceSet& refs, ad::Optimizer& opt,
           std::size_t start_iteration, const TrainHooks& hooks);

}  // namespace flowrl::grpo
