#pragma once

#include <cstddef>
#include <vector>

#include "flowrl/array.hpp"
#include "flowrl/rewards.hpp"

namespace flowrl::metrics {

/// Two-sample energy distance 2 E||a-b|| - E||a-a'|| - E||b-b'|| via full
/// pairwise V-statistics. Zero iff the empirical distributions coincide.
double energy_distance(const std::vector<ad::Array>& a, const std::vector<ad::Array>& b);

/// Fraction of samples inside their condition's acceptance ball.
double rule_accuracy(const std::vector<ad::Array>& samples,
                     const std::vector<std::size_t>& conditions,
                     const rewards::RuleReward& rule);

struct EvalReport {
    std::size_t iteration = 0;
    double mean_reward = 0.0;     // current reward model on fresh generations
    double ref_reward = 0.0;      // current reward model on the reference set
    double frozen_reward = 0.0;   // frozen metric reward, when one exists
    bool has_frozen_reward = false;
    double rule_acc = 0.0;
    double energy = 0.0;          // distance to the target pool
    struct PerCondition {
        std::size_t condition = 0;
        double mean_reward = 0.0;
        double rule_acc = 0.0;
    };
    std::vector<PerCondition> per_condition;
};

struct TrendPoint {
    std::size_t iteration = 0;
    double reward = 0.0;
    double distance = 0.0;
};

/// Windowed contrast of the reward trend against the distribution-distance
/// trend. HACKING means reward rose while distance rose beyond the
/// same-distribution noise band.
struct HackingReport {
    std::vector<double> window_rewards;
    std::vector<double> window_distances;
    std::vector<double> reward_deltas;    // consecutive windows
    std::vector<double> distance_deltas;  // consecutive windows
    double reward_trend = 0.0;            // last window minus first
    double distance_trend = 0.0;
    double noise_band = 0.0;
    bool hacking = false;
};

HackingReport hacking_report(const std::vector<TrendPoint>& log, std::size_t points_per_window,
                             double noise_band);

}  // namespace flowrl::metrics
