#include "flowrl/metrics.hpp"

#include <cmath>

#include "flowrl/errors.hpp"

namespace flowrl::metrics {

namespace {

double euclidean(const ad::Array& a, const ad::Array& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double mean_pair_distance(const std::vector<ad::Array>& a, const std::vector<ad::Array>& b) {
    double s = 0.0;
    for (const auto& x : a) {
        for (const auto& y : b) s += euclidean(x, y);
    }
    return s / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

double mean_self_distance(const std::vector<ad::Array>& a) {
    // V-statistic over all ordered pairs; diagonal contributes zero
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i + 1; j < a.size(); ++j) s += euclidean(a[i], a[j]);
    }
    return 2.0 * s / (static_cast<double>(a.size()) * static_cast<double>(a.size()));
}

}  // namespace

double energy_distance(const std::vector<ad::Array>& a, const std::vector<ad::Array>& b) {
    require(a.size() >= 2 && b.size() >= 2, "energy distance: need at least 2 samples per side, got ",
            a.size(), " and ", b.size());
    std::size_t d = a[0].size();
    for (const auto& x : a) require(x.size() == d, "energy distance: mixed dims in first sample set");
    for (const auto& y : b) require(y.size() == d, "energy distance: sample dims differ, ",
                                    y.size(), " vs ", d);
    return 2.0 * mean_pair_distance(a, b) - mean_self_distance(a) - mean_self_distance(b);
}

double rule_accuracy(const std::vector<ad::Array>& samples,
                     const std::vector<std::size_t>& conditions,
                     const rewards::RuleReward& rule) {
    require(!samples.empty() && samples.size() == conditions.size(),
            "rule accuracy: need matching nonempty sample/condition lists");
    double s = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        s += rule.score(samples[i], conditions[i]);
    }
    return s / static_cast<double>(samples.size());
}

HackingReport hacking_report(const std::vector<TrendPoint>& log, std::size_t points_per_window,
                             double noise_band) {
    require(points_per_window >= 1, "hacking report: window must be >= 1");
    require(log.size() >= 2 * points_per_window, "hacking report: log spans ", log.size(),
            " points, need at least two windows of ", points_per_window);

    HackingReport report;
    report.noise_band = noise_band;

    std::size_t windows = log.size() / points_per_window;
    for (std::size_t w = 0; w < windows; ++w) {
        double r = 0.0;
        double d = 0.0;
        for (std::size_t i = 0; i < points_per_window; ++i) {
            const TrendPoint& p = log[w * points_per_window + i];
            r += p.reward;
            d += p.distance;
        }
        report.window_rewards.push_back(r / static_cast<double>(points_per_window));
        report.window_distances.push_back(d / static_cast<double>(points_per_window));
    }
    for (std::size_t w = 1; w < windows; ++w) {
        report.reward_deltas.push_back(report.window_rewards[w] - report.window_rewards[w - 1]);
        report.distance_deltas.push_back(report.window_distances[w] -
                                         report.window_distances[w - 1]);
    }
    report.reward_trend = report.window_rewards.back() - report.window_rewards.front();
    report.distance_trend = report.window_distances.back() - report.window_distances.front();
    report.hacking = report.reward_trend > 0.0 && report.distance_trend > noise_band;
    return report;
}

}  // namespace flowrl::metrics
