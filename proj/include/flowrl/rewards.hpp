#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowrl/encoder.hpp"
#include "flowrl/mlp.hpp"
#include "flowrl/optim.hpp"

namespace flowrl::rewards {

/// Scores a final sample for a condition. Frozen rewards are pure; trainable
/// rewards are pure given their current head parameters.
class RewardModel {
public:
    virtual ~RewardModel() = default;

    virtual double score(const ad::Array& x, std::size_t condition) const = 0;

    /// Called once per rollout group so per-group randomness (e.g. the patch
    /// subset) is fixed before any member of the group is scored.
    virtual void begin_group(std::uint64_t key) { (void)key; }

    virtual bool trainable() const { return false; }

    /// One optimizer step on the trainable head, references as positives and
    /// generations as negatives. Returns the loss value.
    virtual double update(const std::vector<const ad::Array*>& refs,
                          const std::vector<const ad::Array*>& gens);

    virtual std::string kind() const = 0;

    virtual nlohmann::ordered_json state_to_json() const { return nullptr; }
    virtual void state_from_json(const nlohmann::json& j) { (void)j; }
};

/// Small trainable scoring MLP with its own optimizer; the phi of every
/// trainable reward. `zero_last_layer` makes the initial raw score exactly 0.
class ScoreHead {
public:
    ScoreHead(ad::MlpSpec spec, double lr, std::uint64_t init_seed, bool zero_last_layer);

    double raw(const ad::Array& x) const;
    ad::Slot forward_cols(ad::Tape& tape, const ad::Array& input_cols);  // [1,B]

    ad::ParamSet& params() { return params_; }
    const ad::ParamSet& params() const { return params_; }
    ad::Optimizer& optimizer() { return opt_; }
    const ad::MlpSpec& spec() const { return spec_; }

    nlohmann::ordered_json state_to_json() const;
    void state_from_json(const nlohmann::json& j);

private:
    ad::MlpSpec spec_;
    ad::ParamSet params_;
    ad::Optimizer opt_;
};

/// Frozen preference score with a deliberately exploitable additive bias:
/// exp(-||x - mu_c||^2 / (2 tau^2)) + bias_weight * (u . x).
class BiasedPreferenceReward : public RewardModel {
public:
    BiasedPreferenceReward(std::vector<ad::Array> centers, double tau, double bias_weight,
                           ad::Array bias_dir);

    double score(const ad::Array& x, std::size_t condition) const override;
    std::string kind() const override { return "biased"; }

    double tau() const { return tau_; }
    double bias_weight() const { return bias_weight_; }
    const ad::Array& bias_dir() const { return bias_dir_; }

private:
    std::vector<ad::Array> centers_;
    double tau_;
    double bias_weight_;
    ad::Array bias_dir_;  // unit norm
};

/// Binary task reward: 1 inside the condition's acceptance ball, else 0.
class RuleReward : public RewardModel {
public:
    RuleReward(std::vector<ad::Array> centers, double radius);

    double score(const ad::Array& x, std::size_t condition) const override;
    std::string kind() const override { return "rule"; }

    double radius() const { return radius_; }

private:
    std::vector<ad::Array> centers_;
    double radius_;
};

enum class DiscLoss { kBce, kHinge };

std::string disc_loss_name(DiscLoss loss);
DiscLoss disc_loss_from_name(const std::string& name);

/// Trainable discriminator head on the raw sample. Scores are sigmoid
/// probabilities in BCE mode and raw margins in hinge mode.
class DiscriminatorReward : public RewardModel {
public:
    DiscriminatorReward(std::size_t input_dim, std::size_t hidden, double lr, DiscLoss loss,
                        std::uint64_t seed);

    double score(const ad::Array& x, std::size_t condition) const override;
    double raw_score(const ad::Array& x) const { return head_.raw(x); }

    bool trainable() const override { return true; }
    double update(const std::vector<const ad::Array*>& refs,
                  const std::vector<const ad::Array*>& gens) override;
    std::string kind() const override { return "discriminator"; }

    nlohmann::ordered_json state_to_json() const override;
    void state_from_json(const nlohmann::json& j) override;

private:
    ScoreHead head_;
    DiscLoss loss_;
};

/// The frozen biased formula plus a trainable additive correction whose
/// initial output is exactly zero, so scores start identical to the base
/// reward and adversarial updates re-align them against references.
class AdversarialPreferenceReward : public RewardModel {
public:
    AdversarialPreferenceReward(BiasedPreferenceReward base, std::size_t hidden, double lr,
                                std::uint64_t seed);

    double score(const ad::Array& x, std::size_t condition) const override;
    double base_score(const ad::Array& x, std::size_t condition) const;
    double correction(const ad::Array& x) const { return head_.raw(x); }

    bool trainable() const override { return true; }
    double update(const std::vector<const ad::Array*>& refs,
                  const std::vector<const ad::Array*>& gens) override;
    std::string kind() const override { return "biased+head"; }

    nlohmann::ordered_json state_to_json() const override;
    void state_from_json(const nlohmann::json& j) override;

private:
    BiasedPreferenceReward base_;
    ScoreHead head_;
};

/// Shared head on frozen foundation features: lambda_g * h(f_cls) +
/// lambda_l * mean over a random patch subset of h(f_j). Trained with the
/// global/local hinge pair.
class FoundationReward : public RewardModel {
public:
    FoundationReward(std::shared_ptr<const encoder::FoundationEncoder> enc,
                     std::size_t head_hidden, double lr, double lambda_global,
                     double lambda_local, std::size_t subset_size, std::uint64_t seed);

    void begin_group(std::uint64_t key) override;
    double score(const ad::Array& x, std::size_t condition) const override;

    bool trainable() const override { return true; }
    double update(const std::vector<const ad::Array*>& refs,
                  const std::vector<const ad::Array*>& gens) override;
    std::string kind() const override { return "foundation"; }

    const std::vector<std::size_t>& current_subset() const { return subset_; }

    nlohmann::ordered_json state_to_json() const override;
    void state_from_json(const nlohmann::json& j) override;

private:
    std::shared_ptr<const encoder::FoundationEncoder> enc_;
    ScoreHead head_;
    double lambda_global_;
    double lambda_local_;
    std::size_t subset_size_;
    std::vector<std::size_t> subset_;
};

/// lambda * rule + (1 - lambda) * mean cosine similarity between the sample's
/// global feature and the condition's reference features. Frozen.
class MultiReward : public RewardModel {
public:
    MultiReward(RuleReward rule, std::shared_ptr<const encoder::FoundationEncoder> enc,
                std::vector<std::vector<ad::Array>> reference_globals, double lambda);

    double score(const ad::Array& x, std::size_t condition) const override;
    double similarity(const ad::Array& x, std::size_t condition) const;
    std::string kind() const override { return "multi"; }

private:
    RuleReward rule_;
    std::shared_ptr<const encoder::FoundationEncoder> enc_;
    std::vector<std::vector<ad::Array>> reference_globals_;
    double lambda_;
};

// --- loss and combination primitives ---

double multi_reward(double rule_value, double similarity, double lambda);

double foundation_combine(double r_global, double r_local, double lambda_global,
                          double lambda_local);

/// -E[log p_ref] - E[log(1 - p_gen)]; probabilities outside
/// [1e-7, 1-1e-7] are clamped with a warning.
double bce_reward_loss(std::span<const double> ref_probs, std::span<const double> gen_probs);

struct HingeLossValues {
    double global_loss = 0.0;
    double local_loss = 0.0;
    double combined = 0.0;
};

/// Global terms are per-sample head scores; local terms are per-sample score
/// lists over the patch subset (averaged inside each expectation).
HingeLossValues hinge_losses(std::span<const double> ref_global,
                             std::span<const double> gen_global,
                             const std::vector<std::vector<double>>& ref_local,
                             const std::vector<std::vector<double>>& gen_local,
                             double lambda_global, double lambda_local);

// --- update scheduling ---

enum class ScheduleMode { kNone, kTrigger, kFixedRatio };

std::string schedule_mode_name(ScheduleMode mode);
ScheduleMode schedule_mode_from_name(const std::string& name);

/// Decides how many reward-model updates follow each generator step.
/// Trigger mode fires one update iff the windowed running mean of generated
/// rewards strictly exceeds that of reference rewards; fixed-ratio mode
/// always returns the configured ratio.
class AdversarialSchedule {
public:
    struct Config {
        ScheduleMode mode = ScheduleMode::kNone;
        std::size_t window = 4;
        std::size_t ratio = 10;
    };

    explicit AdversarialSchedule(Config cfg);

    std::size_t tick(double gen_mean_reward, double ref_mean_reward);

    ScheduleMode mode() const { return cfg_.mode; }
    const Config& config() const { return cfg_; }
    double gen_running_mean() const;
    double ref_running_mean() const;

    nlohmann::ordered_json state_to_json() const;
    void state_from_json(const nlohmann::json& j);

private:
    Config cfg_;
    std::deque<double> gen_window_;
    std::deque<double> ref_window_;
};

}  // namespace flowrl::rewards
