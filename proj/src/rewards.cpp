#include "flowrl/rewards.hpp"

#include <cmath>
#include <iostream>

#include "flowrl/errors.hpp"
#include "flowrl/serialize.hpp"

namespace flowrl::rewards {

namespace {

constexpr double kProbFloor = 1e-7;

double clamp_prob(double p, bool& clamped) {
    if (p < kProbFloor) {
        clamped = true;
        return kProbFloor;
    }
    if (p > 1.0 - kProbFloor) {
        clamped = true;
        return 1.0 - kProbFloor;
    }
    return p;
}

void warn_clamped(const char* where) {
    std::cerr << "[flowrl] warning: " << where << ": probabilities clamped to ["
              << kProbFloor << ", 1-" << kProbFloor << "]\n";
}

ad::Array stack_cols(const std::vector<const ad::Array*>& xs) {
    require(!xs.empty(), "rewards: empty batch");
    std::size_t d = xs[0]->size();
    ad::Array out({d, xs.size()});
    for (std::size_t j = 0; j < xs.size(); ++j) {
        require(xs[j]->size() == d, "rewards: batch samples have mixed dims");
        for (std::size_t i = 0; i < d; ++i) out[i * xs.size() + j] = (*xs[j])[i];
    }
    return out;
}

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

double RewardModel::update(const std::vector<const ad::Array*>&,
                           const std::vector<const ad::Array*>&) {
    fail("reward '", kind(), "' is not trainable");
}

// --- ScoreHead ---

ScoreHead::ScoreHead(ad::MlpSpec spec, double lr, std::uint64_t init_seed, bool zero_last_layer)
    : spec_(std::move(spec)), opt_({ad::OptMode::kAdam, lr}) {
    require(spec_.output_dim == 1, "score head: output dim must be 1");
    RngStream rng(init_seed, "score-head-init");
    ad::init_mlp_params(params_, spec_, rng);
    if (zero_last_layer) {
        std::size_t last = spec_.layer_count() - 1;
        params_.value("w" + std::to_string(last)).fill(0.0);
        params_.value("b" + std::to_string(last)).fill(0.0);
    }
}

double ScoreHead::raw(const ad::Array& x) const {
    require(x.size() == spec_.input_dim, "score head: input shape ", shape_str(x),
            " does not match dim ", spec_.input_dim);
    ad::Array col({spec_.input_dim}, std::vector<double>(x.raw()));
    return ad::mlp_eval(params_, spec_, col)[0];
}

ad::Slot ScoreHead::forward_cols(ad::Tape& tape, const ad::Array& input_cols) {
    return ad::mlp_forward(tape, params_, spec_, tape.constant(input_cols));
}

nlohmann::ordered_json ScoreHead::state_to_json() const {
    nlohmann::ordered_json j;
    j["params"] = ad::paramset_to_json(params_);
    j["optimizer"] = opt_.state_to_json();
    return j;
}

void ScoreHead::state_from_json(const nlohmann::json& j) {
    ad::ParamSet loaded = ad::paramset_from_json(j.at("params"));
    ad::copy_param_values(loaded, params_);
    opt_.state_from_json(j.at("optimizer"), params_);
}

// --- BiasedPreferenceReward ---

BiasedPreferenceReward::BiasedPreferenceReward(std::vector<ad::Array> centers, double tau,
                                               double bias_weight, ad::Array bias_dir)
    : centers_(std::move(centers)), tau_(tau), bias_weight_(bias_weight),
      bias_dir_(std::move(bias_dir)) {
    require(tau_ > 0.0, "biased reward: tau must be > 0, got ", tau_);
    require(!centers_.empty(), "biased reward: no condition centers");
    require(bias_dir_.size() == centers_[0].size(), "biased reward: bias direction has ",
            bias_dir_.size(), " dims, centers have ", centers_[0].size());
    double n = std::sqrt(ad::squared_norm(bias_dir_.data()));
    require(n > 0.0, "biased reward: zero bias direction");
    for (std::size_t i = 0; i < bias_dir_.size(); ++i) bias_dir_[i] /= n;
}

double BiasedPreferenceReward::score(const ad::Array& x, std::size_t condition) const {
    require(condition < centers_.size(), "biased reward: unknown condition id ", condition);
    const ad::Array& mu = centers_[condition];
    require(x.size() == mu.size(), "biased reward: sample shape ", shape_str(x),
            " does not match dim ", mu.size());
    double ssq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double diff = x[i] - mu[i];
        ssq += diff * diff;
    }
    return std::exp(-ssq / (2.0 * tau_ * tau_)) + bias_weight_ * ad::dot(bias_dir_.data(), x.data());
}

// --- RuleReward ---

RuleReward::RuleReward(std::vector<ad::Array> centers, double radius)
    : centers_(std::move(centers)), radius_(radius) {
    require(radius_ > 0.0, "rule reward: radius must be > 0, got ", radius_);
    require(!centers_.empty(), "rule reward: no condition centers");
}

double RuleReward::score(const ad::Array& x, std::size_t condition) const {
    require(condition < centers_.size(), "rule reward: unknown condition id ", condition);
    const ad::Array& mu = centers_[condition];
    require(x.size() == mu.size(), "rule reward: sample shape ", shape_str(x),
            " does not match dim ", mu.size());
    double ssq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double diff = x[i] - mu[i];
        ssq += diff * diff;
    }
    return ssq <= radius_ * radius_ ? 1.0 : 0.0;
}

// --- DiscriminatorReward ---

std::string disc_loss_name(DiscLoss loss) { return loss == DiscLoss::kBce ? "bce" : "hinge"; }

DiscLoss disc_loss_from_name(const std::string& name) {
    if (name == "bce") return DiscLoss::kBce;
    if (name == "hinge") return DiscLoss::kHinge;
    fail("rewards: unknown discriminator loss '", name, "'");
}

DiscriminatorReward::DiscriminatorReward(std::size_t input_dim, std::size_t hidden, double lr,
                                         DiscLoss loss, std::uint64_t seed)
    : head_({input_dim, {hidden}, 1}, lr, seed, false), loss_(loss) {}

double DiscriminatorReward::score(const ad::Array& x, std::size_t) const {
    double raw = head_.raw(x);
    if (loss_ == DiscLoss::kBce) return 1.0 / (1.0 + std::exp(-raw));
    return raw;
}

namespace {

/// BCE step shared by DiscriminatorReward and AdversarialPreferenceReward:
/// sigmoid of the head's raw score is the probability of "reference".
double bce_step(ScoreHead& head, const std::vector<const ad::Array*>& refs,
                const std::vector<const ad::Array*>& gens) {
    require(!refs.empty() && !gens.empty(), "reward update: empty batch");
    ad::Tape tape;
    ad::Slot ref_p = tape.sigmoid(head.forward_cols(tape, stack_cols(refs)));
    ad::Slot gen_p = tape.sigmoid(head.forward_cols(tape, stack_cols(gens)));

    bool clamped = false;
    for (double p : tape.value(ref_p).raw()) clamp_prob(p, clamped);
    for (double p : tape.value(gen_p).raw()) clamp_prob(p, clamped);
    if (clamped) warn_clamped("bce update");

    ad::Slot ref_term = tape.scale(
        tape.sum(tape.log(tape.clamp(ref_p, kProbFloor, 1.0 - kProbFloor))),
        -1.0 / static_cast<double>(refs.size()));
    ad::Slot one_minus = tape.add_const(tape.neg(gen_p), 1.0);
    ad::Slot gen_term = tape.scale(
        tape.sum(tape.log(tape.clamp(one_minus, kProbFloor, 1.0 - kProbFloor))),
        -1.0 / static_cast<double>(gens.size()));
    ad::Slot loss = tape.add(ref_term, gen_term);

    head.params().zero_grad();
    tape.backward(loss);
    head.optimizer().step(head.params());
    return tape.scalar(loss);
}

/// Plain hinge step on raw scores: mean max(0, 1-h_ref) + mean max(0, 1+h_gen).
double hinge_step(ScoreHead& head, const std::vector<const ad::Array*>& refs,
                  const std::vector<const ad::Array*>& gens) {
    require(!refs.empty() && !gens.empty(), "reward update: empty batch");
    ad::Tape tape;
    ad::Slot ref_raw = head.forward_cols(tape, stack_cols(refs));
    ad::Slot gen_raw = head.forward_cols(tape, stack_cols(gens));
    ad::Slot ref_term = tape.scale(tape.sum(tape.relu(tape.add_const(tape.neg(ref_raw), 1.0))),
                                   1.0 / static_cast<double>(refs.size()));
    ad::Slot gen_term = tape.scale(tape.sum(tape.relu(tape.add_const(gen_raw, 1.0))),
                                   1.0 / static_cast<double>(gens.size()));
    ad::Slot loss = tape.add(ref_term, gen_term);

    head.params().zero_grad();
    tape.backward(loss);
    head.optimizer().step(head.params());
    return tape.scalar(loss);
}

}  // namespace

double DiscriminatorReward::update(const std::vector<const ad::Array*>& refs,
                                   const std::vector<const ad::Array*>& gens) {
    return loss_ == DiscLoss::kBce ? bce_step(head_, refs, gens) : hinge_step(head_, refs, gens);
}

nlohmann::ordered_json DiscriminatorReward::state_to_json() const {
    nlohmann::ordered_json j;
    j["kind"] = kind();
    j["loss"] = disc_loss_name(loss_);
    j["head"] = head_.state_to_json();
    return j;
}

void DiscriminatorReward::state_from_json(const nlohmann::json& j) {
    require(j.at("kind").get<std::string>() == kind(), "reward state: kind mismatch");
    head_.state_from_json(j.at("head"));
}

// --- AdversarialPreferenceReward ---

AdversarialPreferenceReward::AdversarialPreferenceReward(BiasedPreferenceReward base,
                                                         std::size_t hidden, double lr,
                                                         std::uint64_t seed)
    : base_(std::move(base)),
      head_({base_.bias_dir().size(), {hidden}, 1}, lr, seed, true) {}

double AdversarialPreferenceReward::score(const ad::Array& x, std::size_t condition) const {
    return base_.score(x, condition) + head_.raw(x);
}

double AdversarialPreferenceReward::base_score(const ad::Array& x, std::size_t condition) const {
    return base_.score(x, condition);
}

double AdversarialPreferenceReward::update(const std::vector<const ad::Array*>& refs,
                                           const std::vector<const ad::Array*>& gens) {
    return bce_step(head_, refs, gens);
}

nlohmann::ordered_json AdversarialPreferenceReward::state_to_json() const {
    nlohmann::ordered_json j;
    j["kind"] = kind();
    j["head"] = head_.state_to_json();
    return j;
}

void AdversarialPreferenceReward::state_from_json(const nlohmann::json& j) {
    require(j.at("kind").get<std::string>() == kind(), "reward state: kind mismatch");
    head_.state_from_json(j.at("head"));
}

// --- FoundationReward ---

FoundationReward::FoundationReward(std::shared_ptr<const encoder::FoundationEncoder> enc,
                                   std::size_t head_hidden, double lr, double lambda_global,
                                   double lambda_local, std::size_t subset_size,
                                   std::uint64_t seed)
    : enc_(std::move(enc)),
      head_({enc_->feature_dim(), {head_hidden}, 1}, lr, seed, false),
      lambda_global_(lambda_global), lambda_local_(lambda_local), subset_size_(subset_size) {
    require(lambda_global_ >= 0.0 && lambda_local_ >= 0.0,
            "foundation reward: weights must be >= 0");
    require(std::abs(lambda_global_ + lambda_local_ - 1.0) < 1e-12,
            "foundation reward: weights must sum to 1, got ", lambda_global_ + lambda_local_);
    require(subset_size_ >= 1 && subset_size_ <= enc_->patch_count(),
            "foundation reward: subset size ", subset_size_, " outside [1,", enc_->patch_count(),
            "]");
    RngStream rng(seed, "patch-init");
    subset_ = encoder::patch_subset(enc_->patch_count(), subset_size_, rng);
}

void FoundationReward::begin_group(std::uint64_t key) {
    RngStream rng(key);
    subset_ = encoder::patch_subset(enc_->patch_count(), subset_size_, rng);
}

double FoundationReward::score(const ad::Array& x, std::size_t) const {
    encoder::FeatureBundle f = enc_->encode(x);
    double r_global = head_.raw(f.global);
    double r_local = 0.0;
    for (std::size_t j : subset_) r_local += head_.raw(f.patches[j]);
    r_local /= static_cast<double>(subset_.size());
    return foundation_combine(r_global, r_local, lambda_global_, lambda_local_);
}

double FoundationReward::update(const std::vector<const ad::Array*>& refs,
                                const std::vector<const ad::Array*>& gens) {
    require(!refs.empty() && !gens.empty(), "reward update: empty batch");

    auto encode_batch = [&](const std::vector<const ad::Array*>& xs, ad::Array& globals,
                            ad::Array& locals) {
        std::size_t f = enc_->feature_dim();
        std::size_t s = subset_.size();
        globals = ad::Array({f, xs.size()});
        locals = ad::Array({f, xs.size() * s});
        for (std::size_t j = 0; j < xs.size(); ++j) {
            encoder::FeatureBundle bundle = enc_->encode(*xs[j]);
            for (std::size_t i = 0; i < f; ++i) globals[i * xs.size() + j] = bundle.global[i];
            for (std::size_t u = 0; u < s; ++u) {
                const ad::Array& patch = bundle.patches[subset_[u]];
                for (std::size_t i = 0; i < f; ++i) {
                    locals[i * (xs.size() * s) + j * s + u] = patch[i];
                }
            }
        }
    };

    ad::Array ref_g, ref_l, gen_g, gen_l;
    encode_batch(refs, ref_g, ref_l);
    encode_batch(gens, gen_g, gen_l);

    ad::Tape tape;
    auto hinge_ref = [&](const ad::Array& cols) {
        ad::Slot raw = head_.forward_cols(tape, cols);
        return tape.mean(tape.relu(tape.add_const(tape.neg(raw), 1.0)));
    };
    auto hinge_gen = [&](const ad::Array& cols) {
        ad::Slot raw = head_.forward_cols(tape, cols);
        return tape.mean(tape.relu(tape.add_const(raw, 1.0)));
    };
    // flat mean over (sample, patch) pairs equals the nested expectation
    // because every sample shares the same subset size
    ad::Slot global_loss = tape.add(hinge_ref(ref_g), hinge_gen(gen_g));
    ad::Slot local_loss = tape.add(hinge_ref(ref_l), hinge_gen(gen_l));
    ad::Slot loss =
        tape.add(tape.scale(global_loss, lambda_global_), tape.scale(local_loss, lambda_local_));

    head_.params().zero_grad();
    tape.backward(loss);
    head_.optimizer().step(head_.params());
    return tape.scalar(loss);
}

nlohmann::ordered_json FoundationReward::state_to_json() const {
    nlohmann::ordered_json j;
    j["kind"] = kind();
    j["head"] = head_.state_to_json();
    j["subset"] = subset_;
    return j;
}

void FoundationReward::state_from_json(const nlohmann::json& j) {
    require(j.at("kind").get<std::string>() == kind(), "reward state: kind mismatch");
    head_.state_from_json(j.at("head"));
    subset_ = j.at("subset").get<std::vector<std::size_t>>();
}

// --- MultiReward ---

MultiReward::MultiReward(RuleReward rule, std::shared_ptr<const encoder::FoundationEncoder> enc,
                         std::vector<std::vector<ad::Array>> reference_globals, double lambda)
    : rule_(std::move(rule)), enc_(std::move(enc)),
      reference_globals_(std::move(reference_globals)), lambda_(lambda) {
    require(lambda_ >= 0.0 && lambda_ <= 1.0, "multi reward: lambda must be in [0,1], got ",
            lambda_);
    for (const auto& refs : reference_globals_) {
        require(!refs.empty(), "multi reward: a condition has no reference features");
    }
}

double MultiReward::similarity(const ad::Array& x, std::size_t condition) const {
    require(condition < reference_globals_.size(), "multi reward: unknown condition id ",
            condition);
    encoder::FeatureBundle f = enc_->encode(x);
    double s = 0.0;
    for (const ad::Array& ref : reference_globals_[condition]) {
        s += encoder::cosine_sim(f.global, ref);
    }
    return s / static_cast<double>(reference_globals_[condition].size());
}

double MultiReward::score(const ad::Array& x, std::size_t condition) const {
    return multi_reward(rule_.score(x, condition), similarity(x, condition), lambda_);
}

// --- loss/combination primitives ---

double multi_reward(double rule_value, double similarity, double lambda) {
    require(lambda >= 0.0 && lambda <= 1.0, "multi reward: lambda must be in [0,1], got ", lambda);
    return lambda * rule_value + (1.0 - lambda) * similarity;
}

double foundation_combine(double r_global, double r_local, double lambda_global,
                          double lambda_local) {
    return lambda_global * r_global + lambda_local * r_local;
}

double bce_reward_loss(std::span<const double> ref_probs, std::span<const double> gen_probs) {
    require(!ref_probs.empty() && !gen_probs.empty(), "bce loss: empty batch");
    bool clamped = false;
    double ref_term = 0.0;
    for (double p : ref_probs) ref_term += std::log(clamp_prob(p, clamped));
    double gen_term = 0.0;
    for (double p : gen_probs) gen_term += std::log(clamp_prob(1.0 - p, clamped));
    if (clamped) warn_clamped("bce loss");
    return -ref_term / static_cast<double>(ref_probs.size()) -
           gen_term / static_cast<double>(gen_probs.size());
}

HingeLossValues hinge_losses(std::span<const double> ref_global,
                             std::span<const double> gen_global,
                             const std::vector<std::vector<double>>& ref_local,
                             const std::vector<std::vector<double>>& gen_local,
                             double lambda_global, double lambda_local) {
    require(!ref_global.empty() && !gen_global.empty(), "hinge loss: empty global batch");
    HingeLossValues out;

    double r = 0.0;
    for (double h : ref_global) r += std::max(0.0, 1.0 - h);
    double g = 0.0;
    for (double h : gen_global) g += std::max(0.0, 1.0 + h);
    out.global_loss = r / static_cast<double>(ref_global.size()) +
                      g / static_cast<double>(gen_global.size());

    auto local_term = [](const std::vector<std::vector<double>>& batch, bool is_ref) {
        double total = 0.0;
        for (const auto& scores : batch) {
            require(!scores.empty(), "hinge loss: empty patch subset");
            double s = 0.0;
            for (double h : scores) s += is_ref ? std::max(0.0, 1.0 - h) : std::max(0.0, 1.0 + h);
            total += s / static_cast<double>(scores.size());
        }
        return total / static_cast<double>(batch.size());
    };
    if (!ref_local.empty() && !gen_local.empty()) {
        out.local_loss = local_term(ref_local, true) + local_term(gen_local, false);
    }
    out.combined = lambda_global * out.global_loss + lambda_local * out.local_loss;
    return out;
}

// --- AdversarialSchedule ---

std::string schedule_mode_name(ScheduleMode mode) {
    switch (mode) {
        case ScheduleMode::kNone: return "none";
        case ScheduleMode::kTrigger: return "trigger";
        case ScheduleMode::kFixedRatio: return "fixed_ratio";
    }
    fail("rewards: bad schedule mode");
}

ScheduleMode schedule_mode_from_name(const std::string& name) {
    if (name == "none") return ScheduleMode::kNone;
    if (name == "trigger") return ScheduleMode::kTrigger;
    if (name == "fixed_ratio") return ScheduleMode::kFixedRatio;
    fail("rewards: unknown schedule mode '", name, "'");
}

AdversarialSchedule::AdversarialSchedule(Config cfg) : cfg_(cfg) {
    require(cfg_.window >= 1, "schedule: window must be >= 1");
    require(cfg_.ratio >= 1, "schedule: ratio must be >= 1");
}

std::size_t AdversarialSchedule::tick(double gen_mean_reward, double ref_mean_reward) {
    if (cfg_.mode == ScheduleMode::kNone) return 0;
    if (cfg_.mode == ScheduleMode::kFixedRatio) return cfg_.ratio;

    gen_window_.push_back(gen_mean_reward);
    ref_window_.push_back(ref_mean_reward);
    while (gen_window_.size() > cfg_.window) gen_window_.pop_front();
    while (ref_window_.size() > cfg_.window) ref_window_.pop_front();
    return gen_running_mean() > ref_running_mean() ? 1 : 0;
}

double AdversarialSchedule::gen_running_mean() const {
    require(!gen_window_.empty(), "schedule: no statistics yet");
    double s = 0.0;
    for (double v : gen_window_) s += v;
    return s / static_cast<double>(gen_window_.size());
}

double AdversarialSchedule::ref_running_mean() const {
    require(!ref_window_.empty(), "schedule: no statistics yet");
    double s = 0.0;
    for (double v : ref_window_) s += v;
    return s / static_cast<double>(ref_window_.size());
}

nlohmann::ordered_json AdversarialSchedule::state_to_json() const {
    nlohmann::ordered_json j;
    j["mode"] = schedule_mode_name(cfg_.mode);
    j["window"] = cfg_.window;
    j["ratio"] = cfg_.ratio;
    j["gen_window"] = std::vector<double>(gen_window_.begin(), gen_window_.end());
    j["ref_window"] = std::vector<double>(ref_window_.begin(), ref_window_.end());
    return j;
}

void AdversarialSchedule::state_from_json(const nlohmann::json& j) {
    cfg_.mode = schedule_mode_from_name(j.at("mode").get<std::string>());
    cfg_.window = j.at("window").get<std::size_t>();
    cfg_.ratio = j.at("ratio").get<std::size_t>();
    auto gw = j.at("gen_window").get<std::vector<double>>();
    auto rw = j.at("ref_window").get<std::vector<double>>();
    gen_window_.assign(gw.begin(), gw.end());
    ref_window_.assign(rw.begin(), rw.end());
}

}  // namespace flowrl::rewards
