#include "flowrl/flow.hpp"

#include <cmath>
#include <set>

#include "flowrl/errors.hpp"

namespace flowrl::flow {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

double NoiseSchedule::sigma2dt(std::size_t k) const {
    double s = sigma(time_at(k));
    return s * s * dt();
}

void NoiseSchedule::validate() const {
    require(steps >= 2, "schedule: step count must be >= 2, got ", steps);
    require(sigma_max >= 0.0, "schedule: sigma_max must be >= 0, got ", sigma_max);
}

ad::MlpSpec GeneratorSpec::mlp_spec() const {
    ad::MlpSpec spec;
    spec.input_dim = sample_dim + 3 + condition_count;
    spec.hidden = hidden;
    spec.output_dim = sample_dim;
    return spec;
}

ad::Array assemble_inputs(const GeneratorSpec& spec, const std::vector<const ad::Array*>& xs,
                          const std::vector<double>& ts, const std::vector<std::size_t>& cs) {
    require(!xs.empty() && xs.size() == ts.size() && xs.size() == cs.size(),
            "assemble: mismatched batch lists");
    std::size_t d = spec.sample_dim;
    std::size_t in = d + 3 + spec.condition_count;
    std::size_t batch = xs.size();
    ad::Array out({in, batch});
    for (std::size_t j = 0; j < batch; ++j) {
        const ad::Array& x = *xs[j];
        double t = ts[j];
        std::size_t c = cs[j];
        require(x.size() == d, "velocity: sample shape ", shape_str(x), " does not match dim ", d);
        require(t >= 0.0 && t <= 1.0, "velocity: time ", t, " outside [0,1]");
        require(c < spec.condition_count, "velocity: unknown condition id ", c, " (have ",
                spec.condition_count, ")");
        for (std::size_t i = 0; i < d; ++i) out[i * batch + j] = x[i];
        out[d * batch + j] = t;
        out[(d + 1) * batch + j] = std::sin(kTwoPi * t);
        out[(d + 2) * batch + j] = std::cos(kTwoPi * t);
        out[(d + 3 + c) * batch + j] = 1.0;
    }
    return out;
}

VelocityField::VelocityField(GeneratorSpec spec, std::uint64_t init_seed) : spec_(std::move(spec)) {
    RngStream rng(init_seed, "velocity-init");
    ad::init_mlp_params(params_, spec_.mlp_spec(), rng);
}

VelocityField::VelocityField(GeneratorSpec spec, ad::ParamSet params)
    : spec_(std::move(spec)), params_(std::move(params)) {
    auto dims = spec_.mlp_spec().layer_dims();
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::string wname = "w" + std::to_string(l);
        require(params_.has(wname), "velocity: parameters missing layer '", wname, "'");
        const ad::Array& w = params_.value(wname);
        require(w.rows() == dims[l + 1] && w.cols() == dims[l], "velocity: layer '", wname,
                "' has shape ", shape_str(w), ", expected [", dims[l + 1], ",", dims[l], "]");
    }
}

ad::Array VelocityField::velocity(const ad::Array& x, double t, std::size_t c) const {
    ad::Array input = assemble_inputs(spec_, {&x}, {t}, {c});
    ad::Array out = ad::mlp_eval(params_, spec_.mlp_spec(), input);
    // single column back to a vector
    return ad::Array({spec_.sample_dim}, std::vector<double>(out.raw()));
}

ad::Array VelocityField::step_mean(const ad::Array& x, std::size_t k, std::size_t c,
                                   const NoiseSchedule& sched) const {
    ad::Array v = velocity(x, sched.time_at(k), c);
    ad::Array mu(x.shape());
    double dt = sched.dt();
    for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = x[i] + v[i] * dt;
    return mu;
}

ad::Slot VelocityField::forward_on_tape(ad::Tape& tape, const ad::Array& input_cols) {
    ad::Slot in = tape.constant(input_cols);
    return ad::mlp_forward(tape, params_, spec_.mlp_spec(), in);
}

namespace {

Trajectory sample_path(const VelocityField& field, const NoiseSchedule& sched,
                       std::size_t condition, std::uint64_t stream_key, bool stochastic) {
    sched.validate();
    require(condition < field.spec().condition_count, "sample: unknown condition id ", condition);

    Trajectory traj;
    traj.condition = condition;
    traj.seed_key = stream_key;

    RngStream rng(stream_key);
    std::size_t d = field.spec().sample_dim;

    ad::Array x({d});
    for (std::size_t i = 0; i < d; ++i) x[i] = rng.normal();
    traj.states.push_back(x);

    double dt = sched.dt();
    for (std::size_t k = 0; k < sched.steps; ++k) {
        double t = sched.time_at(k);
        ad::Array v = field.velocity(x, t, condition);
        ad::Array mu({d});
        for (std::size_t i = 0; i < d; ++i) mu[i] = x[i] + v[i] * dt;

        ad::Array next = mu;
        if (stochastic) {
            double s2dt = sched.sigma2dt(k);
            require(s2dt > 0.0, "sample: zero noise at sampled step ", k,
                    " with stochastic sampling requested");
            double sd = std::sqrt(s2dt);
            for (std::size_t i = 0; i < d; ++i) next[i] = mu[i] + sd * rng.normal();
            traj.logprobs.push_back(transition_logprob(mu, s2dt, next));
        }
        traj.means.push_back(std::move(mu));
        traj.states.push_back(next);
        x = std::move(next);
    }
    return traj;
}

}  // namespace

Trajectory sample_ode(const VelocityField& field, const NoiseSchedule& sched,
                      std::size_t condition, std::uint64_t stream_key) {
    return sample_path(field, sched, condition, stream_key, false);
}

Trajectory sample_sde(const VelocityField& field, const NoiseSchedule& sched,
                      std::size_t condition, std::uint64_t stream_key) {
    return sample_path(field, sched, condition, stream_key, sched.stochastic());
}

double transition_logprob(const ad::Array& mu, double sigma2dt, const ad::Array& x_next) {
    require(sigma2dt > 0.0, "logprob: transition variance must be > 0, got ", sigma2dt);
    require(mu.same_shape(x_next), "logprob: mean shape ", shape_str(mu),
            " vs next-state shape ", shape_str(x_next));
    double ssq = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double diff = x_next[i] - mu[i];
        ssq += diff * diff;
    }
    double factor = -1.0 / (2.0 * sigma2dt);
    double const_term =
        -0.5 * static_cast<double>(mu.size()) * std::log(kTwoPi * sigma2dt);
    return ssq * factor + const_term;
}

ad::Slot transition_logprob_on_tape(ad::Tape& tape, ad::Slot mu_cols, double sigma2dt,
                                    const ad::Array& x_next_cols) {
    require(sigma2dt > 0.0, "logprob: transition variance must be > 0, got ", sigma2dt);
    const ad::Array& mu = tape.value(mu_cols);
    require(mu.same_shape(x_next_cols), "logprob: mean shape ", shape_str(mu),
            " vs next-state shape ", shape_str(x_next_cols));
    ad::Slot diff = tape.sub(tape.constant(x_next_cols), mu_cols);
    ad::Slot ssq = tape.col_sum(tape.square(diff));
    double factor = -1.0 / (2.0 * sigma2dt);
    double const_term =
        -0.5 * static_cast<double>(mu.rows()) * std::log(kTwoPi * sigma2dt);
    return tape.add_const(tape.scale(ssq, factor), const_term);
}

double transition_kl(const VelocityField& current, const PolicySnapshot& snapshot,
                     const ad::Array& x, std::size_t k, std::size_t condition,
                     const NoiseSchedule& sched) {
    double s2dt = sched.sigma2dt(k);
    require(s2dt > 0.0, "kl: zero noise at step ", k);
    ad::Array mu_cur = current.step_mean(x, k, condition, sched);
    ad::Array mu_old = snapshot.field().step_mean(x, k, condition, sched);
    double ssq = 0.0;
    for (std::size_t i = 0; i < mu_cur.size(); ++i) {
        double diff = mu_cur[i] - mu_old[i];
        ssq += diff * diff;
    }
    return ssq / (2.0 * s2dt);
}

std::vector<double> pretrain_flow_matching(VelocityField& field,
                                           const std::vector<LabeledSample>& dataset,
                                           const PretrainConfig& cfg) {
    require(!dataset.empty(), "pretrain: empty dataset");
    std::set<std::size_t> seen;
    for (const auto& s : dataset) {
        require(s.condition < field.spec().condition_count, "pretrain: sample condition ",
                s.condition, " outside vocabulary");
        seen.insert(s.condition);
    }
    require(seen.size() == field.spec().condition_count,
            "pretrain: dataset covers ", seen.size(), " of ", field.spec().condition_count,
            " conditions");

    ad::Optimizer opt({ad::OptMode::kAdam, cfg.lr});
    std::vector<double> losses;
    losses.reserve(cfg.steps);

    std::size_t d = field.spec().sample_dim;
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        RngStream rng(cfg.seed, "pretrain", step);

        std::size_t batch = cfg.batch_size;
        std::vector<ad::Array> xts(batch);
        std::vector<const ad::Array*> xs(batch);
        std::vector<double> ts(batch);
        std::vector<std::size_t> cs(batch);
        ad::Array targets({d, batch});

        for (std::size_t j = 0; j < batch; ++j) {
            const LabeledSample& s = dataset[rng.below(dataset.size())];
            double t = rng.uniform();
            ad::Array xt({d});
            for (std::size_t i = 0; i < d; ++i) {
                double z = rng.normal();
                xt[i] = (1.0 - t) * z + t * s.x[i];
                targets[i * batch + j] = s.x[i] - z;
            }
            xts[j] = std::move(xt);
            xs[j] = &xts[j];
            ts[j] = t;
            cs[j] = s.condition;
        }

        ad::Tape tape;
        ad::Slot v = field.forward_on_tape(tape, assemble_inputs(field.spec(), xs, ts, cs));
        ad::Slot diff = tape.sub(v, tape.constant(targets));
        ad::Slot loss = tape.scale(tape.sum(tape.square(diff)), 1.0 / static_cast<double>(batch));

        field.params().zero_grad();
        tape.backward(loss);
        opt.step(field.params());
        losses.push_back(tape.scalar(loss));
    }
    return losses;
}

}  // namespace flowrl::flow
