#include "flowrl/grpo.hpp"

#include <cmath>

#include "flowrl/errors.hpp"

namespace flowrl::grpo {

void GrpoConfig::validate(const flow::NoiseSchedule& sched) const {
    require(group_size >= 2, "grpo: group size must be >= 2, got ", group_size);
    require(clip_range > 0.0, "grpo: clip range must be > 0, got ", clip_range);
    require(kl_weight >= 0.0, "grpo: KL weight must be >= 0, got ", kl_weight);
    require(noise_window_lo >= 0.0 && noise_window_hi <= 1.0 &&
                noise_window_lo < noise_window_hi,
            "grpo: bad noise window [", noise_window_lo, ",", noise_window_hi, "]");
    auto eligible = noise_window_steps(sched, noise_window_lo, noise_window_hi);
    require(timesteps_per_update >= 1 && timesteps_per_update <= eligible.size(),
            "grpo: timesteps_per_update ", timesteps_per_update, " exceeds the ",
            eligible.size(), " steps inside the noise window");
}

std::vector<std::size_t> noise_window_steps(const flow::NoiseSchedule& sched, double lo,
                                            double hi) {
    std::vector<std::size_t> steps;
    for (std::size_t k = 0; k < sched.steps; ++k) {
        double noise = 1.0 - sched.time_at(k);
        if (noise > lo && noise <= hi) steps.push_back(k);
    }
    return steps;
}

AdvantageSet compute_advantages(const std::vector<double>& rewards) {
    require(rewards.size() >= 2, "advantages: need a group of >= 2, got ", rewards.size());
    for (double r : rewards) {
        require(std::isfinite(r), "advantages: non-finite reward ", r);
    }

    AdvantageSet out;
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(rewards.size());

    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(rewards.size());
    double std = std::sqrt(var);

    out.mean = mean;
    out.stddev = std;
    out.advantages.resize(rewards.size(), 0.0);
    if (std < 1e-12) {
        out.degenerate = true;
        return out;
    }
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        out.advantages[i] = (rewards[i] - mean) / std;
    }
    return out;
}

double clip_ratio(double ratio, double eps) {
    double lo = 1.0 - eps;
    double hi = 1.0 + eps;
    return ratio < lo ? lo : (ratio > hi ? hi : ratio);
}

double importance_ratio(flow::VelocityField& current, const flow::PolicySnapshot& snapshot,
                        const flow::Trajectory& traj, std::size_t k,
                        const flow::NoiseSchedule& sched) {
    require(k < traj.means.size(), "ratio: step ", k, " outside trajectory of length ",
            traj.means.size());
    require(!traj.logprobs.empty(), "ratio: trajectory has no stochastic transitions");
    double s2dt = sched.sigma2dt(k);
    require(s2dt > 0.0, "ratio: zero noise at step ", k);

    ad::Array mu_new = current.step_mean(traj.states[k], k, traj.condition, sched);
    double logp_new = flow::transition_logprob(mu_new, s2dt, traj.states[k + 1]);

    ad::Array mu_old =
        snapshot.field().step_mean(traj.states[k], k, traj.condition, sched);
    double logp_old = flow::transition_logprob(mu_old, s2dt, traj.states[k + 1]);
    return std::exp(logp_new - logp_old);
}

double clipped_surrogate(std::span<const double> ratios, std::span<const double> clipped_ratios,
                         std::span<const double> advantages, std::span<const double> kl_terms,
                         double beta) {
    require(!ratios.empty(), "surrogate: empty timestep set");
    require(ratios.size() == clipped_ratios.size() && ratios.size() == advantages.size() &&
                ratios.size() == kl_terms.size(),
            "surrogate: mismatched list lengths");
    double gain = 0.0;
    double kl = 0.0;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        gain += std::min(ratios[i] * advantages[i], clipped_ratios[i] * advantages[i]);
        kl += kl_terms[i];
    }
    double n = static_cast<double>(ratios.size());
    return gain / n - beta * (kl / n);
}

IterationStats grpo_iteration(flow::VelocityField& theta, const flow::NoiseSchedule& sched,
                              rewards::RewardModel& reward,
                              std::span<const std::size_t> conditions, const GrpoConfig& cfg,
                              ad::Optimizer& opt, std::size_t iter_index,
                              std::vector<Group>* out_groups) {
    cfg.validate(sched);
    require(!conditions.empty(), "grpo: empty condition batch");
    require(sched.stochastic(), "grpo: training requires a stochastic schedule (sigma_max > 0)");

    flow::PolicySnapshot snapshot(theta);

    // rollouts and scoring under the snapshot
    std::vector<Group> groups;
    groups.reserve(conditions.size());
    double reward_sum = 0.0;
    std::size_t reward_count = 0;
    std::size_t degenerate = 0;
    for (std::size_t c : conditions) {
        Group group;
        group.condition = c;
        reward.begin_group(mix_key(cfg.seed, "patch-subset", iter_index, c));
        for (std::size_t g = 0; g < cfg.group_size; ++g) {
            std::uint64_t key = mix_key(cfg.seed, "rollout", iter_index, c, g);
            group.members.push_back(flow::sample_sde(snapshot.field(), sched, c, key));
            double r = reward.score(group.members.back().final_state(), c);
            if (!std::isfinite(r)) {
                fail("grpo: reward model returned non-finite score for condition ", c);
            }
            group.rewards.push_back(r);
            reward_sum += r;
            ++reward_count;
        }
        group.advantages = compute_advantages(group.rewards);
        if (group.advantages.degenerate) ++degenerate;
        groups.push_back(std::move(group));
    }

    // one ascent step on the clipped objective over sampled timesteps
    ad::Tape tape;
    std::vector<ad::Slot> per_ck_terms;
    double ratio_sum = 0.0;
    double kl_sum = 0.0;
    std::size_t clip_hits = 0;
    std::size_t term_count = 0;

    std::vector<std::size_t> window = noise_window_steps(sched, cfg.noise_window_lo,
                                                         cfg.noise_window_hi);
    for (const Group& group : groups) {
        RngStream tstream(cfg.seed, "timesteps", iter_index, group.condition);
        std::vector<std::size_t> picks =
            tstream.sample_without_replacement(window.size(), cfg.timesteps_per_update);

        std::size_t batch = group.members.size();
        for (std::size_t pick : picks) {
            std::size_t k = window[pick];
            double t_k = sched.time_at(k);
            double s2dt = sched.sigma2dt(k);
            double dt = sched.dt();

            std::vector<const ad::Array*> xs(batch);
            std::vector<double> ts(batch, t_k);
            std::vector<std::size_t> cs(batch, group.condition);
            ad::Array x_cols({theta.spec().sample_dim, batch});
            ad::Array next_cols({theta.spec().sample_dim, batch});
            ad::Array logp_old({batch});
            ad::Array adv({batch});
            ad::Array mu_old_cols({theta.spec().sample_dim, batch});
            for (std::size_t g = 0; g < batch; ++g) {
                const flow::Trajectory& traj = group.members[g];
                xs[g] = &traj.states[k];
                for (std::size_t i = 0; i < theta.spec().sample_dim; ++i) {
                    x_cols[i * batch + g] = traj.states[k][i];
                    next_cols[i * batch + g] = traj.states[k + 1][i];
                    mu_old_cols[i * batch + g] = traj.means[k][i];
                }
                logp_old[g] = traj.logprobs[k];
                adv[g] = group.advantages.advantages[g];
            }

            ad::Slot v = theta.forward_on_tape(
                tape, flow::assemble_inputs(theta.spec(), xs, ts, cs));
            ad::Slot mu = tape.add(tape.scale(v, dt), tape.constant(x_cols));
            ad::Slot logp_new = flow::transition_logprob_on_tape(tape, mu, s2dt, next_cols);
            ad::Slot ratio = tape.exp(tape.sub(logp_new, tape.constant(logp_old)));
            ad::Slot clipped = tape.clamp(ratio, 1.0 - cfg.clip_range, 1.0 + cfg.clip_range);
            ad::Slot adv_slot = tape.constant(adv);
            ad::Slot term = tape.minimum(tape.mul(ratio, adv_slot), tape.mul(clipped, adv_slot));

            if (cfg.kl_weight > 0.0) {
                ad::Slot diff = tape.sub(mu, tape.constant(mu_old_cols));
                ad::Slot kl = tape.scale(tape.col_sum(tape.square(diff)), 1.0 / (2.0 * s2dt));
                term = tape.sub(term, tape.scale(kl, cfg.kl_weight));
                for (double klv : tape.value(kl).raw()) kl_sum += klv;
            }
            per_ck_terms.push_back(tape.mean(term));

            for (double r : tape.value(ratio).raw()) {
                ratio_sum += r;
                if (r > 1.0 + cfg.clip_range || r < 1.0 - cfg.clip_range) ++clip_hits;
                ++term_count;
            }
        }
    }

    ad::Slot objective =
        tape.scale(tape.add_n(per_ck_terms), 1.0 / static_cast<double>(per_ck_terms.size()));
    ad::Slot loss = tape.neg(objective);

    theta.params().zero_grad();
    tape.backward(loss);
    opt.step(theta.params());

    IterationStats stats;
    stats.iteration = iter_index;
    stats.mean_reward = reward_sum / static_cast<double>(reward_count);
    double abs_adv = 0.0;
    std::size_t adv_count = 0;
    for (const Group& group : groups) {
        for (double a : group.advantages.advantages) {
            abs_adv += std::abs(a);
            ++adv_count;
        }
    }
    stats.mean_abs_advantage = abs_adv / static_cast<double>(adv_count);
    stats.mean_ratio = ratio_sum / static_cast<double>(term_count);
    stats.clip_fraction = static_cast<double>(clip_hits) / static_cast<double>(term_count);
    stats.mean_kl = cfg.kl_weight > 0.0 ? kl_sum / static_cast<double>(term_count) : 0.0;
    stats.surrogate = tape.scalar(objective);
    stats.degenerate_groups = degenerate;

    if (out_groups) *out_groups = std::move(groups);
    return stats;
}

void train(flow::VelocityField& theta, const flow::NoiseSchedule& sched,
           rewards::RewardModel& reward, rewards::AdversarialSchedule& schedule,
           const GrpoConfig& cfg, const world::ReferenceSet& refs, ad::Optimizer& opt,
           std::size_t start_iteration, const TrainHooks& hooks) {
    cfg.validate(sched);
    std::vector<std::size_t> conditions(theta.spec().condition_count);
    for (std::size_t c = 0; c < conditions.size(); ++c) conditions[c] = c;

    std::vector<const ad::Array*> ref_pool = refs.flat();
    require(!ref_pool.empty() || !reward.trainable(),
            "train: a trainable reward needs a nonempty reference set");

    for (std::size_t iter = start_iteration; iter < cfg.iterations; ++iter) {
        TrainRecord record;
        std::vector<Group> groups;
        record.stats = grpo_iteration(theta, sched, reward, conditions, cfg, opt, iter, &groups);

        // current reward model on the full reference set
        if (!ref_pool.empty()) {
            double s = 0.0;
            std::size_t n = 0;
            for (std::size_t c = 0; c < refs.condition_count(); ++c) {
                for (const ad::Array& x : refs.by_condition[c]) {
                    s += reward.score(x, c);
                    ++n;
                }
            }
            record.ref_reward = s / static_cast<double>(n);
        }

        std::size_t updates = schedule.tick(record.stats.mean_reward, record.ref_reward);
        if (schedule.mode() == rewards::ScheduleMode::kTrigger) {
            record.gen_running_mean = schedule.gen_running_mean();
            record.ref_running_mean = schedule.ref_running_mean();
        }

        if (updates > 0) {
            require(reward.trainable(), "train: schedule requested updates on frozen reward '",
                    reward.kind(), "'");
            std::vector<const ad::Array*> gens;
            for (const Group& group : groups) {
                for (const flow::Trajectory& traj : group.members) {
                    gens.push_back(&traj.final_state());
                }
            }
            for (std::size_t u = 0; u < updates; ++u) {
                RngStream rng(cfg.seed, "reward-batch", iter, u);
                std::vector<const ad::Array*> ref_batch(gens.size());
                for (std::size_t i = 0; i < gens.size(); ++i) {
                    ref_batch[i] = ref_pool[rng.below(ref_pool.size())];
                }
                record.reward_update_loss = reward.update(ref_batch, gens);
                require(std::isfinite(record.reward_update_loss),
                        "train: non-finite reward-model loss at iteration ", iter);
            }
            record.reward_updates = updates;
        }

        require(std::isfinite(record.stats.surrogate), "train: non-finite objective at iteration ",
                iter);
        if (hooks.on_iteration) hooks.on_iteration(record, groups);
    }
}

}  // namespace flowrl::grpo
