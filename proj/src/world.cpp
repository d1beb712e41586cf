#include "flowrl/world.hpp"

#include <cmath>
#include <fstream>

#include "flowrl/errors.hpp"
#include "flowrl/serialize.hpp"

namespace flowrl::world {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

std::string domain_name(Domain d) {
    return d == Domain::kPoint2d ? "point2d" : "raster8x8";
}

Domain domain_from_name(const std::string& name) {
    if (name == "point2d") return Domain::kPoint2d;
    if (name == "raster8x8") return Domain::kRaster8x8;
    fail("world: unknown domain '", name, "'");
}

TargetDistribution TargetDistribution::point2d_ring(std::size_t classes, double radius,
                                                    double sigma) {
    require(classes >= 1, "world: need at least one class");
    std::vector<ad::Array> centers;
    centers.reserve(classes);
    for (std::size_t k = 0; k < classes; ++k) {
        double a = kTwoPi * static_cast<double>(k) / static_cast<double>(classes);
        centers.push_back(ad::Array({2}, {radius * std::cos(a), radius * std::sin(a)}));
    }
    return TargetDistribution(Domain::kPoint2d, std::move(centers), sigma, false);
}

TargetDistribution TargetDistribution::raster_shapes(std::size_t classes, double jitter) {
    require(classes >= 1 && classes <= 8, "world: raster domain supports 1..8 classes, got ",
            classes);
    constexpr std::size_t kSide = 8;
    constexpr double kBg = 0.1;
    constexpr double kFg = 0.9;

    auto blank = [] {
        ad::Array img({kSide * kSide});
        img.fill(kBg);
        return img;
    };
    auto set_px = [](ad::Array& img, std::size_t r, std::size_t c) { img[r * kSide + c] = kFg; };

    std::vector<ad::Array> centers;
    for (std::size_t k = 0; k < classes; ++k) {
        ad::Array img = blank();
        switch (k) {
            case 0:  // horizontal bars
            case 1:
            case 2: {
                std::size_t row = 1 + 2 * k;  // rows 1, 3, 5
                for (std::size_t c = 0; c < kSide; ++c) set_px(img, row, c);
                break;
            }
            case 3:  // vertical bars
            case 4:
            case 5: {
                std::size_t col = 1 + 2 * (k - 3);
                for (std::size_t r = 0; r < kSide; ++r) set_px(img, r, col);
                break;
            }
            case 6: {  // cross
                for (std::size_t i = 0; i < kSide; ++i) {
                    set_px(img, 4, i);
                    set_px(img, i, 4);
                }
                break;
            }
            default: {  // centered blob
                for (std::size_t r = 3; r <= 5; ++r) {
                    for (std::size_t c = 3; c <= 5; ++c) set_px(img, r, c);
                }
                break;
            }
        }
        centers.push_back(std::move(img));
    }
    return TargetDistribution(Domain::kRaster8x8, std::move(centers), jitter, true);
}

const ad::Array& TargetDistribution::center(std::size_t condition) const {
    require(condition < centers_.size(), "world: unknown condition id ", condition);
    return centers_[condition];
}

ad::Array TargetDistribution::sample(std::size_t condition, RngStream& rng) const {
    const ad::Array& mu = center(condition);
    ad::Array x(mu.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double v = mu[i] + noise_ * rng.normal();
        if (clamp01_) v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        x[i] = v;
    }
    return x;
}

TransferTransform TransferTransform::shift_by(std::vector<double> s) {
    TransferTransform tf;
    tf.kind = Kind::kShift;
    tf.shift = std::move(s);
    return tf;
}

TransferTransform TransferTransform::rotate_by(double angle) {
    TransferTransform tf;
    tf.kind = Kind::kRotate;
    tf.angle = angle;
    return tf;
}

TransferTransform TransferTransform::restyle_invert() {
    TransferTransform tf;
    tf.kind = Kind::kRestyleInvert;
    return tf;
}

TargetDistribution transfer_target(const TargetDistribution& dist, const TransferTransform& tf) {
    std::vector<ad::Array> centers;
    centers.reserve(dist.condition_count());

    switch (tf.kind) {
        case TransferTransform::Kind::kShift: {
            require(tf.shift.size() == dist.sample_dim(), "transfer: shift has ",
                    tf.shift.size(), " dims, distribution has ", dist.sample_dim());
            for (std::size_t c = 0; c < dist.condition_count(); ++c) {
                ad::Array mu = dist.center(c);
                for (std::size_t i = 0; i < mu.size(); ++i) {
                    mu[i] += tf.shift[i];
                    if (dist.clamp01_) mu[i] = mu[i] < 0.0 ? 0.0 : (mu[i] > 1.0 ? 1.0 : mu[i]);
                }
                centers.push_back(std::move(mu));
            }
            break;
        }
        case TransferTransform::Kind::kRotate: {
            require(dist.domain() == Domain::kPoint2d, "transfer: rotate requires point2d");
            double ca = std::cos(tf.angle);
            double sa = std::sin(tf.angle);
            for (std::size_t c = 0; c < dist.condition_count(); ++c) {
                const ad::Array& mu = dist.center(c);
                centers.push_back(ad::Array({2}, {ca * mu[0] - sa * mu[1],
                                                  sa * mu[0] + ca * mu[1]}));
            }
            break;
        }
        case TransferTransform::Kind::kRestyleInvert: {
            require(dist.domain() == Domain::kRaster8x8, "transfer: restyle requires raster8x8");
            for (std::size_t c = 0; c < dist.condition_count(); ++c) {
                ad::Array mu = dist.center(c);
                for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = 1.0 - mu[i];
                centers.push_back(std::move(mu));
            }
            break;
        }
    }
    return TargetDistribution(dist.domain_, std::move(centers), dist.noise_, dist.clamp01_);
}

std::size_t ReferenceSet::total() const {
    std::size_t n = 0;
    for (const auto& refs : by_condition) n += refs.size();
    return n;
}

std::vector<const ad::Array*> ReferenceSet::flat() const {
    std::vector<const ad::Array*> out;
    out.reserve(total());
    for (const auto& refs : by_condition) {
        for (const auto& x : refs) out.push_back(&x);
    }
    return out;
}

ReferenceSet gen_reference_set(const TargetDistribution& dist, std::size_t per_condition,
                               std::uint64_t seed) {
    require(per_condition >= 1, "references: per-condition count must be >= 1");
    ReferenceSet refs;
    refs.seed = seed;
    refs.by_condition.resize(dist.condition_count());
    for (std::size_t c = 0; c < dist.condition_count(); ++c) {
        refs.by_condition[c].reserve(per_condition);
        for (std::size_t i = 0; i < per_condition; ++i) {
            RngStream rng(seed, "reference", c, i);
            refs.by_condition[c].push_back(dist.sample(c, rng));
        }
    }
    return refs;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    nlohmann::ordered_json j;
    j["version"] = ckpt.version;
    j["iteration"] = ckpt.iteration;
    j["root_seed"] = ckpt.root_seed;
    j["generator"] = {
        {"sample_dim", ckpt.gen_spec.sample_dim},
        {"condition_count", ckpt.gen_spec.condition_count},
        {"hidden", ckpt.gen_spec.hidden},
        {"params", ad::paramset_to_json(ckpt.theta)},
    };
    j["schedule"] = {{"sigma_max", ckpt.schedule.sigma_max}, {"steps", ckpt.schedule.steps}};
    j["generator_optimizer"] = ckpt.generator_optimizer;
    j["reward"] = ckpt.reward_state;
    j["encoder"] = ckpt.encoder_state;
    j["adversarial_schedule"] = ckpt.adversarial_schedule;

    std::ofstream out(path);
    require(out.good(), "checkpoint: cannot open '", path.string(), "' for writing");
    out << j.dump(1) << "\n";
    require(out.good(), "checkpoint: write to '", path.string(), "' failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), "checkpoint: cannot open '", path.string(), "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail("checkpoint: '", path.string(), "' is not valid JSON: ", e.what());
    }

    Checkpoint ckpt;
    require(j.contains("version"), "checkpoint: '", path.string(), "' missing version field");
    ckpt.version = j.at("version").get<std::string>();
    require(ckpt.version == kCheckpointVersion, "checkpoint: version '", ckpt.version,
            "' not supported (expected '", kCheckpointVersion, "')");

    try {
        ckpt.iteration = j.at("iteration").get<std::size_t>();
        ckpt.root_seed = j.at("root_seed").get<std::uint64_t>();
        const auto& gen = j.at("generator");
        ckpt.gen_spec.sample_dim = gen.at("sample_dim").get<std::size_t>();
        ckpt.gen_spec.condition_count = gen.at("condition_count").get<std::size_t>();
        ckpt.gen_spec.hidden = gen.at("hidden").get<std::vector<std::size_t>>();
        ckpt.theta = ad::paramset_from_json(gen.at("params"));
        ckpt.schedule.sigma_max = j.at("schedule").at("sigma_max").get<double>();
        ckpt.schedule.steps = j.at("schedule").at("steps").get<std::size_t>();
        ckpt.generator_optimizer = j.value("generator_optimizer", nlohmann::json());
        ckpt.reward_state = j.value("reward", nlohmann::json());
        ckpt.encoder_state = j.value("encoder", nlohmann::json());
        ckpt.adversarial_schedule = j.value("adversarial_schedule", nlohmann::json());
    } catch (const nlohmann::json::exception& e) {
        fail("checkpoint: '", path.string(), "' has invalid structure: ", e.what());
    }

    // shape validation against the declared architecture
    flow::VelocityField check(ckpt.gen_spec, ckpt.theta.clone());
    (void)check;
    return ckpt;
}

}  // namespace flowrl::world
