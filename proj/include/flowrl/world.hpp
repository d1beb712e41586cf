#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowrl/array.hpp"
#include "flowrl/flow.hpp"
#include "flowrl/rng.hpp"

namespace flowrl::world {

enum class Domain { kPoint2d, kRaster8x8 };

std::string domain_name(Domain d);
Domain domain_from_name(const std::string& name);

/// Per-condition generative spec: Gaussian components for the point domain,
/// jittered shape templates for the raster domain. Sampling is a pure
/// function of the RNG stream.
class TargetDistribution {
public:
    static TargetDistribution point2d_ring(std::size_t classes, double radius = 3.0,
                                           double sigma = 0.25);
    static TargetDistribution raster_shapes(std::size_t classes, double jitter = 0.05);

    Domain domain() const { return domain_; }
    std::size_t condition_count() const { return centers_.size(); }
    std::size_t sample_dim() const { return centers_.empty() ? 0 : centers_[0].size(); }
    double noise_scale() const { return noise_; }

    const ad::Array& center(std::size_t condition) const;
    ad::Array sample(std::size_t condition, RngStream& rng) const;

private:
    TargetDistribution(Domain d, std::vector<ad::Array> centers, double noise, bool clamp01)
        : domain_(d), centers_(std::move(centers)), noise_(noise), clamp01_(clamp01) {}

    friend TargetDistribution transfer_target(const TargetDistribution&,
                                              const struct TransferTransform&);

    Domain domain_;
    std::vector<ad::Array> centers_;
    double noise_;
    bool clamp01_;
};

struct TransferTransform {
    enum class Kind { kShift, kRotate, kRestyleInvert };

    Kind kind = Kind::kShift;
    std::vector<double> shift;
    double angle = 0.0;

    static TransferTransform shift_by(std::vector<double> s);
    static TransferTransform rotate_by(double angle);
    static TransferTransform restyle_invert();
};

/// New distribution whose per-condition specs are the transformed originals.
TargetDistribution transfer_target(const TargetDistribution& dist, const TransferTransform& tf);

/// Per-condition high-quality samples drawn from the target distribution.
struct ReferenceSet {
    std::vector<std::vector<ad::Array>> by_condition;
    std::uint64_t seed = 0;

    std::size_t condition_count() const { return by_condition.size(); }
    std::size_t per_condition() const { return by_condition.empty() ? 0 : by_condition[0].size(); }
    std::size_t total() const;
    std::vector<const ad::Array*> flat() const;
};

ReferenceSet gen_reference_set(const TargetDistribution& dist, std::size_t per_condition,
                               std::uint64_t seed);

inline constexpr const char* kCheckpointVersion = "flowrl-ckpt-v1";

struct Checkpoint {
    std::string version = kCheckpointVersion;
    std::size_t iteration = 0;
    std::uint64_t root_seed = 0;
    flow::GeneratorSpec gen_spec;
    flow::NoiseSchedule schedule;
    ad::ParamSet theta;
    nlohmann::json generator_optimizer;    // null when absent
    nlohmann::json reward_state;           // null when absent
    nlohmann::json encoder_state;          // null when absent
    nlohmann::json adversarial_schedule;   // null when absent
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace flowrl::world
