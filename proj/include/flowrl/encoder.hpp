#pragma once

#include <cstdint>
#include <vector>

#include "flowrl/array.hpp"
#include "flowrl/rng.hpp"

namespace flowrl::encoder {

struct FeatureBundle {
    ad::Array global;                 // [F]
    std::vector<ad::Array> patches;   // N x [F]
};

/// Frozen random-projection feature extractor standing in for a pretrained
/// backbone: a global projection of the whole sample plus a shared projection
/// applied to each patch, both through tanh. Pure function of its seed.
class FoundationEncoder {
public:
    /// N patches of p contiguous dims (N*p must equal sample_dim).
    static FoundationEncoder contiguous(std::size_t sample_dim, std::size_t patch_count,
                                        std::size_t feature_dim, std::uint64_t seed);

    /// Square pixel blocks over a rows x cols raster (row-major samples).
    static FoundationEncoder raster_blocks(std::size_t rows, std::size_t cols, std::size_t block,
                                           std::size_t feature_dim, std::uint64_t seed);

    FeatureBundle encode(const ad::Array& x) const;

    std::size_t sample_dim() const { return sample_dim_; }
    std::size_t feature_dim() const { return feature_dim_; }
    std::size_t patch_count() const { return layout_.size(); }
    std::size_t patch_dim() const { return layout_.empty() ? 0 : layout_[0].size(); }
    std::uint64_t seed() const { return seed_; }
    const std::vector<std::vector<std::size_t>>& patch_layout() const { return layout_; }

private:
    FoundationEncoder(std::size_t sample_dim, std::size_t feature_dim,
                      std::vector<std::vector<std::size_t>> layout, std::uint64_t seed);

    std::size_t sample_dim_;
    std::size_t feature_dim_;
    std::vector<std::vector<std::size_t>> layout_;
    std::uint64_t seed_;
    ad::Array w_global_;  // [F, D]
    ad::Array w_patch_;   // [F, p], shared across patches
};

/// Uniform subset of n patch indices, without replacement, sorted.
std::vector<std::size_t> patch_subset(std::size_t patch_count, std::size_t n, RngStream& rng);

double cosine_sim(const ad::Array& a, const ad::Array& b);

}  // namespace flowrl::encoder
