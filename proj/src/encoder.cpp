#include "flowrl/encoder.hpp"

#include <cmath>

#include "flowrl/errors.hpp"

namespace flowrl::encoder {

namespace {

ad::Array random_projection(std::size_t out_dim, std::size_t in_dim, RngStream& rng) {
    ad::Array w({out_dim, in_dim});
    double s = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = s * rng.normal();
    return w;
}

}  // namespace

FoundationEncoder::FoundationEncoder(std::size_t sample_dim, std::size_t feature_dim,
                                     std::vector<std::vector<std::size_t>> layout,
                                     std::uint64_t seed)
    : sample_dim_(sample_dim), feature_dim_(feature_dim), layout_(std::move(layout)), seed_(seed) {
    require(!layout_.empty(), "encoder: empty patch layout");
    std::size_t p = layout_[0].size();
    std::vector<bool> covered(sample_dim_, false);
    for (const auto& patch : layout_) {
        require(patch.size() == p, "encoder: patches must share one size");
        for (std::size_t d : patch) {
            require(d < sample_dim_, "encoder: patch index ", d, " outside sample dim ", sample_dim_);
            require(!covered[d], "encoder: patch layout covers dim ", d, " twice");
            covered[d] = true;
        }
    }
    require(layout_.size() * p == sample_dim_, "encoder: layout covers ", layout_.size() * p,
            " dims of ", sample_dim_);

    RngStream rg(seed_, "encoder-global");
    w_global_ = random_projection(feature_dim_, sample_dim_, rg);
    RngStream rl(seed_, "encoder-patch");
    w_patch_ = random_projection(feature_dim_, p, rl);
}

FoundationEncoder FoundationEncoder::contiguous(std::size_t sample_dim, std::size_t patch_count,
                                                std::size_t feature_dim, std::uint64_t seed) {
    require(patch_count > 0 && sample_dim % patch_count == 0,
            "encoder: cannot split dim ", sample_dim, " into ", patch_count, " equal patches");
    std::size_t p = sample_dim / patch_count;
    std::vector<std::vector<std::size_t>> layout(patch_count);
    for (std::size_t j = 0; j < patch_count; ++j) {
        for (std::size_t i = 0; i < p; ++i) layout[j].push_back(j * p + i);
    }
    return FoundationEncoder(sample_dim, feature_dim, std::move(layout), seed);
}

FoundationEncoder FoundationEncoder::raster_blocks(std::size_t rows, std::size_t cols,
                                                   std::size_t block, std::size_t feature_dim,
                                                   std::uint64_t seed) {
    require(block > 0 && rows % block == 0 && cols % block == 0,
            "encoder: ", rows, "x", cols, " raster does not tile with ", block, "x", block,
            " blocks");
    std::vector<std::vector<std::size_t>> layout;
    for (std::size_t br = 0; br < rows; br += block) {
        for (std::size_t bc = 0; bc < cols; bc += block) {
            std::vector<std::size_t> patch;
            for (std::size_t r = 0; r < block; ++r) {
                for (std::size_t c = 0; c < block; ++c) {
                    patch.push_back((br + r) * cols + (bc + c));
                }
            }
            layout.push_back(std::move(patch));
        }
    }
    return FoundationEncoder(rows * cols, feature_dim, std::move(layout), seed);
}

FeatureBundle FoundationEncoder::encode(const ad::Array& x) const {
    require(x.size() == sample_dim_, "encoder: sample shape ", shape_str(x),
            " does not match dim ", sample_dim_);
    FeatureBundle out;
    out.global = ad::Array({feature_dim_});
    for (std::size_t i = 0; i < feature_dim_; ++i) {
        double s = 0.0;
        for (std::size_t d = 0; d < sample_dim_; ++d) s += w_global_[i * sample_dim_ + d] * x[d];
        out.global[i] = std::tanh(s);
    }
    std::size_t p = patch_dim();
    out.patches.reserve(layout_.size());
    for (const auto& patch : layout_) {
        ad::Array f({feature_dim_});
        for (std::size_t i = 0; i < feature_dim_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < p; ++j) s += w_patch_[i * p + j] * x[patch[j]];
            f[i] = std::tanh(s);
        }
        out.patches.push_back(std::move(f));
    }
    return out;
}

std::vector<std::size_t> patch_subset(std::size_t patch_count, std::size_t n, RngStream& rng) {
    require(n >= 1 && n <= patch_count, "patch subset: size ", n, " outside [1,", patch_count, "]");
    return rng.sample_without_replacement(patch_count, n);
}

double cosine_sim(const ad::Array& a, const ad::Array& b) {
    require(a.same_shape(b), "cosine: shape mismatch ", shape_str(a), " vs ", shape_str(b));
    double na = std::sqrt(ad::squared_norm(a.data()));
    double nb = std::sqrt(ad::squared_norm(b.data()));
    require(na > 0.0 && nb > 0.0, "cosine: zero-norm input");
    return ad::dot(a.data(), b.data()) / (na * nb);
}

}  // namespace flowrl::encoder
