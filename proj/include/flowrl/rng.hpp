#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace flowrl {

/// Derives a stream key from a root seed, a purpose tag and up to three
/// indices. Every random draw in the project comes from a stream keyed this
/// way, so reruns and checkpoint resumes reproduce draws without having to
/// serialize generator state.
std::uint64_t mix_key(std::uint64_t root, std::string_view tag,
                      std::uint64_t a = 0, std::uint64_t b = 0,
                      std::uint64_t c = 0);

class RngStream {
public:
    explicit RngStream(std::uint64_t key) : gen_(key) {}
    RngStream(std::uint64_t root, std::string_view tag, std::uint64_t a = 0,
              std::uint64_t b = 0, std::uint64_t c = 0)
        : RngStream(mix_key(root, tag, a, b, c)) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1).
    double uniform();

    /// Standard normal via Box-Muller; two uniforms per draw, no cached spare.
    double normal();

    /// Uniform integer in [0, n), rejection sampled (unbiased).
    std::size_t below(std::size_t n);

    /// k distinct indices from {0..n-1}, uniform, returned sorted.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
    std::mt19937_64 gen_;
};

}  // namespace flowrl
