#include "flowrl/rng.hpp"

#include <cmath>

#include "flowrl/errors.hpp"

namespace flowrl {

namespace {

std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

std::uint64_t mix_key(std::uint64_t root, std::string_view tag, std::uint64_t a,
                      std::uint64_t b, std::uint64_t c) {
    // FNV-1a over the tag, then splitmix rounds folding the indices
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char ch : tag) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ull;
    }
    std::uint64_t s = root ^ (h * 0x9E3779B97F4A7C15ull);
    std::uint64_t k = splitmix64(s);
    s ^= a;
    k ^= splitmix64(s);
    s ^= b;
    k ^= splitmix64(s);
    s ^= c;
    k ^= splitmix64(s);
    return k;
}

double RngStream::uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
    // u1 in (0,1] so the log is finite
    double u1 = static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

std::size_t RngStream::below(std::size_t n) {
    require(n > 0, "rng: below(0)");
    std::uint64_t bound = n;
    std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        std::uint64_t r = gen_();
        if (r >= threshold) return static_cast<std::size_t>(r % bound);
    }
}

std::vector<std::size_t> RngStream::sample_without_replacement(std::size_t n, std::size_t k) {
    require(k <= n, "rng: cannot sample ", k, " of ", n, " without replacement");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + below(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace flowrl
