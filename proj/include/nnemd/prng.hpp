#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nnemd {

/// Deterministic PRNG (xoshiro256**) used wherever training results must be
/// reproducible bit-for-bit across platforms: weight init, batch shuffles,
/// synthetic data. Not for cryptographic material (see RandomSource).
class Prng {
public:
    explicit Prng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 bits of precision.
    double uniform();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform integer in [0, bound), bound > 0.
    std::uint64_t below(std::uint64_t bound);

    /// Fisher-Yates in-place shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Identity permutation of size n, shuffled.
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::uint64_t s_[4];
};

/// Stable 64-bit FNV-1a, used for content fingerprints that must agree
/// across processes and platforms.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(const std::string& s);

}  // namespace nnemd
