#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>

namespace nnemd {

using Bigint = mpz_class;

/// Lowercase hex, no leading zeros except "0". Values must be non-negative.
std::string to_hex(const Bigint& v);
Bigint from_hex(const std::string& hex);

/// 64-bit fingerprint of a non-negative value (low limbs). Used as a hash
/// key; callers must confirm candidates with a full comparison.
std::uint64_t low_bits(const Bigint& v);

/// Randomness for key material and encryption nonces. Wraps GMP's
/// Mersenne-Twister state. Seeded construction is deterministic and is the
/// white-box hook tests use to reproduce ephemeral nonces; default
/// construction pulls entropy from the OS.
class RandomSource {
public:
    RandomSource();  // system entropy
    explicit RandomSource(std::uint64_t seed);
    ~RandomSource();

    RandomSource(const RandomSource&) = delete;
    RandomSource& operator=(const RandomSource&) = delete;

    /// Uniform in [0, bound).
    Bigint below(const Bigint& bound);

private:
    gmp_randstate_t state_;
};

}  // namespace nnemd
