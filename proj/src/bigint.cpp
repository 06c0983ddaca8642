#include "nnemd/bigint.hpp"

#include <gmp.h>

#include <chrono>
#include <random>

#include "nnemd/errors.hpp"

namespace nnemd {

std::string to_hex(const Bigint& v) {
    if (sgn(v) < 0) throw Error("to_hex: negative value");
    return v.get_str(16);
}

Bigint from_hex(const std::string& hex) {
    if (hex.empty()) throw Error("from_hex: empty string");
    Bigint v;
    if (mpz_set_str(v.get_mpz_t(), hex.c_str(), 16) != 0 || sgn(v) < 0)
        throw Error("from_hex: malformed hex integer: " + hex);
    return v;
}

std::uint64_t low_bits(const Bigint& v) {
    const mpz_srcptr z = v.get_mpz_t();
    const std::size_t limbs = mpz_size(z);
    std::uint64_t h = 0;
    if (limbs > 0) h = static_cast<std::uint64_t>(mpz_getlimbn(z, 0));
    if (limbs > 1) h ^= static_cast<std::uint64_t>(mpz_getlimbn(z, 1)) * 0x9e3779b97f4a7c15ULL;
    return h;
}

RandomSource::RandomSource() {
    gmp_randinit_mt(state_);
    std::random_device rd;
    const std::uint64_t seed =
        (static_cast<std::uint64_t>(rd()) << 32) ^ rd() ^
        static_cast<std::uint64_t>(
            std::chrono::steady_clock::now().time_since_epoch().count());
    gmp_randseed_ui(state_, static_cast<unsigned long>(seed));
}

RandomSource::RandomSource(std::uint64_t seed) {
    gmp_randinit_mt(state_);
    gmp_randseed_ui(state_, static_cast<unsigned long>(seed));
}

RandomSource::~RandomSource() { gmp_randclear(state_); }

Bigint RandomSource::below(const Bigint& bound) {
    if (sgn(bound) <= 0) throw Error("RandomSource::below: bound must be positive");
    Bigint out;
    mpz_urandomm(out.get_mpz_t(), state_, bound.get_mpz_t());
    return out;
}

}  // namespace nnemd
