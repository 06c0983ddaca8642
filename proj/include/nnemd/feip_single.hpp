#pragma once

#include <cstdint>
#include <vector>

#include "nnemd/dlog.hpp"
#include "nnemd/group.hpp"

namespace nnemd {

// Single-input functional encryption for inner products. A ciphertext of x
// together with a key derived for y decrypts to exactly <x, y> and nothing
// else. Keys and ciphertexts are immutable; all operations are pure given an
// rng handle, so rows of a batch may be processed in parallel.

struct SiMasterSecret {
    std::vector<Scalar> s;  // length eta
};

struct SiPublicKey {
    GroupParams params;
    std::vector<GroupElement> h;  // h_i = g^{s_i}

    std::size_t eta() const { return h.size(); }
};

struct SiCiphertext {
    GroupElement ct0;                 // g^r
    std::vector<GroupElement> cts;   // ct_i = h_i^r * g^{x_i}, length <= eta
};

struct SiFunctionalKey {
    Scalar sk;                    // <y, s> mod p
    std::vector<std::int64_t> y;  // the vector the key was derived for
};

std::pair<SiPublicKey, SiMasterSecret> si_setup(const GroupParams& params, std::size_t eta,
                                                RandomSource& rng);
std::pair<SiPublicKey, SiMasterSecret> si_setup(unsigned security_lambda, std::size_t eta,
                                                RandomSource& rng);

SiFunctionalKey si_derive_key(const GroupParams& params, const SiMasterSecret& msk,
                              const std::vector<std::int64_t>& y);

SiCiphertext si_encrypt(const SiPublicKey& pk, const std::vector<std::int64_t>& x,
                        RandomSource& rng);

std::int64_t si_decrypt(const SiPublicKey& pk, const SiCiphertext& ct,
                        const SiFunctionalKey& fk, const DlogSolver& solver);

/// Precomputed fixed-base tables for the public key, shared across many
/// encryptions under the same key. Row-parallel safe.
class SiEncryptor {
public:
    explicit SiEncryptor(const SiPublicKey& pk);
    SiCiphertext encrypt(const std::vector<std::int64_t>& x, RandomSource& rng) const;

private:
    SiPublicKey pk_;
    FixedBaseTable g_table_;
    std::vector<FixedBaseTable> h_tables_;
};

namespace detail {
/// Signed plaintexts must fold injectively into Z_p.
void check_plain_bound(const GroupParams& params, const std::vector<std::int64_t>& v,
                       const char* who);
/// Multiplies out prod_k bases[k]^{e[k]} for small signed exponents using
/// bucket accumulation; count limits how many bases participate.
GroupElement signed_multiexp(const GroupParams& params, const std::vector<GroupElement>& bases,
                             const std::vector<std::int64_t>& exps);
}  // namespace detail

}  // namespace nnemd
