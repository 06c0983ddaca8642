#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "nnemd/dlog.hpp"
#include "nnemd/group.hpp"

namespace nnemd {

// Multi-input functional encryption for inner products: up to n sources each
// encrypt a slice x_i of length eta_i under their own party key; one
// functional key for the concatenated y decrypts the n ciphertexts jointly
// to sum_i <x_i, y_i>. Same immutability/purity contract as the
// single-input scheme.

struct MiMasterKeys {
    GroupParams params;
    Scalar a;                                       // a_vec = (1, a)
    std::vector<std::vector<std::array<Scalar, 2>>> W_list;  // per source, eta_i x 2
    std::vector<std::vector<Scalar>> u_list;        // per source, length eta_i
    std::array<GroupElement, 2> g_pow_a;            // (g, g^a)
    std::vector<std::vector<GroupElement>> g_pow_Wa;  // per source, g^{(W_i a)_j}

    std::size_t sources() const { return W_list.size(); }
    std::size_t eta(std::size_t idx) const { return W_list[idx].size(); }
    std::vector<std::size_t> eta_vec() const;
};

struct MiPartyKey {
    std::size_t source_id = 0;  // 1-based
    GroupParams params;
    std::array<GroupElement, 2> g_pow_a;
    std::vector<GroupElement> g_pow_Wa_i;
    std::vector<Scalar> u_i;

    std::size_t eta() const { return u_i.size(); }
};

struct MiCiphertext {
    std::size_t source_id = 0;
    std::array<GroupElement, 2> t;  // (g^{r_i}, g^{a r_i})
    std::vector<GroupElement> c;    // c_j = g^{x_j} g^{u_j} g^{(W a)_j r_i}
};

struct MiFunctionalKey {
    std::vector<std::array<Scalar, 2>> d_list;  // d_i^T = y_i^T W_i
    Scalar z;                                   // sum_i <y_i, u_i>
    std::vector<std::int64_t> y;                // concatenated request vector
    std::vector<std::size_t> eta_vec;           // partition of y
};

MiMasterKeys mi_setup(const GroupParams& params, const std::vector<std::size_t>& eta_vec,
                      std::size_t n, RandomSource& rng);
MiMasterKeys mi_setup(unsigned security_lambda, const std::vector<std::size_t>& eta_vec,
                      std::size_t n, RandomSource& rng);

/// source_id is a dense 1-based index fixed at setup.
MiPartyKey mi_party_key(const MiMasterKeys& master, std::size_t source_id);

MiFunctionalKey mi_derive_key(const MiMasterKeys& master, const std::vector<std::int64_t>& y);

MiCiphertext mi_encrypt(const MiPartyKey& key, const std::vector<std::int64_t>& x_i,
                        RandomSource& rng);

/// cts must hold exactly one ciphertext per source id 1..n, in id order.
std::int64_t mi_decrypt(const GroupParams& params, const std::vector<MiCiphertext>& cts,
                        const MiFunctionalKey& fk, const DlogSolver& solver);

/// Fixed-base tables for one party key; reusable across a batch of rows.
class MiEncryptor {
public:
    explicit MiEncryptor(const MiPartyKey& key);
    MiCiphertext encrypt(const std::vector<std::int64_t>& x_i, RandomSource& rng) const;

private:
    MiPartyKey key_;
    FixedBaseTable g_table_;
    FixedBaseTable ga_table_;
    std::vector<FixedBaseTable> wa_tables_;
    std::vector<GroupElement> g_pow_u_;  // g^{u_j}, fixed per key
};

}  // namespace nnemd
