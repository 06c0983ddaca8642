#include "nnemd/feip_multi.hpp"

#include <string>

#include "nnemd/errors.hpp"
#include "nnemd/feip_single.hpp"

namespace nnemd {

std::vector<std::size_t> MiMasterKeys::eta_vec() const {
    std::vector<std::size_t> v;
    v.reserve(W_list.size());
    for (const auto& w : W_list) v.push_back(w.size());
    return v;
}

MiMasterKeys mi_setup(const GroupParams& params, const std::vector<std::size_t>& eta_vec,
                      std::size_t n, RandomSource& rng) {
    if (n < 1) throw Error("mi_setup: n must be >= 1");
    if (eta_vec.size() != n)
        throw Error("mi_setup: |eta_vec| = " + std::to_string(eta_vec.size()) +
                    " does not match n = " + std::to_string(n));
    for (std::size_t e : eta_vec)
        if (e < 1) throw Error("mi_setup: every eta_i must be >= 1");

    MiMasterKeys m;
    m.params = params;
    m.a = sample_scalar(params, rng);
    m.g_pow_a = {params.g(), exp(params, params.g(), m.a)};
    m.W_list.resize(n);
    m.u_list.resize(n);
    m.g_pow_Wa.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        m.W_list[i].resize(eta_vec[i]);
        m.u_list[i].reserve(eta_vec[i]);
        m.g_pow_Wa[i].reserve(eta_vec[i]);
        for (std::size_t j = 0; j < eta_vec[i]; ++j) {
            m.W_list[i][j] = {sample_scalar(params, rng), sample_scalar(params, rng)};
            m.u_list[i].push_back(sample_scalar(params, rng));
            // (W_i a)_j with a_vec = (1, a).
            const Scalar wa = scalar_add(
                params, m.W_list[i][j][0], scalar_mul(params, m.W_list[i][j][1], m.a));
            m.g_pow_Wa[i].push_back(exp(params, params.g(), wa));
        }
    }
    return m;
}

MiMasterKeys mi_setup(unsigned security_lambda, const std::vector<std::size_t>& eta_vec,
                      std::size_t n, RandomSource& rng) {
    return mi_setup(group_gen(security_lambda, rng), eta_vec, n, rng);
}

MiPartyKey mi_party_key(const MiMasterKeys& master, std::size_t source_id) {
    if (source_id < 1 || source_id > master.sources())
        throw Error("mi_party_key: unknown source id " + std::to_string(source_id));
    const std::size_t idx = source_id - 1;
    MiPartyKey key;
    key.source_id = source_id;
    key.params = master.params;
    key.g_pow_a = master.g_pow_a;
    key.g_pow_Wa_i = master.g_pow_Wa[idx];
    key.u_i = master.u_list[idx];
    return key;
}

MiFunctionalKey mi_derive_key(const MiMasterKeys& master, const std::vector<std::int64_t>& y) {
    const GroupParams& params = master.params;
    std::size_t total = 0;
    for (std::size_t i = 0; i < master.sources(); ++i) total += master.eta(i);
    if (y.size() != total)
        throw Error("mi_derive_key: |y| = " + std::to_string(y.size()) +
                    " does not match sum(eta_i) = " + std::to_string(total));
    detail::check_plain_bound(params, y, "mi_derive_key");

    MiFunctionalKey fk;
    fk.y = y;
    fk.eta_vec = master.eta_vec();
    fk.d_list.reserve(master.sources());
    Bigint z_acc = 0;
    std::size_t off = 0;
    for (std::size_t i = 0; i < master.sources(); ++i) {
        Bigint d0 = 0, d1 = 0;
        for (std::size_t j = 0; j < master.eta(i); ++j) {
            const Scalar yj = scalar_from_i64(params, y[off + j]);
            d0 += scalar_mul(params, yj, master.W_list[i][j][0]).value;
            d1 += scalar_mul(params, yj, master.W_list[i][j][1]).value;
            z_acc += scalar_mul(params, yj, master.u_list[i][j]).value;
        }
        fk.d_list.push_back({scalar_mod(params, d0), scalar_mod(params, d1)});
        off += master.eta(i);
    }
    fk.z = scalar_mod(params, z_acc);
    return fk;
}

MiEncryptor::MiEncryptor(const MiPartyKey& key)
    : key_(key),
      g_table_(key.params, key.g_pow_a[0]),
      ga_table_(key.params, key.g_pow_a[1]) {
    wa_tables_.reserve(key.g_pow_Wa_i.size());
    g_pow_u_.reserve(key.u_i.size());
    FixedBaseTable g_fixed(key.params, key.params.g());
    for (std::size_t j = 0; j < key.g_pow_Wa_i.size(); ++j) {
        wa_tables_.emplace_back(key.params, key.g_pow_Wa_i[j]);
        g_pow_u_.push_back(g_fixed.pow(key.u_i[j]));
    }
}

MiCiphertext MiEncryptor::encrypt(const std::vector<std::int64_t>& x_i,
                                  RandomSource& rng) const {
    const MiPartyKey& key = key_;
    if (x_i.size() != key.eta())
        throw Error("mi_encrypt: |x_i| = " + std::to_string(x_i.size()) +
                    " does not match eta_i = " + std::to_string(key.eta()));
    detail::check_plain_bound(key.params, x_i, "mi_encrypt");

    const Scalar r = sample_scalar(key.params, rng);
    MiCiphertext ct;
    ct.source_id = key.source_id;
    ct.t = {g_table_.pow(r), ga_table_.pow(r)};
    ct.c.reserve(x_i.size());
    for (std::size_t j = 0; j < x_i.size(); ++j) {
        GroupElement cj = mul(key.params, g_pow_u_[j], wa_tables_[j].pow(r));
        if (x_i[j] != 0)
            cj = mul(key.params, cj, exp_i64(key.params, key.params.g(), x_i[j]));
        ct.c.push_back(std::move(cj));
    }
    return ct;
}

MiCiphertext mi_encrypt(const MiPartyKey& key, const std::vector<std::int64_t>& x_i,
                        RandomSource& rng) {
    return MiEncryptor(key).encrypt(x_i, rng);
}

std::int64_t mi_decrypt(const GroupParams& params, const std::vector<MiCiphertext>& cts,
                        const MiFunctionalKey& fk, const DlogSolver& solver) {
    const std::size_t n = fk.eta_vec.size();
    if (cts.size() != n)
        throw Error("mi_decrypt: expected one ciphertext per source (" + std::to_string(n) +
                    "), got " + std::to_string(cts.size()));
    for (std::size_t i = 0; i < n; ++i) {
        if (cts[i].source_id != i + 1)
            throw Error("mi_decrypt: missing or out-of-order ciphertext for source " +
                        std::to_string(i + 1));
        if (cts[i].c.size() != fk.eta_vec[i])
            throw Error("mi_decrypt: ciphertext length mismatch for source " +
                        std::to_string(i + 1));
    }

    // C = prod_i [ prod_j c_{i,j}^{y_{i,j}} / (t_{i,1}^{d_{i,1}} t_{i,2}^{d_{i,2}}) ] * g^{-z}
    GroupElement acc = params.identity();
    std::size_t off = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<std::int64_t> yi(fk.y.begin() + static_cast<std::ptrdiff_t>(off),
                                           fk.y.begin() +
                                               static_cast<std::ptrdiff_t>(off + fk.eta_vec[i]));
        const GroupElement numer = detail::signed_multiexp(params, cts[i].c, yi);
        const GroupElement denom = mul(params, exp(params, cts[i].t[0], fk.d_list[i][0]),
                                       exp(params, cts[i].t[1], fk.d_list[i][1]));
        acc = mul(params, acc, div(params, numer, denom));
        off += fk.eta_vec[i];
    }
    acc = div(params, acc, exp(params, params.g(), fk.z));
    return solver.solve(acc);
}

}  // namespace nnemd
