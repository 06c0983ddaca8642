#include "nnemd/feip_single.hpp"

#include <algorithm>
#include <string>

#include "nnemd/errors.hpp"

namespace nnemd {

namespace detail {

void check_plain_bound(const GroupParams& params, const std::vector<std::int64_t>& v,
                       const char* who) {
    const Bigint half = (params.order_p - 1) / 2;
    for (std::int64_t e : v) {
        Bigint mag(static_cast<long>(e < 0 ? -e : e));
        if (mag > half)
            throw BoundExceeded(std::string(who) + ": entry " + std::to_string(e) +
                                " does not fold injectively into Z_p");
    }
}

GroupElement signed_multiexp(const GroupParams& params, const std::vector<GroupElement>& bases,
                             const std::vector<std::int64_t>& exps) {
    const Bigint& P = params.modulus_P;
    std::int64_t max_abs = 0;
    for (std::int64_t e : exps) max_abs = std::max(max_abs, e < 0 ? -e : e);

    // Bucket accumulation shares the exponent work across all terms; past a
    // threshold the bucket sweep stops paying for itself and per-term powm
    // wins.
    constexpr std::int64_t kBucketLimit = 4096;
    if (max_abs > kBucketLimit) {
        Bigint acc = 1;
        for (std::size_t k = 0; k < exps.size(); ++k) {
            if (exps[k] == 0) continue;
            acc *= exp_i64(params, bases[k], exps[k]).value;
            mpz_mod(acc.get_mpz_t(), acc.get_mpz_t(), P.get_mpz_t());
        }
        return GroupElement{acc};
    }

    std::vector<Bigint> pos(static_cast<std::size_t>(max_abs) + 1, Bigint(1));
    std::vector<Bigint> neg(static_cast<std::size_t>(max_abs) + 1, Bigint(1));
    for (std::size_t k = 0; k < exps.size(); ++k) {
        const std::int64_t e = exps[k];
        if (e == 0) continue;
        Bigint& slot = e > 0 ? pos[static_cast<std::size_t>(e)]
                             : neg[static_cast<std::size_t>(-e)];
        slot *= bases[k].value;
        mpz_mod(slot.get_mpz_t(), slot.get_mpz_t(), P.get_mpz_t());
    }
    // prod_v bucket[v]^v via suffix products.
    auto combine = [&](std::vector<Bigint>& buckets) {
        Bigint running = 1, total = 1;
        for (std::int64_t v = max_abs; v >= 1; --v) {
            running *= buckets[static_cast<std::size_t>(v)];
            mpz_mod(running.get_mpz_t(), running.get_mpz_t(), P.get_mpz_t());
            total *= running;
            mpz_mod(total.get_mpz_t(), total.get_mpz_t(), P.get_mpz_t());
        }
        return total;
    };
    const Bigint num = combine(pos);
    const Bigint den = combine(neg);
    return mul(params, GroupElement{num}, inv(params, GroupElement{den}));
}

}  // namespace detail

std::pair<SiPublicKey, SiMasterSecret> si_setup(const GroupParams& params, std::size_t eta,
                                                RandomSource& rng) {
    if (eta < 1) throw Error("si_setup: eta must be >= 1");
    SiMasterSecret msk;
    SiPublicKey pk;
    pk.params = params;
    msk.s.reserve(eta);
    pk.h.reserve(eta);
    for (std::size_t i = 0; i < eta; ++i) {
        Scalar si = sample_scalar(params, rng);
        pk.h.push_back(exp(params, params.g(), si));
        msk.s.push_back(std::move(si));
    }
    return {std::move(pk), std::move(msk)};
}

std::pair<SiPublicKey, SiMasterSecret> si_setup(unsigned security_lambda, std::size_t eta,
                                                RandomSource& rng) {
    return si_setup(group_gen(security_lambda, rng), eta, rng);
}

SiFunctionalKey si_derive_key(const GroupParams& params, const SiMasterSecret& msk,
                              const std::vector<std::int64_t>& y) {
    if (y.size() > msk.s.size())
        throw Error("si_derive_key: |y| = " + std::to_string(y.size()) + " exceeds eta = " +
                    std::to_string(msk.s.size()));
    detail::check_plain_bound(params, y, "si_derive_key");
    Bigint acc = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        acc += scalar_mul(params, scalar_from_i64(params, y[i]), msk.s[i]).value;
    return SiFunctionalKey{scalar_mod(params, acc), y};
}

SiCiphertext si_encrypt(const SiPublicKey& pk, const std::vector<std::int64_t>& x,
                        RandomSource& rng) {
    return SiEncryptor(pk).encrypt(x, rng);
}

SiEncryptor::SiEncryptor(const SiPublicKey& pk)
    : pk_(pk), g_table_(pk.params, pk.params.g()) {
    h_tables_.reserve(pk.h.size());
    for (const GroupElement& hi : pk.h) h_tables_.emplace_back(pk.params, hi);
}

SiCiphertext SiEncryptor::encrypt(const std::vector<std::int64_t>& x, RandomSource& rng) const {
    const SiPublicKey& pk = pk_;
    if (x.size() > pk.eta())
        throw Error("si_encrypt: |x| = " + std::to_string(x.size()) + " exceeds eta = " +
                    std::to_string(pk.eta()));
    detail::check_plain_bound(pk.params, x, "si_encrypt");
    const Scalar r = sample_scalar(pk.params, rng);
    SiCiphertext ct;
    ct.ct0 = g_table_.pow(r);
    ct.cts.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        GroupElement hir = h_tables_[i].pow(r);
        if (x[i] != 0)
            hir = mul(pk.params, hir, g_table_.pow(scalar_from_i64(pk.params, x[i])));
        ct.cts.push_back(std::move(hir));
    }
    return ct;
}

std::int64_t si_decrypt(const SiPublicKey& pk, const SiCiphertext& ct,
                        const SiFunctionalKey& fk, const DlogSolver& solver) {
    if (fk.y.size() != ct.cts.size())
        throw Error("si_decrypt: key length " + std::to_string(fk.y.size()) +
                    " != ciphertext length " + std::to_string(ct.cts.size()));
    const GroupElement numer = detail::signed_multiexp(pk.params, ct.cts, fk.y);
    const GroupElement denom = exp(pk.params, ct.ct0, fk.sk);
    return solver.solve(div(pk.params, numer, denom));
}

}  // namespace nnemd
