#include "nnemd/group.hpp"

#include <gmp.h>

#include <cstdlib>

#include "nnemd/errors.hpp"

namespace nnemd {

namespace {

constexpr int kMillerRabinRounds = 64;

bool is_prime(const Bigint& n) {
    return mpz_probab_prime_p(n.get_mpz_t(), kMillerRabinRounds) != 0;
}

Bigint powm(const Bigint& base, const Bigint& e, const Bigint& mod) {
    Bigint out;
    mpz_powm(out.get_mpz_t(), base.get_mpz_t(), e.get_mpz_t(), mod.get_mpz_t());
    return out;
}

}  // namespace

std::map<std::string, std::string> GroupParams::to_record() const {
    return {{"P", to_hex(modulus_P)},
            {"p", to_hex(order_p)},
            {"g", to_hex(generator_g)},
            {"lambda", std::to_string(security_lambda)}};
}

GroupParams GroupParams::from_record(const std::map<std::string, std::string>& rec) {
    auto need = [&](const char* k) -> const std::string& {
        auto it = rec.find(k);
        if (it == rec.end()) throw Error(std::string("GroupParams record missing key ") + k);
        return it->second;
    };
    return params_from_values(from_hex(need("P")), from_hex(need("p")), from_hex(need("g")),
                              static_cast<unsigned>(std::stoul(need("lambda"))));
}

void validate_params(const GroupParams& params) {
    const Bigint& P = params.modulus_P;
    const Bigint& p = params.order_p;
    const Bigint& g = params.generator_g;
    if (P != 2 * p + 1) throw Error("group: P != 2p + 1");
    if (!is_prime(P)) throw Error("group: modulus P is not prime");
    if (!is_prime(p)) throw Error("group: order p is not prime");
    if (g < 2 || g >= P) throw Error("group: generator out of range [2, P-1]");
    if (powm(g, p, P) != 1) throw Error("group: generator does not have order p");
    if (mpz_sizeinbase(p.get_mpz_t(), 2) < params.security_lambda)
        throw Error("group: order p shorter than security_lambda bits");
}

GroupParams params_from_values(const Bigint& P, const Bigint& p, const Bigint& g,
                               unsigned security_lambda) {
    GroupParams params;
    params.modulus_P = P;
    params.order_p = p;
    params.generator_g = g;
    params.security_lambda = security_lambda != 0
                                 ? security_lambda
                                 : static_cast<unsigned>(mpz_sizeinbase(p.get_mpz_t(), 2));
    validate_params(params);
    return params;
}

GroupParams named_params(const std::string& name) {
    if (name == "tiny23") return params_from_values(23, 11, 4);
    if (name == "test64")
        return params_from_values(from_hex("1a6614a929a299ebf"), from_hex("d330a5494d14cf5f"), 4);
    if (name == "demo512")
        return params_from_values(
            from_hex("14c0865a654f7e1ed3e816ac6cb03e61da0fc4f6695de741585a325106f1fe534a346f"
                     "089ddd50a366320c419bc494eef3b8dfe37a2baa2fed185819063076287"),
            from_hex("a60432d32a7bf0f69f40b5636581f30ed07e27b34aef3a0ac2d19288378ff29a51a378"
                     "44eeea851b3190620cde24a7779dc6ff1bd15d517f68c2c0c83183b143"),
            4);
    if (name == "secure2048") {
        // RFC 3526 group 14 (2048-bit MODP). P = 2p + 1 with p prime; 2 is a
        // quadratic residue mod P so it generates the order-p subgroup.
        static const char* kHexP =
            "ffffffffffffffffc90fdaa22168c234c4c6628b80dc1cd129024e088a67cc74"
            "020bbea63b139b22514a08798e3404ddef9519b3cd3a431b302b0a6df25f1437"
            "4fe1356d6d51c245e485b576625e7ec6f44c42e9a637ed6b0bff5cb6f406b7ed"
            "ee386bfb5a899fa5ae9f24117c4b1fe649286651ece45b3dc2007cb8a163bf05"
            "98da48361c55d39a69163fa8fd24cf5f83655d23dca3ad961c62f356208552bb"
            "9ed529077096966d670c354e4abc9804f1746c08ca18217c32905e462e36ce3b"
            "e39e772c180e86039b2783a2ec07a28fb5c55df06f4c52c9de2bcbf695581718"
            "3995497cea956ae515d2261898fa051015728e5a8aacaa68ffffffffffffffff";
        const Bigint P = from_hex(kHexP);
        return params_from_values(P, (P - 1) / 2, 2);
    }
    throw Error("named_params: unknown parameter set '" + name + "'");
}

GroupParams group_gen(unsigned security_lambda, RandomSource& rng, unsigned attempt_budget) {
    if (security_lambda < 64 || security_lambda > 4096)
        throw Error("group_gen: security_lambda must be in [64, 4096]");
    const Bigint lo = Bigint(1) << (security_lambda - 1);
    const Bigint span = lo;  // candidates in [2^(l-1), 2^l)
    for (unsigned attempt = 0; attempt < attempt_budget; ++attempt) {
        Bigint p = lo + rng.below(span);
        mpz_setbit(p.get_mpz_t(), 0);
        if (!is_prime(p)) continue;
        if (mpz_sizeinbase(p.get_mpz_t(), 2) != security_lambda) continue;
        const Bigint P = 2 * p + 1;
        if (!is_prime(P)) continue;
        // In a safe-prime group every non-trivial square generates the
        // order-p subgroup; 4 = 2^2 always qualifies.
        return params_from_values(P, p, 4, security_lambda);
    }
    throw Error("group_gen: attempt budget exhausted without finding a safe prime");
}

bool is_member(const GroupParams& params, const GroupElement& a) {
    if (a.value < 1 || a.value >= params.modulus_P) return false;
    return powm(a.value, params.order_p, params.modulus_P) == 1;
}

GroupElement exp(const GroupParams& params, const GroupElement& base, const Scalar& e) {
    return GroupElement{powm(base.value, e.value, params.modulus_P)};
}

GroupElement exp_i64(const GroupParams& params, const GroupElement& base, std::int64_t e) {
    const GroupElement b = e < 0 ? inv(params, base) : base;
    const std::uint64_t mag =
        e < 0 ? static_cast<std::uint64_t>(-(e + 1)) + 1 : static_cast<std::uint64_t>(e);
    Bigint out;
    mpz_powm_ui(out.get_mpz_t(), b.value.get_mpz_t(), static_cast<unsigned long>(mag),
                params.modulus_P.get_mpz_t());
    return GroupElement{out};
}

GroupElement mul(const GroupParams& params, const GroupElement& a, const GroupElement& b) {
    Bigint out = a.value * b.value;
    mpz_mod(out.get_mpz_t(), out.get_mpz_t(), params.modulus_P.get_mpz_t());
    return GroupElement{out};
}

GroupElement div(const GroupParams& params, const GroupElement& a, const GroupElement& b) {
    return mul(params, a, inv(params, b));
}

GroupElement inv(const GroupParams& params, const GroupElement& a) {
    Bigint out;
    if (mpz_invert(out.get_mpz_t(), a.value.get_mpz_t(), params.modulus_P.get_mpz_t()) == 0)
        throw Error("group: element not invertible");
    return GroupElement{out};
}

Scalar sample_scalar(const GroupParams& params, RandomSource& rng) {
    return Scalar{rng.below(params.order_p)};
}

Scalar scalar_from_i64(const GroupParams& params, std::int64_t v) {
    return scalar_mod(params, Bigint(static_cast<long>(v)));
}

Scalar scalar_mod(const GroupParams& params, const Bigint& v) {
    Bigint out;
    mpz_fdiv_r(out.get_mpz_t(), v.get_mpz_t(), params.order_p.get_mpz_t());
    return Scalar{out};
}

Scalar scalar_add(const GroupParams& params, const Scalar& a, const Scalar& b) {
    return scalar_mod(params, a.value + b.value);
}

Scalar scalar_mul(const GroupParams& params, const Scalar& a, const Scalar& b) {
    return scalar_mod(params, a.value * b.value);
}

Scalar scalar_inv(const GroupParams& params, const Scalar& a) {
    Bigint out;
    if (mpz_invert(out.get_mpz_t(), a.value.get_mpz_t(), params.order_p.get_mpz_t()) == 0)
        throw Error("group: scalar not invertible mod p");
    return Scalar{out};
}

FixedBaseTable::FixedBaseTable(const GroupParams& params, const GroupElement& base)
    : modulus_(params.modulus_P) {
    const std::size_t bits = mpz_sizeinbase(params.order_p.get_mpz_t(), 2) + 1;
    squares_.reserve(bits);
    Bigint cur = base.value;
    for (std::size_t i = 0; i < bits; ++i) {
        squares_.push_back(cur);
        cur = cur * cur;
        mpz_mod(cur.get_mpz_t(), cur.get_mpz_t(), params.modulus_P.get_mpz_t());
    }
}

GroupElement FixedBaseTable::pow(const Scalar& e) const {
    const mpz_srcptr z = e.value.get_mpz_t();
    const std::size_t nbits = mpz_sgn(z) == 0 ? 0 : mpz_sizeinbase(z, 2);
    Bigint acc = 1;
    for (std::size_t i = 0; i < nbits && i < squares_.size(); ++i) {
        if (mpz_tstbit(z, static_cast<mp_bitcnt_t>(i))) {
            acc *= squares_[i];
            mpz_mod(acc.get_mpz_t(), acc.get_mpz_t(), modulus_.get_mpz_t());
        }
    }
    return GroupElement{acc};
}

GroupElement FixedBaseTable::pow_u64(std::uint64_t e) const {
    Bigint acc = 1;
    for (std::size_t i = 0; e != 0 && i < squares_.size(); ++i, e >>= 1) {
        if (e & 1) {
            acc *= squares_[i];
            mpz_mod(acc.get_mpz_t(), acc.get_mpz_t(), modulus_.get_mpz_t());
        }
    }
    return GroupElement{acc};
}

}  // namespace nnemd
