#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nnemd/bigint.hpp"

namespace nnemd {

/// Element of the prime-order subgroup of Z_P^* (value in [1, P-1],
/// value^p = 1 mod P).
struct GroupElement {
    Bigint value;

    bool operator==(const GroupElement& o) const { return value == o.value; }
    bool operator!=(const GroupElement& o) const { return value != o.value; }
};

/// Exponent reduced mod the subgroup order p.
struct Scalar {
    Bigint value;

    bool operator==(const Scalar& o) const { return value == o.value; }
};

/// Safe-prime group: P = 2p + 1 with P, p prime, and g generating the
/// order-p subgroup (the quadratic residues). All operations are pure;
/// parameters are immutable after construction.
struct GroupParams {
    Bigint modulus_P;
    Bigint order_p;
    Bigint generator_g;
    unsigned security_lambda = 0;  // bit length of order_p

    GroupElement g() const { return GroupElement{generator_g}; }
    GroupElement identity() const { return GroupElement{1}; }

    /// Serialization as a flat key/value record {P, p, g, lambda}.
    std::map<std::string, std::string> to_record() const;
    static GroupParams from_record(const std::map<std::string, std::string>& rec);
};

class RandomSource;

/// Validates all structural invariants (primality, safe-prime relation,
/// generator order, bit length). Throws Error with a reason on failure.
void validate_params(const GroupParams& params);

/// Builds params from explicit values, validating them. lambda defaults to
/// bitlen(p).
GroupParams params_from_values(const Bigint& P, const Bigint& p, const Bigint& g,
                               unsigned security_lambda = 0);

/// Fixed parameter sets shipped in-source so tests and demos are
/// deterministic: "tiny23" (toy), "test64", "demo512", "secure2048".
GroupParams named_params(const std::string& name);

/// Randomized safe-prime generation; 64 <= security_lambda <= 4096. Gives up
/// after attempt_budget candidate primes.
GroupParams group_gen(unsigned security_lambda, RandomSource& rng,
                      unsigned attempt_budget = 100000);

bool is_member(const GroupParams& params, const GroupElement& a);

GroupElement exp(const GroupParams& params, const GroupElement& base, const Scalar& e);

/// base^e for a signed machine-word exponent (negatives via inversion).
GroupElement exp_i64(const GroupParams& params, const GroupElement& base, std::int64_t e);

GroupElement mul(const GroupParams& params, const GroupElement& a, const GroupElement& b);
GroupElement div(const GroupParams& params, const GroupElement& a, const GroupElement& b);
GroupElement inv(const GroupParams& params, const GroupElement& a);

Scalar sample_scalar(const GroupParams& params, RandomSource& rng);

/// Reduces a signed integer into [0, p-1].
Scalar scalar_from_i64(const GroupParams& params, std::int64_t v);
Scalar scalar_mod(const GroupParams& params, const Bigint& v);

Scalar scalar_add(const GroupParams& params, const Scalar& a, const Scalar& b);
Scalar scalar_mul(const GroupParams& params, const Scalar& a, const Scalar& b);
Scalar scalar_inv(const GroupParams& params, const Scalar& a);

/// Precomputed squares of a fixed base, turning later exponentiations into
/// multiply-only scans. Pays off when one base is raised to many exponents
/// (public-key components across a batch, ct0 across weight columns).
class FixedBaseTable {
public:
    FixedBaseTable(const GroupParams& params, const GroupElement& base);

    GroupElement pow(const Scalar& e) const;
    GroupElement pow_u64(std::uint64_t e) const;

private:
    Bigint modulus_;
    std::vector<Bigint> squares_;  // base^(2^k)
};

}  // namespace nnemd
