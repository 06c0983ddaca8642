#pragma once

#include <cstdint>

#include "nnemd/matrix.hpp"

namespace nnemd {

/// Decimal fixed-point codec between floats and the bounded integers the FE
/// schemes operate on. encode(x) = round(x * 10^eps), half away from zero.
struct FixedPointCodec {
    unsigned precision_eps = 2;
    double value_bound = 1.0;

    std::int64_t encode(double x) const;
    MatI encode_matrix(const MatD& x) const;

    /// Largest encoded magnitude this codec can emit.
    std::int64_t encoded_bound() const;
};

/// Inverse of the product scaling: v / 10^(eps_client + eps_server).
double decode_product(std::int64_t v, unsigned eps_client, unsigned eps_server);

/// Solver bound for inner products of eta encoded-client by encoded-server
/// values: eta * ceil(bound_x * 10^eps_c) * ceil(bound_w * 10^eps_s).
std::int64_t product_bound(const FixedPointCodec& client, const FixedPointCodec& server,
                           std::int64_t eta);

/// Exact power of ten as double (eps <= 18).
double pow10d(unsigned eps);

}  // namespace nnemd
