#include "nnemd/encoding.hpp"

#include <cmath>
#include <string>

#include "nnemd/errors.hpp"

namespace nnemd {

double pow10d(unsigned eps) {
    static const double kPow10[] = {1e0,  1e1,  1e2,  1e3,  1e4,  1e5,  1e6,
                                    1e7,  1e8,  1e9,  1e10, 1e11, 1e12, 1e13,
                                    1e14, 1e15, 1e16, 1e17, 1e18};
    if (eps > 18) throw Error("encoding: precision above 18 digits unsupported");
    return kPow10[eps];
}

std::int64_t FixedPointCodec::encode(double x) const {
    if (!std::isfinite(x) || std::fabs(x) > value_bound)
        throw BoundExceeded("encode: |" + std::to_string(x) + "| exceeds bound " +
                            std::to_string(value_bound));
    return std::llround(x * pow10d(precision_eps));
}

MatI FixedPointCodec::encode_matrix(const MatD& x) const {
    MatI out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i) out(i, j) = encode(x(i, j));
    return out;
}

std::int64_t FixedPointCodec::encoded_bound() const {
    return static_cast<std::int64_t>(std::ceil(value_bound * pow10d(precision_eps)));
}

double decode_product(std::int64_t v, unsigned eps_client, unsigned eps_server) {
    return static_cast<double>(v) / pow10d(eps_client + eps_server);
}

std::int64_t product_bound(const FixedPointCodec& client, const FixedPointCodec& server,
                           std::int64_t eta) {
    const std::int64_t bx = client.encoded_bound();
    const std::int64_t bw = server.encoded_bound();
    if (eta > 0 && bx > 0 && bw > 0) {
        // Guard against int64 overflow before multiplying out.
        const __int128 wide = static_cast<__int128>(eta) * bx * bw;
        if (wide > INT64_MAX) throw Error("product_bound: overflows int64");
    }
    return eta * bx * bw;
}

}  // namespace nnemd
