#include "nnemd/dlog.hpp"

#include <cmath>

#include "nnemd/errors.hpp"

namespace nnemd {

DlogSolver DlogSolver::build(const GroupParams& params, std::int64_t bound_fb, DlogMode mode,
                             std::uint64_t table_cap_entries) {
    if (bound_fb < 1) throw Error("dlog: bound_fb must be >= 1");
    const Bigint domain = 2 * Bigint(static_cast<long>(bound_fb)) + 1;
    if (domain >= params.order_p)
        throw Error("dlog: 2*bound_fb + 1 must be < p so recovered exponents are unique");

    DlogSolver s;
    s.params_ = &params;
    s.bound_fb_ = bound_fb;
    s.mode_ = mode;

    const Bigint& P = params.modulus_P;
    const Bigint& g = params.generator_g;

    auto insert = [&s](const Bigint& v, std::int64_t idx) {
        s.table_[low_bits(v)].push_back(Slot{idx, v});
    };

    if (mode == DlogMode::kFullTable) {
        const std::uint64_t entries = 2 * static_cast<std::uint64_t>(bound_fb) + 1;
        if (entries > table_cap_entries)
            throw Error("dlog: full table of " + std::to_string(entries) +
                        " entries exceeds the memory cap of " +
                        std::to_string(table_cap_entries) + "; use bsgs mode");
        s.entries_ = entries;
        s.table_.reserve(entries * 2);
        // Negative exponents are stored as their p - |f| images so one map
        // covers the whole signed range.
        Bigint cur = 1;
        insert(cur, 0);
        for (std::int64_t f = 1; f <= bound_fb; ++f) {
            cur = cur * g;
            mpz_mod(cur.get_mpz_t(), cur.get_mpz_t(), P.get_mpz_t());
            insert(cur, f);
        }
        const Bigint ginv = inv(params, params.g()).value;
        cur = 1;
        for (std::int64_t f = 1; f <= bound_fb; ++f) {
            cur = cur * ginv;
            mpz_mod(cur.get_mpz_t(), cur.get_mpz_t(), P.get_mpz_t());
            insert(cur, -f);
        }
        return s;
    }

    // BSGS over the shifted domain F = f + bound_fb in [0, 2*bound_fb].
    const double span = 2.0 * static_cast<double>(bound_fb) + 1.0;
    const auto m = static_cast<std::int64_t>(std::ceil(std::sqrt(span)));
    s.entries_ = static_cast<std::size_t>(m);
    s.stride_ = m;
    s.table_.reserve(static_cast<std::size_t>(m) * 2);
    Bigint cur = 1;
    for (std::int64_t j = 0; j < m; ++j) {
        insert(cur, j);
        cur = cur * g;
        mpz_mod(cur.get_mpz_t(), cur.get_mpz_t(), P.get_mpz_t());
    }
    s.giant_factor_ = exp(params, inv(params, params.g()),
                          scalar_from_i64(params, m))
                          .value;
    s.shift_ = exp_i64(params, params.g(), bound_fb).value;
    return s;
}

std::int64_t DlogSolver::solve(const GroupElement& h) const {
    const Bigint& P = params_->modulus_P;

    if (mode_ == DlogMode::kFullTable) {
        const auto it = table_.find(low_bits(h.value));
        if (it != table_.end()) {
            for (const Slot& slot : it->second)
                if (slot.value == h.value) return slot.index;
        }
        throw NotInRange("dlog: no exponent within bound " + std::to_string(bound_fb_));
    }

    // y = h * g^{bound}; scan y * (g^-m)^k until it lands in the baby table.
    Bigint y = h.value * shift_;
    mpz_mod(y.get_mpz_t(), y.get_mpz_t(), P.get_mpz_t());
    const std::int64_t span = 2 * bound_fb_ + 1;
    const std::int64_t giant_steps = (span + stride_ - 1) / stride_;
    for (std::int64_t k = 0; k < giant_steps; ++k) {
        const auto it = table_.find(low_bits(y));
        if (it != table_.end()) {
            for (const Slot& slot : it->second) {
                if (slot.value == y) {
                    const std::int64_t shifted = k * stride_ + slot.index;
                    if (shifted <= 2 * bound_fb_) return shifted - bound_fb_;
                }
            }
        }
        y *= giant_factor_;
        mpz_mod(y.get_mpz_t(), y.get_mpz_t(), P.get_mpz_t());
    }
    throw NotInRange("dlog: no exponent within bound " + std::to_string(bound_fb_));
}

}  // namespace nnemd
