#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "nnemd/group.hpp"

namespace nnemd {

enum class DlogMode { kFullTable, kBsgs };

/// Recovers small signed exponents f from g^f, the last step of both FE
/// decryptions. Full-table mode materializes every g^f for |f| <= bound_fb
/// (constant-time lookups, O(f_b) memory); baby-step/giant-step keeps a
/// sqrt-sized table. Immutable after construction; solve() is pure.
class DlogSolver {
public:
    static constexpr std::uint64_t kDefaultTableCapEntries = 100'000'000;

    static DlogSolver build(const GroupParams& params, std::int64_t bound_fb, DlogMode mode,
                            std::uint64_t table_cap_entries = kDefaultTableCapEntries);

    /// Returns f with g^f = h and |f| <= bound(). Throws NotInRange when no
    /// such f exists, which signals an encoding-bound violation upstream.
    std::int64_t solve(const GroupElement& h) const;

    std::int64_t bound() const { return bound_fb_; }
    DlogMode mode() const { return mode_; }
    std::size_t table_size() const { return entries_; }
    std::int64_t giant_stride() const { return stride_; }

private:
    DlogSolver() = default;

    struct Slot {
        std::int64_t index;  // f (full table) or baby index j (bsgs)
        Bigint value;
    };

    const GroupParams* params_ = nullptr;
    std::int64_t bound_fb_ = 0;
    DlogMode mode_ = DlogMode::kFullTable;
    std::size_t entries_ = 0;
    std::int64_t stride_ = 0;
    // Fingerprint-keyed; full element values stored for exact confirmation.
    std::unordered_map<std::uint64_t, std::vector<Slot>> table_;
    Bigint giant_factor_;  // g^{-stride} (bsgs)
    Bigint shift_;         // g^{bound_fb} (bsgs)
};

}  // namespace nnemd
