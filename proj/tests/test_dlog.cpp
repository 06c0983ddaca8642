#include <doctest.h>

#include "nnemd/dlog.hpp"
#include "nnemd/errors.hpp"
#include "nnemd/prng.hpp"

using namespace nnemd;

namespace {

// Exhaustive-search oracle for tiny bounds.
std::int64_t brute_dlog(const GroupParams& p, const GroupElement& h, std::int64_t bound) {
    for (std::int64_t f = -bound; f <= bound; ++f)
        if (exp_i64(p, p.g(), f) == h) return f;
    throw Error("brute_dlog: not found");
}

}  // namespace

TEST_CASE("full table has 2*bound+1 entries") {
    const GroupParams p = named_params("test64");
    const DlogSolver s = DlogSolver::build(p, 10, DlogMode::kFullTable);
    CHECK(s.table_size() == 21);
}

TEST_CASE("bsgs table is ceil(sqrt(2*bound+1)) with matching stride") {
    const GroupParams p = named_params("test64");
    const DlogSolver s = DlogSolver::build(p, 10000, DlogMode::kBsgs);
    CHECK(s.table_size() == 142);  // ceil(sqrt(20001))
    CHECK(s.giant_stride() == 142);
}

TEST_CASE("full table refuses beyond the memory cap") {
    const GroupParams p = named_params("demo512");
    CHECK_THROWS_AS(
        DlogSolver::build(p, 10'000'000'000LL, DlogMode::kFullTable, 100'000'000),
        Error);
}

TEST_CASE("bound must leave room in the group") {
    const GroupParams p = named_params("tiny23");  // p = 11
    CHECK_NOTHROW(DlogSolver::build(p, 4, DlogMode::kFullTable));
    CHECK_THROWS_AS(DlogSolver::build(p, 5, DlogMode::kFullTable), Error);
    CHECK_THROWS_AS(DlogSolver::build(p, 0, DlogMode::kFullTable), Error);
}

TEST_CASE("solve agrees with exhaustive oracle in test64") {
    const GroupParams p = named_params("test64");
    const DlogSolver table = DlogSolver::build(p, 40, DlogMode::kFullTable);
    const DlogSolver bsgs = DlogSolver::build(p, 40, DlogMode::kBsgs);
    CHECK(table.solve(p.identity()) == 0);
    CHECK(bsgs.solve(p.identity()) == 0);
    CHECK(table.solve(exp_i64(p, p.g(), 5)) == 5);
    CHECK(table.solve(inv(p, exp_i64(p, p.g(), 3))) == -3);
    for (std::int64_t f = -40; f <= 40; ++f) {
        const GroupElement h = exp_i64(p, p.g(), f);
        const std::int64_t expect = brute_dlog(p, h, 40);
        CHECK(table.solve(h) == expect);
        CHECK(bsgs.solve(h) == expect);
    }
}

TEST_CASE("round trip across the full signed range, both modes agree") {
    const GroupParams p = named_params("test64");
    const std::int64_t bound = 2000;
    const DlogSolver table = DlogSolver::build(p, bound, DlogMode::kFullTable);
    const DlogSolver bsgs = DlogSolver::build(p, bound, DlogMode::kBsgs);
    for (std::int64_t f = -bound; f <= bound; f += 7) {
        const GroupElement h = exp_i64(p, p.g(), f);
        CHECK(table.solve(h) == f);
        CHECK(bsgs.solve(h) == f);
    }
}

TEST_CASE("large-bound lookups recover the forming exponent") {
    const GroupParams p = named_params("test64");
    const std::int64_t bound = 100000;
    const DlogSolver s = DlogSolver::build(p, bound, DlogMode::kFullTable);
    Prng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto f = static_cast<std::int64_t>(rng.below(2 * bound + 1)) - bound;
        CHECK(s.solve(exp_i64(p, p.g(), f)) == f);
    }
}

TEST_CASE("out of range raises NotInRange") {
    const GroupParams p = named_params("test64");
    for (const DlogMode mode : {DlogMode::kFullTable, DlogMode::kBsgs}) {
        const DlogSolver s = DlogSolver::build(p, 100, mode);
        CHECK_THROWS_AS(s.solve(exp_i64(p, p.g(), 101)), NotInRange);
        CHECK_THROWS_AS(s.solve(exp_i64(p, p.g(), -101)), NotInRange);
    }
}

TEST_CASE("solver works at demo512 scale") {
    const GroupParams p = named_params("demo512");
    const DlogSolver s = DlogSolver::build(p, 1'000'000, DlogMode::kBsgs);
    Prng rng(9);
    for (int trial = 0; trial < 25; ++trial) {
        const auto f = static_cast<std::int64_t>(rng.below(2'000'001)) - 1'000'000;
        CHECK(s.solve(exp_i64(p, p.g(), f)) == f);
    }
}
