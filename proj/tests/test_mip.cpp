#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "sddp/mip.hpp"

using namespace sddp;

namespace {

// Enumeration oracle: try every binary pattern, solve the restricted LP.
double enumerate_milp(const MixedBinaryProgram& p) {
    const int nb = static_cast<int>(p.binaries.size());
    LinearProgram work = p.lp;
    double best = work.sense == Sense::maximize ? -kInf : kInf;
    for (long mask = 0; mask < (1L << nb); ++mask) {
        for (int s = 0; s < nb; ++s) {
            double v = (mask >> s) & 1 ? 1.0 : 0.0;
            const auto& orig = p.lp.variable(p.binaries[s]);
            if (v < orig.lower - 1e-9 || v > orig.upper + 1e-9) goto next_mask;
            work.set_bounds(p.binaries[s], v, v);
        }
        {
            auto sol = solve_lp(work);
            if (sol.status == SolveStatus::optimal) {
                if (work.sense == Sense::maximize)
                    best = std::max(best, sol.objective);
                else
                    best = std::min(best, sol.objective);
            }
        }
    next_mask:;
    }
    return best;
}

}  // namespace

TEST_CASE("knapsack pair") {
    MixedBinaryProgram p;
    p.lp.sense = Sense::maximize;
    int a = p.lp.add_variable("a", 0.0, 1.0, 3.0);
    int b = p.lp.add_variable("b", 0.0, 1.0, 2.0);
    p.lp.add_constraint("budget", {{a, 1.0}, {b, 1.0}}, RowSense::le, 1.0);
    p.binaries = {a, b};
    auto sol = solve_milp(p);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.objective == doctest::Approx(3.0));
    CHECK(sol.primal[a] == doctest::Approx(1.0));
    CHECK(sol.primal[b] == doctest::Approx(0.0));
    CHECK(sol.objective == doctest::Approx(enumerate_milp(p)));
}

TEST_CASE("integral relaxation explores a single node") {
    // transportation-like: totally unimodular structure
    MixedBinaryProgram p;
    int y1 = p.lp.add_variable("y1", 0.0, 1.0, 4.0);
    int y2 = p.lp.add_variable("y2", 0.0, 1.0, 7.0);
    p.lp.add_constraint("pick", {{y1, 1.0}, {y2, 1.0}}, RowSense::eq, 1.0);
    p.binaries = {y1, y2};
    auto sol = solve_milp(p);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.objective == doctest::Approx(4.0));
    CHECK(sol.nodes_explored == 1);
}

TEST_CASE("matrix choice by convexity row") {
    MixedBinaryProgram p;
    int y1 = p.lp.add_variable("y1", 0.0, 1.0, 5.0);
    int y2 = p.lp.add_variable("y2", 0.0, 1.0, 4.0);
    p.lp.add_constraint("choose", {{y1, 1.0}, {y2, 1.0}}, RowSense::eq, 1.0);
    p.binaries = {y1, y2};
    auto sol = solve_milp(p);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.objective == doctest::Approx(4.0));
    CHECK(sol.primal[y2] == doctest::Approx(1.0));
}

TEST_CASE("statuses propagate and caps hold") {
    MixedBinaryProgram inf;
    int y = inf.lp.add_variable("y", 0.0, 1.0, 1.0);
    inf.lp.add_constraint("no", {{y, 1.0}}, RowSense::ge, 2.0);
    inf.binaries = {y};
    CHECK(solve_milp(inf).status == SolveStatus::infeasible);

    MixedBinaryProgram ub;
    ub.lp.add_variable("x", 0.0, kInf, -1.0);
    int z = ub.lp.add_variable("z", 0.0, 1.0, 0.0);
    ub.binaries = {z};
    CHECK(solve_milp(ub).status == SolveStatus::unbounded);

    MixedBinaryProgram capped;
    for (int i = 0; i < kBinaryCap + 1; ++i)
        capped.binaries.push_back(
            capped.lp.add_variable("b" + std::to_string(i), 0.0, 1.0, 1.0));
    CHECK_THROWS_AS(solve_milp(capped), ConfigError);

    MixedBinaryProgram bad;
    bad.binaries = {bad.lp.add_variable("w", 0.0, 2.0, 1.0)};
    CHECK_THROWS_AS(solve_milp(bad), ValidationError);
}

TEST_CASE("equivalence with explicit enumeration") {
    Rng rng(4242);
    for (int trial = 0; trial < 120; ++trial) {
        auto lp = oracle::random_boxed_lp(rng, 8, 6);
        MixedBinaryProgram p;
        p.lp = lp;
        // designate a random subset of variables as binaries (rebounded to [0,1])
        int nb = 1 + static_cast<int>(uniform01(rng) * std::min(12, lp.num_variables()));
        for (int s = 0; s < nb && s < p.lp.num_variables(); ++s) {
            p.lp.set_bounds(s, 0.0, 1.0);
            p.binaries.push_back(s);
        }
        auto sol = solve_milp(p);
        double ref = enumerate_milp(p);
        if (sol.status == SolveStatus::optimal) {
            CHECK(sol.objective == doctest::Approx(ref).epsilon(1e-8));
            // root relaxation bounds the integer optimum
            auto relax = solve_lp(p.lp);
            REQUIRE(relax.status == SolveStatus::optimal);
            CHECK(relax.objective <= sol.objective + 1e-8);
        } else {
            CHECK(ref == kInf);  // oracle found nothing either
        }
    }
}
