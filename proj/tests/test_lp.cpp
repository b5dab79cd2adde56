#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "sddp/lp.hpp"

using namespace sddp;

TEST_CASE("single variable against a bound row") {
    LinearProgram lp;
    int x = lp.add_variable("x", 0.0, kInf, 1.0);
    lp.add_constraint("floor", {{x, 1.0}}, RowSense::ge, 3.0);
    auto sol = solve_lp(lp);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.objective == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(sol.primal[x] == doctest::Approx(3.0));
    CHECK(sol.dual(lp, "floor") == doctest::Approx(1.0));
}

static LinearProgram fig2_node2_program() {
    // minimize -5u + 0.1xp s.t. u <= 8; xp = 8 - u; 0 <= u <= 5
    LinearProgram lp;
    int u = lp.add_variable("u", 0.0, 5.0, -5.0);
    int xp = lp.add_variable("xp", -kInf, kInf, 0.1);
    lp.add_constraint("cap", {{u, 1.0}}, RowSense::le, 8.0);
    lp.add_constraint("balance", {{xp, 1.0}, {u, 1.0}}, RowSense::eq, 8.0);
    return lp;
}

TEST_CASE("newsvendor second-stage vertex") {
    auto lp = fig2_node2_program();
    auto sol = solve_lp(lp);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.objective == doctest::Approx(-24.7).epsilon(1e-12));
    CHECK(sol.value(lp, "u") == doctest::Approx(5.0));
    CHECK(sol.value(lp, "xp") == doctest::Approx(3.0));
    auto oracle_val = oracle::vertex_enumeration_optimum(lp);
    REQUIRE(oracle_val.has_value());
    CHECK(*oracle_val == doctest::Approx(-24.7).epsilon(1e-10));
}

TEST_CASE("contradictory rows are infeasible, not an exception") {
    LinearProgram lp;
    int x = lp.add_variable("x", -kInf, kInf, 1.0);
    lp.add_constraint("lo", {{x, 1.0}}, RowSense::ge, 1.0);
    lp.add_constraint("hi", {{x, 1.0}}, RowSense::le, 0.0);
    CHECK(solve_lp(lp).status == SolveStatus::infeasible);
}

TEST_CASE("unbounded ray detected") {
    LinearProgram lp;
    lp.add_variable("x", 0.0, kInf, -1.0);
    CHECK(solve_lp(lp).status == SolveStatus::unbounded);
}

TEST_CASE("free variable pushed to a row") {
    LinearProgram lp;
    int x = lp.add_variable("x", -kInf, kInf, 1.0);
    lp.add_constraint("floor", {{x, 1.0}}, RowSense::ge, -4.0);
    auto sol = solve_lp(lp);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.objective == doctest::Approx(-4.0));
}

TEST_CASE("empty program is the offset") {
    LinearProgram lp;
    lp.set_objective_offset(7.5);
    auto sol = solve_lp(lp);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.objective == doctest::Approx(7.5));
}

TEST_CASE("maximization sense") {
    LinearProgram lp;
    lp.sense = Sense::maximize;
    int a = lp.add_variable("a", 0.0, 1.0, 3.0);
    int b = lp.add_variable("b", 0.0, 1.0, 2.0);
    lp.add_constraint("budget", {{a, 1.0}, {b, 1.0}}, RowSense::le, 1.0);
    auto sol = solve_lp(lp);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.objective == doctest::Approx(3.0));
    CHECK(sol.primal[a] == doctest::Approx(1.0));
    CHECK(sol.primal[b] == doctest::Approx(0.0));
    // a is pinned by its own upper bound, so the budget marginal is b's coefficient
    CHECK(sol.dual(lp, "budget") == doctest::Approx(2.0));  // d(max)/d(rhs)
}

TEST_CASE("validation errors are distinct from infeasibility") {
    LinearProgram lp;
    lp.add_variable("x", 0.0, 1.0, 1.0);
    CHECK_THROWS_AS(lp.add_variable("x", 0.0, 1.0, 0.0), ValidationError);
    CHECK_THROWS_AS(lp.add_variable("y", 0.0, 1.0, std::nan("")), ValidationError);
    CHECK_THROWS_AS(lp.add_constraint("r", {{5, 1.0}}, RowSense::le, 0.0), ValidationError);
}

TEST_CASE("evaluate_at is plain arithmetic") {
    {
        LinearProgram lp;
        int x = lp.add_variable("x", 0.0, kInf, 1.0);
        lp.add_constraint("floor", {{x, 1.0}}, RowSense::ge, 3.0);
        auto ev = evaluate_at(lp, std::map<std::string, double>{{"x", 3.0}});
        CHECK(ev.objective == doctest::Approx(3.0));
        CHECK(ev.max_violation == doctest::Approx(0.0));
    }
    auto lp = fig2_node2_program();
    {
        auto ev = evaluate_at(lp, std::map<std::string, double>{{"u", 5.0}, {"xp", 3.0}});
        CHECK(ev.objective == doctest::Approx(-24.7));
        CHECK(ev.max_violation == doctest::Approx(0.0));
    }
    {
        auto ev = evaluate_at(lp, std::map<std::string, double>{{"u", 9.0}, {"xp", -1.0}});
        CHECK(ev.max_violation == doctest::Approx(1.0));
        CHECK(ev.worst_constraint == "cap");
    }
    CHECK_THROWS_AS(evaluate_at(lp, std::map<std::string, double>{{"u", 1.0}}), ValidationError);
}

TEST_CASE("strong duality and complementary slackness on random programs") {
    Rng rng(20240811);
    int solved = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        auto lp = oracle::random_boxed_lp(rng, 10, 10);
        auto sol = solve_lp(lp);
        REQUIRE(sol.status == SolveStatus::optimal);
        ++solved;
        double gap = std::fabs(sol.objective - oracle::dual_objective(lp, sol));
        CHECK(gap <= 1e-8 * (1.0 + std::fabs(sol.objective)));
        // complementary slackness: a nonzero row dual means a tight row
        for (int i = 0; i < lp.num_constraints(); ++i) {
            if (std::fabs(sol.duals[i]) < 1e-9) continue;
            const auto& r = lp.constraint(i);
            double lhs = 0.0;
            for (auto& [j, a] : r.coeffs) lhs += a * sol.primal[j];
            CHECK(std::fabs(lhs - r.rhs) <= 1e-6);
        }
    }
    CHECK(solved == 1000);
}

TEST_CASE("vertex enumeration agreement on small programs") {
    Rng rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        auto lp = oracle::random_boxed_lp(rng, 6, 6);
        auto sol = solve_lp(lp);
        REQUIRE(sol.status == SolveStatus::optimal);
        auto ref = oracle::vertex_enumeration_optimum(lp);
        REQUIRE(ref.has_value());
        CHECK(sol.objective == doctest::Approx(*ref).epsilon(1e-7));
    }
}

TEST_CASE("status trichotomy on constructed instances") {
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        // feasible boxed
        auto lp = oracle::random_boxed_lp(rng, 5, 5);
        CHECK(solve_lp(lp).status == SolveStatus::optimal);
        // infeasible: sum of variables beyond the reachable maximum
        auto bad = oracle::random_boxed_lp(rng, 5, 3);
        std::vector<std::pair<int, double>> all;
        double maxsum = 0.0;
        for (int j = 0; j < bad.num_variables(); ++j) {
            all.push_back({j, 1.0});
            maxsum += bad.variable(j).upper;
        }
        bad.add_constraint("impossible", all, RowSense::ge, maxsum + 1.0);
        CHECK(solve_lp(bad).status == SolveStatus::infeasible);
        // unbounded: a free ray with negative cost
        auto ub = oracle::random_boxed_lp(rng, 4, 4);
        ub.add_variable("ray", 0.0, kInf, -1.0);
        CHECK(solve_lp(ub).status == SolveStatus::unbounded);
    }
}

TEST_CASE("fishing-row dual is a subgradient of the value in the rhs") {
    Rng rng(31337);
    const double delta = 1e-4;
    int checked = 0, fd_checked = 0;
    for (int trial = 0; trial < 200 && checked < 100; ++trial) {
        auto lp = oracle::random_boxed_lp(rng, 6, 6);
        int k = static_cast<int>(uniform01(rng) * lp.num_variables());
        if (k >= lp.num_variables()) k = lp.num_variables() - 1;
        const auto& v = lp.variable(k);
        double span = v.upper - v.lower;
        if (span < 10 * delta) continue;
        double xbar = v.lower + span * (0.25 + 0.5 * uniform01(rng));
        int fish = lp.add_constraint("fish", {{k, 1.0}}, RowSense::eq, xbar);
        auto at = [&](double t) {
            lp.set_rhs(fish, t);
            return solve_lp(lp);
        };
        auto base = at(xbar);
        if (base.status != SolveStatus::optimal) continue;
        double lambda = base.duals[fish];
        auto up = at(xbar + delta);
        auto dn = at(xbar - delta);
        if (up.status != SolveStatus::optimal || dn.status != SolveStatus::optimal) continue;
        ++checked;
        // subgradient inequality of the convex value function
        CHECK(up.objective >= base.objective + lambda * delta - 1e-8);
        CHECK(dn.objective >= base.objective - lambda * delta - 1e-8);
        double fwd = (up.objective - base.objective) / delta;
        double bwd = (base.objective - dn.objective) / delta;
        if (std::fabs(fwd - bwd) < 1e-6) {  // smooth point, one-sided slopes agree
            ++fd_checked;
            CHECK(std::fabs(0.5 * (fwd + bwd) - lambda) <= 1e-5);
        }
    }
    CHECK(checked == 100);
    CHECK(fd_checked > 20);
}

TEST_CASE("debug listing mentions every row") {
    auto lp = fig2_node2_program();
    auto text = to_text(lp);
    CHECK(text.find("cap") != std::string::npos);
    CHECK(text.find("balance") != std::string::npos);
}
