#include <cmath>

#include "doctest.h"
#include "graph_oracles.hpp"
#include "sddp/engine.hpp"
#include "sddp/examples.hpp"

using namespace sddp;

namespace {

int count_cut_rows(const AssembledProgram& ap) {
    auto full = ap.materialized();
    int n = 0;
    for (int i = 0; i < full.lp.num_constraints(); ++i)
        if (full.lp.constraint(i).name.rfind("__cut", 0) == 0) ++n;
    return n;
}

}  // namespace

TEST_CASE("classic assembly matches the two-stage newsvendor structure") {
    auto g = build_example("two_stage_newsvendor");
    auto p = make_policy(g, Variant::classic);
    auto mv = p.view();

    std::vector<double> x0{0.0};
    auto order = assemble_subproblem(mv, 0, 0, x0);
    // min 2u + theta s.t. x' = x + u, theta >= -M, x = 0
    CHECK(order.prog.lp.variable_index("__theta") >= 0);
    CHECK(order.prog.lp.constraint_index("__fish_x0") >= 0);
    CHECK(count_cut_rows(order) == 1);  // only the big-M floor
    auto sol = solve_lazy_lp(order);
    REQUIRE(sol.status == SolveStatus::optimal);
    // with theta floored at -M, ordering nothing is optimal
    CHECK(sol.value(order.prog.lp, "u") == doctest::Approx(0.0));
    CHECK(sol.objective == doctest::Approx(-p.big_m));

    // the leaf has no cost-to-go variable
    std::vector<double> x1{8.0};
    auto sell = assemble_subproblem(mv, 1, 0, x1);
    CHECK(sell.prog.lp.variable_index("__theta") < 0);

    // after one training iteration the order node carries exactly two cut rows
    Rng rng(7);
    train_more(p, 1, rng);
    auto order2 = assemble_subproblem(p.view(), 0, 0, x0);
    CHECK(count_cut_rows(order2) == 2);
}

TEST_CASE("backward pass computes expectation cuts") {
    // parent "a" feeds children whose value functions are V(x) = c + s x
    auto make_graph = [](std::vector<std::pair<double, double>> kids) {
        PolicyGraph g;
        g.sense = Sense::minimize;
        g.kind = TransitionKind::fixed;
        g.root_state = {0.0};
        Node a;
        a.name = "a";
        a.stage.vars = {{"x", 0.0, 10.0, 0.0}, {"u", 0.0, 10.0, 1.0}, {"x_out", 0.0, 10.0, 0.0}};
        a.stage.rows = {{"balance", {{"x_out", 1.0}, {"u", -1.0}}, RowSense::eq, 0.0}};
        a.stage.state_in = {"x"};
        a.stage.state_out = {"x_out"};
        a.support = {0.0};
        a.pmf = {1.0};
        g.nodes.push_back(a);
        for (size_t k = 0; k < kids.size(); ++k) {
            Node b;
            b.name = "b" + std::to_string(k);
            b.stage.vars = {{"x", -10.0, 10.0, kids[k].second}};
            b.stage.objective_offset = kids[k].first;
            b.stage.state_in = {"x"};
            b.support = {0.0};
            b.pmf = {1.0};
            g.nodes.push_back(b);
            g.arcs.push_back({0, static_cast<int>(k) + 1, 1.0 / kids.size(), {}, {}, false, {}});
        }
        g.root_arcs = {{0, 1.0}};
        for (size_t i = 0; i < g.nodes.size(); ++i)
            g.ambiguity_sets.push_back({static_cast<int>(i)});
        return g;
    };

    SUBCASE("single child: V(1) = 7 with slope 2 gives theta >= 5 + 2x") {
        auto g = make_graph({{5.0, 2.0}});  // V(x) = 5 + 2x so V(1) = 7, lambda = 2
        auto p = make_policy(g, Variant::classic);
        Trajectory traj;
        TrajectoryStep st;
        st.node = 0;
        st.omega = 0;
        st.x_in = {0.0};
        st.x_out = {1.0};
        traj.steps.push_back(st);
        backward_pass(p, traj);
        const auto& cut = p.pool.per_node[0].plain.back();
        CHECK(cut.alpha == doctest::Approx(5.0));
        CHECK(cut.beta[0] == doctest::Approx(2.0));
    }
    SUBCASE("two equiprobable children average to theta >= 6 + 2x") {
        auto g = make_graph({{4.0, 1.0}, {8.0, 3.0}});
        auto p = make_policy(g, Variant::classic);
        Trajectory traj;
        TrajectoryStep st;
        st.node = 0;
        st.omega = 0;
        st.x_in = {0.0};
        st.x_out = {0.0};
        traj.steps.push_back(st);
        backward_pass(p, traj);
        const auto& cut = p.pool.per_node[0].plain.back();
        CHECK(cut.alpha == doctest::Approx(6.0));
        CHECK(cut.beta[0] == doctest::Approx(2.0));
    }
}

TEST_CASE("forward pass lengths and determinism") {
    SUBCASE("acyclic graph stops after the leaf") {
        auto g = build_example("two_stage_newsvendor");
        auto p = make_policy(g, Variant::classic);
        Rng rng(3);
        for (int k = 0; k < 20; ++k) {
            auto traj = forward_pass(p, rng);
            CHECK(traj.steps.size() == 2);
        }
    }
    SUBCASE("cyclic path length matches the absorbing-chain expectation") {
        auto g = build_example("cyclic_newsvendor", {{"rho", 0.9}});
        auto p = make_policy(g, Variant::classic);
        // fundamental matrix: visits = (1, 10), expected length 11
        Rng rng(12345);
        double total = 0.0;
        const int n = 10000;
        for (int k = 0; k < n; ++k) total += static_cast<double>(forward_pass(p, rng).steps.size());
        double mean = total / n;
        CHECK(mean > 11.0 * 0.95);
        CHECK(mean < 11.0 * 1.05);
    }
    SUBCASE("same seed, same trajectory") {
        auto g = build_example("cyclic_newsvendor");
        auto p = make_policy(g, Variant::classic);
        Rng r1(99), r2(99);
        auto t1 = forward_pass(p, r1);
        auto t2 = forward_pass(p, r2);
        REQUIRE(t1.steps.size() == t2.steps.size());
        for (size_t k = 0; k < t1.steps.size(); ++k) {
            CHECK(t1.steps[k].node == t2.steps[k].node);
            CHECK(t1.steps[k].omega == t2.steps[k].omega);
            CHECK(t1.steps[k].x_out == t2.steps[k].x_out);
        }
        // consecutive states chain exactly
        for (size_t k = 1; k < t1.steps.size(); ++k) CHECK(t1.steps[k].x_in == t1.steps[k - 1].x_out);
    }
}

TEST_CASE("training closes the gap to the extensive form on the two-stage newsvendor") {
    auto g = build_example("two_stage_newsvendor");
    oracle::ExtensiveForm ext(g);
    double ref = ext.value();
    CHECK(ref == doctest::Approx(-43.0).epsilon(1e-9));  // critical fractile at q = 20

    auto p = train(g, 50, 20240809);
    CHECK(std::fabs(p.log.back().bound - ref) <= 1e-6);

    // the trained node-1 envelope reproduces the expected second-stage value
    auto mv = p.view();
    for (double q : {10.0, 15.0, 20.0, 25.0}) {
        std::vector<double> x{q};
        double envelope = -kInf;
        for (const auto& cut : p.pool.per_node[0].plain)
            envelope = std::max(envelope, cut.alpha + cut.beta[0] * q);
        double brute = ext.expected_cost_to_go(0, x);
        CHECK(envelope <= brute + 1e-7);
        if (std::fabs(q - 20.0) < 1e-9) CHECK(envelope == doctest::Approx(brute).epsilon(1e-6));
    }

    // zero iterations: the -M floor dominates the bound
    auto p0 = make_policy(g, Variant::classic);
    CHECK(bound(p0) <= -p0.big_m + 100.0);

    // bit-identical retrain
    auto p2 = train(g, 50, 20240809);
    CHECK(serialize_cuts(p) == serialize_cuts(p2));
}

TEST_CASE("bound sequence is monotone and simulation is consistent") {
    auto g = build_example("two_stage_newsvendor");
    auto p = train(g, 40, 11);
    for (size_t k = 1; k < p.log.size(); ++k)
        CHECK(p.log[k].bound >= p.log[k - 1].bound - 1e-9);

    auto sim = simulate(p, 400, 5, /*parallel=*/false);
    CHECK(std::fabs(sim.mean - p.log.back().bound) <= 3.0 * sim.stderr_ + 1e-6);

    // frozen-cut simulation with a single-realization deterministic graph
    auto d = build_example("two_stage_newsvendor");
    d.nodes[1].support = {20.0};
    d.nodes[1].pmf = {1.0};
    d.nodes[1].stage.injections[0].per_omega = {20.0};
    auto pd = train(d, 30, 1);
    auto simd = simulate(pd, 50, 9, false);
    CHECK(simd.stderr_ == doctest::Approx(0.0));
}

TEST_CASE("classic engine refuses incompatible graphs") {
    CHECK_THROWS_AS(make_policy(build_example("cheese_producer"), Variant::classic), ConfigError);
    CHECK_THROWS_AS(make_policy(build_example("tiger"), Variant::classic), ConfigError);
    CHECK_THROWS_AS(make_policy(build_example("advertising"), Variant::classic), ConfigError);
}

TEST_CASE("cut validity against brute-force enumeration on random acyclic graphs") {
    Rng rng(777);
    for (int trial = 0; trial < 4; ++trial) {
        auto g = oracle::random_acyclic_graph(rng, 4, 3, 3, 120);
        auto p = train(g, 30, 1000 + trial);
        oracle::ExtensiveForm ext(g);
        for (size_t i = 0; i < g.nodes.size(); ++i) {
            if (p.index.children[i].empty()) continue;
            for (double xv : {0.0, 5.0, 12.0, 25.0}) {
                std::vector<double> x{xv};
                double envelope = -kInf;
                for (const auto& cut : p.pool.per_node[i].plain)
                    envelope = std::max(envelope, cut.alpha + cut.beta[0] * xv);
                CHECK(envelope <= ext.expected_cost_to_go(static_cast<int>(i), x) + 1e-6);
            }
        }
    }
}

TEST_CASE("cut files round-trip") {
    auto g = build_example("two_stage_newsvendor");
    auto p = train(g, 25, 4242);
    auto text = serialize_cuts(p);
    auto q = parse_cuts(g, text);
    CHECK(bound(q) == doctest::Approx(bound(p)).epsilon(1e-12));
    CHECK(serialize_cuts(q) == text);

    // renamed node is rejected with the offending name
    auto h = g;
    h.nodes[1].name = "renamed";
    try {
        parse_cuts(h, text);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("renamed") != std::string::npos);
    }

    // an untrained pool round-trips to the same initialization floor
    auto p0 = make_policy(g, Variant::classic);
    auto q0 = parse_cuts(g, serialize_cuts(p0));
    CHECK(bound(q0) == doctest::Approx(bound(p0)));

    CHECK_THROWS_AS(parse_cuts(g, "{\"version\": 99}"), ValidationError);
}

TEST_CASE("parallel simulation equals the serial reference") {
    auto g = build_example("cyclic_newsvendor");
    auto p = train(g, 15, 5);
    auto serial = simulate(p, 200, 77, /*parallel=*/false);
    auto parallel = simulate(p, 200, 77, /*parallel=*/true);
    REQUIRE(serial.trajectories.size() == parallel.trajectories.size());
    CHECK(serial.mean == doctest::Approx(parallel.mean).epsilon(1e-15));
    for (size_t r = 0; r < serial.trajectories.size(); ++r)
        CHECK(serial.trajectories[r].total_cost ==
              doctest::Approx(parallel.trajectories[r].total_cost).epsilon(1e-15));
}
