#include <cmath>

#include "doctest.h"
#include "graph_oracles.hpp"
#include "sddp/engine.hpp"
#include "sddp/examples.hpp"

using namespace sddp;

namespace {

// Affine-response chain: one node with a single forward arc whose survival
// responds to y, so the option genuinely matters.
PolicyGraph affine_chain(double response = 0.2, double option_cost = 0.5) {
    PolicyGraph g;
    g.sense = Sense::minimize;
    g.kind = TransitionKind::affine;
    g.options = {{0.0}, {1.0}};
    g.option_names = {"idle", "push"};
    g.root_state = {0.0};
    auto trade = [&](const std::string& nm, std::vector<double> support) {
        Node nd;
        nd.name = nm;
        nd.stage.vars = {{"x", 0.0, 60.0, 0.0},
                         {"us", 0.0, 30.0, -3.0},
                         {"ub", 0.0, 20.0, 1.0},
                         {"x_out", 0.0, 60.0, 0.05}};
        nd.stage.rows = {{"avail", {{"us", 1.0}, {"x", -1.0}}, RowSense::le, 0.0},
                         {"balance",
                          {{"x_out", 1.0}, {"x", -1.0}, {"us", 1.0}, {"ub", -1.0}},
                          RowSense::eq,
                          0.0}};
        nd.stage.state_in = {"x"};
        nd.stage.state_out = {"x_out"};
        nd.support = std::move(support);
        nd.pmf.assign(nd.support.size(), 1.0 / nd.support.size());
        nd.stage.injections = {{InjectField::upper, "us", nd.support}};
        nd.stage.option_cost = {option_cost};
        return nd;
    };
    g.nodes = {trade("first", {10.0, 20.0}), trade("second", {5.0, 25.0})};
    g.arcs = {{0, 1, 0.6, {response}, {}, false, {}}};
    g.root_arcs = {{0, 1.0}};
    g.ambiguity_sets = {{0}, {1}};
    return g;
}

double milp_by_option_enumeration(const TrainedPolicy& p, int node, int omega,
                                  std::span<const double> xbar, int ybar) {
    // enumerate the per-child planned options by brute force over ext(Y)
    const auto& g = p.graph;
    const auto& children = p.index.children[node];
    auto mv = p.view();
    const int ne = g.num_options();
    // all assignments of options to child slots
    long combos = 1;
    for (size_t s = 0; s < children.size(); ++s) combos *= ne;
    double best = kInf;
    for (long c = 0; c < combos; ++c) {
        // fix the z binaries by rebuilding the program and pinning bounds
        auto ap = assemble_sp_ddu(mv, node, omega, xbar, ybar);
        long rest = c;
        for (size_t s = 0; s < children.size(); ++s) {
            int pick = rest % ne;
            rest /= ne;
            for (int e = 0; e < ne; ++e)
                ap.prog.lp.set_bounds(ap.z_vars[s][e], e == pick ? 1.0 : 0.0,
                                      e == pick ? 1.0 : 0.0);
        }
        auto sol = solve_lazy_lp(ap);
        if (sol.status == SolveStatus::optimal) best = std::min(best, sol.objective);
    }
    return best;
}

}  // namespace

TEST_CASE("single-option graphs collapse to the classic assembly") {
    auto g = affine_chain(0.0, 0.0);
    g.options = {{0.0}};
    g.option_names = {"idle"};
    for (auto& arc : g.arcs) arc.response = {0.0};
    auto p = make_policy(g, Variant::ddu_adaptive);
    auto mv = p.view();
    std::vector<double> x{4.0};
    std::vector<double> y0{0.0};

    auto sp = assemble_sp_ddu(mv, 0, 1, x, 0);
    auto relax = assemble_relaxation_ddu(mv, 0, 1, x, y0);
    auto s1 = solve_lazy_milp(sp);
    auto s2 = solve_lazy_lp(relax);
    REQUIRE(s1.status == SolveStatus::optimal);
    REQUIRE(s2.status == SolveStatus::optimal);
    CHECK(s1.objective == doctest::Approx(s2.objective).epsilon(1e-9));

    // and a zero response makes the value match the classic program
    auto gc = g;
    gc.kind = TransitionKind::fixed;
    gc.options.clear();
    gc.option_names.clear();
    for (auto& nd : gc.nodes) nd.stage.option_cost.clear();
    for (auto& arc : gc.arcs) arc.response.clear();
    auto pc = make_policy(gc, Variant::classic);
    auto s3 = solve_lazy_lp(assemble_subproblem(pc.view(), 0, 1, x));
    CHECK(s3.objective == doctest::Approx(s1.objective).epsilon(1e-9));
}

TEST_CASE("forward subproblem equals enumeration over planned options") {
    auto g = build_example("advertising");
    auto p = make_policy(g, Variant::ddu_adaptive);
    Rng rng(5);
    train_more(p, 3, rng);  // a few real cuts so options differ
    std::vector<double> x{7.0};
    for (int node : {0, 1}) {
        for (int omega : {0, 1}) {
            for (int ybar : {0, 1}) {
                auto sol = solve_lazy_milp(assemble_sp_ddu(p.view(), node, omega, x, ybar));
                REQUIRE(sol.status == SolveStatus::optimal);
                double ref = milp_by_option_enumeration(p, node, omega, x, ybar);
                CHECK(sol.objective == doctest::Approx(ref).epsilon(1e-8));
            }
        }
    }
}

TEST_CASE("relaxation value never exceeds the exact subproblem") {
    auto g = affine_chain();
    auto p = make_policy(g, Variant::ddu_adaptive);
    Rng rng(31);
    train_more(p, 5, rng);
    auto mv = p.view();
    Rng probe(17);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x{60.0 * uniform01(probe)};
        int e = uniform01(probe) < 0.5 ? 0 : 1;
        int node = uniform01(probe) < 0.5 ? 0 : 1;
        int omega = uniform01(probe) < 0.5 ? 0 : 1;
        auto milp = solve_lazy_milp(assemble_sp_ddu(mv, node, omega, x, e));
        auto relax = solve_lazy_lp(
            assemble_relaxation_ddu(mv, node, omega, x, g.option_vector(e)));
        REQUIRE(milp.status == SolveStatus::optimal);
        REQUIRE(relax.status == SolveStatus::optimal);
        CHECK(relax.objective <= milp.objective + 1e-8);
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("zero-cut relaxation sits on the big-M floor") {
    auto g = affine_chain(0.2, 0.0);
    auto p = make_policy(g, Variant::ddu_adaptive);
    auto mv = p.view();
    std::vector<double> x{0.0};
    for (int e : {0, 1}) {
        auto y = g.option_vector(e);
        auto relax = solve_lazy_lp(assemble_relaxation_ddu(mv, 0, 0, x, y));
        REQUIRE(relax.status == SolveStatus::optimal);
        // stage optimum plus phi(y) * (-M) from the only child
        double phi = 0.6 + 0.2 * y[0];
        auto stage = assemble_stage_only(mv, 0, 0);
        for (size_t k = 0; k < stage.state_in_vars.size(); ++k)
            stage.prog.lp.set_bounds(stage.state_in_vars[k], 0.0, 0.0);
        auto base = solve_lp(stage.prog.lp);
        CHECK(relax.objective ==
              doctest::Approx(base.objective - phi * p.big_m).epsilon(1e-9));
    }
}

TEST_CASE("decision-dependent cut arithmetic and validity") {
    auto g = affine_chain();
    auto p = make_policy(g, Variant::ddu_adaptive);
    Rng rng(8);
    train_more(p, 6, rng);
    // recorded cuts under-estimate the expected relaxed value on a probe grid
    auto mv = p.view();
    const auto& nd = g.nodes[1];
    for (const auto& cut : p.pool.per_node[1].option_cuts) {
        for (double xv : {0.0, 10.0, 30.0}) {
            for (int e : {0, 1}) {
                auto y = g.option_vector(e);
                std::vector<double> x{xv};
                double lhs = cut.alpha + cut.beta[0] * xv + cut.gamma[0] * y[0];
                double expected = 0.0;
                for (size_t o = 0; o < nd.support.size(); ++o) {
                    auto sol = solve_lazy_lp(
                        assemble_relaxation_ddu(mv, 1, static_cast<int>(o), x, y));
                    REQUIRE(sol.status == SolveStatus::optimal);
                    expected += nd.pmf[o] * sol.objective;
                }
                CHECK(lhs <= expected + 1e-7);
            }
        }
    }
    // gamma vanishes when nothing responds to y
    auto g0 = affine_chain(0.0, 0.0);
    auto p0 = make_policy(g0, Variant::ddu_adaptive);
    Rng rng0(9);
    train_more(p0, 3, rng0);
    for (const auto& cut : p0.pool.per_node[1].option_cuts)
        CHECK(std::fabs(cut.gamma[0]) <= 1e-9);
}

TEST_CASE("matrix-choice subproblem equals the best per-matrix restriction") {
    auto g = build_example("cheese_producer");
    auto p = make_policy(g, Variant::ddu_lagrangian);
    Rng rng(21);
    train_more(p, 5, rng);
    auto mv = p.view();
    std::vector<double> x{8.0};
    for (int omega = 0; omega < 5; ++omega) {
        auto ap = assemble_sp_matrixchoice(mv, 0, omega, x);
        auto sol = solve_lazy_milp(ap);
        REQUIRE(sol.status == SolveStatus::optimal);
        double best = kInf;
        for (size_t d = 0; d < g.option_names.size(); ++d) {
            auto fixed = assemble_sp_matrixchoice(mv, 0, omega, x);
            for (size_t dd = 0; dd < g.option_names.size(); ++dd)
                fixed.prog.lp.set_bounds(fixed.choice_vars[dd], dd == d ? 1.0 : 0.0,
                                         dd == d ? 1.0 : 0.0);
            auto s = solve_lazy_lp(fixed);
            if (s.status == SolveStatus::optimal) best = std::min(best, s.objective);
        }
        CHECK(sol.objective == doctest::Approx(best).epsilon(1e-8));
    }

    // |D| = 1: training the degenerate matrix-choice problem reaches the same
    // optimum as classic SDDP and the scenario-enumerated oracle
    PolicyGraph g1;
    g1.sense = Sense::maximize;
    g1.kind = TransitionKind::choice;
    g1.option_names = {"go"};
    g1.root_state = {4.0};
    {
        auto base = build_example("cheese_producer");
        Node farm = base.nodes[0];
        farm.stage.choice_cost = {-3.0};
        Node market = base.nodes[1];
        market.stage.choice_cost.clear();
        g1.nodes = {farm, market};
        g1.arcs = {{0, 1, 0.0, {}, {}, false, {1.0}}};
        g1.root_arcs = {{0, 1.0}};
        g1.ambiguity_sets = {{0}, {1}};
    }
    auto p1 = train_ddu(g1, 10, 3);
    auto gc = g1;
    gc.kind = TransitionKind::fixed;
    gc.option_names.clear();
    gc.arcs[0].phi0 = 1.0;
    gc.arcs[0].choice_prob.clear();
    for (auto& nd : gc.nodes) nd.stage.choice_cost.clear();
    gc.nodes[0].stage.objective_offset = -3.0;  // the always-paid attendance cost
    auto pc = train(gc, 10, 3);
    oracle::ExtensiveForm ext(gc);
    double ref = ext.value();
    CHECK(pc.log.back().bound == doctest::Approx(ref).epsilon(1e-6));
    CHECK(p1.log.back().bound == doctest::Approx(ref).epsilon(1e-6));
}

TEST_CASE("lagrangian dual bounds and recovers linear duals") {
    auto g = build_example("cheese_producer");
    auto p = make_policy(g, Variant::ddu_lagrangian);
    Rng rng(77);
    train_more(p, 8, rng);
    auto mv = p.view();

    SUBCASE("weak duality against the exact subproblem on random states") {
        Rng probe(3);
        for (int trial = 0; trial < 40; ++trial) {
            std::vector<double> x{50.0 * uniform01(probe)};
            int node = uniform01(probe) < 0.5 ? 0 : 1;
            int omega = node == 0 ? static_cast<int>(uniform01(probe) * 5) : static_cast<int>(uniform01(probe) * 2);
            auto milp = solve_lazy_milp(assemble_sp_matrixchoice(mv, node, omega, x));
            REQUIRE(milp.status == SolveStatus::optimal);
            for (int iters : {1, 20}) {
                auto lag = lagrangian_dual(mv, node, omega, x, 10.0 * p.big_m, iters);
                CHECK(lag.value <= milp.objective + 1e-7);
            }
            // more iterations can only improve the dual value
            auto l1 = lagrangian_dual(mv, node, omega, x, 10.0 * p.big_m, 1);
            auto l20 = lagrangian_dual(mv, node, omega, x, 10.0 * p.big_m, 20);
            CHECK(l1.value <= l20.value + 1e-9);
        }
    }

    SUBCASE("a convex instance reproduces the fishing dual") {
        // single matrix, no binaries that matter: the dual equals the LP dual
        auto g1 = g;
        g1.option_names = {"stay"};
        for (auto& arc : g1.arcs) arc.choice_prob.resize(1);
        for (auto& nd : g1.nodes) nd.stage.choice_cost.assign(1, 0.0);
        auto p1 = make_policy(g1, Variant::ddu_lagrangian);
        Rng r1(4);
        train_more(p1, 5, r1);
        std::vector<double> x{12.0};
        auto mv1 = p1.view();
        auto fished = assemble_sp_matrixchoice(mv1, 0, 1, x);
        auto rel = solve_lazy_lp(fished);
        REQUIRE(rel.status == SolveStatus::optimal);
        auto lag = lagrangian_dual(mv1, 0, 1, x, 10.0 * p1.big_m, 20);
        CHECK(lag.value == doctest::Approx(rel.objective).epsilon(1e-6));
        CHECK(lag.lambda[0] == doctest::Approx(rel.duals[fished.fish_x[0]]).epsilon(1e-5));
    }
}

TEST_CASE("lagrangian cuts are valid on a two-stage matrix-choice instance") {
    auto g = build_example("cheese_advertising");
    auto u = unroll(g, 3);
    auto p = train_ddu(u, 12, 99);
    CHECK(p.variant == Variant::ddu_lagrangian);
    CHECK(p.sandwich_violations == 0);
    CHECK(p.sandwich_checks > 0);
    // per-realization cuts under-estimate the exact subtree value
    oracle::ExtensiveForm dummy_guard(u);  (void)dummy_guard;
    auto mv = p.view();
    for (size_t node = 0; node < u.nodes.size(); ++node) {
        const auto& pools = p.pool.per_node[node].per_omega;
        for (size_t o = 0; o < pools.size(); ++o) {
            for (const auto& cut : pools[o]) {
                if (cut.iteration == 0) continue;
                for (double xv : {0.0, 6.0, 14.0}) {
                    std::vector<double> x(u.nodes[node].stage.state_in.size(), xv);
                    auto milp = solve_lazy_milp(
                        assemble_sp_matrixchoice(mv, static_cast<int>(node),
                                                 static_cast<int>(o), x));
                    if (milp.status != SolveStatus::optimal) continue;
                    double lhs = cut.alpha;
                    for (size_t d = 0; d < x.size(); ++d) lhs += cut.beta[d] * x[d];
                    CHECK(lhs <= milp.objective + 1e-7);
                }
            }
        }
    }
}

TEST_CASE("zero response trains to the classic optimum") {
    auto g = affine_chain(0.0, 0.0);
    auto p = train_ddu(g, 40, 1234);
    CHECK(p.variant == Variant::ddu_adaptive);
    auto gc = g;
    gc.kind = TransitionKind::fixed;
    gc.options.clear();
    gc.option_names.clear();
    for (auto& nd : gc.nodes) nd.stage.option_cost.clear();
    for (auto& arc : gc.arcs) arc.response.clear();
    auto pc = train(gc, 40, 1234);
    CHECK(p.log.back().bound == doctest::Approx(pc.log.back().bound).epsilon(1e-6));
    CHECK(p.sandwich_violations == 0);
    CHECK(p.monotone_violations == 0);
}

TEST_CASE("advertising example trains with monotone bounds and a valid gap") {
    auto g = build_example("advertising");
    auto p = train_ddu(g, 30, 31337);
    for (size_t k = 1; k < p.log.size(); ++k)
        CHECK(p.log[k].bound >= p.log[k - 1].bound - 1e-9);
    CHECK(p.sandwich_violations == 0);
    auto sim = simulate(p, 300, 5, false);
    // lower bound below the simulated policy cost (within noise)
    CHECK(p.log.back().bound <= sim.mean + 3.0 * sim.stderr_ + 1e-6);
}
