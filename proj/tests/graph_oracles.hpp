#pragma once

// Scenario-enumeration oracles for policy graphs: the deterministic-equivalent
// LP of an acyclic decision-independent graph, built by explicit expansion of
// every (node, realization) history.  Kept independent of the SDDP machinery.

#include <functional>
#include <string>
#include <vector>

#include "sddp/engine.hpp"
#include "sddp/graph.hpp"

namespace oracle {

class ExtensiveForm {
public:
    explicit ExtensiveForm(const sddp::PolicyGraph& g) : g_(g), ix_(sddp::build_index(g)) {
        if (!ix_.acyclic) throw std::runtime_error("extensive form needs an acyclic graph");
        sgn_ = g.sense == sddp::Sense::maximize ? -1.0 : 1.0;
    }

    // min-orientation optimal value of the whole problem
    double value() {
        lp_ = sddp::LinearProgram{};
        next_id_ = 0;
        for (const auto& ra : g_.root_arcs) {
            if (ra.prob <= 1e-15) continue;
            const auto& nd = g_.nodes[ra.to];
            for (size_t o = 0; o < nd.support.size(); ++o) {
                if (nd.pmf[o] <= 0.0) continue;
                expand(ra.to, static_cast<int>(o), ra.prob * nd.pmf[o], {}, g_.root_state);
            }
        }
        auto sol = sddp::solve_lp(lp_);
        if (sol.status != sddp::SolveStatus::optimal)
            throw std::runtime_error("extensive form not optimal");
        return sol.objective;
    }

    // min-orientation value of the subtree rooted at (node, omega) given xbar
    double subtree_value(int node, int omega, std::span<const double> xbar) {
        lp_ = sddp::LinearProgram{};
        next_id_ = 0;
        expand(node, omega, 1.0, {}, std::vector<double>(xbar.begin(), xbar.end()));
        auto sol = sddp::solve_lp(lp_);
        if (sol.status != sddp::SolveStatus::optimal)
            throw std::runtime_error("extensive subtree not optimal");
        return sol.objective;
    }

    // brute-force expected cost-to-go of node i at outgoing state x
    double expected_cost_to_go(int node, std::span<const double> x) {
        double total = 0.0;
        for (int a : ix_.out_arcs[node]) {
            const auto& arc = g_.arcs[a];
            if (arc.phi0 <= 1e-15) continue;
            const auto& child = g_.nodes[arc.to];
            for (size_t o = 0; o < child.support.size(); ++o) {
                if (child.pmf[o] <= 0.0) continue;
                total += arc.phi0 * child.pmf[o] * subtree_value(arc.to, static_cast<int>(o), x);
            }
        }
        return total;
    }

private:
    // returns the instance's x_out variable ids; links x_in to the given parent
    // variables (or pins it to numeric values when parent_vars is empty)
    std::vector<int> expand(int node, int omega, double prob, std::vector<int> parent_vars,
                            std::vector<double> fixed_x) {
        const auto& nd = g_.nodes[node];
        const std::string prefix = "i" + std::to_string(next_id_++) + "_";
        std::map<std::string, int> vid;
        std::map<std::string, double> obj_inject, lo_inject, hi_inject, rhs_inject;
        for (const auto& inj : nd.stage.injections) {
            double v = inj.per_omega[omega];
            switch (inj.field) {
                case sddp::InjectField::rhs: rhs_inject[inj.target] = v; break;
                case sddp::InjectField::lower: lo_inject[inj.target] = v; break;
                case sddp::InjectField::upper: hi_inject[inj.target] = v; break;
                case sddp::InjectField::objective: obj_inject[inj.target] = v; break;
            }
        }
        for (const auto& tv : nd.stage.vars) {
            double lo = lo_inject.count(tv.name) ? lo_inject[tv.name] : tv.lower;
            double hi = hi_inject.count(tv.name) ? hi_inject[tv.name] : tv.upper;
            double c = obj_inject.count(tv.name) ? obj_inject[tv.name] : tv.objective;
            vid[tv.name] = lp_.add_variable(prefix + tv.name, lo, hi, prob * sgn_ * c);
        }
        lp_.set_objective_offset(lp_.objective_offset() + prob * sgn_ * nd.stage.objective_offset);
        for (const auto& row : nd.stage.rows) {
            std::vector<std::pair<int, double>> coeffs;
            for (auto& [vn, c] : row.coeffs) coeffs.push_back({vid[vn], c});
            double rhs = rhs_inject.count(row.name) ? rhs_inject[row.name] : row.rhs;
            lp_.add_constraint(prefix + row.name, std::move(coeffs), row.sense, rhs);
        }
        for (size_t d = 0; d < nd.stage.state_in.size(); ++d) {
            int xv = vid[nd.stage.state_in[d]];
            if (!parent_vars.empty()) {
                lp_.add_constraint(prefix + "link" + std::to_string(d),
                                   {{xv, 1.0}, {parent_vars[d], -1.0}}, sddp::RowSense::eq, 0.0);
            } else {
                lp_.add_constraint(prefix + "pin" + std::to_string(d), {{xv, 1.0}},
                                   sddp::RowSense::eq, fixed_x[d]);
            }
        }
        std::vector<int> xout;
        for (const auto& sn : nd.stage.state_out) xout.push_back(vid[sn]);
        for (int a : ix_.out_arcs[node]) {
            const auto& arc = g_.arcs[a];
            if (arc.phi0 <= 1e-15) continue;
            const auto& child = g_.nodes[arc.to];
            for (size_t o = 0; o < child.support.size(); ++o) {
                if (child.pmf[o] <= 0.0) continue;
                expand(arc.to, static_cast<int>(o), prob * arc.phi0 * child.pmf[o], xout, {});
            }
        }
        return xout;
    }

    const sddp::PolicyGraph& g_;
    sddp::GraphIndex ix_;
    double sgn_ = 1.0;
    sddp::LinearProgram lp_;
    int next_id_ = 0;
};

// Random acyclic decision-independent trading graph (newsvendor family) with
// relatively complete recourse, boxed variables, and a capped scenario count.
inline sddp::PolicyGraph random_acyclic_graph(sddp::Rng& rng, int max_stages = 4,
                                              int max_children = 3, int max_omega = 3,
                                              long instance_cap = 150) {
    using namespace sddp;
    auto u01 = [&] { return uniform01(rng); };
    for (int attempt = 0; attempt < 200; ++attempt) {
        PolicyGraph g;
        g.sense = Sense::minimize;
        g.kind = TransitionKind::fixed;
        g.root_state = {std::floor(10.0 * u01())};
        const double cap = 40.0;
        int stages = 2 + static_cast<int>(u01() * (max_stages - 1));
        if (stages > max_stages) stages = max_stages;
        std::vector<std::vector<int>> layers(stages);
        for (int t = 0; t < stages; ++t) {
            int width = 1 + static_cast<int>(u01() * 2.0);
            for (int k = 0; k < width; ++k) {
                Node nd;
                nd.name = "n" + std::to_string(t) + "_" + std::to_string(k);
                double price = 1.0 + 5.0 * u01();
                double buy = 0.3 + (price - 0.4) * u01();
                double maxd = 30.0;
                nd.stage.vars = {{"x", 0.0, cap, 0.0},
                                 {"us", 0.0, maxd, -price},
                                 {"ub", 0.0, 20.0, buy},
                                 {"x_out", 0.0, cap, 0.05 * u01()}};
                nd.stage.rows = {{"avail", {{"us", 1.0}, {"x", -1.0}}, RowSense::le, 0.0},
                                 {"balance",
                                  {{"x_out", 1.0}, {"x", -1.0}, {"us", 1.0}, {"ub", -1.0}},
                                  RowSense::eq,
                                  0.0}};
                nd.stage.state_in = {"x"};
                nd.stage.state_out = {"x_out"};
                int no = 1 + static_cast<int>(u01() * max_omega);
                if (no > max_omega) no = max_omega;
                for (int o = 0; o < no; ++o)
                    nd.support.push_back(std::floor(5.0 + 25.0 * u01()));
                std::sort(nd.support.begin(), nd.support.end());
                nd.pmf.assign(no, 1.0 / no);
                nd.stage.injections = {{InjectField::upper, "us", nd.support}};
                g.nodes.push_back(std::move(nd));
                layers[t].push_back(static_cast<int>(g.nodes.size()) - 1);
            }
        }
        // root row over layer 0
        {
            double left = 1.0;
            for (size_t k = 0; k < layers[0].size(); ++k) {
                double p = k + 1 == layers[0].size() ? left : left * (0.4 + 0.6 * u01());
                g.root_arcs.push_back({layers[0][k], p});
                left -= p;
            }
        }
        for (int t = 0; t + 1 < stages; ++t) {
            for (int from : layers[t]) {
                int nc = 1 + static_cast<int>(u01() * max_children);
                nc = std::min<int>(nc, static_cast<int>(layers[t + 1].size()));
                double left = 1.0;
                for (int k = 0; k < nc; ++k) {
                    double p = k + 1 == nc ? left : left * (0.3 + 0.7 * u01());
                    g.arcs.push_back({from, layers[t + 1][k], p, {}, {}, false, {}});
                    left -= p;
                }
            }
        }
        for (size_t i = 0; i < g.nodes.size(); ++i) g.ambiguity_sets.push_back({static_cast<int>(i)});

        // cap the scenario-expansion size
        auto ix = build_index(g);
        std::vector<long> count(g.nodes.size(), -1);
        std::function<long(int)> instances = [&](int i) -> long {
            if (count[i] >= 0) return count[i];
            long total = 1;
            for (int a : ix.out_arcs[i]) {
                const auto& arc = g.arcs[a];
                if (arc.phi0 <= 1e-15) continue;
                total += static_cast<long>(g.nodes[arc.to].support.size()) * instances(arc.to);
            }
            return count[i] = total;
        };
        long total = 0;
        for (const auto& ra : g.root_arcs)
            if (ra.prob > 1e-15)
                total += static_cast<long>(g.nodes[ra.to].support.size()) * instances(ra.to);
        if (total > instance_cap) continue;
        if (!validate(g).pass) continue;
        return g;
    }
    throw std::runtime_error("failed to generate a capped random graph");
}

}  // namespace oracle
