#include <algorithm>
#include <cmath>

#include "sddp/engine.hpp"

namespace sddp {
namespace detail {

enum HintKind {
    kClassic = 0,
    kBoundSp = 1,
    kRelax = 2,
    kForwardSp = 3,
    kLagrangian = 4,
    kSandwich = 5,
};

namespace {

int sample_sub_pmf(Rng& rng, const std::vector<std::pair<int, double>>& mass) {
    double total = 0.0;
    for (auto& [id, w] : mass) {
        if (w < -1e-9) throw SolveError("sampled transition row has a negative entry");
        total += std::max(w, 0.0);
    }
    if (total > 1.0 + 1e-6) throw SolveError("sampled transition row mass exceeds 1");
    double u = uniform01(rng);
    double acc = 0.0;
    for (auto& [id, w] : mass) {
        acc += std::max(w, 0.0);
        if (u < acc) return id;
    }
    return -1;
}

int sample_pmf(Rng& rng, std::span<const double> pmf) {
    double u = uniform01(rng);
    double acc = 0.0;
    for (size_t o = 0; o < pmf.size(); ++o) {
        acc += pmf[o];
        if (u < acc) return static_cast<int>(o);
    }
    return static_cast<int>(pmf.size()) - 1;
}

int find_slot(const std::vector<int>& children, int child) {
    for (size_t s = 0; s < children.size(); ++s)
        if (children[s] == child) return static_cast<int>(s);
    return -1;
}

int read_selection(const AssembledProgram& ap, const MilpSolution& sol, int slot) {
    int best = 0;
    double best_v = -1.0;
    for (size_t e = 0; e < ap.z_vars[slot].size(); ++e) {
        double v = sol.primal[ap.z_vars[slot][e]];
        if (v > best_v + 1e-9) {
            best_v = v;
            best = static_cast<int>(e);
        }
    }
    return best;
}

// Expected forward-subproblem value of entering `node` with option e fixed.
double sp_value_over_omega(const TrainedPolicy& p, ActiveRowCache& cache, int node, int e,
                           std::span<const double> xbar) {
    const auto& nd = p.graph.nodes[node];
    auto mv = p.view();
    double total = 0.0;
    const int ne = p.graph.num_options();
    for (size_t o = 0; o < nd.support.size(); ++o) {
        if (nd.pmf[o] == 0.0) continue;
        auto ap = assemble_sp_ddu(mv, node, static_cast<int>(o), xbar, e);
        auto sol = solve_lazy_milp(ap, hint(cache, kBoundSp, node, static_cast<int>(o) * ne + e));
        if (sol.status != SolveStatus::optimal)
            throw SolveError("forward subproblem not optimal at " + nd.name);
        total += nd.pmf[o] * sol.objective;
    }
    return total;
}

// The initial option decision is pulled back to the root: enumerate ext(Y).
int root_option_ddu(const TrainedPolicy& p, ActiveRowCache& cache, int node) {
    int best = 0;
    double best_v = kInf;
    for (int e = 0; e < p.graph.num_options(); ++e) {
        double v = sp_value_over_omega(p, cache, node, e, p.graph.root_state);
        if (v < best_v - 1e-12) {
            best_v = v;
            best = e;
        }
    }
    return best;
}

}  // namespace

Trajectory forward_ddu(const TrainedPolicy& p, Rng& rng, ActiveRowCache& cache) {
    const auto& g = p.graph;
    const auto& ix = p.index;
    auto mv = p.view();
    Trajectory traj;

    std::vector<std::pair<int, double>> mass;
    for (const auto& ra : g.root_arcs) mass.push_back({ra.to, ra.prob});
    int node = sample_sub_pmf(rng, mass);
    if (node < 0) return traj;
    int omega = sample_pmf(rng, g.nodes[node].pmf);
    int opt = root_option_ddu(p, cache, node);
    std::vector<double> x = g.root_state;

    while (true) {
        if (static_cast<int>(traj.steps.size()) >= p.safety_cap) {
            traj.truncated = true;
            break;
        }
        auto ap = assemble_sp_ddu(mv, node, omega, x, opt);
        auto sol = solve_lazy_milp(ap, hint(cache, kForwardSp, node,
                                            omega * g.num_options() + opt));
        if (sol.status != SolveStatus::optimal)
            throw SolveError("forward subproblem not optimal at " + g.nodes[node].name);
        TrajectoryStep step;
        step.node = node;
        step.omega = omega;
        step.option_in = opt;
        step.x_in = x;
        step.x_out.resize(ap.state_out_vars.size());
        for (size_t d = 0; d < ap.state_out_vars.size(); ++d)
            step.x_out[d] = sol.primal[ap.state_out_vars[d]];
        step.stage_cost = ap.stage_cost(sol.primal);
        const auto& children = ix.children[node];
        for (size_t slot = 0; slot < children.size(); ++slot)
            step.planned.push_back(read_selection(ap, sol, static_cast<int>(slot)));
        traj.total_cost += step.stage_cost;
        x = step.x_out;

        auto y = g.option_vector(opt);
        mass.clear();
        for (int a : ix.out_arcs[node]) mass.push_back({g.arcs[a].to, arc_phi(g.arcs[a], y)});
        int next = sample_sub_pmf(rng, mass);
        traj.steps.push_back(std::move(step));
        if (next < 0) break;
        int slot = find_slot(children, next);
        opt = traj.steps.back().planned[slot];
        omega = sample_pmf(rng, g.nodes[next].pmf);
        node = next;
    }
    return traj;
}

void backward_ddu(TrainedPolicy& p, const Trajectory& traj, long iteration) {
    const auto& g = p.graph;
    const auto& ix = p.index;
    auto mv = p.view();
    const int q = g.option_dim();
    for (auto it = traj.steps.rbegin(); it != traj.steps.rend(); ++it) {
        const auto& children = ix.children[it->node];
        if (children.empty()) continue;
        const auto& xbar = it->x_out;
        const int dim = static_cast<int>(xbar.size());
        for (size_t slot = 0; slot < children.size(); ++slot) {
            const int child = children[slot];
            const int e = it->planned[slot];
            auto ybar = g.option_vector(e);
            const auto& nd = g.nodes[child];
            double alpha = 0.0;
            std::vector<double> beta(dim, 0.0), gamma(q, 0.0);
            for (size_t o = 0; o < nd.support.size(); ++o) {
                auto ap = assemble_relaxation_ddu(mv, child, static_cast<int>(o), xbar, ybar);
                auto sol = solve_lazy_lp(ap, hint(p.hints, kRelax, child, static_cast<int>(o)));
                if (sol.status != SolveStatus::optimal)
                    throw SolveError("relaxation not optimal at " + nd.name);
                const double w = nd.pmf[o];
                alpha += w * sol.objective;
                for (int d = 0; d < dim; ++d) beta[d] += w * sol.duals[ap.fish_x[d]];
                for (int k = 0; k < q; ++k) gamma[k] += w * sol.duals[ap.fish_y[k]];

                // sandwich: the relaxation may never exceed the exact subproblem
                auto sp = assemble_sp_ddu(mv, child, static_cast<int>(o), xbar, e);
                auto spsol = solve_lazy_milp(
                    sp, hint(p.hints, kSandwich, child,
                             static_cast<int>(o) * g.num_options() + e));
                ++p.sandwich_checks;
                if (spsol.status == SolveStatus::optimal &&
                    sol.objective > spsol.objective + 1e-8)
                    ++p.sandwich_violations;
            }
            for (int d = 0; d < dim; ++d) alpha -= beta[d] * xbar[d];
            for (int k = 0; k < q; ++k) alpha -= gamma[k] * ybar[k];
            p.pool.per_node[child].option_cuts.push_back({alpha, beta, gamma, iteration});
            ++p.pool.cuts_added;
        }
    }
}

double bound_ddu(const TrainedPolicy& p, ActiveRowCache& cache) {
    double total = 0.0;
    for (const auto& ra : p.graph.root_arcs) {
        if (ra.prob <= 0.0) continue;
        double best = kInf;
        for (int e = 0; e < p.graph.num_options(); ++e)
            best = std::min(best, sp_value_over_omega(p, cache, ra.to, e, p.graph.root_state));
        total += ra.prob * best;
    }
    return total;
}

Trajectory forward_choice(const TrainedPolicy& p, Rng& rng, ActiveRowCache& cache) {
    const auto& g = p.graph;
    const auto& ix = p.index;
    auto mv = p.view();
    Trajectory traj;
    std::vector<std::pair<int, double>> mass;
    for (const auto& ra : g.root_arcs) mass.push_back({ra.to, ra.prob});
    int node = sample_sub_pmf(rng, mass);
    if (node < 0) return traj;
    int omega = sample_pmf(rng, g.nodes[node].pmf);
    std::vector<double> x = g.root_state;

    while (true) {
        if (static_cast<int>(traj.steps.size()) >= p.safety_cap) {
            traj.truncated = true;
            break;
        }
        auto ap = assemble_sp_matrixchoice(mv, node, omega, x);
        auto sol = solve_lazy_milp(ap, hint(cache, kForwardSp, node, omega));
        if (sol.status != SolveStatus::optimal)
            throw SolveError("forward subproblem not optimal at " + g.nodes[node].name);
        TrajectoryStep step;
        step.node = node;
        step.omega = omega;
        step.x_in = x;
        step.x_out.resize(ap.state_out_vars.size());
        for (size_t d = 0; d < ap.state_out_vars.size(); ++d)
            step.x_out[d] = sol.primal[ap.state_out_vars[d]];
        step.stage_cost = ap.stage_cost(sol.primal);
        int chosen = -1;
        double best_v = 0.5;
        for (size_t d = 0; d < ap.choice_vars.size(); ++d) {
            if (sol.primal[ap.choice_vars[d]] > best_v) {
                best_v = sol.primal[ap.choice_vars[d]];
                chosen = static_cast<int>(d);
            }
        }
        step.option_in = chosen;
        traj.total_cost += step.stage_cost;
        x = step.x_out;
        traj.steps.push_back(std::move(step));

        if (chosen < 0) break;  // leaf
        mass.clear();
        for (int a : ix.out_arcs[node])
            mass.push_back({g.arcs[a].to, arc_phi_choice(g.arcs[a], chosen)});
        int next = sample_sub_pmf(rng, mass);
        if (next < 0) break;
        omega = sample_pmf(rng, g.nodes[next].pmf);
        node = next;
    }
    return traj;
}

void backward_choice(TrainedPolicy& p, const Trajectory& traj, long iteration) {
    const auto& g = p.graph;
    const auto& ix = p.index;
    auto mv = p.view();
    for (auto it = traj.steps.rbegin(); it != traj.steps.rend(); ++it) {
        const auto& children = ix.children[it->node];
        if (children.empty()) continue;
        const auto& xbar = it->x_out;
        const int dim = static_cast<int>(xbar.size());
        double scale = 1.0;
        for (double v : xbar) scale = std::max(scale, std::fabs(v));
        const double box = 10.0 * p.big_m / scale;
        for (int child : children) {
            const auto& nd = g.nodes[child];
            for (size_t o = 0; o < nd.support.size(); ++o) {
                auto lag = lagrangian_dual(mv, child, static_cast<int>(o), xbar, box, 20,
                                           hint(p.hints, kLagrangian, child, static_cast<int>(o)));
                double alpha = lag.value;
                for (int d = 0; d < dim; ++d) alpha -= lag.lambda[d] * xbar[d];
                p.pool.per_node[child].per_omega[o].push_back(
                    {alpha, lag.lambda.empty() ? std::vector<double>(dim, 0.0) : lag.lambda,
                     iteration});
                ++p.pool.cuts_added;

                auto sp = assemble_sp_matrixchoice(mv, child, static_cast<int>(o), xbar);
                auto spsol =
                    solve_lazy_milp(sp, hint(p.hints, kSandwich, child, static_cast<int>(o)));
                ++p.sandwich_checks;
                if (spsol.status == SolveStatus::optimal && lag.value > spsol.objective + 1e-8)
                    ++p.sandwich_violations;
            }
        }
    }
}

double bound_choice(const TrainedPolicy& p, ActiveRowCache& cache) {
    auto mv = p.view();
    double total = 0.0;
    for (const auto& ra : p.graph.root_arcs) {
        if (ra.prob <= 0.0) continue;
        const auto& nd = p.graph.nodes[ra.to];
        for (size_t o = 0; o < nd.support.size(); ++o) {
            if (nd.pmf[o] == 0.0) continue;
            auto ap = assemble_sp_matrixchoice(mv, ra.to, static_cast<int>(o),
                                               p.graph.root_state);
            auto sol = solve_lazy_milp(ap, hint(cache, kBoundSp, ra.to, static_cast<int>(o)));
            if (sol.status != SolveStatus::optimal)
                throw SolveError("root bound solve not optimal at " + nd.name);
            total += ra.prob * nd.pmf[o] * sol.objective;
        }
    }
    return total;
}

// Pointwise monotonicity probe of the backward-pass value approximations,
// re-evaluated every 25 iterations on a fixed grid.
void monotone_probe(TrainedPolicy& p, std::vector<double>& previous) {
    const auto& g = p.graph;
    const auto& ix = p.index;
    auto mv = p.view();
    std::vector<double> values;
    auto probe_state = [&](int node) {
        std::vector<double> x;
        for (const auto& sn : g.nodes[node].stage.state_in) {
            for (const auto& tv : g.nodes[node].stage.vars)
                if (tv.name == sn) {
                    double v = 0.0;
                    if (std::isfinite(tv.lower)) v = std::max(v, tv.lower);
                    if (std::isfinite(tv.upper)) v = std::min(v, tv.upper);
                    x.push_back(v);
                }
        }
        return x;
    };
    if (p.variant == Variant::ddu_adaptive) {
        for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i) {
            if (ix.children[i].empty()) continue;
            auto x = probe_state(i);
            auto sol = solve_lazy_lp(assemble_relaxation_ddu(mv, i, 0, x, g.option_vector(0)));
            if (sol.status == SolveStatus::optimal) values.push_back(sol.objective);
        }
    } else if (p.variant == Variant::ddu_lagrangian) {
        for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i) {
            if (ix.children[i].empty()) continue;
            auto x = probe_state(i);
            auto sol = solve_lazy_milp(assemble_sp_matrixchoice(mv, i, 0, x));
            if (sol.status == SolveStatus::optimal) values.push_back(sol.objective);
        }
    } else if (p.variant == Variant::learning) {
        for (size_t s = 0; s < g.ambiguity_sets.size(); ++s) {
            if (ix.set_children[s].empty()) continue;
            int member = -1;
            for (int m = 0; m < g.num_models && member < 0; ++m) member = ix.set_member[s][m];
            auto x = probe_state(member);
            auto sol = solve_lazy_lp(assemble_relaxation_belief(
                mv, static_cast<int>(s), 0, x, g.option_vector(0), g.prior));
            if (sol.status == SolveStatus::optimal) values.push_back(sol.objective);
        }
    }
    if (!previous.empty() && previous.size() == values.size()) {
        for (size_t k = 0; k < values.size(); ++k) {
            ++p.monotone_checks;
            if (values[k] < previous[k] - 1e-9 * (1.0 + std::fabs(previous[k])))
                ++p.monotone_violations;
        }
    }
    previous = values;
}

}  // namespace detail
}  // namespace sddp
