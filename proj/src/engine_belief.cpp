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

int sample_index(Rng& rng, std::span<const double> mass, bool allow_absorb) {
    double u = uniform01(rng);
    double acc = 0.0;
    for (size_t i = 0; i < mass.size(); ++i) {
        acc += std::max(mass[i], 0.0);
        if (u < acc) return static_cast<int>(i);
    }
    return allow_absorb ? -1 : static_cast<int>(mass.size()) - 1;
}

int lead_member(const GraphIndex& ix, int num_models, int set) {
    for (int m = 0; m < num_models; ++m)
        if (ix.set_member[set][m] >= 0) return ix.set_member[set][m];
    return -1;
}

// phi^m from set to its child slot at option vector y (0 when absent).
double set_phi(const PolicyGraph& g, const GraphIndex& ix, int set, int slot, int m,
               std::span<const double> y) {
    int a = ix.set_arc[set][slot][m];
    if (a < 0) return 0.0;
    return std::max(arc_phi(g.arcs[a], y), 0.0);
}

// pmf of the child set's model-m member (0 when the model has no member).
double set_pmf(const PolicyGraph& g, const GraphIndex& ix, int set, int m, int omega) {
    int member = ix.set_member[set][m];
    if (member < 0) return 0.0;
    return g.nodes[member].pmf[omega];
}

struct ArrivalDraw {
    int set = -1;
    int omega = -1;
    std::vector<double> belief;  // post-arrival Bayes update
    bool dead = false;
    bool impossible = false;
};

// One transition of the ambiguity-set walk.  from_set == -1 draws from the
// root row.  In mixture mode (true_model < 0) nodes come from the
// belief-predictive row and omega from the posterior-weighted pmf mixture; in
// true-model mode the chosen model's dynamics generate the path while the
// agent still updates beliefs by Bayes' rule.
ArrivalDraw draw_arrival(const TrainedPolicy& p, Rng& rng, std::span<const double> y,
                         std::span<const double> b, int from_set, int true_model) {
    const auto& g = p.graph;
    const auto& ix = p.index;
    const int M = g.num_models;
    ArrivalDraw out;

    std::vector<int> targets;
    std::vector<double> mass;
    if (from_set < 0) {
        for (size_t s = 0; s < g.ambiguity_sets.size(); ++s) {
            double w = 0.0;
            for (int m = 0; m < M; ++m) {
                if (true_model >= 0 && m != true_model) continue;
                int member = ix.set_member[s][m];
                if (member < 0) continue;
                for (const auto& ra : g.root_arcs)
                    if (ra.to == member)
                        w += true_model >= 0 ? ra.prob / g.prior[m] : ra.prob;
            }
            if (w > 0.0) {
                targets.push_back(static_cast<int>(s));
                mass.push_back(w);
            }
        }
    } else {
        const auto& slots = ix.set_children[from_set];
        for (size_t slot = 0; slot < slots.size(); ++slot) {
            double w = 0.0;
            for (int m = 0; m < M; ++m) {
                if (true_model >= 0 && m != true_model) continue;
                double phi = set_phi(g, ix, from_set, static_cast<int>(slot), m, y);
                w += true_model >= 0 ? phi : b[m] * phi;
            }
            targets.push_back(slots[slot]);
            mass.push_back(w);
        }
    }
    int pick = sample_index(rng, mass, true);
    if (pick < 0) {
        out.dead = true;
        return out;
    }
    out.set = targets[pick];

    // realization from the posterior-weighted mixture (or the true model)
    std::vector<double> wm(M, 0.0);
    double wsum = 0.0;
    for (int m = 0; m < M; ++m) {
        if (true_model >= 0) {
            wm[m] = m == true_model ? 1.0 : 0.0;
        } else if (from_set < 0) {
            int member = ix.set_member[out.set][m];
            if (member >= 0)
                for (const auto& ra : g.root_arcs)
                    if (ra.to == member) wm[m] = ra.prob;
        } else {
            const auto& slots = ix.set_children[from_set];
            for (size_t slot = 0; slot < slots.size(); ++slot)
                if (slots[slot] == out.set)
                    wm[m] = b[m] * set_phi(g, ix, from_set, static_cast<int>(slot), m, y);
        }
        wsum += wm[m];
    }
    if (wsum <= 0.0) {
        out.impossible = true;
        return out;
    }
    int lead = lead_member(ix, M, out.set);
    const size_t support = g.nodes[lead].support.size();
    std::vector<double> mix(support, 0.0);
    for (int m = 0; m < M; ++m) {
        if (wm[m] == 0.0) continue;
        for (size_t o = 0; o < support; ++o)
            mix[o] += wm[m] / wsum * set_pmf(g, ix, out.set, m, static_cast<int>(o));
    }
    out.omega = sample_index(rng, mix, false);
    try {
        out.belief = belief_update_dd(g, ix, y, b, from_set, out.set, out.omega);
    } catch (const SolveError&) {
        out.impossible = true;
    }
    return out;
}

double sp_value_over_omega_belief(const TrainedPolicy& p, ActiveRowCache& cache, int set, int e,
                                  std::span<const double> xbar) {
    const auto& g = p.graph;
    const auto& ix = p.index;
    auto mv = p.view();
    const int M = g.num_models;
    const int ne = g.num_options();
    int lead = lead_member(ix, M, set);
    const auto& support = g.nodes[lead].support;

    // joint arrival weights from the root for this set
    std::vector<double> wm(M, 0.0);
    for (int m = 0; m < M; ++m) {
        int member = ix.set_member[set][m];
        if (member < 0) continue;
        for (const auto& ra : g.root_arcs)
            if (ra.to == member) wm[m] = ra.prob;
    }
    double value = 0.0;
    for (size_t o = 0; o < support.size(); ++o) {
        double joint = 0.0;
        for (int m = 0; m < M; ++m) joint += wm[m] * set_pmf(g, ix, set, m, static_cast<int>(o));
        if (joint <= 0.0) continue;
        auto b = belief_update(g, ix, g.prior, -1, set, static_cast<int>(o));
        auto ap = assemble_sp_belief(mv, set, static_cast<int>(o), xbar, e, b);
        auto sol = solve_lazy_milp(ap, hint(cache, kBoundSp, set, static_cast<int>(o) * ne + e));
        if (sol.status != SolveStatus::optimal)
            throw SolveError("belief subproblem not optimal");
        value += joint * sol.objective;
    }
    return value;
}

int root_option_belief(const TrainedPolicy& p, ActiveRowCache& cache, int set) {
    int best = 0;
    double best_v = kInf;
    for (int e = 0; e < p.graph.num_options(); ++e) {
        double v = sp_value_over_omega_belief(p, cache, set, e, p.graph.root_state);
        if (v < best_v - 1e-12) {
            best_v = v;
            best = e;
        }
    }
    return best;
}

}  // namespace

Trajectory forward_learning(const TrainedPolicy& p, Rng& rng, ActiveRowCache& cache,
                            int true_model) {
    const auto& g = p.graph;
    const auto& ix = p.index;
    auto mv = p.view();
    const int ne = g.num_options();
    Trajectory traj;

    std::vector<double> b = g.prior;
    std::vector<double> y0(g.option_dim(), 0.0);
    auto arrival = draw_arrival(p, rng, y0, b, -1, true_model);
    if (arrival.dead) return traj;
    if (arrival.impossible) {
        traj.aborted = true;
        return traj;
    }
    int set = arrival.set;
    int omega = arrival.omega;
    b = arrival.belief;
    int opt = root_option_belief(p, cache, set);
    std::vector<double> x = g.root_state;

    while (true) {
        if (static_cast<int>(traj.steps.size()) >= p.safety_cap) {
            traj.truncated = true;
            break;
        }
        auto ap = assemble_sp_belief(mv, set, omega, x, opt, b);
        auto sol = solve_lazy_milp(ap, hint(cache, kForwardSp, set, omega * ne + opt));
        if (sol.status != SolveStatus::optimal)
            throw SolveError("belief subproblem not optimal at set " + std::to_string(set));
        TrajectoryStep step;
        step.set = set;
        step.node = lead_member(ix, g.num_models, set);
        step.omega = omega;
        step.option_in = opt;
        step.belief = b;
        step.x_in = x;
        step.x_out.resize(ap.state_out_vars.size());
        for (size_t d = 0; d < ap.state_out_vars.size(); ++d)
            step.x_out[d] = sol.primal[ap.state_out_vars[d]];
        step.stage_cost = ap.stage_cost(sol.primal);
        const auto& slots = ix.set_children[set];
        for (size_t slot = 0; slot < slots.size(); ++slot) {
            int e = 0;
            if (!ap.z_vars.empty()) {
                double best_v = -1.0;
                for (int f = 0; f < ne; ++f) {
                    double v = sol.primal[ap.z_vars[slot][f]];
                    if (v > best_v + 1e-9) {
                        best_v = v;
                        e = f;
                    }
                }
            }
            step.planned.push_back(e);
        }
        traj.total_cost += step.stage_cost;
        x = step.x_out;
        traj.steps.push_back(step);

        auto y = g.option_vector(opt);
        auto next = draw_arrival(p, rng, y, b, set, true_model);
        if (next.dead) break;
        if (next.impossible) {
            traj.aborted = true;
            break;
        }
        int slot = -1;
        for (size_t s2 = 0; s2 < slots.size(); ++s2)
            if (slots[s2] == next.set) slot = static_cast<int>(s2);
        opt = step.planned[slot];
        set = next.set;
        omega = next.omega;
        b = next.belief;
    }
    return traj;
}

void backward_learning(TrainedPolicy& p, const Trajectory& traj, long iteration) {
    const auto& g = p.graph;
    const auto& ix = p.index;
    auto mv = p.view();
    const int M = g.num_models;
    const int q = g.option_dim();
    const int ne = g.num_options();
    for (auto it = traj.steps.rbegin(); it != traj.steps.rend(); ++it) {
        const int set = it->set;
        const auto& slots = ix.set_children[set];
        if (slots.empty()) continue;
        const auto& xbar = it->x_out;
        const auto& b = it->belief;
        const int dim = static_cast<int>(xbar.size());

        BeliefBlock block;
        block.anchor = b;
        block.iteration = iteration;
        block.triples.resize(slots.size() * M);
        for (size_t slot = 0; slot < slots.size(); ++slot) {
            const int cs = slots[slot];
            const int e = it->planned[slot];
            auto ybar = g.option_vector(e);
            int lead = lead_member(ix, M, cs);
            const size_t support = g.nodes[lead].support.size();
            std::vector<double> values(support, 0.0);
            std::vector<std::vector<double>> lx(support), ly(support);
            for (size_t o = 0; o < support; ++o) {
                auto ap = assemble_relaxation_belief(mv, cs, static_cast<int>(o), xbar, ybar, b);
                auto sol = solve_lazy_lp(ap, hint(p.hints, kRelax, cs, static_cast<int>(o)));
                if (sol.status != SolveStatus::optimal)
                    throw SolveError("belief relaxation not optimal");
                values[o] = sol.objective;
                lx[o].resize(dim);
                for (int d = 0; d < dim; ++d) lx[o][d] = sol.duals[ap.fish_x[d]];
                ly[o].resize(q);
                for (int k = 0; k < q; ++k) ly[o][k] = sol.duals[ap.fish_y[k]];

                auto sp = assemble_sp_belief(mv, cs, static_cast<int>(o), xbar, e, b);
                auto spsol = solve_lazy_milp(
                    sp, hint(p.hints, kSandwich, cs, static_cast<int>(o) * ne + e));
                ++p.sandwich_checks;
                if (spsol.status == SolveStatus::optimal &&
                    sol.objective > spsol.objective + 1e-8)
                    ++p.sandwich_violations;
            }
            // model-wise reweighting of the shared solves
            for (int m = 0; m < M; ++m) {
                OptionCut t;
                t.beta.assign(dim, 0.0);
                t.gamma.assign(q, 0.0);
                t.iteration = iteration;
                double alpha = 0.0;
                for (size_t o = 0; o < support; ++o) {
                    double w = set_pmf(g, ix, cs, m, static_cast<int>(o));
                    if (w == 0.0) continue;
                    alpha += w * values[o];
                    for (int d = 0; d < dim; ++d) t.beta[d] += w * lx[o][d];
                    for (int k = 0; k < q; ++k) t.gamma[k] += w * ly[o][k];
                }
                for (int d = 0; d < dim; ++d) alpha -= t.beta[d] * xbar[d];
                for (int k = 0; k < q; ++k) alpha -= t.gamma[k] * ybar[k];
                t.alpha = alpha;
                block.triples[slot * M + m] = std::move(t);
            }
        }
        p.pool.per_set[set].push_back(std::move(block));
        ++p.pool.cuts_added;
    }
}

double bound_learning(const TrainedPolicy& p, ActiveRowCache& cache) {
    const auto& g = p.graph;
    const auto& ix = p.index;
    double total = 0.0;
    for (size_t s = 0; s < g.ambiguity_sets.size(); ++s) {
        bool from_root = false;
        for (int m = 0; m < g.num_models && !from_root; ++m) {
            int member = ix.set_member[s][m];
            if (member < 0) continue;
            for (const auto& ra : g.root_arcs)
                if (ra.to == member && ra.prob > 0.0) from_root = true;
        }
        if (!from_root) continue;
        double best = kInf;
        for (int e = 0; e < g.num_options(); ++e)
            best = std::min(best, sp_value_over_omega_belief(p, cache, static_cast<int>(s), e,
                                                             g.root_state));
        total += best;
    }
    return total;
}

}  // namespace detail
}  // namespace sddp
