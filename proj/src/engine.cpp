#include "sddp/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sddp {

namespace detail {

ActiveRows* hint(ActiveRowCache& cache, int kind, int node, int omega) {
    return &cache[{kind, node, omega}];
}

// Hint kinds, kept distinct so active sets never mix program shapes.
enum HintKind {
    kClassic = 0,
    kBoundSp = 1,
    kRelax = 2,
    kForwardSp = 3,
    kLagrangian = 4,
    kSandwich = 5,
};

}  // namespace detail

using detail::hint;

double compute_big_m(const PolicyGraph& g, const GraphIndex& ix, int horizon_bound) {
    CutPool empty;
    ModelView mv{&g, &ix, &empty, 0.0, 0.0};
    double maxabs = 0.0;
    for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i) {
        for (int o = 0; o < static_cast<int>(g.nodes[i].support.size()); ++o) {
            auto ap = assemble_stage_only(mv, i, o);
            auto& lp = ap.prog.lp;
            // compact proxy box for cost-range probing
            for (int j = 0; j < lp.num_variables(); ++j) {
                const auto& v = lp.variable(j);
                double lo = std::isfinite(v.lower) ? v.lower : -1e4;
                double hi = std::isfinite(v.upper) ? v.upper : 1e4;
                lp.set_bounds(j, lo, hi);
            }
            for (Sense s : {Sense::minimize, Sense::maximize}) {
                lp.sense = s;
                auto sol = solve_lp(lp);
                if (sol.status == SolveStatus::optimal)
                    maxabs = std::max(maxabs, std::fabs(sol.objective));
            }
        }
        // option and matrix-choice costs
        const auto& st = g.nodes[i].stage;
        for (int e = 0; e < g.num_options(); ++e) {
            auto y = g.option_vector(e);
            double c = 0.0;
            for (size_t k = 0; k < st.option_cost.size() && k < y.size(); ++k)
                c += st.option_cost[k] * y[k];
            maxabs = std::max(maxabs, std::fabs(c));
        }
        for (double c : st.choice_cost) maxabs = std::max(maxabs, std::fabs(c));
    }
    if (maxabs < 1.0) maxabs = 1.0;
    return 10.0 * maxabs * std::max(horizon_bound, 1);
}

TrainedPolicy make_policy(const PolicyGraph& g, Variant variant) {
    auto rep = validate(g);
    if (!rep.pass) throw ValidationError("graph fails validation:\n" + rep.to_text());
    switch (variant) {
        case Variant::classic:
            if (g.kind != TransitionKind::fixed || g.num_models != 1)
                throw ConfigError("classic SDDP needs fixed transitions and a single model");
            break;
        case Variant::ddu_adaptive:
            if (g.kind == TransitionKind::choice || g.num_models != 1)
                throw ConfigError("the adaptive variant needs affine transitions and one model");
            if (g.options.empty())
                throw ConfigError("the adaptive variant needs a nonempty option set ext(Y)");
            break;
        case Variant::ddu_lagrangian:
            if (g.kind != TransitionKind::choice || g.num_models != 1)
                throw ConfigError("the Lagrangian variant needs matrix-choice transitions");
            break;
        case Variant::learning:
            if (g.kind == TransitionKind::choice)
                throw ConfigError("learning runs need fixed or affine-response transitions");
            break;
    }
    TrainedPolicy p;
    p.graph = g;
    p.index = build_index(p.graph);
    p.variant = variant;
    p.gamma = rep.gamma;
    p.horizon_bound = rep.horizon_bound;
    p.safety_cap = 10 * std::max(rep.horizon_bound, 1);
    p.big_m = compute_big_m(p.graph, p.index, rep.horizon_bound);
    size_t max_support = 1;
    for (const auto& nd : g.nodes) max_support = std::max(max_support, nd.support.size());
    p.m_theta = static_cast<double>(max_support) * p.big_m;
    p.pool = init_pool(p.graph, p.index, variant, p.big_m);
    return p;
}

namespace {

// Inverse-cdf draw over (index, weight) pairs given total mass <= 1; one
// uniform decides both survival and the pick.
int sample_sub_pmf(Rng& rng, const std::vector<std::pair<int, double>>& mass) {
    double u = uniform01(rng);
    double acc = 0.0;
    for (auto& [id, w] : mass) {
        acc += w;
        if (u < acc) return id;
    }
    return -1;  // absorbed
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

std::string state_text(std::span<const double> x) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << "]";
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// classic variant

namespace {

Trajectory forward_classic(const TrainedPolicy& p, Rng& rng, ActiveRowCache& cache) {
    const auto& g = p.graph;
    const auto& ix = p.index;
    auto mv = p.view();
    Trajectory traj;
    std::vector<double> x = g.root_state;
    int node = -1;  // root
    while (true) {
        if (static_cast<int>(traj.steps.size()) >= p.safety_cap) {
            traj.truncated = true;
            break;
        }
        std::vector<std::pair<int, double>> mass;
        if (node < 0) {
            for (const auto& ra : g.root_arcs) mass.push_back({ra.to, ra.prob});
        } else {
            for (int a : ix.out_arcs[node])
                mass.push_back({g.arcs[a].to, std::max(g.arcs[a].phi0, 0.0)});
        }
        int next = sample_sub_pmf(rng, mass);
        if (next < 0) break;
        int omega = sample_pmf(rng, g.nodes[next].pmf);

        auto ap = assemble_subproblem(mv, next, omega, x);
        auto sol = solve_lazy_lp(ap, hint(cache, detail::kClassic, next, omega));
        if (sol.status != SolveStatus::optimal)
            throw SolveError("stage subproblem not optimal (relatively complete recourse?) at " +
                             g.nodes[next].name + ", omega index " + std::to_string(omega) +
                             ", state " + state_text(x));
        TrajectoryStep step;
        step.node = next;
        step.omega = omega;
        step.x_in = x;
        step.x_out.resize(ap.state_out_vars.size());
        for (size_t d = 0; d < ap.state_out_vars.size(); ++d)
            step.x_out[d] = sol.primal[ap.state_out_vars[d]];
        step.stage_cost = ap.stage_cost(sol.primal);
        x = step.x_out;
        traj.total_cost += step.stage_cost;
        traj.steps.push_back(std::move(step));
        node = next;
    }
    return traj;
}

void backward_classic(TrainedPolicy& p, const Trajectory& traj, long iteration) {
    const auto& g = p.graph;
    const auto& ix = p.index;
    auto mv = p.view();
    for (auto it = traj.steps.rbegin(); it != traj.steps.rend(); ++it) {
        const int i = it->node;
        const auto& children = ix.children[i];
        if (children.empty()) continue;
        const auto& xbar = it->x_out;

        const int dim = static_cast<int>(xbar.size());
        double alpha = 0.0;
        std::vector<double> beta(dim, 0.0);
        for (int child : children) {
            double phi = 0.0;
            for (int a : ix.out_arcs[i])
                if (g.arcs[a].to == child) phi = std::max(g.arcs[a].phi0, 0.0);
            if (phi == 0.0) continue;
            for (size_t o = 0; o < g.nodes[child].support.size(); ++o) {
                const double w = phi * g.nodes[child].pmf[o];
                if (w == 0.0) continue;
                auto ap = assemble_subproblem(mv, child, static_cast<int>(o), xbar);
                auto sol = solve_lazy_lp(ap, hint(p.hints, detail::kClassic, child,
                                                  static_cast<int>(o)));
                if (sol.status != SolveStatus::optimal)
                    throw SolveError("backward solve not optimal at " + g.nodes[child].name);
                alpha += w * sol.objective;
                for (int d = 0; d < dim; ++d) beta[d] += w * sol.duals[ap.fish_x[d]];
            }
        }
        for (int d = 0; d < dim; ++d) alpha -= beta[d] * xbar[d];
        p.pool.per_node[i].plain.push_back({alpha, beta, iteration});
        ++p.pool.cuts_added;
    }
}

double bound_classic(const TrainedPolicy& p, ActiveRowCache& cache) {
    const auto& g = p.graph;
    auto mv = p.view();
    double total = 0.0;
    for (const auto& ra : g.root_arcs) {
        if (ra.prob <= 0.0) continue;
        const auto& nd = g.nodes[ra.to];
        for (size_t o = 0; o < nd.support.size(); ++o) {
            if (nd.pmf[o] == 0.0) continue;
            auto ap = assemble_subproblem(mv, ra.to, static_cast<int>(o), g.root_state);
            auto sol = solve_lazy_lp(ap, hint(cache, detail::kBoundSp, ra.to, static_cast<int>(o)));
            if (sol.status != SolveStatus::optimal)
                throw SolveError("root bound solve not optimal at " + nd.name);
            total += ra.prob * nd.pmf[o] * sol.objective;
        }
    }
    return total;
}

}  // namespace

// variant dispatch lives here; the ddu and learning cores are in their own
// translation units
namespace detail {
Trajectory forward_ddu(const TrainedPolicy& p, Rng& rng, ActiveRowCache& cache);
void backward_ddu(TrainedPolicy& p, const Trajectory& traj, long iteration);
double bound_ddu(const TrainedPolicy& p, ActiveRowCache& cache);
Trajectory forward_choice(const TrainedPolicy& p, Rng& rng, ActiveRowCache& cache);
void backward_choice(TrainedPolicy& p, const Trajectory& traj, long iteration);
double bound_choice(const TrainedPolicy& p, ActiveRowCache& cache);
Trajectory forward_learning(const TrainedPolicy& p, Rng& rng, ActiveRowCache& cache,
                            int true_model);
void backward_learning(TrainedPolicy& p, const Trajectory& traj, long iteration);
double bound_learning(const TrainedPolicy& p, ActiveRowCache& cache);
void monotone_probe(TrainedPolicy& p, std::vector<double>& previous);

Trajectory forward_core(const TrainedPolicy& p, Rng& rng, ActiveRowCache& cache, int true_model) {
    switch (p.variant) {
        case Variant::classic: return forward_classic(p, rng, cache);
        case Variant::ddu_adaptive: return forward_ddu(p, rng, cache);
        case Variant::ddu_lagrangian: return forward_choice(p, rng, cache);
        case Variant::learning: return forward_learning(p, rng, cache, true_model);
    }
    return {};
}

void backward_core(TrainedPolicy& p, const Trajectory& traj, long iteration) {
    switch (p.variant) {
        case Variant::classic: backward_classic(p, traj, iteration); break;
        case Variant::ddu_adaptive: backward_ddu(p, traj, iteration); break;
        case Variant::ddu_lagrangian: backward_choice(p, traj, iteration); break;
        case Variant::learning: backward_learning(p, traj, iteration); break;
    }
}

double bound_core(const TrainedPolicy& p, ActiveRowCache& cache) {
    switch (p.variant) {
        case Variant::classic: return bound_classic(p, cache);
        case Variant::ddu_adaptive: return bound_ddu(p, cache);
        case Variant::ddu_lagrangian: return bound_choice(p, cache);
        case Variant::learning: return bound_learning(p, cache);
    }
    return 0.0;
}

}  // namespace detail

Trajectory forward_pass(const TrainedPolicy& p, Rng& rng) {
    return detail::forward_core(p, rng, p.hints, -1);
}

void backward_pass(TrainedPolicy& p, const Trajectory& traj) {
    long iteration = p.log.empty() ? 1 : p.log.back().iteration + 1;
    detail::backward_core(p, traj, iteration);
}

double bound(const TrainedPolicy& p) { return detail::bound_core(p, p.hints); }

void train_more(TrainedPolicy& p, long iterations, Rng& rng, const TrainOptions& opts) {
    std::vector<double> probe_values;  // monotonicity probe state
    for (long k = 0; k < iterations; ++k) {
        long iteration = p.log.empty() ? 1 : p.log.back().iteration + 1;
        auto traj = detail::forward_core(p, rng, p.hints, -1);
        if (traj.truncated) ++p.truncated_paths;
        detail::backward_core(p, traj, iteration);
        p.log.push_back({iteration, detail::bound_core(p, p.hints)});
        if (p.variant != Variant::classic && iteration % 25 == 0)
            detail::monotone_probe(p, probe_values);
        if (opts.on_iteration) opts.on_iteration(p, iteration);
    }
}

namespace {

TrainedPolicy train_any(const PolicyGraph& g, Variant v, long iterations, std::uint64_t seed,
                        const TrainOptions& opts) {
    TrainedPolicy p = make_policy(g, v);
    p.seed = seed;
    Rng rng(seed);
    train_more(p, iterations, rng, opts);
    return p;
}

}  // namespace

TrainedPolicy train(const PolicyGraph& g, long iterations, std::uint64_t seed,
                    const TrainOptions& opts) {
    return train_any(g, Variant::classic, iterations, seed, opts);
}

TrainedPolicy train_ddu(const PolicyGraph& g, long iterations, std::uint64_t seed,
                        const TrainOptions& opts) {
    Variant v = g.kind == TransitionKind::choice ? Variant::ddu_lagrangian : Variant::ddu_adaptive;
    return train_any(g, v, iterations, seed, opts);
}

TrainedPolicy train_learning(const PolicyGraph& g, long iterations, std::uint64_t seed,
                             const TrainOptions& opts) {
    return train_any(g, Variant::learning, iterations, seed, opts);
}

SimulationResult simulate(const TrainedPolicy& p, long n, std::uint64_t seed, bool parallel,
                          int true_model) {
    SimulationResult res;
    res.trajectories.resize(n);
    if (parallel) {
#ifdef _OPENMP
#pragma omp parallel
        {
            ActiveRowCache cache;
#pragma omp for schedule(dynamic, 4)
            for (long r = 0; r < n; ++r) {
                Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
                res.trajectories[r] = detail::forward_core(p, rng, cache, true_model);
            }
        }
#else
        parallel = false;
#endif
    }
    if (!parallel) {
        ActiveRowCache cache;
        for (long r = 0; r < n; ++r) {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
            res.trajectories[r] = detail::forward_core(p, rng, cache, true_model);
        }
    }
    double sum = 0.0, sumsq = 0.0;
    long counted = 0;
    res.min = kInf;
    res.max = -kInf;
    for (const auto& t : res.trajectories) {
        if (t.aborted) {
            ++res.aborted;
            continue;
        }
        sum += t.total_cost;
        sumsq += t.total_cost * t.total_cost;
        res.min = std::min(res.min, t.total_cost);
        res.max = std::max(res.max, t.total_cost);
        ++counted;
    }
    if (counted > 0) {
        res.mean = sum / counted;
        if (counted > 1) {
            double var = (sumsq - counted * res.mean * res.mean) / (counted - 1);
            res.stderr_ = std::sqrt(std::max(var, 0.0) / counted);
        }
    } else {
        res.min = res.max = 0.0;
    }
    return res;
}

}  // namespace sddp
