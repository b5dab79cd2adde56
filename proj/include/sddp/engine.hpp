#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sddp/rng.hpp"
#include "sddp/subproblem.hpp"

namespace sddp {

struct TrajectoryStep {
    int node = -1;  // clone node; for learning runs the observed ambiguity set's lead member
    int set = -1;   // ambiguity set id (learning)
    int omega = -1;
    std::vector<double> x_in, x_out;
    double stage_cost = 0.0;    // minimization orientation
    int option_in = -1;         // option in effect on arrival / chosen matrix d
    std::vector<int> planned;   // per child slot: planned option index
    std::vector<double> belief; // learning: belief after the arrival update
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    double total_cost = 0.0;
    bool truncated = false;
    bool aborted = false;  // impossible observation under the believed models
};

struct IterationLog {
    long iteration = 0;
    double bound = 0.0;  // minimization orientation
};

struct TrainedPolicy {
    PolicyGraph graph;
    GraphIndex index;
    Variant variant = Variant::classic;
    CutPool pool;
    double big_m = 0.0, m_theta = 0.0;
    double gamma = 0.0;
    int horizon_bound = 1;
    int safety_cap = 0;
    std::uint64_t seed = 0;
    std::vector<IterationLog> log;
    long sandwich_checks = 0, sandwich_violations = 0;
    long monotone_checks = 0, monotone_violations = 0;
    long truncated_paths = 0;
    mutable ActiveRowCache hints;  // derived solver state, never serialized

    ModelView view() const { return {&graph, &index, &pool, big_m, m_theta}; }
};

struct TrainOptions {
    std::function<void(const TrainedPolicy&, long)> on_iteration;
};

/// Validates the graph, computes the big-M floor, and installs iteration-0
/// cuts.  The bound of the returned policy is the -M floor.
TrainedPolicy make_policy(const PolicyGraph& g, Variant variant);

TrainedPolicy train(const PolicyGraph& g, long iterations, std::uint64_t seed,
                    const TrainOptions& opts = {});
TrainedPolicy train_ddu(const PolicyGraph& g, long iterations, std::uint64_t seed,
                        const TrainOptions& opts = {});
TrainedPolicy train_learning(const PolicyGraph& g, long iterations, std::uint64_t seed,
                             const TrainOptions& opts = {});

/// Runs additional forward/backward iterations in place.
void train_more(TrainedPolicy& p, long iterations, Rng& rng, const TrainOptions& opts = {});

/// Deterministic root bound (minimization orientation): solves each root-child
/// subproblem once under the current cut pools.
double bound(const TrainedPolicy& p);

Trajectory forward_pass(const TrainedPolicy& p, Rng& rng);
void backward_pass(TrainedPolicy& p, const Trajectory& traj);

struct SimulationResult {
    std::vector<Trajectory> trajectories;
    double mean = 0.0, stderr_ = 0.0, min = 0.0, max = 0.0;  // minimization orientation
    long aborted = 0;
};

/// Independent seeded forward passes with frozen cuts.  Replication r draws
/// its stream from derive_seed(seed, r), so results do not depend on the
/// thread count; parallel=false runs the serial reference path.
/// true_model >= 0 simulates that model's dynamics while the agent still
/// updates beliefs (mismatch test mode); trajectories hitting an impossible
/// observation are aborted and flagged.
SimulationResult simulate(const TrainedPolicy& p, long n, std::uint64_t seed,
                          bool parallel = true, int true_model = -1);

std::string serialize_cuts(const TrainedPolicy& p);
TrainedPolicy parse_cuts(const PolicyGraph& g, const std::string& json_text);
void save_cuts(const TrainedPolicy& p, const std::string& path);
TrainedPolicy load_cuts(const PolicyGraph& g, const std::string& path);

double compute_big_m(const PolicyGraph& g, const GraphIndex& ix, int horizon_bound);

namespace detail {
Trajectory forward_core(const TrainedPolicy& p, Rng& rng, ActiveRowCache& cache, int true_model);
void backward_core(TrainedPolicy& p, const Trajectory& traj, long iteration);
double bound_core(const TrainedPolicy& p, ActiveRowCache& cache);
ActiveRows* hint(ActiveRowCache& cache, int kind, int node, int omega);
}  // namespace detail

}  // namespace sddp
