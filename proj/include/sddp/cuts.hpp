#pragma once

#include <vector>

#include "sddp/graph.hpp"

namespace sddp {

// All cut data lives in minimization orientation.

struct PlainCut {
    double alpha = 0.0;
    std::vector<double> beta;  // over the node's outgoing state
    long iteration = 0;
};

// Decision-dependent cut (alpha, beta, gamma) for a child node: bounds
// E_omega[relaxed value(x', y')] from below.
struct OptionCut {
    double alpha = 0.0;
    std::vector<double> beta;
    std::vector<double> gamma;
    long iteration = 0;
};

// Per-realization cut for the matrix-choice formulation.
struct RealizationCut {
    double alpha = 0.0;
    std::vector<double> beta;
    long iteration = 0;
};

// Belief-anchored block generated at one node visit: one (alpha, beta, gamma)
// triple per (child slot, model), plus the anchor belief.
struct BeliefBlock {
    std::vector<double> anchor;
    std::vector<OptionCut> triples;  // laid out [slot * num_models + m]
    long iteration = 0;
};

struct NodePool {
    std::vector<PlainCut> plain;
    std::vector<OptionCut> option_cuts;
    std::vector<std::vector<RealizationCut>> per_omega;  // [omega][k]
};

struct CutPool {
    std::vector<NodePool> per_node;
    std::vector<std::vector<BeliefBlock>> per_set;  // belief blocks, by ambiguity set
    long cuts_added = 0;
};

enum class Variant { classic, ddu_adaptive, ddu_lagrangian, learning };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

/// Installs the iteration-0 floor at every pool location the variant reads:
/// plain/option/realization cuts at -M, and for learning one block per model
/// anchored at a simplex vertex (so every query belief interpolates).
CutPool init_pool(const PolicyGraph& g, const GraphIndex& ix, Variant variant, double big_m);

}  // namespace sddp
