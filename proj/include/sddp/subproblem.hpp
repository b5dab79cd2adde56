#pragma once

#include <map>
#include <span>
#include <vector>

#include "sddp/cuts.hpp"
#include "sddp/mip.hpp"

namespace sddp {

// Everything assembly needs; engines hold the owning objects.
struct ModelView {
    const PolicyGraph* g = nullptr;
    const GraphIndex* ix = nullptr;
    const CutPool* pool = nullptr;
    double big_m = 0.0;
    double m_theta = 0.0;
};

/// Pooled cut rows in a flat, allocation-light layout.  Every row reads
/// "sum coeffs >= rhs" over the assembled program's columns and can be
/// activated on demand.
struct CutCatalog {
    std::vector<int> offsets{0};
    std::vector<std::pair<int, double>> entries;
    std::vector<double> rhs;

    void push(int col, double coeff) {
        if (coeff != 0.0) entries.push_back({col, coeff});
    }
    void end_row(double r) {
        rhs.push_back(r);
        offsets.push_back(static_cast<int>(entries.size()));
    }
    int size() const { return static_cast<int>(rhs.size()); }
    double violation(int row, std::span<const double> primal) const {
        double lhs = 0.0;
        for (int k = offsets[row]; k < offsets[row + 1]; ++k)
            lhs += entries[k].second * primal[entries[k].first];
        return rhs[row] - lhs;
    }
};

/// A stage program plus the metadata engines need to read it back.  The base
/// program prog carries template rows, fishing rows and structural floors; the
/// pooled cut rows live in the catalog and are activated lazily.
struct AssembledProgram {
    MixedBinaryProgram prog;
    CutCatalog cuts;
    std::vector<int> fish_x, fish_y;            // fishing row indices
    std::vector<int> state_in_vars, state_out_vars;
    std::vector<int> y_vars;                    // continuous option vector (affine/learning)
    std::vector<int> theta_vars;                // cost-to-go variables (theta / mu,Theta)
    std::vector<int> choice_vars;               // y_d binaries (matrix choice)
    std::vector<std::vector<int>> z_vars;       // per child slot: option-selection binaries
    std::vector<std::pair<int, double>> stage_cost_terms;  // min orientation
    double stage_cost_offset = 0.0;

    double stage_cost(std::span<const double> primal) const {
        double c = stage_cost_offset;
        for (auto& [j, w] : stage_cost_terms) c += w * primal[j];
        return c;
    }
    /// The complete program with every pooled cut appended as an explicit row.
    MixedBinaryProgram materialized() const;
};

// Classic subproblem SP_i(xbar, omega) with plain cuts and fishing rows.
AssembledProgram assemble_subproblem(const ModelView& mv, int node, int omega,
                                     std::span<const double> xbar);

// Just the stage template with omega injected; no cuts, no fishing.  Used for
// cost-range probing when sizing the big-M floor.
AssembledProgram assemble_stage_only(const ModelView& mv, int node, int omega);

// Decision-dependent, affine response: forward (exact, selection binaries) and
// backward (split-variable convex relaxation).
AssembledProgram assemble_sp_ddu(const ModelView& mv, int node, int omega,
                                 std::span<const double> xbar, int ybar_option);
AssembledProgram assemble_relaxation_ddu(const ModelView& mv, int node, int omega,
                                         std::span<const double> xbar,
                                         std::span<const double> ybar);

// Matrix choice: exact mixed-binary subproblem with per-realization cuts.
AssembledProgram assemble_sp_matrixchoice(const ModelView& mv, int node, int omega,
                                          std::span<const double> xbar, bool with_fishing = true);

// Belief-interpolated subproblems over an ambiguity set.
AssembledProgram assemble_sp_belief(const ModelView& mv, int set, int omega,
                                    std::span<const double> xbar, int ybar_option,
                                    std::span<const double> belief);
AssembledProgram assemble_relaxation_belief(const ModelView& mv, int set, int omega,
                                            std::span<const double> xbar,
                                            std::span<const double> ybar,
                                            std::span<const double> belief);

// Lazy-row solving.  Hints persist the active cut rows between related solves;
// returned solutions are exact for the complete program (inactive rows are
// slack with zero duals, verified by a full violation scan).
struct ActiveRows {
    std::vector<int> rows;
};
using ActiveRowCache = std::map<std::tuple<int, int, int>, ActiveRows>;  // (kind, node/set, omega)

LpSolution solve_lazy_lp(const AssembledProgram& ap, ActiveRows* hint = nullptr);
MilpSolution solve_lazy_milp(const AssembledProgram& ap, ActiveRows* hint = nullptr);

struct LagrangianResult {
    double value = 0.0;           // valid lower bound on the fished MILP value
    std::vector<double> lambda;
    int iterations = 0;
    long inner_milps = 0;
};

/// Kelley cutting-plane Lagrangian dual of the fishing constraint for the
/// matrix-choice subproblem at (node, omega, xbar).
LagrangianResult lagrangian_dual(const ModelView& mv, int node, int omega,
                                 std::span<const double> xbar, double lambda_box,
                                 int max_iters = 20, ActiveRows* hint = nullptr);

// Bayes updates over candidate models, at the ambiguity-set level.  from_set
// == -1 denotes the root transition (root arcs already carry b_m phi^m).
std::vector<double> belief_update(const PolicyGraph& g, const GraphIndex& ix,
                                  std::span<const double> b, int from_set, int to_set, int omega);
std::vector<double> belief_update_dd(const PolicyGraph& g, const GraphIndex& ix,
                                     std::span<const double> y, std::span<const double> b,
                                     int from_set, int to_set, int omega);

}  // namespace sddp
