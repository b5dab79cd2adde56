#pragma once

#include <vector>

#include "sddp/lp.hpp"

namespace sddp {

inline constexpr int kBinaryCap = 64;
inline constexpr double kMilpGap = 1e-8;  // absolute optimality gap
inline constexpr double kIntTol = 1e-6;

struct MixedBinaryProgram {
    LinearProgram lp;
    std::vector<int> binaries;  // variable indices restricted to {0, 1}
};

struct MilpSolution {
    SolveStatus status = SolveStatus::optimal;
    double objective = 0.0;
    std::vector<double> primal;
    long nodes_explored = 0;

    double value(const LinearProgram& lp, const std::string& var) const {
        int j = lp.variable_index(var);
        if (j < 0) throw ValidationError("unknown variable: " + var);
        return primal[j];
    }
};

/// LP-based branch and bound: most-fractional branching, depth-first with
/// best-bound reordering every 100 nodes, absolute gap 1e-8.
MilpSolution solve_milp(const MixedBinaryProgram& p);

}  // namespace sddp
