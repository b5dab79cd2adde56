#include "sddp/mip.hpp"

#include <algorithm>
#include <cmath>

namespace sddp {

namespace {

struct BbNode {
    std::vector<std::pair<int, int>> fixes;  // (binary slot, value)
    double bound;                            // parent LP relaxation value
};

}  // namespace

MilpSolution solve_milp(const MixedBinaryProgram& p) {
    if (static_cast<int>(p.binaries.size()) > kBinaryCap)
        throw ConfigError("binary count exceeds cap of " + std::to_string(kBinaryCap));
    for (int j : p.binaries) {
        if (j < 0 || j >= p.lp.num_variables())
            throw ValidationError("binary designation references unknown variable");
        const auto& v = p.lp.variable(j);
        if (v.lower < -1e-9 || v.upper > 1.0 + 1e-9 || v.lower > v.upper + 1e-12)
            throw ValidationError("binary variable " + v.name + " has bounds outside [0,1]");
    }

    LinearProgram work = p.lp;
    const double sgn = work.sense == Sense::maximize ? -1.0 : 1.0;
    std::vector<std::pair<double, double>> original;
    original.reserve(p.binaries.size());
    for (int j : p.binaries) original.push_back({work.variable(j).lower, work.variable(j).upper});

    MilpSolution out;
    double incumbent = kInf;  // in minimization orientation
    std::vector<double> best_primal;

    std::vector<BbNode> open;
    open.push_back({{}, -kInf});
    long explored = 0;

    auto apply = [&](const BbNode& node) {
        for (size_t s = 0; s < p.binaries.size(); ++s)
            work.set_bounds(p.binaries[s], original[s].first, original[s].second);
        for (auto& [slot, val] : node.fixes)
            work.set_bounds(p.binaries[slot], static_cast<double>(val), static_cast<double>(val));
    };

    while (!open.empty()) {
        BbNode node = std::move(open.back());
        open.pop_back();
        if (node.bound >= incumbent - kMilpGap) continue;

        apply(node);
        auto rel = solve_lp(work);
        ++explored;
        if (rel.status == SolveStatus::infeasible) continue;
        if (rel.status == SolveStatus::unbounded) {
            if (explored == 1) {
                out.status = SolveStatus::unbounded;
                out.nodes_explored = explored;
                return out;
            }
            throw SolveError("unbounded branch-and-bound node below a bounded root");
        }
        double value = sgn * rel.objective;
        if (value >= incumbent - kMilpGap) continue;

        // most fractional binary, ties to the lowest slot
        int branch = -1;
        double best_frac = kIntTol;
        for (size_t s = 0; s < p.binaries.size(); ++s) {
            double x = rel.primal[p.binaries[s]];
            double dist = std::min(std::fabs(x), std::fabs(1.0 - x));
            if (dist > best_frac + 1e-15) {
                best_frac = dist;
                branch = static_cast<int>(s);
            }
        }
        if (branch < 0) {
            incumbent = value;
            best_primal = rel.primal;
            continue;
        }

        double x = rel.primal[p.binaries[branch]];
        int near = x > 0.5 ? 1 : 0;
        BbNode far_node{node.fixes, value};
        far_node.fixes.push_back({branch, 1 - near});
        BbNode near_node{std::move(node.fixes), value};
        near_node.fixes.push_back({branch, near});
        open.push_back(std::move(far_node));
        open.push_back(std::move(near_node));  // depth-first explores the near side

        if (explored % 100 == 0) {
            // best-bound reordering: put the most promising node on top
            std::stable_sort(open.begin(), open.end(),
                             [](const BbNode& a, const BbNode& b) { return a.bound > b.bound; });
        }
    }

    out.nodes_explored = explored;
    if (!best_primal.empty()) {
        out.status = SolveStatus::optimal;
        out.objective = sgn == 1.0 ? incumbent : -incumbent;
        out.primal = std::move(best_primal);
        for (int j : p.binaries) out.primal[j] = std::round(out.primal[j]);
    } else {
        out.status = SolveStatus::infeasible;
    }
    return out;
}

}  // namespace sddp
