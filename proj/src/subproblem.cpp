#include "sddp/subproblem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sddp {

namespace {

double sense_sign(const PolicyGraph& g) { return g.sense == Sense::maximize ? -1.0 : 1.0; }

std::string tag(const std::string& base, int a) { return base + std::to_string(a); }
std::string tag2(const std::string& base, int a, int b) {
    return base + std::to_string(a) + "_" + std::to_string(b);
}

// Template program for (node, omega) with injections applied; fishing rows pin
// the incoming state.  Engine-added names carry the reserved "__" prefix.
void build_stage(const ModelView& mv, int node, int omega, std::span<const double> xbar,
                 bool fishing, AssembledProgram& ap) {
    const auto& g = *mv.g;
    const auto& nd = g.nodes[node];
    const double sgn = sense_sign(g);
    auto& lp = ap.prog.lp;

    for (const auto& tv : nd.stage.vars)
        lp.add_variable(tv.name, tv.lower, tv.upper, sgn * tv.objective);

    // realization injections on bounds and objective coefficients
    std::map<std::string, double> rhs_inject;
    for (const auto& inj : nd.stage.injections) {
        const double val = inj.per_omega[omega];
        if (inj.field == InjectField::rhs) {
            rhs_inject[inj.target] = val;
            continue;
        }
        int v = lp.variable_index(inj.target);
        const auto& var = lp.variable(v);
        switch (inj.field) {
            case InjectField::lower: lp.set_bounds(v, val, var.upper); break;
            case InjectField::upper: lp.set_bounds(v, var.lower, val); break;
            case InjectField::objective: lp.set_objective_coeff(v, sgn * val); break;
            default: break;
        }
    }
    for (const auto& row : nd.stage.rows) {
        std::vector<std::pair<int, double>> coeffs;
        coeffs.reserve(row.coeffs.size());
        for (auto& [vn, c] : row.coeffs) coeffs.push_back({lp.variable_index(vn), c});
        auto it = rhs_inject.find(row.name);
        lp.add_constraint(row.name, std::move(coeffs), row.sense,
                          it == rhs_inject.end() ? row.rhs : it->second);
    }
    lp.set_objective_offset(sgn * nd.stage.objective_offset);
    ap.stage_cost_offset = sgn * nd.stage.objective_offset;
    for (int j = 0; j < lp.num_variables(); ++j)
        if (lp.variable(j).objective != 0.0)
            ap.stage_cost_terms.push_back({j, lp.variable(j).objective});

    for (const auto& sn : nd.stage.state_in) ap.state_in_vars.push_back(lp.variable_index(sn));
    for (const auto& sn : nd.stage.state_out) ap.state_out_vars.push_back(lp.variable_index(sn));

    if (fishing) {
        if (xbar.size() != ap.state_in_vars.size())
            throw SolveError("state dimension mismatch at node " + nd.name);
        for (size_t k = 0; k < ap.state_in_vars.size(); ++k)
            ap.fish_x.push_back(lp.add_constraint(tag("__fish_x", static_cast<int>(k)),
                                                  {{ap.state_in_vars[k], 1.0}}, RowSense::eq,
                                                  xbar[k]));
    }
}

// Continuous y vector with fishing rows y = ybar and the C'(y) cost.
void add_option_vector(const ModelView& mv, int node, std::span<const double> ybar,
                       AssembledProgram& ap) {
    const auto& g = *mv.g;
    const auto& nd = g.nodes[node];
    const double sgn = sense_sign(g);
    const int q = g.option_dim();
    auto& lp = ap.prog.lp;
    for (int k = 0; k < q; ++k) {
        double c = nd.stage.option_cost.empty() ? 0.0 : sgn * nd.stage.option_cost[k];
        int v = lp.add_variable(tag("__y", k), -kInf, kInf, c);
        ap.y_vars.push_back(v);
        if (c != 0.0) ap.stage_cost_terms.push_back({v, c});
        ap.fish_y.push_back(
            lp.add_constraint(tag("__fish_y", k), {{v, 1.0}}, RowSense::eq, ybar[k]));
    }
}

// Selection binaries z_{slot,e} with sum-to-one rows.
void add_selection(const PolicyGraph& g, size_t nslots, AssembledProgram& ap) {
    auto& lp = ap.prog.lp;
    const int ne = g.num_options();
    ap.z_vars.resize(nslots);
    for (size_t slot = 0; slot < nslots; ++slot) {
        std::vector<std::pair<int, double>> pick;
        for (int e = 0; e < ne; ++e) {
            int v = lp.add_variable(tag2("__z", static_cast<int>(slot), e), 0.0, 1.0, 0.0);
            ap.z_vars[slot].push_back(v);
            ap.prog.binaries.push_back(v);
            pick.push_back({v, 1.0});
        }
        lp.add_constraint(tag("__pick", static_cast<int>(slot)), std::move(pick), RowSense::eq,
                          1.0);
    }
}

int find_arc(const PolicyGraph& g, const GraphIndex& ix, int from, int to) {
    for (int a : ix.out_arcs[from])
        if (g.arcs[a].to == to) return a;
    return -1;
}

// Shared split-variable machinery of the convex relaxations: copy weights
// w_e, state copies x'_e in w_e [l, u], and per-slot convex multipliers
// v_{slot,e,f} with sum_f v = w_e (so y'_{slot,e} = sum_f v y_f).
struct SplitVars {
    std::vector<int> w;
    std::vector<std::vector<int>> xc;               // [e][dim]
    std::vector<std::vector<std::vector<int>>> v;   // [slot][e][f]
};

SplitVars add_split(const PolicyGraph& g, size_t nslots, AssembledProgram& ap) {
    auto& lp = ap.prog.lp;
    const int ne = g.num_options();
    const int dim = static_cast<int>(ap.state_out_vars.size());
    SplitVars sv;
    sv.w.resize(ne);
    std::vector<std::pair<int, double>> wsum;
    for (int e = 0; e < ne; ++e) {
        sv.w[e] = lp.add_variable(tag("__w", e), 0.0, 1.0, 0.0);
        wsum.push_back({sv.w[e], 1.0});
    }
    lp.add_constraint("__wsum", std::move(wsum), RowSense::eq, 1.0);
    sv.xc.assign(ne, std::vector<int>(dim, -1));
    for (int d = 0; d < dim; ++d) {
        const auto& xv = lp.variable(ap.state_out_vars[d]);
        const double lo = xv.lower, hi = xv.upper;
        std::vector<std::pair<int, double>> split{{ap.state_out_vars[d], 1.0}};
        for (int e = 0; e < ne; ++e) {
            sv.xc[e][d] = lp.add_variable(tag2("__xc", e, d), -kInf, kInf, 0.0);
            split.push_back({sv.xc[e][d], -1.0});
            if (std::isfinite(lo))
                lp.add_constraint(tag2("__xlo", e, d), {{sv.xc[e][d], 1.0}, {sv.w[e], -lo}},
                                  RowSense::ge, 0.0);
            if (std::isfinite(hi))
                lp.add_constraint(tag2("__xhi", e, d), {{sv.xc[e][d], 1.0}, {sv.w[e], -hi}},
                                  RowSense::le, 0.0);
        }
        lp.add_constraint(tag("__xsplit", d), std::move(split), RowSense::eq, 0.0);
    }
    sv.v.resize(nslots);
    for (size_t slot = 0; slot < nslots; ++slot) {
        sv.v[slot].assign(ne, std::vector<int>(ne, -1));
        for (int e = 0; e < ne; ++e) {
            std::vector<std::pair<int, double>> vs{{sv.w[e], -1.0}};
            for (int f = 0; f < ne; ++f) {
                sv.v[slot][e][f] = lp.add_variable("__v" + std::to_string(slot) + "_" +
                                                       std::to_string(e) + "_" + std::to_string(f),
                                                   0.0, 1.0, 0.0);
                vs.push_back({sv.v[slot][e][f], 1.0});
            }
            lp.add_constraint(tag2("__vsum", static_cast<int>(slot), e), std::move(vs),
                              RowSense::eq, 0.0);
        }
    }
    return sv;
}

}  // namespace

MixedBinaryProgram AssembledProgram::materialized() const {
    MixedBinaryProgram full = prog;
    for (int s = 0; s < cuts.size(); ++s) {
        std::vector<std::pair<int, double>> coeffs;
        for (int k = cuts.offsets[s]; k < cuts.offsets[s + 1]; ++k)
            coeffs.push_back(cuts.entries[k]);
        full.lp.add_constraint("__cut" + std::to_string(s), std::move(coeffs), RowSense::ge,
                               cuts.rhs[s]);
    }
    return full;
}

AssembledProgram assemble_subproblem(const ModelView& mv, int node, int omega,
                                     std::span<const double> xbar) {
    const auto& ix = *mv.ix;
    AssembledProgram ap;
    build_stage(mv, node, omega, xbar, true, ap);
    auto& lp = ap.prog.lp;
    const auto& children = ix.children[node];
    if (children.empty()) return ap;
    int th = lp.add_variable("__theta", -mv.big_m, kInf, 1.0);
    ap.theta_vars = {th};
    const auto& cuts = mv.pool->per_node[node].plain;
    for (const auto& cut : cuts) {
        ap.cuts.push(th, 1.0);
        for (size_t d = 0; d < ap.state_out_vars.size(); ++d)
            ap.cuts.push(ap.state_out_vars[d], -cut.beta[d]);
        ap.cuts.end_row(cut.alpha);
    }
    return ap;
}

AssembledProgram assemble_stage_only(const ModelView& mv, int node, int omega) {
    AssembledProgram ap;
    build_stage(mv, node, omega, {}, false, ap);
    return ap;
}

AssembledProgram assemble_sp_ddu(const ModelView& mv, int node, int omega,
                                 std::span<const double> xbar, int ybar_option) {
    const auto& g = *mv.g;
    const auto& ix = *mv.ix;
    if (ybar_option < 0 || ybar_option >= g.num_options())
        throw ConfigError("option index out of range");
    auto ybar = g.option_vector(ybar_option);

    AssembledProgram ap;
    build_stage(mv, node, omega, xbar, true, ap);
    add_option_vector(mv, node, ybar, ap);
    auto& lp = ap.prog.lp;
    const auto& children = ix.children[node];
    if (children.empty()) return ap;
    add_selection(g, children.size(), ap);
    const int ne = g.num_options();
    std::vector<double> gy(static_cast<size_t>(ne));  // scratch: gamma'y_e per option
    for (size_t slot = 0; slot < children.size(); ++slot) {
        int th = lp.add_variable(tag("__theta", static_cast<int>(slot)), -mv.big_m, kInf, 1.0);
        ap.theta_vars.push_back(th);
        const Arc& arc = g.arcs[find_arc(g, ix, node, children[slot])];
        const double phi = std::max(arc_phi(arc, ybar), 0.0);
        const auto& cuts = mv.pool->per_node[children[slot]].option_cuts;
        for (const auto& cut : cuts) {
            // theta_slot >= phi(ybar) (alpha + beta'x' + gamma'y'_slot)
            ap.cuts.push(th, 1.0);
            for (size_t d = 0; d < ap.state_out_vars.size(); ++d)
                ap.cuts.push(ap.state_out_vars[d], -phi * cut.beta[d]);
            for (int e = 0; e < ne; ++e) {
                auto ye = g.option_vector(e);
                double s = 0.0;
                for (size_t d = 0; d < ye.size(); ++d) s += cut.gamma[d] * ye[d];
                ap.cuts.push(ap.z_vars[slot][e], -phi * s);
            }
            ap.cuts.end_row(phi * cut.alpha);
        }
    }
    return ap;
}

AssembledProgram assemble_relaxation_ddu(const ModelView& mv, int node, int omega,
                                         std::span<const double> xbar,
                                         std::span<const double> ybar) {
    const auto& g = *mv.g;
    const auto& ix = *mv.ix;
    AssembledProgram ap;
    build_stage(mv, node, omega, xbar, true, ap);
    add_option_vector(mv, node, ybar, ap);
    auto& lp = ap.prog.lp;
    const auto& children = ix.children[node];
    if (children.empty()) return ap;
    const int ne = g.num_options();
    const int q = g.option_dim();
    const int dim = static_cast<int>(ap.state_out_vars.size());
    SplitVars sv = add_split(g, children.size(), ap);

    for (size_t slot = 0; slot < children.size(); ++slot) {
        int th = lp.add_variable(tag("__theta", static_cast<int>(slot)), -mv.big_m, kInf, 1.0);
        ap.theta_vars.push_back(th);
        const Arc& arc = g.arcs[find_arc(g, ix, node, children[slot])];
        std::vector<double> phie(ne);
        for (int e = 0; e < ne; ++e) phie[e] = std::max(arc_phi(arc, g.option_vector(e)), 0.0);
        const auto& cuts = mv.pool->per_node[children[slot]].option_cuts;
        for (const auto& cut : cuts) {
            // theta - sum_e phi(y_e)(beta'xc_e + gamma'y'_e) - alpha r'y >= alpha phi0
            ap.cuts.push(th, 1.0);
            for (int e = 0; e < ne; ++e) {
                if (phie[e] == 0.0) continue;
                for (int d = 0; d < dim; ++d) ap.cuts.push(sv.xc[e][d], -phie[e] * cut.beta[d]);
                for (int f = 0; f < ne; ++f) {
                    auto yf = g.option_vector(f);
                    double s = 0.0;
                    for (size_t d = 0; d < yf.size(); ++d) s += cut.gamma[d] * yf[d];
                    ap.cuts.push(sv.v[slot][e][f], -phie[e] * s);
                }
            }
            for (int kk = 0; kk < q; ++kk) {
                double r = kk < static_cast<int>(arc.response.size()) ? arc.response[kk] : 0.0;
                ap.cuts.push(ap.y_vars[kk], -cut.alpha * r);
            }
            ap.cuts.end_row(cut.alpha * arc.phi0);
        }
    }
    return ap;
}

AssembledProgram assemble_sp_matrixchoice(const ModelView& mv, int node, int omega,
                                          std::span<const double> xbar, bool with_fishing) {
    const auto& g = *mv.g;
    const auto& ix = *mv.ix;
    AssembledProgram ap;
    build_stage(mv, node, omega, xbar, with_fishing, ap);
    auto& lp = ap.prog.lp;
    const auto& children = ix.children[node];
    if (children.empty()) return ap;
    const double sgn = sense_sign(g);
    const auto& nd = g.nodes[node];
    const int nd_opts = static_cast<int>(g.option_names.size());
    std::vector<std::pair<int, double>> choose;
    for (int d = 0; d < nd_opts; ++d) {
        double c = nd.stage.choice_cost.empty() ? 0.0 : sgn * nd.stage.choice_cost[d];
        int v = lp.add_variable(tag("__d", d), 0.0, 1.0, c);
        ap.choice_vars.push_back(v);
        ap.prog.binaries.push_back(v);
        if (c != 0.0) ap.stage_cost_terms.push_back({v, c});
        choose.push_back({v, 1.0});
    }
    lp.add_constraint("__choose", std::move(choose), RowSense::eq, 1.0);

    int big_theta = lp.add_variable("__Theta", -(mv.big_m + mv.m_theta), kInf, 1.0);
    ap.theta_vars.push_back(big_theta);
    std::vector<std::vector<int>> theta(children.size());
    for (size_t slot = 0; slot < children.size(); ++slot) {
        theta[slot].resize(g.nodes[children[slot]].support.size());
        for (size_t o = 0; o < theta[slot].size(); ++o)
            theta[slot][o] = lp.add_variable(
                tag2("__theta", static_cast<int>(slot), static_cast<int>(o)), -mv.big_m, kInf,
                0.0);
    }
    // Theta >= sum_{j,w} phi^d P theta_{j,w} - M_Theta (1 - y_d)
    for (int d = 0; d < nd_opts; ++d) {
        std::vector<std::pair<int, double>> coeffs{{big_theta, 1.0},
                                                   {ap.choice_vars[d], -mv.m_theta}};
        for (size_t slot = 0; slot < children.size(); ++slot) {
            const Arc& arc = g.arcs[find_arc(g, ix, node, children[slot])];
            double phi = arc_phi_choice(arc, d);
            if (phi <= 0.0) continue;
            const auto& child = g.nodes[children[slot]];
            for (size_t o = 0; o < child.pmf.size(); ++o)
                if (child.pmf[o] > 0.0) coeffs.push_back({theta[slot][o], -phi * child.pmf[o]});
        }
        lp.add_constraint(tag("__theta_link", d), std::move(coeffs), RowSense::ge, -mv.m_theta);
    }
    for (size_t slot = 0; slot < children.size(); ++slot) {
        const auto& pools = mv.pool->per_node[children[slot]].per_omega;
        for (size_t o = 0; o < pools.size(); ++o) {
            for (const auto& cut : pools[o]) {
                ap.cuts.push(theta[slot][o], 1.0);
                for (size_t d = 0; d < ap.state_out_vars.size(); ++d)
                    ap.cuts.push(ap.state_out_vars[d], -cut.beta[d]);
                ap.cuts.end_row(cut.alpha);
            }
        }
    }
    return ap;
}

AssembledProgram assemble_sp_belief(const ModelView& mv, int set, int omega,
                                    std::span<const double> xbar, int ybar_option,
                                    std::span<const double> belief) {
    const auto& g = *mv.g;
    const auto& ix = *mv.ix;
    int member0 = -1;
    for (int m = 0; m < g.num_models && member0 < 0; ++m) member0 = ix.set_member[set][m];
    if (member0 < 0) throw SolveError("empty ambiguity set");
    auto ybar = g.option_vector(ybar_option);

    AssembledProgram ap;
    build_stage(mv, member0, omega, xbar, true, ap);
    add_option_vector(mv, member0, ybar, ap);
    auto& lp = ap.prog.lp;
    const auto& slots = ix.set_children[set];
    if (slots.empty()) return ap;
    add_selection(g, slots.size(), ap);
    const int M = g.num_models;
    const int ne = g.num_options();
    std::vector<int> mu(M);
    for (int m = 0; m < M; ++m)
        mu[m] = lp.add_variable(tag("__mu", m), -kInf, kInf, belief[m]);
    int big_theta = lp.add_variable("__Theta", -kInf, kInf, 1.0);
    ap.theta_vars = mu;
    ap.theta_vars.push_back(big_theta);

    std::vector<double> phi(slots.size() * M, 0.0);
    for (size_t slot = 0; slot < slots.size(); ++slot)
        for (int m = 0; m < M; ++m) {
            int a = ix.set_arc[set][slot][m];
            if (a >= 0) phi[slot * M + m] = std::max(arc_phi(g.arcs[a], ybar), 0.0);
        }

    const auto& blocks = mv.pool->per_set[set];
    const int dim = static_cast<int>(ap.state_out_vars.size());
    std::vector<double> xcoef(dim), zcoef(slots.size() * ne);
    auto emit_block = [&](const BeliefBlock& block, bool base) {
        // b_k'mu + Theta >= sum_{m,slot} b_{m,k} phi^m (alpha + beta'x' + gamma'y'_slot)
        double rhs = 0.0;
        std::fill(xcoef.begin(), xcoef.end(), 0.0);
        std::fill(zcoef.begin(), zcoef.end(), 0.0);
        for (size_t slot = 0; slot < slots.size(); ++slot) {
            for (int m = 0; m < M; ++m) {
                const double c = block.anchor[m] * phi[slot * M + m];
                if (c == 0.0) continue;
                const auto& t = block.triples[slot * M + m];
                rhs += c * t.alpha;
                for (int d = 0; d < dim; ++d) xcoef[d] += c * t.beta[d];
                for (int e = 0; e < ne; ++e) {
                    auto ye = g.option_vector(e);
                    double s = 0.0;
                    for (size_t d = 0; d < ye.size(); ++d) s += t.gamma[d] * ye[d];
                    zcoef[slot * ne + e] += c * s;
                }
            }
        }
        if (base) {
            std::vector<std::pair<int, double>> coeffs;
            for (int m = 0; m < M; ++m)
                if (block.anchor[m] != 0.0) coeffs.push_back({mu[m], block.anchor[m]});
            coeffs.push_back({big_theta, 1.0});
            for (int d = 0; d < dim; ++d)
                if (xcoef[d] != 0.0) coeffs.push_back({ap.state_out_vars[d], -xcoef[d]});
            for (size_t slot = 0; slot < slots.size(); ++slot)
                for (int e = 0; e < ne; ++e)
                    if (zcoef[slot * ne + e] != 0.0)
                        coeffs.push_back({ap.z_vars[slot][e], -zcoef[slot * ne + e]});
            lp.add_constraint(tag("__blk", lp.num_constraints()), std::move(coeffs), RowSense::ge,
                              rhs);
        } else {
            for (int m = 0; m < M; ++m) ap.cuts.push(mu[m], block.anchor[m]);
            ap.cuts.push(big_theta, 1.0);
            for (int d = 0; d < dim; ++d) ap.cuts.push(ap.state_out_vars[d], -xcoef[d]);
            for (size_t slot = 0; slot < slots.size(); ++slot)
                for (int e = 0; e < ne; ++e)
                    ap.cuts.push(ap.z_vars[slot][e], -zcoef[slot * ne + e]);
            ap.cuts.end_row(rhs);
        }
    };
    // vertex-anchored floors stay in the base so the interpolation is bounded
    for (const auto& block : blocks) emit_block(block, block.iteration == 0);
    return ap;
}

AssembledProgram assemble_relaxation_belief(const ModelView& mv, int set, int omega,
                                            std::span<const double> xbar,
                                            std::span<const double> ybar,
                                            std::span<const double> belief) {
    const auto& g = *mv.g;
    const auto& ix = *mv.ix;
    int member0 = -1;
    for (int m = 0; m < g.num_models && member0 < 0; ++m) member0 = ix.set_member[set][m];
    if (member0 < 0) throw SolveError("empty ambiguity set");

    AssembledProgram ap;
    build_stage(mv, member0, omega, xbar, true, ap);
    add_option_vector(mv, member0, ybar, ap);
    auto& lp = ap.prog.lp;
    const auto& slots = ix.set_children[set];
    if (slots.empty()) return ap;
    const int M = g.num_models;
    const int ne = g.num_options();
    const int q = g.option_dim();
    const int dim = static_cast<int>(ap.state_out_vars.size());
    SplitVars sv = add_split(g, slots.size(), ap);
    std::vector<int> mu(M);
    for (int m = 0; m < M; ++m)
        mu[m] = lp.add_variable(tag("__mu", m), -kInf, kInf, belief[m]);
    int big_theta = lp.add_variable("__Theta", -kInf, kInf, 1.0);
    ap.theta_vars = mu;
    ap.theta_vars.push_back(big_theta);

    const auto& blocks = mv.pool->per_set[set];
    std::vector<double> xcoef(static_cast<size_t>(ne) * dim);
    std::vector<double> vcoef(slots.size() * ne * ne);
    std::vector<double> ycoef(q);
    auto emit_block = [&](const BeliefBlock& block, bool base) {
        double rhs = 0.0;
        std::fill(xcoef.begin(), xcoef.end(), 0.0);
        std::fill(vcoef.begin(), vcoef.end(), 0.0);
        std::fill(ycoef.begin(), ycoef.end(), 0.0);
        for (size_t slot = 0; slot < slots.size(); ++slot) {
            for (int m = 0; m < M; ++m) {
                const double bm = block.anchor[m];
                if (bm == 0.0) continue;
                int a = ix.set_arc[set][slot][m];
                if (a < 0) continue;
                const Arc& arc = g.arcs[a];
                const auto& t = block.triples[slot * M + m];
                rhs += bm * t.alpha * arc.phi0;
                for (int kk = 0; kk < q; ++kk) {
                    double r = kk < static_cast<int>(arc.response.size()) ? arc.response[kk] : 0.0;
                    ycoef[kk] += bm * t.alpha * r;
                }
                for (int e = 0; e < ne; ++e) {
                    double phie = std::max(arc_phi(arc, g.option_vector(e)), 0.0);
                    if (phie == 0.0) continue;
                    for (int d = 0; d < dim; ++d) xcoef[e * dim + d] += bm * phie * t.beta[d];
                    for (int f = 0; f < ne; ++f) {
                        auto yf = g.option_vector(f);
                        double s = 0.0;
                        for (size_t d = 0; d < yf.size(); ++d) s += t.gamma[d] * yf[d];
                        vcoef[(slot * ne + e) * ne + f] += bm * phie * s;
                    }
                }
            }
        }
        if (base) {
            std::vector<std::pair<int, double>> coeffs;
            for (int m = 0; m < M; ++m)
                if (block.anchor[m] != 0.0) coeffs.push_back({mu[m], block.anchor[m]});
            coeffs.push_back({big_theta, 1.0});
            for (int e = 0; e < ne; ++e)
                for (int d = 0; d < dim; ++d)
                    if (xcoef[e * dim + d] != 0.0)
                        coeffs.push_back({sv.xc[e][d], -xcoef[e * dim + d]});
            for (size_t slot = 0; slot < slots.size(); ++slot)
                for (int e = 0; e < ne; ++e)
                    for (int f = 0; f < ne; ++f) {
                        double c = vcoef[(slot * ne + e) * ne + f];
                        if (c != 0.0) coeffs.push_back({sv.v[slot][e][f], -c});
                    }
            for (int kk = 0; kk < q; ++kk)
                if (ycoef[kk] != 0.0) coeffs.push_back({ap.y_vars[kk], -ycoef[kk]});
            lp.add_constraint(tag("__blk", lp.num_constraints()), std::move(coeffs), RowSense::ge,
                              rhs);
        } else {
            for (int m = 0; m < M; ++m) ap.cuts.push(mu[m], block.anchor[m]);
            ap.cuts.push(big_theta, 1.0);
            for (int e = 0; e < ne; ++e)
                for (int d = 0; d < dim; ++d) ap.cuts.push(sv.xc[e][d], -xcoef[e * dim + d]);
            for (size_t slot = 0; slot < slots.size(); ++slot)
                for (int e = 0; e < ne; ++e)
                    for (int f = 0; f < ne; ++f)
                        ap.cuts.push(sv.v[slot][e][f], -vcoef[(slot * ne + e) * ne + f]);
            for (int kk = 0; kk < q; ++kk) ap.cuts.push(ap.y_vars[kk], -ycoef[kk]);
            ap.cuts.end_row(rhs);
        }
    };
    for (const auto& block : blocks) emit_block(block, block.iteration == 0);
    return ap;
}

namespace {

struct Reduced {
    MixedBinaryProgram prog;
    std::vector<int> slot_of_row;  // reduced row index -> catalog slot (-1 for base rows)
};

Reduced build_reduced(const AssembledProgram& ap, const std::vector<int>& active_slots) {
    Reduced r;
    r.prog = ap.prog;
    r.slot_of_row.assign(ap.prog.lp.num_constraints(), -1);
    for (int slot : active_slots) {
        std::vector<std::pair<int, double>> coeffs;
        for (int k = ap.cuts.offsets[slot]; k < ap.cuts.offsets[slot + 1]; ++k)
            coeffs.push_back(ap.cuts.entries[k]);
        r.prog.lp.add_constraint("__cut" + std::to_string(slot), std::move(coeffs), RowSense::ge,
                                 ap.cuts.rhs[slot]);
        r.slot_of_row.push_back(slot);
    }
    return r;
}

std::vector<int> clean_slots(const AssembledProgram& ap, const ActiveRows* hint) {
    std::vector<int> slots;
    const int total = ap.cuts.size();
    if (hint)
        for (int s : hint->rows)
            if (s >= 0 && s < total) slots.push_back(s);
    std::sort(slots.begin(), slots.end());
    slots.erase(std::unique(slots.begin(), slots.end()), slots.end());
    return slots;
}

}  // namespace

LpSolution solve_lazy_lp(const AssembledProgram& ap, ActiveRows* hint) {
    const int total = ap.cuts.size();
    const int nbase = ap.prog.lp.num_constraints();
    std::vector<int> active = clean_slots(ap, hint);
    std::vector<char> is_active(total, 0);
    for (int s : active) is_active[s] = 1;
    for (int round = 0;; ++round) {
        if (round > 300) throw SolveError("lazy row activation failed to converge");
        Reduced r = build_reduced(ap, active);
        auto sol = solve_lp(r.prog.lp);
        if (sol.status != SolveStatus::optimal) {
            // the reduced program is a relaxation: infeasibility is conclusive
            if (sol.status == SolveStatus::infeasible) return sol;
            std::vector<int> all(total);
            for (int s = 0; s < total; ++s) all[s] = s;
            Reduced f = build_reduced(ap, all);
            auto fsol = solve_lp(f.prog.lp);
            if (fsol.status != SolveStatus::optimal) return fsol;
            active = all;
            is_active.assign(total, 1);
            sol = fsol;
            r = std::move(f);
        }
        bool added = false;
        for (int s = 0; s < total; ++s) {
            if (is_active[s]) continue;
            if (ap.cuts.violation(s, sol.primal) > 1e-9) {
                active.push_back(s);
                is_active[s] = 1;
                added = true;
            }
        }
        if (added) {
            std::sort(active.begin(), active.end());
            continue;
        }
        // exact for the complete program; report base-row duals in place and
        // remember which cut rows carried them
        LpSolution out = sol;
        out.duals.assign(nbase, 0.0);
        for (int i = 0; i < nbase; ++i) out.duals[i] = sol.duals[i];
        if (hint) {
            hint->rows.clear();
            for (size_t i = nbase; i < r.slot_of_row.size(); ++i)
                if (std::fabs(sol.duals[i]) > 1e-12) hint->rows.push_back(r.slot_of_row[i]);
        }
        return out;
    }
}

MilpSolution solve_lazy_milp(const AssembledProgram& ap, ActiveRows* hint) {
    const int total = ap.cuts.size();
    std::vector<int> active = clean_slots(ap, hint);
    std::vector<char> is_active(total, 0);
    for (int s : active) is_active[s] = 1;
    for (int round = 0;; ++round) {
        if (round > 300) throw SolveError("lazy row activation failed to converge (milp)");
        Reduced r = build_reduced(ap, active);
        auto sol = solve_milp(r.prog);
        if (sol.status != SolveStatus::optimal) return sol;
        bool added = false;
        for (int s = 0; s < total; ++s) {
            if (is_active[s]) continue;
            if (ap.cuts.violation(s, sol.primal) > 1e-9) {
                active.push_back(s);
                is_active[s] = 1;
                added = true;
            }
        }
        if (!added) {
            if (hint) {
                // keep only the rows that bind at the incumbent
                hint->rows.clear();
                for (int s : active)
                    if (ap.cuts.violation(s, sol.primal) > -1e-6) hint->rows.push_back(s);
            }
            return sol;
        }
        std::sort(active.begin(), active.end());
    }
}

LagrangianResult lagrangian_dual(const ModelView& mv, int node, int omega,
                                 std::span<const double> xbar, double lambda_box, int max_iters,
                                 ActiveRows* hint) {
    LagrangianResult res;
    const int dim = static_cast<int>(xbar.size());
    // warm start: fishing duals of the LP relaxation
    auto fished = assemble_sp_matrixchoice(mv, node, omega, xbar, true);
    auto rel = solve_lazy_lp(fished, hint);
    if (rel.status != SolveStatus::optimal)
        throw SolveError("matrix-choice relaxation not optimal at node " + mv.g->nodes[node].name);
    if (dim == 0) {
        auto inner = assemble_sp_matrixchoice(mv, node, omega, xbar, false);
        auto sol = solve_lazy_milp(inner, hint);
        if (sol.status != SolveStatus::optimal)
            throw SolveError("inner problem not optimal at node " + mv.g->nodes[node].name);
        res.value = sol.objective;
        res.inner_milps = 1;
        return res;
    }
    std::vector<double> lambda0(dim);
    for (int k = 0; k < dim; ++k)
        lambda0[k] = std::clamp(rel.duals[fished.fish_x[k]], -lambda_box, lambda_box);

    auto inner = assemble_sp_matrixchoice(mv, node, omega, xbar, false);
    std::vector<double> base_cost(dim);
    for (int k = 0; k < dim; ++k)
        base_cost[k] = inner.prog.lp.variable(inner.state_in_vars[k]).objective;
    const double base_offset = inner.prog.lp.objective_offset();

    struct Eval {
        std::vector<double> lambda, x;
        double g = 0.0;
    };
    std::vector<Eval> evals;
    auto evaluate = [&](const std::vector<double>& lam) {
        for (int k = 0; k < dim; ++k)
            inner.prog.lp.set_objective_coeff(inner.state_in_vars[k], base_cost[k] - lam[k]);
        double off = base_offset;
        for (int k = 0; k < dim; ++k) off += lam[k] * xbar[k];
        inner.prog.lp.set_objective_offset(off);
        auto sol = solve_lazy_milp(inner, hint);
        ++res.inner_milps;
        if (sol.status == SolveStatus::unbounded)
            throw SolveError("unbounded Lagrangian inner problem (missing state compactness) at " +
                             mv.g->nodes[node].name);
        if (sol.status != SolveStatus::optimal)
            throw SolveError("Lagrangian inner problem not optimal at " + mv.g->nodes[node].name);
        Eval ev;
        ev.lambda = lam;
        ev.g = sol.objective;
        ev.x.resize(dim);
        for (int k = 0; k < dim; ++k) ev.x[k] = sol.primal[inner.state_in_vars[k]];
        evals.push_back(ev);
        return ev.g;
    };

    double best = evaluate(lambda0);
    std::vector<double> best_lambda = lambda0;
    int stalled = 0;
    for (res.iterations = 1; res.iterations < max_iters; ++res.iterations) {
        // Kelley master over the box
        LinearProgram master;
        master.sense = Sense::maximize;
        std::vector<int> lv(dim);
        for (int k = 0; k < dim; ++k)
            lv[k] = master.add_variable(tag("l", k), -lambda_box, lambda_box, 0.0);
        int tv = master.add_variable("t", -kInf, kInf, 1.0);
        for (size_t s = 0; s < evals.size(); ++s) {
            // t <= g_s + (xbar - x_s)'(lambda - lambda_s)
            std::vector<std::pair<int, double>> coeffs{{tv, 1.0}};
            double rhs = evals[s].g;
            for (int k = 0; k < dim; ++k) {
                double grad = xbar[k] - evals[s].x[k];
                coeffs.push_back({lv[k], -grad});
                rhs -= grad * evals[s].lambda[k];
            }
            master.add_constraint(tag("e", static_cast<int>(s)), std::move(coeffs), RowSense::le,
                                  rhs);
        }
        auto msol = solve_lp(master);
        if (msol.status != SolveStatus::optimal) break;
        if (msol.objective <= best + 1e-6) break;  // duality gap within tolerance
        std::vector<double> lam(dim);
        for (int k = 0; k < dim; ++k) lam[k] = msol.primal[lv[k]];
        double val = evaluate(lam);
        if (val > best + 1e-9) {
            best = val;
            best_lambda = lam;
            stalled = 0;
        } else if (++stalled >= 4) {
            break;  // truncation keeps the cut valid, just possibly weaker
        }
    }
    res.value = best;
    res.lambda = best_lambda;
    return res;
}

std::vector<double> belief_update_dd(const PolicyGraph& g, const GraphIndex& ix,
                                     std::span<const double> y, std::span<const double> b,
                                     int from_set, int to_set, int omega) {
    const int M = g.num_models;
    std::vector<double> out(M, 0.0);
    double denom = 0.0;
    for (int m = 0; m < M; ++m) {
        double phi = 0.0;
        if (from_set < 0) {
            int member = ix.set_member[to_set][m];
            if (member >= 0)
                for (const auto& ra : g.root_arcs)
                    if (ra.to == member) phi = ra.prob;  // already carries b_m phi^m
        } else {
            const auto& slots = ix.set_children[from_set];
            for (size_t slot = 0; slot < slots.size(); ++slot) {
                if (slots[slot] != to_set) continue;
                int a = ix.set_arc[from_set][slot][m];
                if (a >= 0) phi = std::max(arc_phi(g.arcs[a], y), 0.0);
            }
        }
        double pm = 0.0;
        int member = ix.set_member[to_set][m];
        if (member >= 0) pm = g.nodes[member].pmf[omega];
        double prior = from_set < 0 ? 1.0 : b[m];  // root arcs already fold the prior in
        out[m] = pm * phi * prior;
        denom += out[m];
    }
    if (denom <= 0.0) {
        std::ostringstream os;
        os << "belief update impossible: observation " << omega << " into set " << to_set
           << " has zero probability under every believed model";
        throw SolveError(os.str());
    }
    for (double& v : out) v /= denom;
    return out;
}

std::vector<double> belief_update(const PolicyGraph& g, const GraphIndex& ix,
                                  std::span<const double> b, int from_set, int to_set, int omega) {
    std::vector<double> y(g.option_dim(), 0.0);
    return belief_update_dd(g, ix, y, b, from_set, to_set, omega);
}

}  // namespace sddp
