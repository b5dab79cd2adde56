#include "sddp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

namespace sddp {

double arc_phi(const Arc& arc, std::span<const double> y) {
    double v = arc.phi0;
    for (size_t k = 0; k < arc.response.size() && k < y.size(); ++k) v += arc.response[k] * y[k];
    return v;
}

double arc_phi_choice(const Arc& arc, int d) {
    if (arc.choice_prob.empty()) return arc.phi0;
    return arc.choice_prob[d];
}

double arc_phi_option(const PolicyGraph& g, const Arc& arc, int e) {
    if (g.kind == TransitionKind::choice) return arc_phi_choice(arc, e);
    auto y = g.option_vector(g.options.empty() ? 0 : e);
    return arc_phi(arc, y);
}

namespace {

// An arc that can carry probability under some option.
bool arc_possible(const PolicyGraph& g, const Arc& arc) {
    const double tol = 1e-12;
    if (g.kind == TransitionKind::choice) {
        for (double p : arc.choice_prob)
            if (p > tol) return true;
        return arc.choice_prob.empty() && arc.phi0 > tol;
    }
    if (g.options.empty()) return arc.phi0 > tol;
    for (int e = 0; e < g.num_options(); ++e)
        if (arc_phi(arc, g.options[e]) > tol) return true;
    return false;
}

double spectral_radius(const std::vector<std::vector<double>>& m) {
    const int n = static_cast<int>(m.size());
    if (n == 0) return 0.0;
    std::vector<double> v(n, 1.0), w(n);
    double radius = 0.0;
    for (int it = 0; it < 2000; ++it) {
        double norm = 0.0;
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += m[i][j] * v[j];
            w[i] = s;
            norm = std::max(norm, std::fabs(s));
        }
        if (norm < 1e-300) return 0.0;
        double prev = radius;
        radius = norm;
        for (int i = 0; i < n; ++i) v[i] = w[i] / norm;
        if (it > 10 && std::fabs(radius - prev) < 1e-13 * (1.0 + radius)) break;
    }
    return radius;
}

}  // namespace

GraphIndex build_index(const PolicyGraph& g) {
    GraphIndex ix;
    const int n = static_cast<int>(g.nodes.size());
    ix.out_arcs.resize(n);
    ix.children.resize(n);
    for (size_t a = 0; a < g.arcs.size(); ++a) ix.out_arcs[g.arcs[a].from].push_back(static_cast<int>(a));
    for (auto& arcs : ix.out_arcs)
        std::sort(arcs.begin(), arcs.end(),
                  [&](int a, int b) { return g.arcs[a].to < g.arcs[b].to; });
    for (int i = 0; i < n; ++i) {
        for (int a : ix.out_arcs[i])
            if (arc_possible(g, g.arcs[a])) ix.children[i].push_back(g.arcs[a].to);
        std::sort(ix.children[i].begin(), ix.children[i].end());
        ix.children[i].erase(std::unique(ix.children[i].begin(), ix.children[i].end()),
                             ix.children[i].end());
    }

    ix.set_of.assign(n, -1);
    for (size_t s = 0; s < g.ambiguity_sets.size(); ++s)
        for (int node : g.ambiguity_sets[s]) ix.set_of[node] = static_cast<int>(s);

    const int ns = static_cast<int>(g.ambiguity_sets.size());
    ix.set_member.assign(ns, std::vector<int>(g.num_models, -1));
    for (int s = 0; s < ns; ++s)
        for (int node : g.ambiguity_sets[s]) ix.set_member[s][g.nodes[node].model] = node;

    ix.set_children.resize(ns);
    ix.set_arc.resize(ns);
    for (int s = 0; s < ns; ++s) {
        std::set<int> kids;
        for (int node : g.ambiguity_sets[s])
            for (int c : ix.children[node]) kids.insert(ix.set_of[c]);
        ix.set_children[s].assign(kids.begin(), kids.end());
        ix.set_arc[s].assign(ix.set_children[s].size(), std::vector<int>(g.num_models, -1));
        for (size_t slot = 0; slot < ix.set_children[s].size(); ++slot) {
            int cs = ix.set_children[s][slot];
            for (int m = 0; m < g.num_models; ++m) {
                int from = ix.set_member[s][m];
                int to = ix.set_member[cs][m];
                if (from < 0 || to < 0) continue;
                for (int a : ix.out_arcs[from])
                    if (g.arcs[a].to == to) ix.set_arc[s][slot][m] = a;
            }
        }
    }

    // cycle detection and (for acyclic graphs) the longest root-reachable path
    std::vector<int> color(n, 0);
    std::function<bool(int)> has_cycle = [&](int u) {
        color[u] = 1;
        for (int c : ix.children[u]) {
            if (color[c] == 1) return true;
            if (color[c] == 0 && has_cycle(c)) return true;
        }
        color[u] = 2;
        return false;
    };
    ix.acyclic = true;
    for (int i = 0; i < n && ix.acyclic; ++i)
        if (color[i] == 0 && has_cycle(i)) ix.acyclic = false;

    if (ix.acyclic) {
        std::vector<int> depth(n, -1);
        std::function<int(int)> dp = [&](int u) {
            if (depth[u] >= 0) return depth[u];
            int best = 1;
            for (int c : ix.children[u]) best = std::max(best, 1 + dp(c));
            return depth[u] = best;
        };
        int L = 0;
        for (const auto& ra : g.root_arcs)
            if (ra.prob > 1e-12) L = std::max(L, dp(ra.to));
        ix.longest_path = std::max(L, 1);
    }
    return ix;
}

void ValidationReport::add(std::string code, Severity sev, std::string message,
                           std::string location) {
    if (sev == Severity::error) pass = false;
    findings.push_back({std::move(code), sev, std::move(message), std::move(location)});
}

std::string ValidationReport::to_text() const {
    std::ostringstream os;
    os << (pass ? "PASS" : "FAIL") << "  gamma=" << gamma << "  max_row_sum=" << max_row_sum
       << (cyclic ? "  (cyclic)" : "  (acyclic)") << "\n";
    for (const auto& f : findings) {
        os << "  [" << (f.severity == Severity::error ? "error" : "warning") << "] " << f.code
           << ": " << f.message;
        if (!f.location.empty()) os << " (" << f.location << ")";
        os << "\n";
    }
    return os.str();
}

ValidationReport validate(const PolicyGraph& g) {
    ValidationReport rep;
    const int n = static_cast<int>(g.nodes.size());
    if (n == 0) {
        rep.add("empty_graph", Severity::error, "graph has no nodes");
        return rep;
    }
    {
        std::set<std::string> names;
        for (const auto& node : g.nodes) {
            if (node.name.empty()) rep.add("node_name", Severity::error, "empty node name");
            if (!names.insert(node.name).second)
                rep.add("node_name", Severity::error, "duplicate node name", node.name);
        }
    }
    if (g.num_models < 1 || g.num_models > 8)
        rep.add("model_count", Severity::error,
                "candidate-model count must be between 1 and 8, got " +
                    std::to_string(g.num_models));
    if (static_cast<int>(g.prior.size()) != g.num_models) {
        rep.add("prior_size", Severity::error, "prior size does not match model count");
    } else {
        double s = 0.0;
        for (double b : g.prior) {
            if (b <= 0.0) rep.add("prior_positive", Severity::error, "prior beliefs must be strictly positive");
            s += b;
        }
        if (std::fabs(s - 1.0) > 1e-9)
            rep.add("prior_sum", Severity::error, "prior beliefs must sum to 1");
    }

    const int q = g.option_dim();
    for (size_t e = 0; e < g.options.size(); ++e)
        if (static_cast<int>(g.options[e].size()) != q)
            rep.add("option_dim", Severity::error, "ext(Y) vectors have mixed dimensions");
    if (g.kind == TransitionKind::choice) {
        if (g.option_names.empty())
            rep.add("choice_empty", Severity::error, "matrix-choice graph with empty option set D");
    } else if (g.kind == TransitionKind::affine && g.options.empty()) {
        rep.add("options_empty", Severity::warning,
                "affine-response transitions declared but ext(Y) is empty");
    }

    // node-local checks
    for (int i = 0; i < n; ++i) {
        const auto& node = g.nodes[i];
        const auto loc = node.name;
        if (node.model < 0 || node.model >= g.num_models)
            rep.add("model_tag", Severity::error, "model tag out of range", loc);
        if (node.support.size() != node.pmf.size())
            rep.add("pmf_size", Severity::error, "pmf and support sizes differ", loc);
        if (node.support.empty())
            rep.add("support_empty", Severity::error, "every node needs at least one realization", loc);
        if (node.support.size() > 100)
            rep.add("support_cap", Severity::error, "|Omega| exceeds the cap of 100", loc);
        double s = 0.0;
        for (double p : node.pmf) {
            if (p < -1e-12) rep.add("pmf_negative", Severity::error, "negative pmf entry", loc);
            s += p;
        }
        if (!node.pmf.empty() && std::fabs(s - 1.0) > 1e-12)
            rep.add("pmf_sum", Severity::error, "pmf does not sum to 1", loc);

        std::set<std::string> vnames, rnames;
        for (const auto& v : node.stage.vars)
            if (!vnames.insert(v.name).second)
                rep.add("var_name", Severity::error, "duplicate variable " + v.name, loc);
        for (const auto& r : node.stage.rows) {
            if (!rnames.insert(r.name).second)
                rep.add("row_name", Severity::error, "duplicate row " + r.name, loc);
            for (auto& [vn, c] : r.coeffs) {
                if (!vnames.count(vn))
                    rep.add("row_ref", Severity::error, "row " + r.name + " references unknown " + vn, loc);
                if (!std::isfinite(c))
                    rep.add("row_coeff", Severity::error, "non-finite coefficient in " + r.name, loc);
            }
            if (!std::isfinite(r.rhs))
                rep.add("row_rhs", Severity::error, "non-finite rhs in " + r.name, loc);
        }
        for (const auto& sn : node.stage.state_in)
            if (!vnames.count(sn))
                rep.add("state_ref", Severity::error, "state_in names unknown variable " + sn, loc);
        for (const auto& sn : node.stage.state_out)
            if (!vnames.count(sn))
                rep.add("state_ref", Severity::error, "state_out names unknown variable " + sn, loc);
        for (const auto& inj : node.stage.injections) {
            if (inj.per_omega.size() != node.support.size())
                rep.add("injection_size", Severity::error,
                        "injection on " + inj.target + " does not cover every realization", loc);
            bool is_row = inj.field == InjectField::rhs;
            if (is_row && !rnames.count(inj.target))
                rep.add("injection_ref", Severity::error, "injection targets unknown row " + inj.target, loc);
            if (!is_row && !vnames.count(inj.target))
                rep.add("injection_ref", Severity::error, "injection targets unknown variable " + inj.target, loc);
        }
        if (!node.stage.option_cost.empty() && static_cast<int>(node.stage.option_cost.size()) != q)
            rep.add("option_cost_dim", Severity::error, "option cost dimension mismatch", loc);
        if (g.kind == TransitionKind::choice && !node.stage.choice_cost.empty() &&
            node.stage.choice_cost.size() != g.option_names.size())
            rep.add("choice_cost_dim", Severity::error, "choice cost dimension mismatch", loc);
    }
    if (!rep.pass) return rep;  // structural damage; later checks assume shapes

    // arcs and state compatibility
    for (const auto& arc : g.arcs) {
        if (arc.from < 0 || arc.from >= n || arc.to < 0 || arc.to >= n) {
            rep.add("arc_ref", Severity::error, "arc references a missing node");
            continue;
        }
        if (g.nodes[arc.from].stage.state_out.size() != g.nodes[arc.to].stage.state_in.size())
            rep.add("state_dim", Severity::error,
                    "state dimension mismatch on arc " + g.nodes[arc.from].name + " -> " +
                        g.nodes[arc.to].name);
        if (g.kind == TransitionKind::choice && !arc.choice_prob.empty() &&
            arc.choice_prob.size() != g.option_names.size())
            rep.add("choice_prob_dim", Severity::error, "arc choice probabilities do not cover D");
        if (g.kind != TransitionKind::choice &&
            !arc.response.empty() && static_cast<int>(arc.response.size()) != q)
            rep.add("response_dim", Severity::error, "arc response dimension mismatch");
    }
    {
        std::set<std::pair<int, int>> seen;
        for (const auto& arc : g.arcs)
            if (!seen.insert({arc.from, arc.to}).second)
                rep.add("arc_dup", Severity::error,
                        "duplicate arc " + g.nodes[arc.from].name + " -> " + g.nodes[arc.to].name);
    }
    double root_sum = 0.0;
    for (const auto& ra : g.root_arcs) {
        if (ra.to < 0 || ra.to >= n) {
            rep.add("root_arc", Severity::error, "root arc references a missing node");
            continue;
        }
        if (ra.prob < -1e-12) rep.add("root_prob", Severity::error, "negative root probability");
        root_sum += ra.prob;
        if (g.nodes[ra.to].stage.state_in.size() != g.root_state.size())
            rep.add("root_state_dim", Severity::error,
                    "root state dimension does not match node " + g.nodes[ra.to].name);
    }
    if (root_sum > 1.0 + 1e-9)
        rep.add("root_row_sum", Severity::error, "root row sums beyond 1");
    if (g.root_arcs.empty())
        rep.add("root_empty", Severity::error, "root has no outgoing arcs");
    if (!rep.pass) return rep;

    GraphIndex ix = build_index(g);

    // ambiguity partition
    {
        std::vector<int> count(n, 0);
        for (const auto& s : g.ambiguity_sets)
            for (int node : s) {
                if (node < 0 || node >= n)
                    rep.add("ambiguity_ref", Severity::error, "ambiguity set references missing node");
                else
                    ++count[node];
            }
        for (int i = 0; i < n; ++i)
            if (count[i] != 1)
                rep.add("ambiguity_partition", Severity::error,
                        "node is in " + std::to_string(count[i]) + " ambiguity sets",
                        g.nodes[i].name);
        for (const auto& s : g.ambiguity_sets) {
            std::set<int> models;
            for (int node : s) {
                if (!models.insert(g.nodes[node].model).second)
                    rep.add("ambiguity_models", Severity::error,
                            "two members of one ambiguity set share a model tag",
                            g.nodes[node].name);
            }
            for (size_t k = 1; k < s.size(); ++k) {
                if (g.nodes[s[k]].support != g.nodes[s[0]].support)
                    rep.add("ambiguity_support", Severity::error,
                            "realization supports differ within an ambiguity set",
                            g.nodes[s[k]].name);
                if (!(g.nodes[s[k]].stage == g.nodes[s[0]].stage))
                    rep.add("ambiguity_template", Severity::error,
                            "stage templates differ within an ambiguity set", g.nodes[s[k]].name);
            }
        }
    }

    // probability rows per option (and per strict Eq-3 structure)
    const int ne = g.kind == TransitionKind::choice ? static_cast<int>(g.option_names.size())
                                                    : g.num_options();
    for (int i = 0; i < n; ++i) {
        for (int e = 0; e < ne; ++e) {
            double row = 0.0;
            for (int a : ix.out_arcs[i]) {
                double p = arc_phi_option(g, g.arcs[a], e);
                if (p < -1e-9)
                    rep.add("negative_probability", Severity::error,
                            "phi < 0 under option " + std::to_string(e), g.nodes[i].name);
                row += std::max(p, 0.0);
            }
            rep.max_row_sum = std::max(rep.max_row_sum, row);
            if (row > 1.0 + 1e-9)
                rep.add("row_sum", Severity::error,
                        "row sum exceeds 1 under option " + std::to_string(e), g.nodes[i].name);
        }
    }
    if (g.kind == TransitionKind::affine) {
        // strict per-child responses: consistency and the row-invariance condition
        std::vector<std::vector<double>> child_a(n);
        std::vector<bool> has_a(n, false);
        for (const auto& arc : g.arcs) {
            if (!arc.strict_affine) continue;
            if (!has_a[arc.to]) {
                child_a[arc.to] = arc.per_child_a;
                has_a[arc.to] = true;
            } else if (child_a[arc.to] != arc.per_child_a) {
                rep.add("eq3_per_child", Severity::error,
                        "strict response vectors differ across parents of " + g.nodes[arc.to].name);
            }
            for (int e = 0; e < g.num_options(); ++e) {
                double f = 1.0;
                for (int k = 0; k < q; ++k) f += arc.per_child_a[k] * g.options[e][k];
                if (f < -1e-9)
                    rep.add("eq3_nonneg", Severity::error,
                            "(1 + a'y) < 0 at an extreme point", g.nodes[arc.to].name);
            }
        }
        for (int i = 0; i < n; ++i) {
            bool any_strict = false;
            std::vector<double> s(std::max(q, 1), 0.0);
            for (int a : ix.out_arcs[i]) {
                const auto& arc = g.arcs[a];
                if (!arc.strict_affine) continue;
                any_strict = true;
                for (int k = 0; k < q; ++k) s[k] += arc.phi0 * arc.per_child_a[k];
            }
            if (any_strict)
                for (int k = 0; k < q; ++k)
                    if (std::fabs(s[k]) > 1e-9)
                        rep.add("eq3_row_response", Severity::error,
                                "sum of phi0 * a_j over children is not zero (row sums drift with y)",
                                g.nodes[i].name);
        }
    }

    // contraction factor: per model and option, spectral radius of the clone matrix
    rep.cyclic = !ix.acyclic;
    double gamma = 0.0;
    for (int e = 0; e < ne; ++e) {
        std::vector<std::vector<double>> mat(n, std::vector<double>(n, 0.0));
        for (const auto& arc : g.arcs)
            mat[arc.from][arc.to] = std::max(arc_phi_option(g, arc, e), 0.0);
        gamma = std::max(gamma, spectral_radius(mat));
    }
    rep.gamma = gamma;
    if (rep.cyclic) {
        if (gamma >= 1.0 - 1e-9)
            rep.add("contraction", Severity::error,
                    "cyclic graph with contraction factor " + std::to_string(gamma) + " >= 1");
        else if (gamma >= 0.99)
            rep.add("slow_contraction", Severity::warning,
                    "contraction factor " + std::to_string(gamma) + " close to 1; expect slow convergence");
        rep.horizon_bound = gamma < 1.0 ? static_cast<int>(std::ceil(1.0 / (1.0 - gamma))) : 1 << 20;
    } else {
        rep.horizon_bound = ix.longest_path;
    }

    // reachability (diagnostic only)
    {
        std::vector<bool> seen(n, false);
        std::vector<int> stack;
        for (const auto& ra : g.root_arcs)
            if (ra.prob > 1e-12 && !seen[ra.to]) { seen[ra.to] = true; stack.push_back(ra.to); }
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int c : ix.children[u])
                if (!seen[c]) { seen[c] = true; stack.push_back(c); }
        }
        for (int i = 0; i < n; ++i)
            if (!seen[i])
                rep.add("unreachable", Severity::warning, "node unreachable from the root",
                        g.nodes[i].name);
    }
    return rep;
}

PolicyGraph unroll(const PolicyGraph& g, int T) {
    if (T <= 0) throw ValidationError("unroll horizon must be at least 1");
    GraphIndex ix = build_index(g);
    if (ix.acyclic) return g;

    PolicyGraph out;
    out.name = g.name + "_T" + std::to_string(T);
    out.sense = g.sense;
    out.kind = g.kind;
    out.root_state = g.root_state;
    out.num_models = g.num_models;
    out.prior = g.prior;
    out.options = g.options;
    out.option_names = g.option_names;
    out.declared_discount = g.declared_discount;

    // layer t in 1..T: nodes reachable from layer t-1
    std::map<std::pair<int, int>, int> copy_id;  // (orig node, layer) -> new id
    auto make_copy = [&](int orig, int t) {
        auto key = std::make_pair(orig, t);
        auto it = copy_id.find(key);
        if (it != copy_id.end()) return it->second;
        Node c = g.nodes[orig];
        c.name = g.nodes[orig].name + "@" + std::to_string(t);
        out.nodes.push_back(std::move(c));
        int id = static_cast<int>(out.nodes.size()) - 1;
        copy_id[key] = id;
        return id;
    };

    std::vector<int> frontier;  // original ids at the current layer
    for (const auto& ra : g.root_arcs) {
        if (ra.prob <= 1e-15) continue;
        int id = make_copy(ra.to, 1);
        out.root_arcs.push_back({id, ra.prob});
        frontier.push_back(ra.to);
    }
    std::sort(frontier.begin(), frontier.end());
    frontier.erase(std::unique(frontier.begin(), frontier.end()), frontier.end());
    for (int t = 1; t < T; ++t) {
        std::vector<int> next;
        for (int orig : frontier) {
            int from_id = copy_id.at({orig, t});
            for (int a : ix.out_arcs[orig]) {
                const auto& arc = g.arcs[a];
                if (!arc_possible(g, arc)) continue;
                int to_id = make_copy(arc.to, t + 1);
                Arc na = arc;
                na.from = from_id;
                na.to = to_id;
                out.arcs.push_back(std::move(na));
                next.push_back(arc.to);
            }
        }
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        frontier = std::move(next);
    }

    // ambiguity sets: same-set copies grouped per layer; singletons when the
    // source graph declared none
    std::map<std::pair<int, int>, std::vector<int>> sets;  // (orig set, layer) -> new ids
    for (auto& [key, id] : copy_id) {
        int s = ix.set_of[key.first];
        if (s < 0) s = -(key.first + 2);  // undeclared: keep each original node apart
        sets[{s, key.second}].push_back(id);
    }
    for (auto& [key, members] : sets) {
        std::sort(members.begin(), members.end());
        out.ambiguity_sets.push_back(members);
    }
    return out;
}

PolicyGraph augment_with_models(const std::vector<PolicyGraph>& models,
                                const std::vector<double>& prior) {
    if (models.empty()) throw ValidationError("augment_with_models needs at least one model");
    if (prior.size() != models.size())
        throw ValidationError("prior size does not match the number of models");
    double s = 0.0;
    for (double b : prior) {
        if (b <= 0.0) throw ValidationError("prior beliefs must be strictly positive");
        s += b;
    }
    if (std::fabs(s - 1.0) > 1e-9) throw ValidationError("prior beliefs must sum to 1");

    const auto& base = models[0];
    const int nb = static_cast<int>(base.nodes.size());
    for (size_t m = 1; m < models.size(); ++m) {
        const auto& gm = models[m];
        if (gm.num_models != 1 || base.num_models != 1)
            throw ValidationError("augment inputs must be single-model graphs");
        if (gm.nodes.size() != base.nodes.size())
            throw ValidationError("models disagree on the node set");
        if (gm.kind != base.kind || gm.sense != base.sense)
            throw ValidationError("models disagree on transition kind or sense");
        if (gm.options != base.options || gm.option_names != base.option_names)
            throw ValidationError("models disagree on the option set");
        if (gm.root_state != base.root_state)
            throw ValidationError("models disagree on the root state");
        for (int i = 0; i < nb; ++i) {
            if (gm.nodes[i].name != base.nodes[i].name)
                throw ValidationError("models disagree on node names/order");
            if (gm.nodes[i].support != base.nodes[i].support)
                throw ValidationError("mismatched supports across models at node " +
                                      base.nodes[i].name);
            if (!(gm.nodes[i].stage == base.nodes[i].stage))
                throw ValidationError("mismatched stage templates across models at node " +
                                      base.nodes[i].name);
        }
        // identical nonzero locations across models
        auto pattern = [](const PolicyGraph& g) {
            std::set<std::pair<int, int>> p;
            for (const auto& a : g.arcs) p.insert({a.from, a.to});
            return p;
        };
        if (pattern(gm) != pattern(base))
            throw ValidationError("transition nonzero patterns differ across models");
        auto root_pattern = [](const PolicyGraph& g) {
            std::set<int> p;
            for (const auto& a : g.root_arcs)
                if (a.prob > 1e-15) p.insert(a.to);
            return p;
        };
        if (root_pattern(gm) != root_pattern(base))
            throw ValidationError("root transition patterns differ across models");
    }

    PolicyGraph out;
    out.name = base.name + "_learning";
    out.sense = base.sense;
    out.kind = base.kind;
    out.root_state = base.root_state;
    out.num_models = static_cast<int>(models.size());
    out.prior = prior;
    out.options = base.options;
    out.option_names = base.option_names;
    out.declared_discount = base.declared_discount;

    // model-major clone order: (node 0, m 0), (node 1, m 0), ..., (node 0, m 1), ...
    for (size_t m = 0; m < models.size(); ++m) {
        for (int i = 0; i < nb; ++i) {
            Node c = models[m].nodes[i];
            c.name = base.nodes[i].name + "#m" + std::to_string(m + 1);
            c.model = static_cast<int>(m);
            out.nodes.push_back(std::move(c));
        }
    }
    auto clone = [&](int node, int m) { return m * nb + node; };
    for (size_t m = 0; m < models.size(); ++m) {
        for (const auto& arc : models[m].arcs) {
            Arc na = arc;
            na.from = clone(arc.from, static_cast<int>(m));
            na.to = clone(arc.to, static_cast<int>(m));
            out.arcs.push_back(std::move(na));
        }
        for (const auto& ra : models[m].root_arcs) {
            if (ra.prob <= 1e-15) continue;
            out.root_arcs.push_back({clone(ra.to, static_cast<int>(m)), prior[m] * ra.prob});
        }
    }
    for (int i = 0; i < nb; ++i) {
        std::vector<int> set;
        for (size_t m = 0; m < models.size(); ++m) set.push_back(clone(i, static_cast<int>(m)));
        out.ambiguity_sets.push_back(std::move(set));
    }
    return out;
}

}  // namespace sddp
