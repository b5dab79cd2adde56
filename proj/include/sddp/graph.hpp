#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "sddp/lp.hpp"

namespace sddp {

enum class TransitionKind { fixed, affine, choice };

struct TemplateVar {
    std::string name;
    double lower = 0.0;
    double upper = kInf;
    double objective = 0.0;
    friend bool operator==(const TemplateVar&, const TemplateVar&) = default;
};

struct TemplateRow {
    std::string name;
    std::vector<std::pair<std::string, double>> coeffs;
    RowSense sense = RowSense::eq;
    double rhs = 0.0;
    friend bool operator==(const TemplateRow&, const TemplateRow&) = default;
};

enum class InjectField { rhs, lower, upper, objective };

// Describes which piece of the stage program a realization replaces.
struct Injection {
    InjectField field = InjectField::rhs;
    std::string target;             // constraint name (rhs) or variable name (bounds/objective)
    std::vector<double> per_omega;  // one value per realization
    friend bool operator==(const Injection&, const Injection&) = default;
};

struct StageTemplate {
    std::vector<TemplateVar> vars;
    std::vector<TemplateRow> rows;
    std::vector<std::string> state_in;   // names of incoming-state variables
    std::vector<std::string> state_out;  // names of outgoing-state variables
    double objective_offset = 0.0;
    std::vector<double> option_cost;  // affine graphs: linear cost on y
    std::vector<double> choice_cost;  // choice graphs: cost per option d
    std::vector<Injection> injections;
    friend bool operator==(const StageTemplate&, const StageTemplate&) = default;
};

struct Node {
    std::string name;
    StageTemplate stage;
    std::vector<double> support;  // realization labels
    std::vector<double> pmf;      // this node's own-model pmf over support
    int model = 0;                // 0-based candidate-model tag
};

struct Arc {
    int from = -1, to = -1;
    double phi0 = 0.0;                // fixed & affine nominal probability
    std::vector<double> response;     // affine: phi(y) = phi0 + response'y; empty = constant
    std::vector<double> per_child_a;  // declared strict per-child response (phi0 * (1 + a'y))
    bool strict_affine = false;
    std::vector<double> choice_prob;  // choice: probability per option d
};

struct RootArc {
    int to = -1;
    double prob = 0.0;  // for learning graphs this is the folded b_m * phi^m_{R,i}
};

struct PolicyGraph {
    std::string name;
    Sense sense = Sense::minimize;
    TransitionKind kind = TransitionKind::fixed;
    std::vector<Node> nodes;
    std::vector<Arc> arcs;
    std::vector<RootArc> root_arcs;
    std::vector<double> root_state;
    int num_models = 1;
    std::vector<double> prior = {1.0};
    std::vector<std::vector<int>> ambiguity_sets;  // partition of node indices
    std::vector<std::vector<double>> options;      // ext(Y); empty when unused
    std::vector<std::string> option_names;         // choice option set D, or labels for ext(Y)
    double declared_discount = 1.0;                // metadata: factor the loader folded in

    int node_index(const std::string& n) const {
        for (size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].name == n) return static_cast<int>(i);
        return -1;
    }
    int option_dim() const { return options.empty() ? 0 : static_cast<int>(options[0].size()); }
    int num_options() const { return options.empty() ? 1 : static_cast<int>(options.size()); }
    // ext(Y) with a single zero-dimensional option standing in when y is unused
    std::vector<double> option_vector(int e) const {
        return options.empty() ? std::vector<double>{} : options[e];
    }
};

/// phi_ij(y) for fixed/affine arcs.
double arc_phi(const Arc& arc, std::span<const double> y);
/// phi_ij under choice option d.
double arc_phi_choice(const Arc& arc, int d);
/// Dispatches on the graph's kind; e indexes ext(Y) or D.
double arc_phi_option(const PolicyGraph& g, const Arc& arc, int e);

// Derived adjacency, clone level and ambiguity-set (observable) level.
struct GraphIndex {
    std::vector<std::vector<int>> out_arcs;   // node -> outgoing arc ids
    std::vector<std::vector<int>> children;   // node -> sorted child node ids
    std::vector<int> set_of;                  // node -> ambiguity set id
    std::vector<std::vector<int>> set_member; // set -> node id per model (-1 when absent)
    std::vector<std::vector<int>> set_children;  // set -> sorted child set ids
    // set_arc[s][slot][m]: arc id from set s's model-m member to child set
    // set_children[s][slot]'s model-m member, or -1
    std::vector<std::vector<std::vector<int>>> set_arc;
    bool acyclic = true;
    int longest_path = 0;  // nodes on the longest root-reachable path (acyclic only)
};
GraphIndex build_index(const PolicyGraph& g);

enum class Severity { error, warning };

struct Finding {
    std::string code;
    Severity severity = Severity::error;
    std::string message;
    std::string location;
};

struct ValidationReport {
    bool pass = true;
    std::vector<Finding> findings;
    double gamma = 0.0;        // contraction factor (max spectral radius over models/options)
    double max_row_sum = 0.0;  // max child-row sum over nodes, models, options
    bool cyclic = false;
    int horizon_bound = 1;     // ceil(1/(1-gamma)) or the longest path for acyclic graphs

    void add(std::string code, Severity sev, std::string message, std::string location = "");
    std::string to_text() const;
};

ValidationReport validate(const PolicyGraph& g);

/// Layer-unrolls a cyclic graph into an acyclic T-step approximation; acyclic
/// input is returned unchanged.
PolicyGraph unroll(const PolicyGraph& g, int T);

/// Builds the clone graph on (node, model) with root row b_m * phi^m_{R,i},
/// block-diagonal interior, and one ambiguity set per base node.
PolicyGraph augment_with_models(const std::vector<PolicyGraph>& models,
                                const std::vector<double>& prior);

}  // namespace sddp
