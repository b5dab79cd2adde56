#include "sddp/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace sddp {

using json = nlohmann::ordered_json;

namespace {

constexpr int kSchemaVersion = 1;

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
    for (auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key))
            throw ValidationError("unknown key '" + key + "' in " + where);
    }
}

double parse_bound(const json& v, const std::string& where) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
    }
    throw ValidationError("bad bound in " + where + " (number, \"inf\" or \"-inf\")");
}

json dump_bound(double v) {
    if (v == kInf) return json("inf");
    if (v == -kInf) return json("-inf");
    return json(v);
}

RowSense parse_sense(const std::string& s, const std::string& where) {
    if (s == "<=") return RowSense::le;
    if (s == "==") return RowSense::eq;
    if (s == ">=") return RowSense::ge;
    throw ValidationError("bad sense '" + s + "' in " + where);
}

std::string sense_text(RowSense s) {
    return s == RowSense::le ? "<=" : s == RowSense::ge ? ">=" : "==";
}

Injection parse_injection(const json& j, const std::string& where) {
    reject_unknown(j, {"target", "field", "per_omega"}, where);
    Injection inj;
    const std::string target = j.at("target").get<std::string>();
    const std::string field = j.at("field").get<std::string>();
    bool on_constraint = target.rfind("constraint:", 0) == 0;
    bool on_variable = target.rfind("variable:", 0) == 0;
    if (!on_constraint && !on_variable)
        throw ValidationError("injection target must start with constraint: or variable: in " + where);
    inj.target = target.substr(target.find(':') + 1);
    if (on_constraint) {
        if (field != "rhs") throw ValidationError("constraint injections support field rhs only, in " + where);
        inj.field = InjectField::rhs;
    } else if (field == "lower") {
        inj.field = InjectField::lower;
    } else if (field == "upper") {
        inj.field = InjectField::upper;
    } else if (field == "objective") {
        inj.field = InjectField::objective;
    } else {
        throw ValidationError("variable injections support lower/upper/objective, in " + where);
    }
    inj.per_omega = j.at("per_omega").get<std::vector<double>>();
    return inj;
}

std::string injection_target_text(const Injection& inj) {
    return (inj.field == InjectField::rhs ? "constraint:" : "variable:") + inj.target;
}

std::string injection_field_text(InjectField f) {
    switch (f) {
        case InjectField::rhs: return "rhs";
        case InjectField::lower: return "lower";
        case InjectField::upper: return "upper";
        case InjectField::objective: return "objective";
    }
    return "rhs";
}

}  // namespace

PolicyGraph parse_model(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("JSON parse error: ") + e.what());
    }
    reject_unknown(doc,
                   {"schema_version", "name", "sense", "discount", "models", "beliefs", "options",
                    "option_names", "ambiguity_sets", "root", "nodes", "arcs"},
                   "model document");
    if (!doc.contains("schema_version"))
        throw ValidationError("model document lacks schema_version");
    if (doc.at("schema_version").get<int>() != kSchemaVersion)
        throw ValidationError("unsupported schema_version (expected " +
                              std::to_string(kSchemaVersion) + ")");

    PolicyGraph g;
    g.name = doc.value("name", std::string("model"));
    const std::string sense = doc.value("sense", std::string("min"));
    if (sense == "min") g.sense = Sense::minimize;
    else if (sense == "max") g.sense = Sense::maximize;
    else throw ValidationError("sense must be min or max");

    g.num_models = doc.value("models", 1);
    if (doc.contains("beliefs")) g.prior = doc.at("beliefs").get<std::vector<double>>();
    else g.prior.assign(g.num_models, 1.0 / std::max(g.num_models, 1));
    if (doc.contains("options")) g.options = doc.at("options").get<std::vector<std::vector<double>>>();
    if (doc.contains("option_names"))
        g.option_names = doc.at("option_names").get<std::vector<std::string>>();
    const double discount = doc.value("discount", 1.0);
    if (!(discount > 0.0) || discount > 1.0)
        throw ValidationError("discount must lie in (0, 1]");
    g.declared_discount = discount;

    if (!doc.contains("nodes") || !doc.contains("arcs") || !doc.contains("root"))
        throw ValidationError("model document needs nodes, arcs and root");

    for (const auto& jn : doc.at("nodes")) {
        reject_unknown(jn,
                       {"name", "model", "state_in", "state_out", "variables", "constraints",
                        "objective_offset", "support", "pmf", "injections", "option_cost",
                        "choice_cost"},
                       "node");
        Node node;
        node.name = jn.at("name").get<std::string>();
        node.model = jn.value("model", 1) - 1;
        const std::string where = "node " + node.name;
        if (jn.contains("variables")) {
            for (const auto& jv : jn.at("variables")) {
                reject_unknown(jv, {"name", "lower", "upper", "objective"}, where);
                TemplateVar v;
                v.name = jv.at("name").get<std::string>();
                v.lower = jv.contains("lower") ? parse_bound(jv.at("lower"), where) : 0.0;
                v.upper = jv.contains("upper") ? parse_bound(jv.at("upper"), where) : kInf;
                v.objective = jv.value("objective", 0.0);
                node.stage.vars.push_back(std::move(v));
            }
        }
        if (jn.contains("constraints")) {
            for (const auto& jr : jn.at("constraints")) {
                reject_unknown(jr, {"name", "coeffs", "sense", "rhs"}, where);
                TemplateRow r;
                r.name = jr.at("name").get<std::string>();
                for (auto& [vn, c] : jr.at("coeffs").items())
                    r.coeffs.push_back({vn, c.get<double>()});
                r.sense = parse_sense(jr.value("sense", std::string("==")), where);
                r.rhs = jr.value("rhs", 0.0);
                node.stage.rows.push_back(std::move(r));
            }
        }
        if (jn.contains("state_in")) node.stage.state_in = jn.at("state_in").get<std::vector<std::string>>();
        if (jn.contains("state_out")) node.stage.state_out = jn.at("state_out").get<std::vector<std::string>>();
        node.stage.objective_offset = jn.value("objective_offset", 0.0);
        node.support = jn.contains("support") ? jn.at("support").get<std::vector<double>>()
                                              : std::vector<double>{0.0};
        if (jn.contains("pmf")) node.pmf = jn.at("pmf").get<std::vector<double>>();
        else node.pmf.assign(node.support.size(), 1.0 / node.support.size());
        if (jn.contains("injections"))
            for (const auto& ji : jn.at("injections"))
                node.stage.injections.push_back(parse_injection(ji, where));
        if (jn.contains("option_cost"))
            node.stage.option_cost = jn.at("option_cost").get<std::vector<double>>();
        if (jn.contains("choice_cost")) {
            node.stage.choice_cost.assign(g.option_names.size(), 0.0);
            for (auto& [dn, c] : jn.at("choice_cost").items()) {
                auto it = std::find(g.option_names.begin(), g.option_names.end(), dn);
                if (it == g.option_names.end())
                    throw ValidationError("choice_cost names unknown option " + dn + " in " + where);
                node.stage.choice_cost[it - g.option_names.begin()] = c.get<double>();
            }
        }
        g.nodes.push_back(std::move(node));
    }

    auto node_id = [&](const std::string& n, const std::string& where) {
        int id = g.node_index(n);
        if (id < 0) throw ValidationError("unknown node '" + n + "' in " + where);
        return id;
    };

    bool any_choice = false, any_affine = !g.options.empty();
    for (const auto& ja : doc.at("arcs")) {
        reject_unknown(ja, {"from", "to", "prob", "response", "a", "probs"}, "arc");
        Arc arc;
        arc.from = node_id(ja.at("from").get<std::string>(), "arcs");
        arc.to = node_id(ja.at("to").get<std::string>(), "arcs");
        if (ja.contains("probs")) {
            any_choice = true;
            arc.choice_prob.assign(g.option_names.size(), 0.0);
            for (auto& [dn, pv] : ja.at("probs").items()) {
                auto it = std::find(g.option_names.begin(), g.option_names.end(), dn);
                if (it == g.option_names.end())
                    throw ValidationError("arc names unknown option " + dn);
                arc.choice_prob[it - g.option_names.begin()] = discount * pv.get<double>();
            }
        } else {
            arc.phi0 = discount * ja.value("prob", 0.0);
            if (ja.contains("response")) {
                any_affine = true;
                arc.response = ja.at("response").get<std::vector<double>>();
                for (double& r : arc.response) r *= discount;
            }
            if (ja.contains("a")) {
                any_affine = true;
                arc.per_child_a = ja.at("a").get<std::vector<double>>();
                arc.strict_affine = true;
                arc.response.assign(arc.per_child_a.size(), 0.0);
                for (size_t k = 0; k < arc.per_child_a.size(); ++k)
                    arc.response[k] = arc.phi0 * arc.per_child_a[k];
            }
        }
        g.arcs.push_back(std::move(arc));
    }
    if (any_choice && any_affine)
        throw ValidationError("model mixes matrix-choice and affine-response arcs");
    g.kind = any_choice ? TransitionKind::choice
                        : (any_affine ? TransitionKind::affine : TransitionKind::fixed);

    const auto& jr = doc.at("root");
    reject_unknown(jr, {"state", "arcs"}, "root");
    if (jr.contains("state")) g.root_state = jr.at("state").get<std::vector<double>>();
    for (const auto& ja : jr.at("arcs")) {
        reject_unknown(ja, {"to", "prob"}, "root arc");
        g.root_arcs.push_back(
            {node_id(ja.at("to").get<std::string>(), "root"), ja.at("prob").get<double>()});
    }

    if (doc.contains("ambiguity_sets")) {
        std::set<int> assigned;
        for (const auto& js : doc.at("ambiguity_sets")) {
            std::vector<int> set;
            for (const auto& jn : js) {
                int id = node_id(jn.get<std::string>(), "ambiguity_sets");
                set.push_back(id);
                assigned.insert(id);
            }
            g.ambiguity_sets.push_back(std::move(set));
        }
        for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i)
            if (!assigned.count(i)) g.ambiguity_sets.push_back({i});
    } else {
        for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i) g.ambiguity_sets.push_back({i});
    }
    return g;
}

PolicyGraph load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open model file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

std::string serialize_model(const PolicyGraph& g) {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["name"] = g.name;
    doc["sense"] = g.sense == Sense::maximize ? "max" : "min";
    if (g.num_models != 1) {
        doc["models"] = g.num_models;
        doc["beliefs"] = g.prior;
    }
    if (!g.options.empty()) doc["options"] = g.options;
    if (!g.option_names.empty()) doc["option_names"] = g.option_names;

    doc["root"] = json::object();
    doc["root"]["state"] = g.root_state;
    doc["root"]["arcs"] = json::array();
    for (const auto& ra : g.root_arcs)
        doc["root"]["arcs"].push_back({{"to", g.nodes[ra.to].name}, {"prob", ra.prob}});

    doc["nodes"] = json::array();
    for (const auto& node : g.nodes) {
        json jn;
        jn["name"] = node.name;
        if (g.num_models != 1) jn["model"] = node.model + 1;
        if (!node.stage.vars.empty()) {
            jn["variables"] = json::array();
            for (const auto& v : node.stage.vars)
                jn["variables"].push_back({{"name", v.name},
                                           {"lower", dump_bound(v.lower)},
                                           {"upper", dump_bound(v.upper)},
                                           {"objective", v.objective}});
        }
        if (!node.stage.rows.empty()) {
            jn["constraints"] = json::array();
            for (const auto& r : node.stage.rows) {
                json coeffs = json::object();
                for (auto& [vn, c] : r.coeffs) coeffs[vn] = c;
                jn["constraints"].push_back({{"name", r.name},
                                             {"coeffs", coeffs},
                                             {"sense", sense_text(r.sense)},
                                             {"rhs", r.rhs}});
            }
        }
        if (!node.stage.state_in.empty()) jn["state_in"] = node.stage.state_in;
        if (!node.stage.state_out.empty()) jn["state_out"] = node.stage.state_out;
        if (node.stage.objective_offset != 0.0) jn["objective_offset"] = node.stage.objective_offset;
        jn["support"] = node.support;
        jn["pmf"] = node.pmf;
        if (!node.stage.injections.empty()) {
            jn["injections"] = json::array();
            for (const auto& inj : node.stage.injections)
                jn["injections"].push_back({{"target", injection_target_text(inj)},
                                            {"field", injection_field_text(inj.field)},
                                            {"per_omega", inj.per_omega}});
        }
        if (!node.stage.option_cost.empty()) jn["option_cost"] = node.stage.option_cost;
        if (!node.stage.choice_cost.empty()) {
            json cc = json::object();
            for (size_t d = 0; d < node.stage.choice_cost.size(); ++d)
                if (node.stage.choice_cost[d] != 0.0) cc[g.option_names[d]] = node.stage.choice_cost[d];
            if (!cc.empty()) jn["choice_cost"] = cc;
        }
        doc["nodes"].push_back(std::move(jn));
    }

    doc["arcs"] = json::array();
    for (const auto& arc : g.arcs) {
        json ja;
        ja["from"] = g.nodes[arc.from].name;
        ja["to"] = g.nodes[arc.to].name;
        if (g.kind == TransitionKind::choice) {
            json probs = json::object();
            for (size_t d = 0; d < arc.choice_prob.size(); ++d)
                probs[g.option_names[d]] = arc.choice_prob[d];
            ja["probs"] = probs;
        } else {
            ja["prob"] = arc.phi0;
            if (arc.strict_affine) ja["a"] = arc.per_child_a;
            else if (!arc.response.empty()) ja["response"] = arc.response;
        }
        doc["arcs"].push_back(std::move(ja));
    }

    if (!g.ambiguity_sets.empty()) {
        json sets = json::array();
        for (const auto& s : g.ambiguity_sets) {
            if (s.size() <= 1) continue;  // singletons are implied
            json names = json::array();
            for (int id : s) names.push_back(g.nodes[id].name);
            sets.push_back(std::move(names));
        }
        if (!sets.empty()) doc["ambiguity_sets"] = std::move(sets);
    }
    return doc.dump(2) + "\n";
}

void save_model_file(const PolicyGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write model file " + path);
    out << serialize_model(g);
}

}  // namespace sddp
