#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sddp/engine.hpp"

namespace sddp {

using json = nlohmann::ordered_json;

namespace {

constexpr int kCutFileVersion = 1;

json dump_cut(double alpha, const std::vector<double>& beta, const std::vector<double>* gamma,
              long iteration) {
    json j;
    j["alpha"] = alpha;
    j["beta"] = beta;
    if (gamma) j["gamma"] = *gamma;
    j["iteration"] = iteration;
    return j;
}

}  // namespace

std::string serialize_cuts(const TrainedPolicy& p) {
    json doc;
    doc["version"] = kCutFileVersion;
    doc["variant"] = variant_name(p.variant);
    doc["big_m"] = p.big_m;
    doc["m_theta"] = p.m_theta;
    doc["seed"] = p.seed;
    doc["nodes"] = json::array();
    for (size_t i = 0; i < p.graph.nodes.size(); ++i) {
        const auto& np = p.pool.per_node[i];
        json jn;
        jn["name"] = p.graph.nodes[i].name;
        if (!np.plain.empty()) {
            jn["plain"] = json::array();
            for (const auto& c : np.plain) jn["plain"].push_back(dump_cut(c.alpha, c.beta, nullptr, c.iteration));
        }
        if (!np.option_cuts.empty()) {
            jn["option_cuts"] = json::array();
            for (const auto& c : np.option_cuts)
                jn["option_cuts"].push_back(dump_cut(c.alpha, c.beta, &c.gamma, c.iteration));
        }
        if (!np.per_omega.empty()) {
            jn["per_omega"] = json::array();
            for (const auto& list : np.per_omega) {
                json jo = json::array();
                for (const auto& c : list) jo.push_back(dump_cut(c.alpha, c.beta, nullptr, c.iteration));
                jn["per_omega"].push_back(std::move(jo));
            }
        }
        doc["nodes"].push_back(std::move(jn));
    }
    if (!p.pool.per_set.empty()) {
        doc["sets"] = json::array();
        for (const auto& blocks : p.pool.per_set) {
            json js = json::array();
            for (const auto& b : blocks) {
                json jb;
                jb["anchor"] = b.anchor;
                jb["iteration"] = b.iteration;
                jb["triples"] = json::array();
                for (const auto& t : b.triples)
                    jb["triples"].push_back(dump_cut(t.alpha, t.beta, &t.gamma, t.iteration));
                js.push_back(std::move(jb));
            }
            doc["sets"].push_back(std::move(js));
        }
    }
    doc["log"] = json::array();
    for (const auto& rec : p.log) doc["log"].push_back({{"iteration", rec.iteration}, {"bound", rec.bound}});
    doc["stats"] = {{"sandwich_checks", p.sandwich_checks},
                    {"sandwich_violations", p.sandwich_violations},
                    {"monotone_checks", p.monotone_checks},
                    {"monotone_violations", p.monotone_violations},
                    {"truncated_paths", p.truncated_paths}};
    return doc.dump(2) + "\n";
}

TrainedPolicy parse_cuts(const PolicyGraph& g, const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("cut file parse error: ") + e.what());
    }
    if (!doc.contains("version") || doc.at("version").get<int>() != kCutFileVersion)
        throw ValidationError("cut file version mismatch");
    TrainedPolicy p = make_policy(g, variant_from_name(doc.at("variant").get<std::string>()));
    p.big_m = doc.value("big_m", p.big_m);
    p.m_theta = doc.value("m_theta", p.m_theta);
    p.seed = doc.value("seed", std::uint64_t{0});

    const auto& jnodes = doc.at("nodes");
    if (jnodes.size() != g.nodes.size())
        throw ValidationError("cut file node count does not match the graph");
    auto read_cut = [](const json& j, bool with_gamma) {
        OptionCut c;
        c.alpha = j.at("alpha").get<double>();
        c.beta = j.at("beta").get<std::vector<double>>();
        if (with_gamma && j.contains("gamma")) c.gamma = j.at("gamma").get<std::vector<double>>();
        c.iteration = j.at("iteration").get<long>();
        return c;
    };
    for (size_t i = 0; i < jnodes.size(); ++i) {
        const auto& jn = jnodes[i];
        const std::string name = jn.at("name").get<std::string>();
        if (name != g.nodes[i].name)
            throw ValidationError("cut file names node '" + name + "' where the graph has '" +
                                  g.nodes[i].name + "'");
        auto& np = p.pool.per_node[i];
        np = NodePool{};
        if (jn.contains("plain"))
            for (const auto& jc : jn.at("plain")) {
                auto c = read_cut(jc, false);
                np.plain.push_back({c.alpha, c.beta, c.iteration});
            }
        if (jn.contains("option_cuts"))
            for (const auto& jc : jn.at("option_cuts")) np.option_cuts.push_back(read_cut(jc, true));
        if (jn.contains("per_omega")) {
            for (const auto& jo : jn.at("per_omega")) {
                std::vector<RealizationCut> list;
                for (const auto& jc : jo) {
                    auto c = read_cut(jc, false);
                    list.push_back({c.alpha, c.beta, c.iteration});
                }
                np.per_omega.push_back(std::move(list));
            }
        }
    }
    if (doc.contains("sets")) {
        const auto& jsets = doc.at("sets");
        if (jsets.size() != g.ambiguity_sets.size())
            throw ValidationError("cut file ambiguity-set count does not match the graph");
        p.pool.per_set.assign(jsets.size(), {});
        for (size_t s = 0; s < jsets.size(); ++s) {
            for (const auto& jb : jsets[s]) {
                BeliefBlock b;
                b.anchor = jb.at("anchor").get<std::vector<double>>();
                b.iteration = jb.at("iteration").get<long>();
                for (const auto& jt : jb.at("triples")) b.triples.push_back(read_cut(jt, true));
                p.pool.per_set[s].push_back(std::move(b));
            }
        }
    }
    if (doc.contains("log"))
        for (const auto& jl : doc.at("log"))
            p.log.push_back({jl.at("iteration").get<long>(), jl.at("bound").get<double>()});
    if (doc.contains("stats")) {
        const auto& st = doc.at("stats");
        p.sandwich_checks = st.value("sandwich_checks", 0L);
        p.sandwich_violations = st.value("sandwich_violations", 0L);
        p.monotone_checks = st.value("monotone_checks", 0L);
        p.monotone_violations = st.value("monotone_violations", 0L);
        p.truncated_paths = st.value("truncated_paths", 0L);
    }
    return p;
}

void save_cuts(const TrainedPolicy& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write cut file " + path);
    out << serialize_cuts(p);
}

TrainedPolicy load_cuts(const PolicyGraph& g, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open cut file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_cuts(g, buf.str());
}

}  // namespace sddp
