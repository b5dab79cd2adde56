#include "sddp/cuts.hpp"

#include "sddp/errors.hpp"

namespace sddp {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::classic: return "classic";
        case Variant::ddu_adaptive: return "ddu_adaptive";
        case Variant::ddu_lagrangian: return "ddu_lagrangian";
        case Variant::learning: return "learning";
    }
    return "classic";
}

Variant variant_from_name(const std::string& name) {
    if (name == "classic") return Variant::classic;
    if (name == "ddu_adaptive") return Variant::ddu_adaptive;
    if (name == "ddu_lagrangian") return Variant::ddu_lagrangian;
    if (name == "learning") return Variant::learning;
    throw ConfigError("unknown variant: " + name);
}

CutPool init_pool(const PolicyGraph& g, const GraphIndex& ix, Variant variant, double big_m) {
    CutPool pool;
    const int n = static_cast<int>(g.nodes.size());
    pool.per_node.resize(n);
    const int q = g.option_dim();
    for (int i = 0; i < n; ++i) {
        const int dim_in = static_cast<int>(g.nodes[i].stage.state_in.size());
        const int dim_out = static_cast<int>(g.nodes[i].stage.state_out.size());
        switch (variant) {
            case Variant::classic:
                pool.per_node[i].plain.push_back({-big_m, std::vector<double>(dim_out, 0.0), 0});
                break;
            case Variant::ddu_adaptive:
                pool.per_node[i].option_cuts.push_back(
                    {-big_m, std::vector<double>(dim_in, 0.0), std::vector<double>(q, 0.0), 0});
                break;
            case Variant::ddu_lagrangian:
                pool.per_node[i].per_omega.assign(
                    g.nodes[i].support.size(),
                    {RealizationCut{-big_m, std::vector<double>(dim_in, 0.0), 0}});
                break;
            case Variant::learning:
                break;
        }
    }
    if (variant == Variant::learning) {
        pool.per_set.resize(g.ambiguity_sets.size());
        for (size_t s = 0; s < g.ambiguity_sets.size(); ++s) {
            const auto& slots = ix.set_children[s];
            if (slots.empty()) continue;
            for (int m = 0; m < g.num_models; ++m) {
                BeliefBlock block;
                block.anchor.assign(g.num_models, 0.0);
                block.anchor[m] = 1.0;  // simplex vertex: every belief interpolates
                block.iteration = 0;
                for (int cs : slots) {
                    int member = ix.set_member[cs][0];
                    int dim = static_cast<int>(g.nodes[member].stage.state_in.size());
                    for (int mm = 0; mm < g.num_models; ++mm) {
                        (void)mm;
                        block.triples.push_back(
                            {-big_m, std::vector<double>(dim, 0.0), std::vector<double>(q, 0.0), 0});
                    }
                }
                pool.per_set[s].push_back(std::move(block));
            }
        }
    }
    return pool;
}

}  // namespace sddp
