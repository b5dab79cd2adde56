#include "sddp/examples.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sddp/errors.hpp"

namespace sddp {

namespace {

class Params {
public:
    Params(const std::string& example, const std::map<std::string, double>& overrides)
        : example_(example), overrides_(overrides) {}
    double get(const std::string& key, double fallback) {
        used_.insert(key);
        auto it = overrides_.find(key);
        return it == overrides_.end() ? fallback : it->second;
    }
    void finish() const {
        for (auto& [k, v] : overrides_)
            if (!used_.count(k))
                throw ConfigError("unknown override '" + k + "' for example " + example_);
    }

private:
    std::string example_;
    std::map<std::string, double> overrides_;
    std::set<std::string> used_;
};

void singleton_sets(PolicyGraph& g) {
    g.ambiguity_sets.clear();
    for (size_t i = 0; i < g.nodes.size(); ++i)
        g.ambiguity_sets.push_back({static_cast<int>(i)});
}

std::vector<double> uniform_pmf(size_t n) {
    return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

// The recurring selling subproblem: min -price*u + holding*x_out (or the
// profit version), u <= x, x_out = x - u, u <= omega via an upper-bound
// injection.
StageTemplate sell_stage(double price, double holding, double max_demand, double x_cap,
                         bool maximize) {
    const double sgn = maximize ? 1.0 : -1.0;  // stored in the graph's declared sense
    StageTemplate st;
    st.vars = {{"x", 0.0, x_cap, 0.0},
               {"u", 0.0, max_demand, sgn * price},
               {"x_out", 0.0, x_cap, maximize ? -holding : holding}};
    st.rows = {{"avail", {{"u", 1.0}, {"x", -1.0}}, RowSense::le, 0.0},
               {"balance", {{"x_out", 1.0}, {"x", -1.0}, {"u", 1.0}}, RowSense::eq, 0.0}};
    st.state_in = {"x"};
    st.state_out = {"x_out"};
    return st;
}

PolicyGraph two_stage_newsvendor(Params& p) {
    const double order_cost = p.get("order_cost", 2.0);
    const double price = p.get("price", 5.0);
    const double disposal = p.get("disposal", 0.1);
    const double u_cap = p.get("u_cap", 100.0);
    const double x_cap = p.get("x_cap", 200.0);

    PolicyGraph g;
    g.name = "two_stage_newsvendor";
    g.sense = Sense::minimize;
    g.kind = TransitionKind::fixed;
    g.root_state = {0.0};

    Node order;
    order.name = "order";
    order.stage.vars = {{"x", 0.0, x_cap, 0.0}, {"u", 0.0, u_cap, order_cost},
                        {"x_out", 0.0, x_cap, 0.0}};
    order.stage.rows = {{"balance", {{"x_out", 1.0}, {"x", -1.0}, {"u", -1.0}}, RowSense::eq, 0.0}};
    order.stage.state_in = {"x"};
    order.stage.state_out = {"x_out"};
    order.support = {0.0};
    order.pmf = {1.0};

    Node sell;
    sell.name = "sell";
    sell.stage = sell_stage(price, disposal, 30.0, x_cap, false);
    sell.support = {10.0, 20.0, 30.0};
    sell.pmf = uniform_pmf(3);
    sell.stage.injections = {{InjectField::upper, "u", sell.support}};

    g.nodes = {order, sell};
    g.arcs = {{0, 1, 1.0, {}, {}, false, {}}};
    g.root_arcs = {{0, 1.0}};
    singleton_sets(g);
    return g;
}

PolicyGraph cyclic_newsvendor(Params& p) {
    const double rho = p.get("rho", 0.9);
    const double order_cost = p.get("order_cost", 2.0);
    const double price = p.get("price", 5.0);
    const double holding = p.get("holding", 0.1);
    const double u_cap = p.get("u_cap", 100.0);
    const double x_cap = p.get("x_cap", 250.0);

    PolicyGraph g;
    g.name = "cyclic_newsvendor";
    g.sense = Sense::minimize;
    g.kind = TransitionKind::fixed;
    g.root_state = {0.0};

    Node setup;
    setup.name = "setup";
    setup.stage.vars = {{"x", 0.0, x_cap, 0.0}, {"u", 0.0, u_cap, order_cost},
                        {"x_out", 0.0, x_cap, 0.0}};
    setup.stage.rows = {{"balance", {{"x_out", 1.0}, {"x", -1.0}, {"u", -1.0}}, RowSense::eq, 0.0}};
    setup.stage.state_in = {"x"};
    setup.stage.state_out = {"x_out"};
    setup.support = {0.0};
    setup.pmf = {1.0};

    Node trade;
    trade.name = "trade";
    trade.stage.vars = {{"x", 0.0, x_cap, 0.0},
                        {"u_s", 0.0, 30.0, -price},
                        {"u_b", 0.0, u_cap, order_cost},
                        {"x_out", 0.0, x_cap, holding}};
    trade.stage.rows = {{"avail", {{"u_s", 1.0}, {"x", -1.0}}, RowSense::le, 0.0},
                        {"balance",
                         {{"x_out", 1.0}, {"x", -1.0}, {"u_s", 1.0}, {"u_b", -1.0}},
                         RowSense::eq,
                         0.0}};
    trade.stage.state_in = {"x"};
    trade.stage.state_out = {"x_out"};
    trade.support = {10.0, 20.0, 30.0};
    trade.pmf = uniform_pmf(3);
    trade.stage.injections = {{InjectField::upper, "u_s", trade.support}};

    g.nodes = {setup, trade};
    g.arcs = {{0, 1, 1.0, {}, {}, false, {}}, {1, 1, rho, {}, {}, false, {}}};
    g.root_arcs = {{0, 1.0}};
    singleton_sets(g);
    return g;
}

// Shared two-state market chain used by the Markov examples.
PolicyGraph markov_market(Params& p, const std::string& name, double phi_ss, double phi_sc,
                          double phi_cs, double phi_cc,
                          std::vector<double> hi_support, std::vector<double> lo_support) {
    const double rho = p.get("rho", 0.9);
    const double price = p.get("price", 5.0);
    const double order_cost = p.get("order_cost", 2.0);
    const double holding = p.get("holding", 0.1);
    const double x_cap = p.get("x_cap", 250.0);
    const double u_cap = p.get("u_cap", 100.0);

    PolicyGraph g;
    g.name = name;
    g.sense = Sense::minimize;
    g.kind = TransitionKind::fixed;
    g.root_state = {0.0};

    auto market_node = [&](const std::string& nm, std::vector<double> support) {
        Node node;
        node.name = nm;
        node.stage.vars = {{"x", 0.0, x_cap, 0.0},
                           {"u_s", 0.0, 50.0, -price},
                           {"u_b", 0.0, u_cap, order_cost},
                           {"x_out", 0.0, x_cap, holding}};
        node.stage.rows = {{"avail", {{"u_s", 1.0}, {"x", -1.0}}, RowSense::le, 0.0},
                           {"balance",
                            {{"x_out", 1.0}, {"x", -1.0}, {"u_s", 1.0}, {"u_b", -1.0}},
                            RowSense::eq,
                            0.0}};
        node.stage.state_in = {"x"};
        node.stage.state_out = {"x_out"};
        node.support = std::move(support);
        node.pmf = uniform_pmf(node.support.size());
        node.stage.injections = {{InjectField::upper, "u_s", node.support}};
        return node;
    };
    g.nodes = {market_node("sunny", std::move(hi_support)),
               market_node("cloudy", std::move(lo_support))};
    g.arcs = {{0, 0, rho * phi_ss, {}, {}, false, {}},
              {0, 1, rho * phi_sc, {}, {}, false, {}},
              {1, 0, rho * phi_cs, {}, {}, false, {}},
              {1, 1, rho * phi_cc, {}, {}, false, {}}};
    g.root_arcs = {{0, 0.5}, {1, 0.5}};
    singleton_sets(g);
    return g;
}

PolicyGraph markovian_newsvendor(Params& p) {
    return markov_market(p, "markovian_newsvendor", 0.6, 0.4, 0.3, 0.7, {15.0, 25.0, 35.0},
                         {5.0, 15.0, 25.0});
}

// Decision-dependent market chain of the advertising example:
//   Phi(y) = rho * [[0.5+0.3y, 0.5-0.3y], [0.5+0.2y, 0.5-0.2y]],  y in {0,1}.
PolicyGraph advertising(Params& p) {
    const double rho = p.get("rho", 0.9);
    const double c_y = p.get("c_y", 1.0);
    auto g = markov_market(p, "advertising", 0.5, 0.5, 0.5, 0.5, {15.0, 25.0, 35.0},
                           {5.0, 15.0, 25.0});
    g.kind = TransitionKind::affine;
    g.options = {{0.0}, {1.0}};
    g.option_names = {"idle", "advertise"};
    g.arcs = {{0, 0, rho * 0.5, {rho * 0.3}, {}, false, {}},
              {0, 1, rho * 0.5, {-rho * 0.3}, {}, false, {}},
              {1, 0, rho * 0.5, {rho * 0.2}, {}, false, {}},
              {1, 1, rho * 0.5, {-rho * 0.2}, {}, false, {}}};
    for (auto& node : g.nodes) node.stage.option_cost = {c_y};
    return g;
}

// Farm node shared by the cheese family: x_out = x + omega_q - spill.
Node farm_node(double x_cap, std::vector<double> omega_q) {
    Node farm;
    farm.name = "farm";
    farm.stage.vars = {{"x", 0.0, x_cap, 0.0},
                       {"x_out", 0.0, x_cap, 0.0},
                       {"spill", 0.0, kInf, 0.0}};
    farm.stage.rows = {
        {"balance", {{"x_out", 1.0}, {"x", -1.0}, {"spill", 1.0}}, RowSense::eq, 0.0}};
    farm.stage.state_in = {"x"};
    farm.stage.state_out = {"x_out"};
    farm.support = std::move(omega_q);
    farm.pmf = uniform_pmf(farm.support.size());
    farm.stage.injections = {{InjectField::rhs, "balance", farm.support}};
    return farm;
}

PolicyGraph cheese_producer(Params& p) {
    const double rho = p.get("rho", 0.9);
    const double c_y = p.get("c_y", 3.0);
    const double c_u = p.get("c_u", 1.0);
    const double x_cap = p.get("x_cap", 50.0);

    PolicyGraph g;
    g.name = "cheese_producer";
    g.sense = Sense::maximize;  // profit
    g.kind = TransitionKind::choice;
    g.option_names = {"stay", "go"};
    g.root_state = {0.0};

    Node farm = farm_node(x_cap, {0.0, 2.0, 4.0, 6.0, 8.0});
    farm.stage.choice_cost = {0.0, -c_y};  // attending the market costs c_y

    Node market;
    market.name = "market";
    market.stage = sell_stage(c_u, 0.0, 10.0, x_cap, true);
    market.support = {5.0, 10.0};
    market.pmf = uniform_pmf(2);
    market.stage.injections = {{InjectField::upper, "u", market.support}};
    market.stage.choice_cost = {0.0, 0.0};

    g.nodes = {farm, market};
    g.arcs = {{0, 0, 0.0, {}, {}, false, {rho, 0.0}},   // farm self-loop under "stay"
              {0, 1, 0.0, {}, {}, false, {0.0, 1.0}},   // to market under "go"
              {1, 0, 0.0, {}, {}, false, {rho, rho}}};  // market back to the farm
    g.root_arcs = {{0, 1.0}};
    singleton_sets(g);
    return g;
}

PolicyGraph cheese_advertising(Params& p) {
    const double rho = p.get("rho", 0.9);
    const double c_y = p.get("c_y", 3.0);
    const double c_u = p.get("c_u", 1.0);
    const double x_cap = p.get("x_cap", 50.0);

    PolicyGraph g;
    g.name = "cheese_advertising";
    g.sense = Sense::maximize;
    g.kind = TransitionKind::choice;
    g.option_names = {"plain", "advertise"};
    g.root_state = {0.0};

    Node farm = farm_node(x_cap, {0.0, 2.0, 4.0, 6.0, 8.0});
    farm.stage.choice_cost = {0.0, -c_y};

    auto market = [&](const std::string& nm, std::vector<double> support) {
        Node node;
        node.name = nm;
        node.stage = sell_stage(c_u, 0.0, 14.0, x_cap, true);
        node.support = std::move(support);
        node.pmf = uniform_pmf(node.support.size());
        node.stage.injections = {{InjectField::upper, "u", node.support}};
        node.stage.choice_cost = {0.0, 0.0};
        return node;
    };
    g.nodes = {farm, market("market_high", {8.0, 14.0}), market("market_low", {2.0, 6.0})};
    g.arcs = {{0, 1, 0.0, {}, {}, false, {0.0, 1.0}},
              {0, 2, 0.0, {}, {}, false, {1.0, 0.0}},
              {1, 0, 0.0, {}, {}, false, {rho, rho}},
              {2, 0, 0.0, {}, {}, false, {rho, rho}}};
    g.root_arcs = {{0, 1.0}};
    singleton_sets(g);
    return g;
}

PolicyGraph markovian_learning(Params& p) {
    const double b1 = p.get("prior_1", 0.5);
    auto base = [&](double phi_ss, double phi_sc, double phi_cs, double phi_cc,
                    std::vector<double> sunny_pmf, std::vector<double> cloudy_pmf) {
        auto g = markov_market(p, "markovian", phi_ss, phi_sc, phi_cs, phi_cc,
                               {5.0, 15.0, 25.0, 35.0}, {5.0, 15.0, 25.0, 35.0});
        g.nodes[0].pmf = std::move(sunny_pmf);
        g.nodes[1].pmf = std::move(cloudy_pmf);
        return g;
    };
    // model 1: persistent weather with demand skewed by the state;
    // model 2: fast-switching weather with milder skew
    auto m1 = base(0.7, 0.3, 0.3, 0.7, {0.05, 0.15, 0.30, 0.50}, {0.50, 0.30, 0.15, 0.05});
    auto m2 = base(0.3, 0.7, 0.7, 0.3, {0.20, 0.30, 0.30, 0.20}, {0.20, 0.30, 0.30, 0.20});
    auto g = augment_with_models({m1, m2}, {b1, 1.0 - b1});
    g.name = "markovian_learning";
    return g;
}

PolicyGraph cheese_information_discovery(Params& p) {
    const double rho = p.get("rho", 0.9);
    const double c_y = p.get("c_y", 3.0);
    const double c_u = p.get("c_u", 1.0);
    const double x_cap = p.get("x_cap", 50.0);
    const double b1 = p.get("prior_1", 0.5);

    auto model = [&](std::vector<double> demand_pmf) {
        PolicyGraph g;
        g.name = "cheese_discovery";
        g.sense = Sense::maximize;
        g.kind = TransitionKind::affine;
        g.options = {{0.0}, {1.0}};
        g.option_names = {"skip", "attend"};
        g.root_state = {0.0};

        Node farm = farm_node(x_cap, {0.0, 2.0, 4.0, 6.0, 8.0});
        farm.stage.option_cost = {-c_y};  // attending costs c_y (profit sense)

        Node market;
        market.name = "market";
        market.stage = sell_stage(c_u, 0.0, 11.0, x_cap, true);
        market.support = {2.0, 5.0, 8.0, 11.0};
        market.pmf = std::move(demand_pmf);
        market.stage.injections = {{InjectField::upper, "u", market.support}};
        market.stage.option_cost = {0.0};

        g.nodes = {farm, market};
        g.arcs = {{0, 0, rho, {-rho}, {}, false, {}},  // phi = rho (1 - y)
                  {0, 1, 0.0, {1.0}, {}, false, {}},   // phi = y
                  {1, 0, rho, {0.0}, {}, false, {}}};
        g.root_arcs = {{0, 1.0}};
        singleton_sets(g);
        return g;
    };
    auto high = model({0.0, 0.0, 0.5, 0.5});
    auto low = model({0.5, 0.5, 0.0, 0.0});
    auto g = augment_with_models({high, low}, {b1, 1.0 - b1});
    g.name = "cheese_information_discovery";
    return g;
}

PolicyGraph tiger(Params& p) {
    const double rho = p.get("rho", 0.95);
    const double fp = p.get("fp", 0.15);
    const double cost_tiger = p.get("cost_tiger", 100.0);
    const double cost_escape = p.get("cost_escape", -10.0);
    const double cost_listen = p.get("cost_listen", 1.0);

    PolicyGraph g;
    g.name = "tiger";
    g.sense = Sense::minimize;
    g.kind = TransitionKind::affine;
    g.options = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};  // keep listening / open left / open right
    g.option_names = {"listen", "open_left", "open_right"};
    g.root_state = {};
    g.num_models = 2;
    g.prior = {0.5, 0.5};

    auto listen_node = [&](const std::string& nm, int model, double p_hear_left) {
        Node node;
        node.name = nm;
        node.model = model;
        node.stage.objective_offset = cost_listen;
        node.stage.option_cost = {0.0, 0.0};
        node.support = {1.0, -1.0};  // hear left / hear right
        node.pmf = {p_hear_left, 1.0 - p_hear_left};
        return node;
    };
    auto door_node = [&](const std::string& nm, int model, double cost) {
        Node node;
        node.name = nm;
        node.model = model;
        node.stage.objective_offset = cost;
        node.support = {0.0};
        node.pmf = {1.0};
        return node;
    };
    g.nodes = {listen_node("l", 0, 1.0 - fp), listen_node("r", 1, fp),
               door_node("ll", 0, cost_tiger), door_node("lr", 0, cost_escape),
               door_node("rl", 1, cost_escape), door_node("rr", 1, cost_tiger)};
    g.arcs = {{0, 0, rho, {-rho, -rho}, {}, false, {}},  // rho (1 - y_l - y_r)
              {0, 2, 0.0, {1.0, 0.0}, {}, false, {}},
              {0, 3, 0.0, {0.0, 1.0}, {}, false, {}},
              {1, 1, rho, {-rho, -rho}, {}, false, {}},
              {1, 4, 0.0, {1.0, 0.0}, {}, false, {}},
              {1, 5, 0.0, {0.0, 1.0}, {}, false, {}}};
    g.root_arcs = {{0, 0.5}, {1, 0.5}};
    g.ambiguity_sets = {{0, 1}, {2}, {3}, {4}, {5}};
    return g;
}

}  // namespace

std::vector<std::string> example_names() {
    return {"two_stage_newsvendor",  "cyclic_newsvendor", "markovian_newsvendor",
            "cheese_producer",       "cheese_advertising", "advertising",
            "markovian_learning",    "cheese_information_discovery", "tiger"};
}

PolicyGraph build_example(const std::string& name,
                          const std::map<std::string, double>& overrides) {
    Params p(name, overrides);
    PolicyGraph g;
    if (name == "two_stage_newsvendor") g = two_stage_newsvendor(p);
    else if (name == "cyclic_newsvendor") g = cyclic_newsvendor(p);
    else if (name == "markovian_newsvendor") g = markovian_newsvendor(p);
    else if (name == "cheese_producer") g = cheese_producer(p);
    else if (name == "cheese_advertising") g = cheese_advertising(p);
    else if (name == "advertising") g = advertising(p);
    else if (name == "markovian_learning") g = markovian_learning(p);
    else if (name == "cheese_information_discovery") g = cheese_information_discovery(p);
    else if (name == "tiger") g = tiger(p);
    else throw ConfigError("unknown example: " + name);
    p.finish();
    return g;
}

}  // namespace sddp
