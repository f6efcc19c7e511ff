#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>

#include "batsim/scenario.hpp"

using namespace batsim;
using Catch::Approx;

namespace {

const char* kBase = R"(
[scenario]
horizon = 10
hello_period = 1
staleness = 1.5
beta = 1
exhaust_threshold = 0.1

[codec]
d_min = 0
d_max = 0.5
slots = 11
)";

std::string node_block(const std::string& id, double k, double f_init, double lambda, double mu,
                       const char* initial = "ON") {
    std::ostringstream os;
    os << "[node " << id << "]\nK = " << k << "\ntau = 10\nC_N = 5\nF_init = " << f_init
       << "\nlambda = " << lambda << "\nmu = " << mu << "\ninitial = " << initial << "\n";
    return os.str();
}

bool mentions(const ConfigError& e, const std::string& field) {
    for (const auto& p : e.problems()) {
        if (p.rfind(field, 0) == 0) {
            return true;
        }
    }
    return false;
}

ConfigError parse_error(const std::string& text) {
    try {
        parse_scenario_config(text);
    } catch (const ConfigError& e) {
        return e;
    }
    FAIL("expected a ConfigError");
    return ConfigError({});
}

std::size_t count_kind(const ScenarioResult& r, const std::string& kind) {
    std::size_t n = 0;
    for (const auto& e : r.events) {
        if (e.find("," + kind + ",") != std::string::npos) {
            ++n;
        }
    }
    return n;
}

}  // namespace

TEST_CASE("config parser reads every section", "[scenario][config]") {
    const auto cfg = load_scenario_config(std::string(BATSIM_CONFIG_DIR) + "/diamond.cfg");
    CHECK(cfg.nodes.size() == 5);
    CHECK(cfg.links.size() == 5);
    REQUIRE(cfg.queries.size() == 1);
    CHECK(cfg.queries[0].src == "A");
    CHECK(cfg.slots == 11);
    CHECK(cfg.d_max == 0.5);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1});
    CHECK(cfg.output_dir == "diamond_out");
    CHECK(cfg.nodes[1].id == "B");
    CHECK(cfg.nodes[1].f_init == 0.9);
    CHECK(cfg.nodes[1].initial == NodeState::Off);

    const auto mesh = load_scenario_config(std::string(BATSIM_CONFIG_DIR) + "/mesh.cfg");
    CHECK(mesh.seeds == std::vector<std::uint64_t>{1, 2, 3});
}

TEST_CASE("config errors name the offending field", "[scenario][config]") {
    const auto nodes = node_block("A", 1, 0, 0, 0) + node_block("B", 1, 0, 0, 0);

    auto e = parse_error(std::string(kBase) + node_block("A", -1, 0, 0, 0));
    CHECK(mentions(e, "node A.K"));

    std::string no_horizon = kBase;
    no_horizon.replace(no_horizon.find("horizon = 10"), 12, "");
    e = parse_error(no_horizon + nodes);
    CHECK(mentions(e, "scenario.horizon"));

    e = parse_error(std::string(kBase) + nodes + "[links]\nA Z\n[queries]\nA A\n");
    CHECK(mentions(e, "links.A-Z"));
    CHECK(mentions(e, "queries.A-A"));

    e = parse_error(std::string(kBase) + nodes + "[codec]\nslots = 1\n");
    CHECK(mentions(e, "codec.slots"));

    e = parse_error(std::string(kBase) + "[node A]\nK = abc\n");
    CHECK(mentions(e, "node A.K"));
    CHECK(mentions(e, "node A.tau"));

    e = parse_error(std::string(kBase) + nodes + "[scenario]\nwobble = 3\nseeds = 1, 1\n");
    CHECK(mentions(e, "scenario.wobble"));

    CHECK_THROWS_AS(load_scenario_config("/nonexistent/file.cfg"), std::runtime_error);
}

TEST_CASE("without HELLO rounds no multi-hop route exists", "[scenario]") {
    std::string text = kBase;
    text.replace(text.find("hello_period = 1"), 16, "hello_period = 20");
    text += node_block("A", 0.01, 0, 0, 0) + node_block("B", 0.01, 0, 0, 0) +
            node_block("C", 0.01, 0, 0, 0) + "[links]\nA B\nB C\n[queries]\nA C\nA B\n";
    const auto r = run_scenario(parse_scenario_config(text));
    CHECK(r.rounds == 0);
    REQUIRE(r.routes.size() == 2);
    CHECK_FALSE(r.routes[0].route.has_value());
    REQUIRE(r.routes[1].route.has_value());
    CHECK(r.routes[1].route->path.size() == 2);
    CHECK(r.metric("hello_sent") == "0");
}

TEST_CASE("tables track residual energy within half a slot", "[scenario]") {
    std::string text = kBase;
    text += node_block("A", 0.3, 0, 0, 1) + node_block("B", 0.2, 0.1, 0, 1) + "[links]\nA B\n";
    const auto cfg = parse_scenario_config(text);
    const auto r = run_scenario(cfg);
    const double half = cfg.codec().energy_step() / 2;
    REQUIRE(r.observations.size() == 2 * r.rounds);
    for (const auto& o : r.observations) {
        CHECK(std::abs(o.decoded - o.actual) <= half + 1e-12);
    }
    // Always ON, so the final SOD is the continuous value at the horizon.
    CHECK(r.final_sod.at("A") == Approx(sod_continuous(SodModel(0.3, 10, 5), 10.0)).epsilon(1e-12));
    CHECK(r.death_times.empty());
}

TEST_CASE("a node dies at its predicted lifetime and leaves the graph", "[scenario]") {
    std::string text = kBase;
    text += node_block("A", 0.01, 0, 0, 0) + node_block("H", 1.0, 0, 0, 1) +
            node_block("C", 0.01, 0, 0, 0) + "[links]\nA H\nH C\n[queries]\nA C\nA H\n";
    const auto r = run_scenario(parse_scenario_config(text));
    REQUIRE(r.death_times.count("H"));
    // Residual 0.1 means SOD 0.9.
    const double expected = *predict_lifetime(SodModel(1.0, 10, 5), 0.9);
    CHECK(r.death_times.at("H") == Approx(expected).epsilon(1e-12));
    CHECK(r.final_sod.at("H") == Approx(0.9).epsilon(1e-12));
    for (const auto& o : r.routes) {
        if (o.time > expected) {
            CHECK_FALSE(o.route.has_value());
        } else if (o.time >= 1.0 && o.query.dst == "C") {
            CHECK(o.route.has_value());
        }
    }
    CHECK(count_kind(r, "death") == 1);
    CHECK(r.metric("dead_nodes") == "1");
}

TEST_CASE("same-slot HELLOs at a receiver collide and are dropped", "[scenario]") {
    std::string text = kBase;
    text += node_block("R", 0.01, 0, 0, 0, "OFF") + node_block("P", 0.01, 0.3, 0, 0, "OFF") +
            node_block("Q", 0.01, 0.3, 0, 0, "OFF") + node_block("U", 0.01, 0.6, 0, 0, "OFF") +
            "[links]\nR P\nR Q\nR U\n";
    const auto r = run_scenario(parse_scenario_config(text));
    const auto& table = r.tables.at("R");
    CHECK_FALSE(table.record("P").has_value());
    CHECK_FALSE(table.record("Q").has_value());
    REQUIRE(table.record("U").has_value());
    CHECK(table.record("U")->energy == Approx(0.4).epsilon(1e-12));
    CHECK(count_kind(r, "collision") == r.rounds);
    CHECK(r.metric("hello_dropped_collisions") == std::to_string(2 * r.rounds));
}

TEST_CASE("diamond routes flip at the derived beta", "[scenario][diamond]") {
    auto cfg = load_scenario_config(std::string(BATSIM_CONFIG_DIR) + "/diamond.cfg");
    const double beta_star = 1.0 / 0.7;
    auto route_at = [&](double beta) {
        cfg.beta = beta;
        const auto r = run_scenario(cfg);
        REQUIRE(!r.routes.empty());
        REQUIRE(r.routes.back().route.has_value());
        return r.routes.back().route->path;
    };
    const std::vector<NodeId> short_path{"A", "B", "D"};
    const std::vector<NodeId> long_path{"A", "C", "E", "D"};
    CHECK(route_at(0.0) == short_path);
    CHECK(route_at(beta_star * (1 - 1e-9)) == short_path);
    CHECK(route_at(beta_star * (1 + 1e-9)) == long_path);
    CHECK(route_at(10.0) == long_path);
}

TEST_CASE("runs are deterministic in the seed", "[scenario]") {
    const auto cfg = load_scenario_config(std::string(BATSIM_CONFIG_DIR) + "/mesh.cfg");
    const auto a = run_scenario(cfg, 7);
    const auto b = run_scenario(cfg, 7);
    const auto c = run_scenario(cfg, 8);
    CHECK(a.events == b.events);
    CHECK(a.metrics == b.metrics);
    CHECK(a.events != c.events);

    std::ostringstream os;
    write_event_log(os, a);
    CHECK(os.str().rfind("# seed=7\n# generator=mt19937_64\ntime,event_kind,node,details\n", 0) == 0);
}
