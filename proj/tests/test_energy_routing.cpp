#include <catch_amalgamated.hpp>

#include <stdexcept>

#include "batsim/energy_routing.hpp"
#include "batsim/rng.hpp"
#include "oracles.hpp"
#include "random_networks.hpp"

using namespace batsim;
using Catch::Approx;

namespace {

const HelloCodec kCodec(0.0, 1.0, 11);

/// Every node sees every neighbour's energy as `energy[id]`, stamped at 0.
EnergyTables uniform_tables(const NetworkGraph& g, const std::map<NodeId, double>& energy) {
    EnergyTables tables;
    for (const auto& u : g.nodes()) {
        for (const auto& v : g.neighbors(u)) {
            tables[u].update(v, kCodec.encode_delay(energy.at(v)), 0.0, kCodec);
        }
    }
    return tables;
}

NetworkGraph graph_of(std::initializer_list<std::pair<const char*, const char*>> links) {
    NetworkGraph g;
    for (const auto& [a, b] : links) {
        g.add_node(a);
        g.add_node(b);
    }
    for (const auto& [a, b] : links) {
        g.add_link(a, b);
    }
    return g;
}

std::vector<NodeId> path_of(std::initializer_list<const char*> ids) { return {ids.begin(), ids.end()}; }

}  // namespace

TEST_CASE("graph basics", "[routing][graph]") {
    NetworkGraph g = graph_of({{"A", "B"}, {"B", "C"}});
    CHECK(g.size() == 3);
    CHECK_THROWS_AS(g.add_link("A", "A"), std::invalid_argument);
    CHECK_THROWS_AS(g.add_link("A", "Z"), std::invalid_argument);
    g.remove_node("B");
    CHECK(g.neighbors("A").empty());
    CHECK_FALSE(g.contains("B"));
}

TEST_CASE("energy table updates", "[routing][table]") {
    EnergyTable t;
    const auto one = update_energy_table(t, "B", kCodec.encode_delay(0.6), 1.0, kCodec);
    CHECK(t.empty());
    REQUIRE(one.size() == 1);
    CHECK(one.record("B")->energy == Approx(0.6).epsilon(1e-15));

    const auto two = update_energy_table(one, "B", kCodec.encode_delay(0.4), 2.0, kCodec);
    REQUIRE(two.size() == 1);
    CHECK(two.record("B")->timestamp == 2.0);
    CHECK(two.record("B")->energy == Approx(0.4).epsilon(1e-15));

    CHECK(two.fresh_energy("B", 4.0, 2.0).has_value());
    CHECK_FALSE(two.fresh_energy("B", 4.5, 2.0).has_value());
    CHECK_FALSE(two.fresh_energy("C", 2.0, 2.0).has_value());
    CHECK_THROWS_AS(update_energy_table(two, "B", 3.0, 2.0, kCodec), std::invalid_argument);
}

TEST_CASE("beta = 0 reduces to hop count", "[routing]") {
    // Two-hop path vs three-hop path with better energies.
    const auto g = graph_of({{"A", "B"}, {"B", "D"}, {"A", "C"}, {"C", "E"}, {"E", "D"}});
    const auto tables = uniform_tables(g, {{"A", 1}, {"B", 0.2}, {"C", 1}, {"D", 1}, {"E", 1}});
    const auto r = select_route(g, tables, "A", "D", {0.0, 0.0, 0.0, 10.0});
    REQUIRE(r);
    CHECK(r->path == path_of({"A", "B", "D"}));
    CHECK(r->cost == 2.0);
}

TEST_CASE("diamond: tie-break and energy-driven choice", "[routing]") {
    const auto g = graph_of({{"A", "B"}, {"B", "D"}, {"A", "C"}, {"C", "D"}});
    const auto tables = uniform_tables(g, {{"A", 1}, {"B", 0.1}, {"C", 0.9}, {"D", 1}});

    const auto flat = select_route(g, tables, "A", "D", {0.0, 0.0, 0.0, 10.0});
    REQUIRE(flat);
    CHECK(flat->path == path_of({"A", "B", "D"}));

    const auto r = select_route(g, tables, "A", "D", {5.0, 0.0, 0.0, 10.0});
    REQUIRE(r);
    CHECK(r->path == path_of({"A", "C", "D"}));
    CHECK(r->cost == Approx(2.5).epsilon(1e-12));
}

TEST_CASE("exhausted or unknown relays are excluded", "[routing]") {
    const auto g = graph_of({{"A", "B"}, {"B", "C"}});
    const auto low = uniform_tables(g, {{"A", 1}, {"B", 0.1}, {"C", 1}});
    CHECK_FALSE(select_route(g, low, "A", "C", {1.0, 0.2, 0.0, 10.0}));
    CHECK(select_route(g, low, "A", "C", {1.0, 0.05, 0.0, 10.0}));
    // A relay exactly at the threshold is excluded.
    CHECK_FALSE(select_route(g, low, "A", "C", {1.0, 0.1, 0.0, 10.0}));

    // Stale record.
    CHECK_FALSE(select_route(g, low, "A", "C", {1.0, 0.0, 20.0, 10.0}));
    // No records at all: only direct neighbours are reachable.
    CHECK_FALSE(select_route(g, {}, "A", "C", {1.0, 0.0, 0.0, 10.0}));
    const auto direct = select_route(g, {}, "A", "B", {1.0, 0.0, 0.0, 10.0});
    REQUIRE(direct);
    CHECK(direct->cost == 1.0);
    // An exhausted destination is still a valid destination.
    CHECK(select_route(g, low, "A", "B", {1.0, 0.5, 0.0, 10.0}));
}

TEST_CASE("argument errors", "[routing]") {
    const auto g = graph_of({{"A", "B"}});
    CHECK_THROWS_AS(select_route(g, {}, "A", "Z", {}), std::invalid_argument);
    CHECK_THROWS_AS(select_route(g, {}, "A", "A", {}), std::invalid_argument);
}

TEST_CASE("select_route matches brute-force simple-path enumeration", "[routing][oracle]") {
    Rng rng(12345);
    for (int trial = 0; trial < 150; ++trial) {
        const auto c = netgen::random_case(rng, 3 + rng.next() % 6);
        const auto ids = c.graph.nodes();
        const NodeId src = ids[rng.next() % ids.size()];
        NodeId dst = src;
        while (dst == src) {
            dst = ids[rng.next() % ids.size()];
        }
        std::optional<std::pair<double, std::vector<NodeId>>> best;
        for (const auto& p : oracle::simple_paths(c.adj, src, dst)) {
            if (auto cost = netgen::path_cost(c, p)) {
                std::pair<double, std::vector<NodeId>> cand{*cost, p};
                if (!best || cand < *best) {
                    best = cand;
                }
            }
        }
        const auto r = select_route(c.graph, c.tables, src, dst, c.opts);
        INFO("trial " << trial << " " << src << "->" << dst);
        REQUIRE(r.has_value() == best.has_value());
        if (r) {
            CHECK(r->path == best->second);
            CHECK(r->cost == best->first);
            CHECK(netgen::path_cost(c, r->path) == r->cost);
        }
    }
}

TEST_CASE("raising beta never increases the energy deficit of the chosen route", "[routing][property]") {
    // Deficit = sum over hops of (1 - E). With cost = hops + beta * deficit,
    // the chosen deficit is non-increasing and the hop count non-decreasing in
    // beta.
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        auto c = netgen::random_case(rng, 4 + rng.next() % 5);
        const auto ids = c.graph.nodes();
        const NodeId src = ids.front();
        const NodeId dst = ids.back();
        std::optional<double> prev_deficit;
        std::size_t prev_hops = 0;
        for (double beta : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
            c.opts.beta = beta;
            const auto r = select_route(c.graph, c.tables, src, dst, c.opts);
            if (!r) {
                break;
            }
            RouteOptions unit = c.opts;
            unit.beta = 1.0;
            double deficit = 0.0;
            for (std::size_t i = 1; i < r->path.size(); ++i) {
                deficit += *hop_cost(c.tables, r->path[i - 1], r->path[i], dst, unit) - 1.0;
            }
            if (prev_deficit) {
                CHECK(deficit <= *prev_deficit + 1e-12);
                CHECK(r->path.size() >= prev_hops);
            }
            prev_deficit = deficit;
            prev_hops = r->path.size();
        }
    }
}

TEST_CASE("raising beta can lower the weakest relay on the chosen route", "[routing][regression]") {
    // The additive penalty minimises total deficit, not the max-min relay
    // energy: here the longer route has less total deficit but a weaker relay.
    const auto g = graph_of({{"S", "A1"}, {"A1", "A2"}, {"A2", "D"},
                             {"S", "B1"}, {"B1", "B2"}, {"B2", "B3"}, {"B3", "D"}});
    const auto tables = uniform_tables(
        g, {{"S", 1}, {"A1", 0.7}, {"A2", 0.7}, {"B1", 0.6}, {"B2", 1.0}, {"B3", 1.0}, {"D", 1}});
    const auto low = select_route(g, tables, "S", "D", {0.5, 0.0, 0.0, 10.0});
    const auto high = select_route(g, tables, "S", "D", {10.0, 0.0, 0.0, 10.0});
    REQUIRE(low);
    REQUIRE(high);
    CHECK(low->path == path_of({"S", "A1", "A2", "D"}));
    CHECK(high->path == path_of({"S", "B1", "B2", "B3", "D"}));
}
