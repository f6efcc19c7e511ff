#pragma once

// Random connected networks with per-viewer energy tables, shared by the
// routing unit tests and the acceptance suite.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "batsim/energy_routing.hpp"
#include "batsim/rng.hpp"

namespace netgen {

using namespace batsim;

struct RandomCase {
    NetworkGraph graph;
    std::map<NodeId, std::set<NodeId>> adj;
    EnergyTables tables;
    RouteOptions opts;
};

/// Connected graph on n nodes with per-viewer energies on a dyadic grid so
/// that costs and ties are exact.
inline RandomCase random_case(Rng& rng, std::size_t n) {
    RandomCase c;
    std::vector<NodeId> ids;
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(std::string(1, static_cast<char>('A' + i)));
        c.graph.add_node(ids.back());
        c.adj[ids.back()];
    }
    auto link = [&](const NodeId& a, const NodeId& b) {
        c.graph.add_link(a, b);
        c.adj[a].insert(b);
        c.adj[b].insert(a);
    };
    for (std::size_t i = 1; i < n; ++i) {
        link(ids[i], ids[rng.next() % i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (rng.uniform_open() < 0.3) {
                link(ids[i], ids[j]);
            }
        }
    }
    const HelloCodec codec(0.0, 1.0, 9);  // energies k/8
    for (const auto& u : ids) {
        for (const auto& v : c.adj[u]) {
            if (rng.uniform_open() < 0.1) {
                continue;  // never heard
            }
            const double e = static_cast<double>(rng.next() % 9) / 8.0;
            const double stamp = rng.uniform_open() < 0.1 ? -10.0 : 0.0;  // some stale
            c.tables[u].update(v, codec.encode_delay(e), stamp, codec);
        }
    }
    const double betas[] = {0.0, 0.5, 1.0, 2.0, 4.0};
    c.opts = {betas[rng.next() % 5], rng.uniform_open() < 0.5 ? 0.0 : 0.25, 0.0, 5.0};
    return c;
}

inline std::optional<double> path_cost(const RandomCase& c, const std::vector<NodeId>& p) {
    double cost = 0.0;
    for (std::size_t i = 1; i < p.size(); ++i) {
        const auto h = hop_cost(c.tables, p[i - 1], p[i], p.back(), c.opts);
        if (!h) {
            return std::nullopt;
        }
        cost += *h;
    }
    return cost;
}

}  // namespace netgen
