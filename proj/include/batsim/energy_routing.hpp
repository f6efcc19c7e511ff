#pragma once

// Neighbourhood energy tables fed by HELLO timing, and least-cost route
// selection that mixes hop count with the residual energy of relays.

#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "batsim/hello_codec.hpp"

namespace batsim {

using NodeId = std::string;

/// Undirected adjacency between alive nodes.
class NetworkGraph {
public:
    void add_node(const NodeId& id) { adjacency_.try_emplace(id); }

    void add_link(const NodeId& a, const NodeId& b) {
        if (a == b) {
            throw std::invalid_argument("NetworkGraph: self-link on " + a);
        }
        if (!contains(a) || !contains(b)) {
            throw std::invalid_argument("NetworkGraph: link " + a + "-" + b +
                                        " references an unknown node");
        }
        adjacency_[a].insert(b);
        adjacency_[b].insert(a);
    }

    /// Drops a node and every link touching it.
    void remove_node(const NodeId& id) {
        auto it = adjacency_.find(id);
        if (it == adjacency_.end()) {
            return;
        }
        for (const auto& n : it->second) {
            adjacency_[n].erase(id);
        }
        adjacency_.erase(it);
    }

    bool contains(const NodeId& id) const { return adjacency_.count(id) != 0; }

    const std::set<NodeId>& neighbors(const NodeId& id) const {
        auto it = adjacency_.find(id);
        if (it == adjacency_.end()) {
            throw std::invalid_argument("NetworkGraph: unknown node " + id);
        }
        return it->second;
    }

    std::vector<NodeId> nodes() const {
        std::vector<NodeId> out;
        out.reserve(adjacency_.size());
        for (const auto& [id, _] : adjacency_) {
            out.push_back(id);
        }
        return out;
    }

    std::size_t size() const { return adjacency_.size(); }

private:
    std::map<NodeId, std::set<NodeId>> adjacency_;
};

struct EnergyRecord {
    double energy;
    double timestamp;

    bool operator==(const EnergyRecord&) const = default;
};

/// What one node believes about its neighbours' residual energy.
class EnergyTable {
public:
    /// Returns a copy with `neighbor`'s record replaced by the energy decoded
    /// from `delay`, stamped `now`.
    EnergyTable updated(const NodeId& neighbor, double delay, double now,
                        const HelloCodec& codec) const {
        EnergyTable next = *this;
        next.records_[neighbor] = {codec.decode_energy(delay), now};
        return next;
    }

    void update(const NodeId& neighbor, double delay, double now, const HelloCodec& codec) {
        records_[neighbor] = {codec.decode_energy(delay), now};
    }

    /// The record's energy if it is no older than `staleness` at `now`.
    std::optional<double> fresh_energy(const NodeId& neighbor, double now,
                                       double staleness) const {
        auto it = records_.find(neighbor);
        if (it == records_.end() || now - it->second.timestamp > staleness) {
            return std::nullopt;
        }
        return it->second.energy;
    }

    std::optional<EnergyRecord> record(const NodeId& neighbor) const {
        auto it = records_.find(neighbor);
        if (it == records_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    const std::map<NodeId, EnergyRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    bool operator==(const EnergyTable&) const = default;

private:
    std::map<NodeId, EnergyRecord> records_;
};

inline EnergyTable update_energy_table(const EnergyTable& table, const NodeId& neighbor,
                                       double delay, double now, const HelloCodec& codec) {
    return table.updated(neighbor, delay, now, codec);
}

using EnergyTables = std::map<NodeId, EnergyTable>;

struct RouteOptions {
    double beta = 0.0;
    double exhaust_threshold = 0.0;  // relays need residual energy strictly above this
    double now = 0.0;
    double staleness = std::numeric_limits<double>::infinity();
};

struct Route {
    std::vector<NodeId> path;
    double cost;
};

/// Cost of the hop from -> to on the way to `dst`, as seen through `from`'s
/// table: 1 + beta (1 - E_to). A relay must have a fresh record above the
/// exhaustion threshold or the hop is unusable (nullopt). The destination
/// is always reachable; its energy term is counted when `from` knows it and
/// treated as zero otherwise.
inline std::optional<double> hop_cost(const EnergyTables& tables, const NodeId& from,
                                      const NodeId& to, const NodeId& dst,
                                      const RouteOptions& opts) {
    std::optional<double> energy;
    if (auto t = tables.find(from); t != tables.end()) {
        energy = t->second.fresh_energy(to, opts.now, opts.staleness);
    }
    if (to == dst) {
        return 1.0 + (energy ? opts.beta * (1.0 - *energy) : 0.0);
    }
    if (!energy || *energy <= opts.exhaust_threshold) {
        return std::nullopt;
    }
    return 1.0 + opts.beta * (1.0 - *energy);
}

/// Least-cost route from src to dst. Equal-cost candidates are ordered by
/// their node-id sequence, smallest first.
inline std::optional<Route> select_route(const NetworkGraph& graph, const EnergyTables& tables,
                                         const NodeId& src, const NodeId& dst,
                                         const RouteOptions& opts) {
    if (!graph.contains(src) || !graph.contains(dst)) {
        throw std::invalid_argument("select_route: unknown or dead endpoint");
    }
    if (src == dst) {
        throw std::invalid_argument("select_route: src and dst must differ");
    }

    using Label = std::pair<double, std::vector<NodeId>>;
    std::map<NodeId, Label> best;
    std::set<NodeId> settled;
    std::priority_queue<Label, std::vector<Label>, std::greater<>> frontier;

    frontier.push({0.0, {src}});
    best[src] = {0.0, {src}};
    while (!frontier.empty()) {
        Label label = frontier.top();
        frontier.pop();
        const NodeId u = label.second.back();
        if (!settled.insert(u).second) {
            continue;
        }
        if (u == dst) {
            return Route{std::move(label.second), label.first};
        }
        for (const auto& w : graph.neighbors(u)) {
            if (settled.count(w) != 0) {
                continue;
            }
            const auto c = hop_cost(tables, u, w, dst, opts);
            if (!c) {
                continue;
            }
            Label candidate{label.first + *c, label.second};
            candidate.second.push_back(w);
            auto it = best.find(w);
            if (it == best.end() || candidate < it->second) {
                best[w] = candidate;
                frontier.push(std::move(candidate));
            }
        }
    }
    return std::nullopt;
}

}  // namespace batsim
