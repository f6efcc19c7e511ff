#pragma once

// Scenario description, its text-file format, and the event loop that ties
// node activity, battery discharge, HELLO rounds and route queries together.
//
// File format: `[section]` headers; `key = value` lines inside [scenario],
// [codec] and [node <id>]; one `<a> <b>` pair per line inside [links] and
// [queries]. `#` starts a comment.
//
//   [scenario]
//   horizon = 10
//   hello_period = 1
//   staleness = 2.5
//   beta = 1.5
//   exhaust_threshold = 0.05
//   seeds = 1, 2          (or: seed = 1 with replications = 2)
//   output_dir = out
//
//   [codec]
//   d_min = 0
//   d_max = 0.5
//   slots = 11
//   map = direct          (or inverse)
//
//   [node A]
//   K = 0.01
//   tau = 50
//   C_N = 10
//   F_init = 0
//   lambda = 1
//   mu = 1
//   initial = ON
//
//   [links]
//   A B
//
//   [queries]
//   A B

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "batsim/battery.hpp"
#include "batsim/energy_routing.hpp"
#include "batsim/hello_codec.hpp"
#include "batsim/onoff_chain.hpp"
#include "batsim/rng.hpp"

namespace batsim {

/// Validation failure naming every offending field.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& problems) {
        std::string out = "invalid scenario config: ";
        for (std::size_t i = 0; i < problems.size(); ++i) {
            out += (i ? "; " : "") + problems[i];
        }
        return out;
    }

    std::vector<std::string> problems_;
};

struct NodeConfig {
    NodeId id;
    double amplitude = 0.0;  // K
    double tau = 0.0;
    double capacity = 0.0;   // C_N
    double f_init = 0.0;
    double lambda = 0.0;
    double mu = 0.0;
    NodeState initial = NodeState::On;
};

struct RouteQuery {
    NodeId src;
    NodeId dst;
};

struct ScenarioConfig {
    std::vector<NodeConfig> nodes;
    std::vector<std::pair<NodeId, NodeId>> links;
    std::vector<RouteQuery> queries;

    double d_min = 0.0;
    double d_max = 1.0;
    unsigned slots = 11;
    DelayMap delay_map = DelayMap::Direct;

    double horizon = 0.0;
    double hello_period = 0.0;
    double staleness = 0.0;
    double beta = 0.0;
    /// Residual-energy floor: relays at or below it are not used, and a node
    /// whose residual energy falls to it is dead.
    double exhaust_threshold = 0.0;

    std::vector<std::uint64_t> seeds{1};
    std::string output_dir = ".";

    HelloCodec codec() const { return HelloCodec(d_min, d_max, slots, 1.0, delay_map); }

    /// Empty when valid.
    std::vector<std::string> problems() const {
        std::vector<std::string> out;
        auto need = [&](bool ok, const std::string& msg) {
            if (!ok) {
                out.push_back(msg);
            }
        };
        need(horizon > 0.0 && std::isfinite(horizon), "scenario.horizon: must be > 0");
        need(hello_period > 0.0 && std::isfinite(hello_period), "scenario.hello_period: must be > 0");
        need(staleness >= 0.0, "scenario.staleness: must be >= 0");
        need(beta >= 0.0 && std::isfinite(beta), "scenario.beta: must be >= 0");
        need(exhaust_threshold >= 0.0 && exhaust_threshold < 1.0,
             "scenario.exhaust_threshold: must lie in [0, 1)");
        need(!seeds.empty(), "scenario.replications: must be >= 1");
        need(std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() == seeds.size(),
             "scenario.seeds: must be unique");
        need(d_min >= 0.0 && d_min < d_max, "codec.d_min/codec.d_max: need 0 <= d_min < d_max");
        need(slots >= 2, "codec.slots: must be >= 2");
        need(!nodes.empty(), "node: at least one [node <id>] section is required");

        std::set<NodeId> ids;
        for (const auto& n : nodes) {
            const std::string p = "node " + n.id + ".";
            need(ids.insert(n.id).second, p + "id: duplicate node id");
            need(n.amplitude > 0.0, p + "K: must be > 0");
            need(n.tau > 0.0, p + "tau: must be > 0");
            need(n.capacity > 0.0, p + "C_N: must be > 0");
            need(n.f_init >= 0.0 && n.f_init < 1.0, p + "F_init: must lie in [0, 1)");
            need(n.lambda >= 0.0 && std::isfinite(n.lambda), p + "lambda: must be >= 0");
            need(n.mu >= 0.0 && std::isfinite(n.mu), p + "mu: must be >= 0");
        }
        for (const auto& [a, b] : links) {
            need(a != b, "links." + a + "-" + b + ": self-link");
            need(ids.count(a) && ids.count(b), "links." + a + "-" + b + ": unknown node");
        }
        for (const auto& q : queries) {
            need(q.src != q.dst, "queries." + q.src + "-" + q.dst + ": src equals dst");
            need(ids.count(q.src) && ids.count(q.dst),
                 "queries." + q.src + "-" + q.dst + ": unknown node");
        }
        return out;
    }

    void validate() const {
        if (auto p = problems(); !p.empty()) {
            throw ConfigError(std::move(p));
        }
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

inline std::optional<std::uint64_t> parse_uint(std::string_view s) {
    s = trim(s);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) {
            ++i;
        }
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') {
            ++j;
        }
        if (j > i) {
            out.push_back(s.substr(i, j - i));
        }
        i = j;
    }
    return out;
}

}  // namespace detail

/// Parses the scenario text format; throws ConfigError listing every bad field.
inline ScenarioConfig parse_scenario_config(std::string_view text) {
    ScenarioConfig cfg;
    std::vector<std::string> errors;
    std::string section;
    NodeConfig* node = nullptr;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> replications;
    std::optional<std::vector<std::uint64_t>> seeds;
    std::map<std::string, std::set<std::string>> seen;  // section -> keys given
    std::map<NodeId, std::set<std::string>> node_keys;

    auto number = [&](std::string_view value, const std::string& field) -> double {
        if (auto v = detail::parse_double(value)) {
            return *v;
        }
        errors.push_back(field + ": not a number '" + std::string(detail::trim(value)) + "'");
        return 0.0;
    };

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = detail::trim(line);
        if (line.empty()) {
            continue;
        }
        const std::string where = "line " + std::to_string(line_no);

        if (line.front() == '[') {
            if (line.back() != ']') {
                errors.push_back(where + ": unterminated section header");
                continue;
            }
            const auto header = detail::split_ws(line.substr(1, line.size() - 2));
            node = nullptr;
            if (header.size() == 2 && header[0] == "node") {
                section = "node";
                cfg.nodes.push_back(NodeConfig{std::string(header[1])});
                node = &cfg.nodes.back();
                node_keys[node->id];
            } else if (header.size() == 1 &&
                       (header[0] == "scenario" || header[0] == "codec" || header[0] == "links" ||
                        header[0] == "queries")) {
                section = std::string(header[0]);
            } else {
                errors.push_back(where + ": unknown section '" + std::string(line) + "'");
                section.clear();
            }
            continue;
        }

        if (section == "links" || section == "queries") {
            const auto parts = detail::split_ws(line);
            if (parts.size() != 2) {
                errors.push_back(section + " (" + where + "): expected two node ids");
                continue;
            }
            if (section == "links") {
                cfg.links.emplace_back(std::string(parts[0]), std::string(parts[1]));
            } else {
                cfg.queries.push_back({std::string(parts[0]), std::string(parts[1])});
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            errors.push_back(where + ": expected key = value");
            continue;
        }
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string_view value = detail::trim(line.substr(eq + 1));

        if (section == "scenario") {
            const std::string field = "scenario." + key;
            seen["scenario"].insert(key);
            if (key == "horizon") {
                cfg.horizon = number(value, field);
            } else if (key == "hello_period") {
                cfg.hello_period = number(value, field);
            } else if (key == "staleness") {
                cfg.staleness = number(value, field);
            } else if (key == "beta") {
                cfg.beta = number(value, field);
            } else if (key == "exhaust_threshold") {
                cfg.exhaust_threshold = number(value, field);
            } else if (key == "output_dir") {
                cfg.output_dir = std::string(value);
            } else if (key == "seed" || key == "replications") {
                auto v = detail::parse_uint(value);
                if (!v) {
                    errors.push_back(field + ": not a non-negative integer");
                } else {
                    (key == "seed" ? seed : replications) = *v;
                }
            } else if (key == "seeds") {
                std::vector<std::uint64_t> list;
                std::string_view rest = value;
                while (!rest.empty()) {
                    const auto comma = rest.find(',');
                    const auto item = rest.substr(0, comma);
                    if (auto v = detail::parse_uint(item)) {
                        list.push_back(*v);
                    } else {
                        errors.push_back(field + ": bad seed '" + std::string(detail::trim(item)) + "'");
                    }
                    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
                }
                seeds = std::move(list);
            } else {
                errors.push_back(field + ": unknown key");
            }
        } else if (section == "codec") {
            const std::string field = "codec." + key;
            seen["codec"].insert(key);
            if (key == "d_min") {
                cfg.d_min = number(value, field);
            } else if (key == "d_max") {
                cfg.d_max = number(value, field);
            } else if (key == "slots") {
                auto v = detail::parse_uint(value);
                if (!v || *v > 1000000) {
                    errors.push_back(field + ": not a valid slot count");
                } else {
                    cfg.slots = static_cast<unsigned>(*v);
                }
            } else if (key == "map") {
                if (value == "direct") {
                    cfg.delay_map = DelayMap::Direct;
                } else if (value == "inverse") {
                    cfg.delay_map = DelayMap::Inverse;
                } else {
                    errors.push_back(field + ": expected direct or inverse");
                }
            } else {
                errors.push_back(field + ": unknown key");
            }
        } else if (section == "node" && node != nullptr) {
            const std::string field = "node " + node->id + "." + key;
            node_keys[node->id].insert(key);
            if (key == "K") {
                node->amplitude = number(value, field);
            } else if (key == "tau") {
                node->tau = number(value, field);
            } else if (key == "C_N") {
                node->capacity = number(value, field);
            } else if (key == "F_init") {
                node->f_init = number(value, field);
            } else if (key == "lambda") {
                node->lambda = number(value, field);
            } else if (key == "mu") {
                node->mu = number(value, field);
            } else if (key == "initial") {
                try {
                    node->initial = parse_node_state(value);
                } catch (const std::invalid_argument&) {
                    errors.push_back(field + ": expected ON or OFF");
                }
            } else {
                errors.push_back(field + ": unknown key");
            }
        } else {
            errors.push_back(where + ": key outside of a known section");
        }
    }

    for (const char* key : {"horizon", "hello_period", "staleness", "beta", "exhaust_threshold"}) {
        if (!seen["scenario"].count(key)) {
            errors.push_back(std::string("scenario.") + key + ": missing");
        }
    }
    for (const char* key : {"d_min", "d_max", "slots"}) {
        if (!seen["codec"].count(key)) {
            errors.push_back(std::string("codec.") + key + ": missing");
        }
    }
    for (const auto& [id, keys] : node_keys) {
        for (const char* key : {"K", "tau", "C_N", "lambda", "mu"}) {
            if (!keys.count(key)) {
                errors.push_back("node " + id + "." + key + ": missing");
            }
        }
    }

    if (seeds) {
        if (seed) {
            errors.push_back("scenario.seed: give either seed or seeds, not both");
        }
        if (replications && *replications != seeds->size()) {
            errors.push_back("scenario.replications: does not match the number of seeds");
        }
        cfg.seeds = *seeds;
    } else {
        const std::uint64_t base = seed.value_or(1);
        const std::uint64_t count = replications.value_or(1);
        if (count > 100000) {
            errors.push_back("scenario.replications: too large");
        } else {
            cfg.seeds.clear();
            for (std::uint64_t i = 0; i < count; ++i) {
                cfg.seeds.push_back(base + i);
            }
        }
    }

    if (errors.empty()) {
        errors = cfg.problems();
    }
    if (!errors.empty()) {
        throw ConfigError(std::move(errors));
    }
    return cfg;
}

inline ScenarioConfig load_scenario_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read config file " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_config(buf.str());
}

struct TableObservation {
    double time;
    NodeId receiver;
    NodeId sender;
    double decoded;
    double actual;
};

struct RouteOutcome {
    double time;
    RouteQuery query;
    std::optional<Route> route;
};

struct ScenarioResult {
    std::uint64_t seed = 0;
    std::vector<std::string> events;  // `time,event_kind,node,details`
    std::vector<std::pair<std::string, std::string>> metrics;
    std::vector<TableObservation> observations;
    std::vector<RouteOutcome> routes;
    std::map<NodeId, double> death_times;
    std::map<NodeId, double> final_sod;
    EnergyTables tables;
    std::size_t rounds = 0;

    std::string metric(const std::string& name) const {
        for (const auto& [k, v] : metrics) {
            if (k == name) {
                return v;
            }
        }
        throw std::out_of_range("no metric " + name);
    }
};

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

struct NodeRuntime {
    NodeConfig config;
    OnOffParams activity;
    BatteryState battery;
    NodeState state;
    std::optional<double> lifetime;  // active time at which the node dies
    bool alive = true;
};

class ScenarioRun {
public:
    ScenarioRun(const ScenarioConfig& cfg, std::uint64_t seed)
        : cfg_(cfg), codec_(cfg.codec()), rng_(seed), death_sod_(1.0 - cfg.exhaust_threshold) {
        result_.seed = seed;
        for (const auto& n : cfg.nodes) {
            SodModel model(n.amplitude, n.tau, n.capacity, n.f_init);
            std::optional<double> lifetime;
            if (death_sod_ <= n.f_init) {
                lifetime = 0.0;
            } else {
                lifetime = predict_lifetime(model, death_sod_);
            }
            nodes_.emplace(n.id, NodeRuntime{n, OnOffParams(n.lambda, n.mu), BatteryState(model),
                                             n.initial, lifetime, true});
            graph_.add_node(n.id);
            result_.tables[n.id];
        }
        for (const auto& [a, b] : cfg.links) {
            graph_.add_link(a, b);
        }
    }

    ScenarioResult run() {
        for (auto& [id, node] : nodes_) {
            if (node.lifetime && *node.lifetime <= 0.0) {
                kill(id, node, 0.0);
            }
        }
        const double period = cfg_.hello_period;
        for (std::size_t k = 1;; ++k) {
            const double t = static_cast<double>(k) * period;
            if (t > cfg_.horizon * (1.0 + 1e-12)) {
                break;
            }
            advance_to(std::min(t, cfg_.horizon));
            hello_round(now_);
            answer_queries(now_);
            ++result_.rounds;
        }
        if (now_ < cfg_.horizon) {
            advance_to(cfg_.horizon);
            answer_queries(now_);
        }
        finish();
        return std::move(result_);
    }

private:
    void log(double t, std::string_view kind, const NodeId& node, const std::string& details) {
        result_.events.push_back(format_number(t) + "," + std::string(kind) + "," + node + "," +
                                 details);
    }

    void kill(const NodeId& id, NodeRuntime& node, double t) {
        node.alive = false;
        graph_.remove_node(id);
        result_.death_times[id] = t;
        log(t, "death", id, "sod=" + format_number(node.battery.sod));
    }

    void advance_to(double t) {
        const double dt = t - now_;
        if (dt <= 0.0) {
            now_ = std::max(now_, t);
            return;
        }
        for (auto& [id, node] : nodes_) {
            if (!node.alive) {
                continue;
            }
            const auto traj = sample_trajectory(node.activity, node.state, dt, rng_.next());
            double on_time = 0.0;
            for (const auto& seg : traj.segments()) {
                if (seg.state != NodeState::On) {
                    continue;
                }
                const double remaining =
                    node.lifetime ? *node.lifetime - node.battery.active_time : INFINITY;
                if (seg.duration >= remaining) {
                    node.battery = node.battery.with_active_time(*node.lifetime);
                    on_time += remaining;
                    kill(id, node, now_ + seg.start + remaining);
                    break;
                }
                node.battery = node.battery.consume(seg.duration);
                on_time += seg.duration;
            }
            if (node.alive) {
                node.state = traj.final_state();
                log(t, "discharge", id,
                    "on_time=" + format_number(on_time) + ";sod=" + format_number(node.battery.sod));
            }
        }
        now_ = t;
    }

    void hello_round(double t) {
        struct Hello {
            unsigned slot;
            double delay;
        };
        std::map<NodeId, Hello> sent;
        for (const auto& [id, node] : nodes_) {
            if (!node.alive) {
                continue;
            }
            const double residual = std::clamp(node.battery.residual(), 0.0, 1.0);
            const unsigned slot = codec_.slot_for_energy(residual);
            const double delay = codec_.delay_for_slot(slot);
            sent[id] = {slot, delay};
            ++hello_sent_;
            log(t, "hello", id,
                "slot=" + std::to_string(slot) + ";delay=" + format_number(delay) +
                    ";residual=" + format_number(residual));
        }
        for (const auto& [rx, rx_node] : nodes_) {
            if (!rx_node.alive) {
                continue;
            }
            std::map<unsigned, std::vector<NodeId>> by_slot;
            for (const auto& n : graph_.neighbors(rx)) {
                by_slot[sent.at(n).slot].push_back(n);
            }
            for (const auto& [slot, senders] : by_slot) {
                if (senders.size() > 1) {
                    std::string who;
                    for (const auto& s : senders) {
                        who += (who.empty() ? "" : "|") + s;
                    }
                    hello_dropped_ += senders.size();
                    log(t, "collision", rx, "slot=" + std::to_string(slot) + ";senders=" + who);
                    continue;
                }
                const NodeId& tx = senders.front();
                auto& table = result_.tables[rx];
                table.update(tx, sent.at(tx).delay, t, codec_);
                const double decoded = table.record(tx)->energy;
                const double actual = nodes_.at(tx).battery.residual();
                result_.observations.push_back({t, rx, tx, decoded, actual});
                table_error_sum_ += std::abs(decoded - actual);
                ++hello_delivered_;
            }
        }
    }

    void answer_queries(double t) {
        const RouteOptions opts{cfg_.beta, cfg_.exhaust_threshold, t, cfg_.staleness};
        for (const auto& q : cfg_.queries) {
            ++queries_;
            const std::string label = "dst=" + q.dst;
            if (!graph_.contains(q.src) || !graph_.contains(q.dst)) {
                result_.routes.push_back({t, q, std::nullopt});
                log(t, "route", q.src, label + ";result=dead-endpoint");
                continue;
            }
            auto route = select_route(graph_, result_.tables, q.src, q.dst, opts);
            if (route) {
                ++delivered_;
                std::string path;
                for (const auto& n : route->path) {
                    path += (path.empty() ? "" : ">") + n;
                }
                log(t, "route", q.src, label + ";path=" + path + ";cost=" + format_number(route->cost));
            } else {
                log(t, "route", q.src, label + ";result=none");
            }
            result_.routes.push_back({t, q, std::move(route)});
        }
    }

    void finish() {
        auto& m = result_.metrics;
        m.emplace_back("seed", std::to_string(result_.seed));
        m.emplace_back("hello_rounds", std::to_string(result_.rounds));
        m.emplace_back("hello_sent", std::to_string(hello_sent_));
        m.emplace_back("hello_delivered", std::to_string(hello_delivered_));
        m.emplace_back("hello_dropped_collisions", std::to_string(hello_dropped_));
        m.emplace_back("route_queries", std::to_string(queries_));
        m.emplace_back("delivered_routes", std::to_string(delivered_));
        m.emplace_back("dead_nodes", std::to_string(result_.death_times.size()));
        m.emplace_back("mean_table_error",
                       format_number(hello_delivered_ ? table_error_sum_ / hello_delivered_ : 0.0));
        for (const auto& [id, node] : nodes_) {
            result_.final_sod[id] = node.battery.sod;
            m.emplace_back("final_sod_" + id, format_number(node.battery.sod));
        }
        // Active time to full discharge with no OFF periods.
        for (const auto& [id, node] : nodes_) {
            const auto d = predict_lifetime(node.battery.model, 1.0);
            m.emplace_back("activation_duration_" + id, d ? format_number(*d) : "never");
        }
    }

    const ScenarioConfig& cfg_;
    HelloCodec codec_;
    Rng rng_;
    double death_sod_;
    std::map<NodeId, NodeRuntime> nodes_;
    NetworkGraph graph_;
    ScenarioResult result_;
    double now_ = 0.0;
    std::size_t hello_sent_ = 0;
    std::size_t hello_delivered_ = 0;
    std::size_t hello_dropped_ = 0;
    std::size_t queries_ = 0;
    std::size_t delivered_ = 0;
    double table_error_sum_ = 0.0;
};

}  // namespace detail

/// Runs one replication. Deterministic in (config, seed).
inline ScenarioResult run_scenario(const ScenarioConfig& config, std::uint64_t seed) {
    config.validate();
    return detail::ScenarioRun(config, seed).run();
}

inline ScenarioResult run_scenario(const ScenarioConfig& config) {
    return run_scenario(config, config.seeds.front());
}

/// Event log with a comment header recording the seed and generator.
inline void write_event_log(std::ostream& os, const ScenarioResult& result) {
    os << "# seed=" << result.seed << "\n# generator=" << Rng::algorithm << "\n";
    os << "time,event_kind,node,details\n";
    for (const auto& e : result.events) {
        os << e << '\n';
    }
}

inline void write_metrics_csv(std::ostream& os,
                              const std::vector<std::pair<std::string, std::string>>& metrics) {
    os << "metric,value\n";
    for (const auto& [k, v] : metrics) {
        os << k << ',' << v << '\n';
    }
}

}  // namespace batsim
