#pragma once

// Two-state (ON/OFF) continuous-time Markov activity model of a node.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "batsim/rng.hpp"

namespace batsim {

enum class NodeState { On, Off };

inline constexpr NodeState flipped(NodeState s) {
    return s == NodeState::On ? NodeState::Off : NodeState::On;
}

inline constexpr std::string_view to_string(NodeState s) {
    return s == NodeState::On ? "ON" : "OFF";
}

inline NodeState parse_node_state(std::string_view text) {
    if (text == "ON" || text == "on") {
        return NodeState::On;
    }
    if (text == "OFF" || text == "off") {
        return NodeState::Off;
    }
    throw std::invalid_argument("node state must be ON or OFF, got '" + std::string(text) + "'");
}

/// Leaving rates of the ON/OFF chain. `lambda` is the ON -> OFF intensity,
/// `mu` the OFF -> ON intensity.
class OnOffParams {
public:
    OnOffParams(double lambda, double mu) : lambda_(lambda), mu_(mu) {
        if (!std::isfinite(lambda) || !std::isfinite(mu) || lambda < 0.0 || mu < 0.0) {
            throw std::invalid_argument("OnOffParams: rates must be finite and >= 0");
        }
    }

    double lambda() const { return lambda_; }
    double mu() const { return mu_; }

    /// Per-step stay probabilities as labelled on the discrete-time diagram.
    /// Only meaningful as probabilities when the rate is <= 1.
    double lambda_on() const { return 1.0 - lambda_; }
    double lambda_off() const { return 1.0 - mu_; }

    /// Diagonal of the generator: -lambda for ON, -mu for OFF.
    double generator_diagonal(NodeState s) const { return -leaving_rate(s); }

    double leaving_rate(NodeState s) const { return s == NodeState::On ? lambda_ : mu_; }

    /// Long-run fraction of time spent ON. Undefined (NaN) when both rates are 0.
    double stationary_on_fraction() const { return mu_ / (lambda_ + mu_); }

private:
    double lambda_;
    double mu_;
};

/// Probability of remaining in `state` for `duration`: exp(duration * a_ii).
inline double sojourn_survival(const OnOffParams& params, NodeState state, double duration) {
    if (!(duration >= 0.0)) {
        throw std::invalid_argument("sojourn_survival: duration must be >= 0");
    }
    const double rate = params.leaving_rate(state);
    if (rate == 0.0) {
        return 1.0;
    }
    return std::exp(-rate * duration);
}

struct Segment {
    NodeState state;
    double start;
    double duration;

    double end() const { return start + duration; }
    bool operator==(const Segment&) const = default;
};

/// An alternating ON/OFF path that tiles [0, horizon].
class Trajectory {
public:
    /// Validates tiling, alternation and positivity; throws std::invalid_argument.
    Trajectory(double horizon, std::vector<Segment> segments)
        : horizon_(horizon), segments_(std::move(segments)) {
        validate();
    }

    /// Builds a trajectory from consecutive (state, duration) pairs starting at 0.
    static Trajectory from_durations(const std::vector<std::pair<NodeState, double>>& pieces) {
        std::vector<Segment> segs;
        segs.reserve(pieces.size());
        double t = 0.0;
        for (const auto& [state, duration] : pieces) {
            segs.push_back({state, t, duration});
            t += duration;
        }
        return Trajectory(t, std::move(segs));
    }

    double horizon() const { return horizon_; }
    const std::vector<Segment>& segments() const { return segments_; }
    NodeState final_state() const { return segments_.back().state; }

    bool operator==(const Trajectory&) const = default;

private:
    void validate() const {
        if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
            throw std::invalid_argument("Trajectory: horizon must be finite and > 0");
        }
        if (segments_.empty()) {
            throw std::invalid_argument("Trajectory: no segments");
        }
        if (segments_.front().start != 0.0) {
            throw std::invalid_argument("Trajectory: first segment must start at 0");
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < segments_.size(); ++i) {
            const auto& s = segments_[i];
            if (!(s.duration > 0.0)) {
                throw std::invalid_argument("Trajectory: segment " + std::to_string(i) +
                                            " has non-positive duration");
            }
            if (i > 0) {
                const auto& prev = segments_[i - 1];
                if (prev.state == s.state) {
                    throw std::invalid_argument("Trajectory: states must alternate at segment " +
                                                std::to_string(i));
                }
                if (std::abs(s.start - prev.end()) > 1e-12 * horizon_) {
                    throw std::invalid_argument("Trajectory: gap or overlap at segment " +
                                                std::to_string(i));
                }
            }
            sum += s.duration;
        }
        if (std::abs(sum - horizon_) > 1e-12 * horizon_) {
            throw std::invalid_argument("Trajectory: durations do not sum to the horizon");
        }
    }

    double horizon_;
    std::vector<Segment> segments_;
};

/// Samples a path of the chain on [0, horizon]. Sojourns are exponential with
/// the leaving rate of the current state; the last one is clipped at the
/// horizon.
inline Trajectory sample_trajectory(const OnOffParams& params, NodeState initial, double horizon,
                                    std::uint64_t seed) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw std::invalid_argument("sample_trajectory: horizon must be finite and > 0");
    }
    Rng rng(seed);
    std::vector<Segment> segs;
    NodeState state = initial;
    double t = 0.0;
    for (;;) {
        const double d = rng.exponential(params.leaving_rate(state));
        if (t + d >= horizon) {
            segs.push_back({state, t, horizon - t});
            break;
        }
        segs.push_back({state, t, d});
        t += d;
        state = flipped(state);
    }
    return Trajectory(horizon, std::move(segs));
}

inline double total_time_in(const Trajectory& traj, NodeState state) {
    double sum = 0.0;
    for (const auto& s : traj.segments()) {
        if (s.state == state) {
            sum += s.duration;
        }
    }
    return sum;
}

inline double total_on_time(const Trajectory& traj) { return total_time_in(traj, NodeState::On); }

/// CSV rows `segment_index,state,start,duration`.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "segment_index,state,start,duration\n";
    char buf[96];
    const auto& segs = traj.segments();
    for (std::size_t i = 0; i < segs.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%s,%.17g,%.17g\n", i,
                      segs[i].state == NodeState::On ? "ON" : "OFF", segs[i].start,
                      segs[i].duration);
        os << buf;
    }
}

}  // namespace batsim
