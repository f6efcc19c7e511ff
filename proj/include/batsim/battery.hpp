#pragma once

// State-of-discharge (SOD) battery model with an exponentially decaying
// discharge current, and its ON/OFF-modulated variant.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "batsim/occupancy.hpp"
#include "batsim/onoff_chain.hpp"
#include "batsim/quadrature.hpp"

namespace batsim {

/// Nominal lead-acid parameters for the constant gassing current
/// I_gas = k_gas * exp(c_u * v_nominal + c_u * t_nominal).
struct GassingParams {
    double k_gas = 0.0;
    double c_u = 0.0;
    double v_nominal = 0.0;
    double t_nominal = 0.0;

    double current() const { return k_gas * std::exp(c_u * v_nominal + c_u * t_nominal); }
};

class SodModel {
public:
    /// amplitude: K (A); tau: decay constant; capacity: C_N (A * time);
    /// f_init: initial state of discharge in [0, 1).
    SodModel(double amplitude, double tau, double capacity, double f_init = 0.0,
             std::optional<GassingParams> gassing = std::nullopt)
        : amplitude_(amplitude), tau_(tau), capacity_(capacity), f_init_(f_init),
          gassing_(gassing) {
        if (!(amplitude > 0.0) || !(tau > 0.0) || !(capacity > 0.0) ||
            !std::isfinite(amplitude) || !std::isfinite(tau) || !std::isfinite(capacity)) {
            throw std::invalid_argument("SodModel: K, tau and C_N must be finite and > 0");
        }
        if (!(f_init >= 0.0) || !(f_init < 1.0)) {
            throw std::invalid_argument("SodModel: F_init must lie in [0, 1)");
        }
        if (gassing_ && !(gassing_->current() >= 0.0)) {
            throw std::invalid_argument("SodModel: gassing current must be >= 0");
        }
    }

    double amplitude() const { return amplitude_; }
    double tau() const { return tau_; }
    double capacity() const { return capacity_; }
    double f_init() const { return f_init_; }
    const std::optional<GassingParams>& gassing() const { return gassing_; }

    double gassing_current() const { return gassing_ ? gassing_->current() : 0.0; }

    /// I_SOD = I - I_gas, floored at zero, for a supplied raw current I.
    double effective_current(double raw_current) const {
        return std::max(0.0, raw_current - gassing_current());
    }

    /// F_init + K tau / C_N: the SOD reached after infinite active time
    /// (before saturation at 1).
    double asymptote() const { return f_init_ + amplitude_ * tau_ / capacity_; }

private:
    double amplitude_;
    double tau_;
    double capacity_;
    double f_init_;
    std::optional<GassingParams> gassing_;
};

namespace detail {
inline void check_time(double t, const char* who) {
    if (!(t >= 0.0)) {
        throw std::invalid_argument(std::string(who) + ": time must be >= 0");
    }
}
}  // namespace detail

/// I_SOD(t) = K exp(-t / tau), t being cumulative active time.
inline double discharge_current(const SodModel& model, double active_time) {
    detail::check_time(active_time, "discharge_current");
    return model.amplitude() * std::exp(-active_time / model.tau());
}

/// F(t) = min(1, F_init + (K tau / C_N)(1 - e^{-t/tau})).
inline double sod_continuous(const SodModel& model, double elapsed) {
    detail::check_time(elapsed, "sod_continuous");
    const double gain = model.amplitude() * model.tau() / model.capacity();
    return std::min(1.0, model.f_init() + gain * -std::expm1(-elapsed / model.tau()));
}

/// Battery evolved by value; the decay clock runs on active (ON) time only.
struct BatteryState {
    SodModel model;
    double sod;
    double active_time = 0.0;

    explicit BatteryState(SodModel m) : model(m), sod(m.f_init()) {}

    BatteryState with_active_time(double total_active) const {
        BatteryState next = *this;
        next.active_time = std::max(active_time, total_active);
        next.sod = std::max(sod, sod_continuous(model, next.active_time));
        return next;
    }

    /// Consumes `duration` more units of ON time.
    BatteryState consume(double duration) const {
        detail::check_time(duration, "BatteryState::consume");
        return with_active_time(active_time + duration);
    }

    double residual() const { return 1.0 - sod; }
};

/// Applies a trajectory to `start`: SOD grows during ON segments and stays
/// flat during OFF segments.
inline BatteryState sod_modulated(const BatteryState& start, const Trajectory& traj) {
    return start.with_active_time(start.active_time + total_on_time(traj));
}

inline BatteryState sod_modulated(const SodModel& model, const Trajectory& traj) {
    return sod_modulated(BatteryState(model), traj);
}

/// Active time at which the SOD reaches `threshold`, or nullopt when the
/// asymptote F_init + K tau / C_N does not strictly exceed it.
inline std::optional<double> predict_lifetime(const SodModel& model, double threshold) {
    if (!(threshold > model.f_init()) || threshold > 1.0) {
        throw std::invalid_argument("predict_lifetime: threshold must lie in (F_init, 1]");
    }
    if (!(model.asymptote() > threshold)) {
        return std::nullopt;
    }
    const double fraction = (threshold - model.f_init()) * model.capacity() /
                            (model.amplitude() * model.tau());
    return -model.tau() * std::log1p(-fraction);
}

struct ConsumedFraction {
    double expected;  // E[F(T)] with T distributed by the on-time density
    double plug_in;   // F(E[T])
};

/// Expected SOD after the on-time over [0, t], by quadrature against the
/// closed-form on-time density. F is concave in active time, so
/// expected <= plug_in.
inline ConsumedFraction expected_consumed_fraction(const SodModel& model,
                                                   const OccupancySpec& spec) {
    auto integrand = [&](double theta) {
        return sod_continuous(model, theta) * on_time_density(spec, theta);
    };
    const double t = spec.horizon();
    double expected;
    // The saturation kink at F = 1 is integrated piecewise.
    const auto kink = predict_lifetime(model, 1.0);
    if (kink && *kink < t) {
        expected = integrate(integrand, 0.0, *kink) + integrate(integrand, *kink, t);
    } else {
        expected = integrate(integrand, 0.0, t);
    }
    return {expected, sod_continuous(model, mean_on_time(spec))};
}

struct DischargeSample {
    double time;
    double sod;
    double active_time;
    double current;
};

/// Samples SOD along a trajectory at `n_points` uniform times plus every
/// segment boundary. Current is zero while OFF.
inline std::vector<DischargeSample> discharge_trace(const SodModel& model, const Trajectory& traj,
                                                    std::size_t n_points) {
    if (n_points < 2) {
        throw std::invalid_argument("discharge_trace: need at least 2 points");
    }
    std::vector<double> times = uniform_grid(traj.horizon(), n_points);
    for (const auto& s : traj.segments()) {
        times.push_back(s.start);
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    std::vector<DischargeSample> out;
    out.reserve(times.size());
    const auto& segs = traj.segments();
    std::size_t seg = 0;
    double active_before = 0.0;  // active time accumulated before segs[seg]
    for (double t : times) {
        while (seg + 1 < segs.size() && t >= segs[seg + 1].start) {
            if (segs[seg].state == NodeState::On) {
                active_before += segs[seg].duration;
            }
            ++seg;
        }
        const bool on = segs[seg].state == NodeState::On;
        const double active = active_before + (on ? t - segs[seg].start : 0.0);
        out.push_back({t, sod_continuous(model, active), active,
                       on ? discharge_current(model, active) : 0.0});
    }
    return out;
}

/// CSV `time,sod,active_time,current`.
inline void write_discharge_csv(std::ostream& os, const std::vector<DischargeSample>& trace) {
    os << "time,sod,active_time,current\n";
    char buf[128];
    for (const auto& s : trace) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", s.time, s.sod, s.active_time,
                      s.current);
        os << buf;
    }
}

}  // namespace batsim
