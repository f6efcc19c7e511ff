#pragma once

// On-time (occupation time) law of the ON/OFF chain over [0, t].
//
// The closed forms use x = mu - lambda. Every formula below has a removable
// singularity at x = 0 and overflows for large |x| t if evaluated naively,
// so each one is rewritten around expm1 and a negative exponent.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "batsim/onoff_chain.hpp"

namespace batsim {

/// Below this |x| t the uniform-limit branch is used.
inline constexpr double kUniformLimitThreshold = 1e-8;

class OccupancySpec {
public:
    OccupancySpec(OnOffParams params, double horizon) : params_(params), horizon_(horizon) {
        if (!(horizon > 0.0) || !std::isfinite(horizon)) {
            throw std::invalid_argument("OccupancySpec: horizon must be finite and > 0");
        }
    }

    /// The density and mean depend on the rates only through x; this picks
    /// the pair with min(lambda, mu) = 0.
    static OccupancySpec from_x(double x, double horizon) {
        return OccupancySpec(OnOffParams(std::max(0.0, -x), std::max(0.0, x)), horizon);
    }

    const OnOffParams& params() const { return params_; }
    double horizon() const { return horizon_; }
    double x() const { return params_.mu() - params_.lambda(); }

private:
    OnOffParams params_;
    double horizon_;
};

namespace detail {

inline bool uniform_limit(const OccupancySpec& spec) {
    return std::abs(spec.x()) * spec.horizon() < kUniformLimitThreshold;
}

inline void check_theta(const OccupancySpec& spec, double theta, const char* who) {
    if (!(theta >= 0.0) || theta > spec.horizon()) {
        throw std::invalid_argument(std::string(who) + ": theta outside [0, horizon]");
    }
}

}  // namespace detail

/// C = (mu - lambda) / (exp(-lambda t) - exp(-mu t)); limit exp(lambda t) / t
/// when mu == lambda.
inline double normalization_constant(const OccupancySpec& spec) {
    const double t = spec.horizon();
    const double lambda = spec.params().lambda();
    if (detail::uniform_limit(spec)) {
        return std::exp(lambda * t) / t;
    }
    const double x = spec.x();
    // exp(-lambda t) - exp(-mu t) = -exp(-lambda t) * expm1(-x t)
    return x * std::exp(lambda * t) / -std::expm1(-x * t);
}

/// f(theta) = x e^{x theta} / (e^{x t} - 1).
inline double on_time_density(const OccupancySpec& spec, double theta) {
    detail::check_theta(spec, theta, "on_time_density");
    const double t = spec.horizon();
    if (detail::uniform_limit(spec)) {
        return 1.0 / t;
    }
    const double x = spec.x();
    if (x > 0.0) {
        return x * std::exp(x * (theta - t)) / -std::expm1(-x * t);
    }
    return x * std::exp(x * theta) / std::expm1(x * t);
}

/// F(theta) = (e^{x theta} - 1) / (e^{x t} - 1).
inline double on_time_cdf(const OccupancySpec& spec, double theta) {
    detail::check_theta(spec, theta, "on_time_cdf");
    const double t = spec.horizon();
    double p;
    if (detail::uniform_limit(spec)) {
        p = theta / t;
    } else {
        const double x = spec.x();
        if (x > 0.0) {
            p = std::exp(x * (theta - t)) * std::expm1(-x * theta) / std::expm1(-x * t);
        } else {
            p = std::expm1(x * theta) / std::expm1(x * t);
        }
    }
    return std::clamp(p, 0.0, 1.0);
}

/// E[T] = t - 1/x + t / (e^{x t} - 1), which tends to t/2 as x -> 0.
inline double mean_on_time(const OccupancySpec& spec) {
    const double t = spec.horizon();
    const double u = spec.x() * t;
    if (std::abs(u) < 1e-3) {
        // t * (1/2 + u/12 - u^3/720 + u^5/30240)
        const double u2 = u * u;
        return t * (0.5 + u / 12.0 * (1.0 - u2 / 60.0 * (1.0 - u2 / 42.0)));
    }
    return t * (1.0 - 1.0 / u + 1.0 / std::expm1(u));
}

/// The mean exactly as printed alongside the density derivation:
/// ((mu - lambda) t + 1) / (mu - lambda) + t / (e^{t (mu - lambda)} - 1).
/// Kept to document that it does not reduce to t/2 as x -> 0; use
/// mean_on_time() for the actual expectation.
inline double printed_mean_on_time(const OccupancySpec& spec) {
    const double t = spec.horizon();
    const double x = spec.x();
    return (x * t + 1.0) / x + t / std::expm1(t * x);
}

struct DensityCurve {
    OccupancySpec spec;
    std::vector<double> grid;
    std::vector<double> values;

    double trapezoid_integral() const {
        double sum = 0.0;
        for (std::size_t i = 1; i < grid.size(); ++i) {
            sum += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
        }
        return sum;
    }
};

inline std::vector<double> uniform_grid(double horizon, std::size_t n_points) {
    std::vector<double> grid(n_points);
    const double h = horizon / static_cast<double>(n_points - 1);
    for (std::size_t i = 0; i < n_points; ++i) {
        grid[i] = static_cast<double>(i) * h;
    }
    grid.back() = horizon;
    return grid;
}

inline DensityCurve density_curve(const OccupancySpec& spec, std::size_t n_points) {
    if (n_points < 2) {
        throw std::invalid_argument("density_curve: need at least 2 points");
    }
    DensityCurve curve{spec, uniform_grid(spec.horizon(), n_points), {}};
    curve.values.reserve(n_points);
    for (double theta : curve.grid) {
        curve.values.push_back(on_time_density(spec, theta));
    }
    return curve;
}

/// CSV `theta,density` preceded by `#` comment lines recording the parameters.
inline void write_density_csv(std::ostream& os, const DensityCurve& curve) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "# lambda=%.17g\n# mu=%.17g\n# t=%.17g\n# x=%.17g\n",
                  curve.spec.params().lambda(), curve.spec.params().mu(), curve.spec.horizon(),
                  curve.spec.x());
    os << buf << "theta,density\n";
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", curve.grid[i], curve.values[i]);
        os << buf;
    }
}

/// Distribution of total ON time obtained by slotting [0, t] and running the
/// chain as a discrete-time process (switch probabilities 1 - e^{-rate h}).
/// Unlike the closed-form density, it is conditioned on the initial state and
/// carries the atoms of paths that never switch.
struct OccupationLaw {
    OccupancySpec spec;
    NodeState initial;
    double step;                 // effective slot width t / slots
    std::vector<double> mass;    // mass[k]: P(ON time = k * step), k = 0..slots
    double atom_at_zero = 0.0;   // never left OFF
    double atom_at_horizon = 0.0;  // never left ON

    std::size_t slots() const { return mass.size() - 1; }
    double on_time(std::size_t k) const { return static_cast<double>(k) * step; }

    double total_mass() const {
        double s = 0.0;
        for (double m : mass) {
            s += m;
        }
        return s;
    }

    double mean() const {
        double s = 0.0;
        for (std::size_t k = 0; k < mass.size(); ++k) {
            s += mass[k] * on_time(k);
        }
        return s;
    }

    /// Continuous part (atoms removed) rescaled to a density on the slot grid.
    DensityCurve continuous_density() const {
        DensityCurve curve{spec, {}, {}};
        curve.grid.reserve(mass.size());
        curve.values.reserve(mass.size());
        for (std::size_t k = 0; k < mass.size(); ++k) {
            double m = mass[k];
            if (k == 0) {
                m -= atom_at_zero;
            }
            if (k == slots()) {
                m -= atom_at_horizon;
            }
            curve.grid.push_back(on_time(k));
            curve.values.push_back(std::max(0.0, m) / step);
        }
        return curve;
    }
};

inline OccupationLaw exact_occupation_distribution(const OccupancySpec& spec, double step,
                                                   NodeState initial) {
    const double t = spec.horizon();
    if (!(step > 0.0) || step > t / 100.0 * (1.0 + 1e-12)) {
        throw std::invalid_argument("exact_occupation_distribution: step must be in (0, t/100]");
    }
    const double ratio = t / step;
    const double nearest = std::round(ratio);
    const auto n = static_cast<std::size_t>(std::abs(ratio - nearest) < 1e-9 * ratio ? nearest
                                                                                      : std::ceil(ratio));
    const double h = t / static_cast<double>(n);
    const double leave_on = -std::expm1(-spec.params().lambda() * h);
    const double leave_off = -std::expm1(-spec.params().mu() * h);

    // on[k] / off[k]: probability of being in that state at the current slot
    // with k ON slots already counted.
    std::vector<double> on(n + 1, 0.0);
    std::vector<double> off(n + 1, 0.0);
    (initial == NodeState::On ? on : off)[0] = 1.0;

    for (std::size_t slot = 0; slot < n; ++slot) {
        // Occupy the slot: ON mass shifts one count up. Counts above slot+1
        // are still zero.
        const std::size_t top = slot + 1;
        for (std::size_t k = top; k > 0; --k) {
            on[k] = on[k - 1];
        }
        on[0] = 0.0;
        if (slot + 1 == n) {
            break;
        }
        for (std::size_t k = 0; k <= top; ++k) {
            const double a = on[k];
            const double b = off[k];
            on[k] = a * (1.0 - leave_on) + b * leave_off;
            off[k] = b * (1.0 - leave_off) + a * leave_on;
        }
    }

    OccupationLaw law{spec, initial, h, std::vector<double>(n + 1), 0.0, 0.0};
    for (std::size_t k = 0; k <= n; ++k) {
        law.mass[k] = on[k] + off[k];
    }
    // Only the never-switching path reaches the extreme count.
    if (initial == NodeState::On) {
        law.atom_at_horizon = law.mass[n];
    } else {
        law.atom_at_zero = law.mass[0];
    }
    return law;
}

/// Total-variation distance between the slotted law and the closed-form
/// density, with slot k standing for [(k - 1/2) h, (k + 1/2) h] clipped to
/// [0, t].
inline double total_variation_to_density(const OccupationLaw& law) {
    const double t = law.spec.horizon();
    double tv = 0.0;
    for (std::size_t k = 0; k < law.mass.size(); ++k) {
        const double lo = std::max(0.0, (static_cast<double>(k) - 0.5) * law.step);
        const double hi = std::min(t, (static_cast<double>(k) + 0.5) * law.step);
        const double closed = on_time_cdf(law.spec, hi) - on_time_cdf(law.spec, lo);
        tv += std::abs(law.mass[k] - closed);
    }
    return 0.5 * tv;
}

}  // namespace batsim
