#pragma once

// CSV artifacts behind each command-line subcommand. Every artifact starts
// with `#` comment lines recording its inputs, so files are self-describing
// and byte-identical for identical inputs.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "batsim/battery.hpp"
#include "batsim/occupancy.hpp"
#include "batsim/onoff_chain.hpp"
#include "batsim/quadrature.hpp"
#include "batsim/rng.hpp"
#include "batsim/scenario.hpp"

namespace batsim {

inline constexpr std::string_view kToolVersion = "batsim 0.1.0";

namespace detail {
inline std::string num(double v) { return format_number(v); }

inline void tool_header(std::ostream& os, std::string_view command) {
    os << "# tool=" << kToolVersion << "\n# command=" << command << '\n';
}
}  // namespace detail

/// One density curve per x on a shared grid: `theta,x=<x1>,x=<x2>,...`.
inline std::string density_sweep_report(const std::vector<double>& xs, double horizon,
                                        std::size_t n_points) {
    if (xs.empty()) {
        throw std::invalid_argument("density: need at least one x value");
    }
    std::vector<DensityCurve> curves;
    for (double x : xs) {
        curves.push_back(density_curve(OccupancySpec::from_x(x, horizon), n_points));
    }
    std::ostringstream os;
    detail::tool_header(os, "density");
    os << "# t=" << detail::num(horizon) << '\n';
    os << "theta";
    for (double x : xs) {
        os << ",x=" << detail::num(x);
    }
    os << '\n';
    for (std::size_t i = 0; i < n_points; ++i) {
        os << detail::num(curves.front().grid[i]);
        for (const auto& c : curves) {
            os << ',' << detail::num(c.values[i]);
        }
        os << '\n';
    }
    return os.str();
}

inline std::string density_report(const OccupancySpec& spec, std::size_t n_points) {
    std::ostringstream os;
    detail::tool_header(os, "density");
    write_density_csv(os, density_curve(spec, n_points));
    return os.str();
}

/// Rows `x,mean_on_time` for x evenly spaced on [x_min, x_max].
inline std::string mean_curve_report(double x_min, double x_max, double horizon,
                                     std::size_t n_points) {
    if (n_points < 2 || !(x_min < x_max)) {
        throw std::invalid_argument("mean-curve: need x_min < x_max and at least 2 points");
    }
    std::ostringstream os;
    detail::tool_header(os, "mean-curve");
    os << "# t=" << detail::num(horizon) << "\n# x_min=" << detail::num(x_min)
       << "\n# x_max=" << detail::num(x_max) << '\n';
    os << "x,mean_on_time\n";
    for (std::size_t i = 0; i < n_points; ++i) {
        const double x = x_min + (x_max - x_min) * static_cast<double>(i) /
                                     static_cast<double>(n_points - 1);
        os << detail::num(x) << ',' << detail::num(mean_on_time(OccupancySpec::from_x(x, horizon)))
           << '\n';
    }
    return os.str();
}

/// Parses `ON:1,OFF:0.5,ON:2` into a trajectory starting at 0.
inline Trajectory parse_segments(std::string_view text) {
    std::vector<std::pair<NodeState, double>> pieces;
    while (!text.empty()) {
        const auto comma = text.find(',');
        const auto item = detail::trim(text.substr(0, comma));
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) {
            throw std::invalid_argument("segments: expected STATE:duration, got '" +
                                        std::string(item) + "'");
        }
        const auto d = detail::parse_double(item.substr(colon + 1));
        if (!d) {
            throw std::invalid_argument("segments: bad duration in '" + std::string(item) + "'");
        }
        pieces.emplace_back(parse_node_state(detail::trim(item.substr(0, colon))), *d);
        text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    }
    if (pieces.empty()) {
        throw std::invalid_argument("segments: empty list");
    }
    return Trajectory::from_durations(pieces);
}

inline std::string discharge_report(const SodModel& model, const Trajectory& traj,
                                    std::size_t n_points, std::string_view source) {
    std::ostringstream os;
    detail::tool_header(os, "discharge");
    os << "# K=" << detail::num(model.amplitude()) << "\n# tau=" << detail::num(model.tau())
       << "\n# C_N=" << detail::num(model.capacity()) << "\n# F_init=" << detail::num(model.f_init())
       << "\n# trajectory=" << source << "\n# segments=" << traj.segments().size() << '\n';
    write_discharge_csv(os, discharge_trace(model, traj, n_points));
    return os.str();
}

struct ValidationRow {
    double lambda;
    double mu;
    double horizon;
    NodeState initial;
    double density_mean;    // quadrature of theta f(theta)
    double corrected_mean;  // closed form
    double exact_mean;      // slotted exact law
    double mc_mean;
    double mc_stderr;
    double tv_density_exact;
    double atom_zero;
    double atom_horizon;

    bool mc_agrees() const { return std::abs(mc_mean - exact_mean) <= 3.0 * mc_stderr + 1e-12; }
};

/// Monte Carlo sample of total ON time over [0, t]. Replication i uses the
/// i-th seed drawn from Rng(seed).
inline std::vector<double> sample_on_times(const OnOffParams& params, NodeState initial,
                                           double horizon, std::size_t replications,
                                           std::uint64_t seed) {
    Rng seeds(seed);
    std::vector<double> out;
    out.reserve(replications);
    for (std::size_t i = 0; i < replications; ++i) {
        out.push_back(total_on_time(sample_trajectory(params, initial, horizon, seeds.next())));
    }
    return out;
}

inline ValidationRow validate_parameter_set(const OnOffParams& params, double horizon,
                                            NodeState initial, double step,
                                            std::size_t replications, std::uint64_t seed) {
    const OccupancySpec spec(params, horizon);
    ValidationRow row{};
    row.lambda = params.lambda();
    row.mu = params.mu();
    row.horizon = horizon;
    row.initial = initial;
    row.density_mean = integrate([&](double th) { return th * on_time_density(spec, th); }, 0.0,
                                 horizon, 1e-14 * horizon);
    row.corrected_mean = mean_on_time(spec);
    const auto law = exact_occupation_distribution(spec, step, initial);
    row.exact_mean = law.mean();
    row.tv_density_exact = total_variation_to_density(law);
    row.atom_zero = law.atom_at_zero;
    row.atom_horizon = law.atom_at_horizon;

    const auto samples = sample_on_times(params, initial, horizon, replications, seed);
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double d = samples[i] - mean;
        mean += d / static_cast<double>(i + 1);
        m2 += d * (samples[i] - mean);
    }
    const double n = static_cast<double>(samples.size());
    row.mc_mean = mean;
    row.mc_stderr = n > 1 ? std::sqrt(m2 / (n - 1) / n) : 0.0;
    return row;
}

inline std::string validation_report(const std::vector<ValidationRow>& rows,
                                     std::size_t replications, double step, std::uint64_t seed) {
    std::ostringstream os;
    detail::tool_header(os, "validate");
    os << "# replications=" << replications << "\n# step=" << detail::num(step)
       << "\n# seed=" << seed << "\n# generator=" << Rng::algorithm << '\n';
    os << "lambda,mu,t,initial,density_mean,corrected_mean,exact_mean,mc_mean,mc_stderr,"
          "tv_density_exact,atom_zero,atom_horizon,mc_within_3se\n";
    for (const auto& r : rows) {
        os << detail::num(r.lambda) << ',' << detail::num(r.mu) << ',' << detail::num(r.horizon)
           << ',' << to_string(r.initial) << ',' << detail::num(r.density_mean) << ','
           << detail::num(r.corrected_mean) << ',' << detail::num(r.exact_mean) << ','
           << detail::num(r.mc_mean) << ',' << detail::num(r.mc_stderr) << ','
           << detail::num(r.tv_density_exact) << ',' << detail::num(r.atom_zero) << ','
           << detail::num(r.atom_horizon) << ',' << (r.mc_agrees() ? "yes" : "no") << '\n';
    }
    return os.str();
}

/// Mean of each metric across replications (rows in first-replication order);
/// non-numeric values are kept when all replications agree.
inline std::vector<std::pair<std::string, std::string>> aggregate_metrics(
    const std::vector<ScenarioResult>& runs) {
    std::vector<std::pair<std::string, std::string>> out;
    if (runs.empty()) {
        return out;
    }
    out.emplace_back("replications", std::to_string(runs.size()));
    for (const auto& [name, first] : runs.front().metrics) {
        if (name == "seed") {
            continue;
        }
        bool numeric = true;
        bool same = true;
        double sum = 0.0;
        for (const auto& r : runs) {
            const std::string v = r.metric(name);
            same = same && v == first;
            if (auto d = detail::parse_double(v)) {
                sum += *d;
            } else {
                numeric = false;
            }
        }
        if (numeric) {
            out.emplace_back(name, format_number(sum / static_cast<double>(runs.size())));
        } else {
            out.emplace_back(name, same ? first : "mixed");
        }
    }
    return out;
}

}  // namespace batsim
