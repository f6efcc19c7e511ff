// Command-line front end: figure data, validation campaigns, routing scenarios.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "batsim/batsim.hpp"

namespace fs = std::filesystem;
using namespace batsim;

namespace {

constexpr const char* kOutputDirEnv = "BATSIM_OUTPUT_DIR";

struct CommandError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path default_output_dir() {
    if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
        return env;
    }
    return ".";
}

/// Resolves `file` against `dir`, refusing anything that lands outside it.
fs::path resolve_inside(const fs::path& dir, const fs::path& file) {
    const fs::path base = fs::absolute(dir).lexically_normal();
    const fs::path target = (file.is_absolute() ? file : base / file).lexically_normal();
    const fs::path rel = target.lexically_relative(base);
    if (rel.empty() || *rel.begin() == "..") {
        throw CommandError("output path " + target.string() + " is outside the output directory " +
                           base.string());
    }
    return target;
}

/// Writes files and removes all of them again if a later step fails.
class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}
    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;

    ~OutputSet() {
        if (!committed_) {
            std::error_code ec;
            for (const auto& p : written_) {
                fs::remove(p, ec);
            }
        }
    }

    void write(const fs::path& file, const std::string& content) {
        const fs::path target = resolve_inside(dir_, file);
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
        std::ofstream out(target, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw CommandError("cannot write " + target.string());
        }
        written_.push_back(target);
        out << content;
        out.close();
        if (!out) {
            throw CommandError("write failed for " + target.string());
        }
    }

    void commit() { committed_ = true; }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
    bool committed_ = false;
};

NodeState parse_state_flag(const std::string& s) { return parse_node_state(s); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic battery discharge and energy-aware routing simulator"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    std::string out_dir;
    app.add_option("--out-dir", out_dir,
                   std::string("Output directory (default: $") + kOutputDirEnv + " or .)");

    // density
    auto* density = app.add_subcommand("density", "On-time density curve(s) as CSV");
    std::optional<double> d_lambda;
    std::optional<double> d_mu;
    std::vector<double> d_xs;
    double d_horizon = 10.0;
    std::size_t d_points = 1001;
    std::string d_out = "density.csv";
    density->add_option("--lambda", d_lambda, "ON -> OFF rate");
    density->add_option("--mu", d_mu, "OFF -> ON rate");
    density->add_option("--x", d_xs, "x = mu - lambda; repeat or comma-separate for several curves")
        ->delimiter(',')
        ->excludes("--lambda")
        ->excludes("--mu");
    density->add_option("--horizon", d_horizon, "Horizon t")->check(CLI::PositiveNumber);
    density->add_option("--points", d_points, "Grid points")->check(CLI::Range(2, 10000000));
    density->add_option("--out", d_out, "Output CSV");

    // mean-curve
    auto* mean_curve = app.add_subcommand("mean-curve", "Mean on-time against x as CSV");
    double m_xmin = 0.01;
    double m_xmax = 1.0;
    double m_horizon = 10.0;
    std::size_t m_points = 200;
    std::string m_out = "mean_curve.csv";
    mean_curve->add_option("--x-min", m_xmin, "Smallest x");
    mean_curve->add_option("--x-max", m_xmax, "Largest x");
    mean_curve->add_option("--horizon", m_horizon, "Horizon t")->check(CLI::PositiveNumber);
    mean_curve->add_option("--points", m_points, "Number of x values")->check(CLI::Range(2, 10000000));
    mean_curve->add_option("--out", m_out, "Output CSV");

    // discharge
    auto* discharge = app.add_subcommand("discharge", "State-of-discharge trace as CSV");
    double b_amp = 1.0;
    double b_tau = 2.0;
    double b_cap = 4.0;
    double b_finit = 0.0;
    double b_horizon = 10.0;
    std::size_t b_points = 501;
    std::string b_mode = "continuous";
    double b_lambda = 1.0;
    double b_mu = 1.0;
    std::string b_initial = "ON";
    std::uint64_t b_seed = 1;
    std::string b_segments;
    std::string b_out = "discharge.csv";
    std::string b_trace;
    discharge->add_option("--amplitude", b_amp, "Current amplitude K");
    discharge->add_option("--tau", b_tau, "Decay time constant");
    discharge->add_option("--capacity", b_cap, "Nominal capacity C_N");
    discharge->add_option("--f-init", b_finit, "Initial state of discharge");
    discharge->add_option("--horizon", b_horizon, "Horizon (continuous/sampled)")->check(CLI::PositiveNumber);
    discharge->add_option("--points", b_points, "Uniform sample points")->check(CLI::Range(2, 10000000));
    discharge->add_option("--mode", b_mode, "continuous | sampled | scripted")
        ->check(CLI::IsMember({"continuous", "sampled", "scripted"}));
    discharge->add_option("--lambda", b_lambda, "ON -> OFF rate (sampled)");
    discharge->add_option("--mu", b_mu, "OFF -> ON rate (sampled)");
    discharge->add_option("--initial", b_initial, "Initial state (sampled)")
        ->check(CLI::IsMember({"ON", "OFF"}));
    discharge->add_option("--seed", b_seed, "Seed (sampled)");
    discharge->add_option("--segments", b_segments, "Scripted path, e.g. ON:1,OFF:1,ON:1");
    discharge->add_option("--out", b_out, "Output CSV");
    discharge->add_option("--trace", b_trace, "Also write the trajectory CSV here");

    // validate
    auto* validate = app.add_subcommand("validate", "Closed form vs exact law vs Monte Carlo");
    std::vector<double> v_lambdas;
    std::vector<double> v_mus;
    double v_horizon = 4.0;
    std::size_t v_reps = 100000;
    std::optional<double> v_step;
    std::uint64_t v_seed = 1;
    std::string v_initial = "both";
    std::string v_out = "validate.csv";
    validate->add_option("--lambda", v_lambdas, "ON -> OFF rates (paired with --mu)")->delimiter(',');
    validate->add_option("--mu", v_mus, "OFF -> ON rates (paired with --lambda)")->delimiter(',');
    validate->add_option("--horizon", v_horizon, "Horizon t")->check(CLI::PositiveNumber);
    validate->add_option("--replications", v_reps, "Monte Carlo trajectories per row")
        ->check(CLI::Range(std::size_t{10000}, std::size_t{100000000}));
    validate->add_option("--step", v_step, "Slot width of the exact law (default t/4096)");
    validate->add_option("--seed", v_seed, "Monte Carlo seed");
    validate->add_option("--initial", v_initial, "ON | OFF | both")
        ->check(CLI::IsMember({"ON", "OFF", "both"}));
    validate->add_option("--out", v_out, "Output CSV");

    // route
    auto* route = app.add_subcommand("route", "Run a routing scenario file");
    std::string r_config;
    std::optional<std::uint64_t> r_seed;
    std::optional<std::size_t> r_reps;
    route->add_option("--config", r_config, "Scenario file")->required();
    route->add_option("--seed", r_seed, "Override the first seed");
    route->add_option("--replications", r_reps, "Override the replication count")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        const fs::path base = out_dir.empty() ? default_output_dir() : fs::path(out_dir);

        if (*density) {
            OutputSet out(base);
            if (!d_xs.empty()) {
                if (d_xs.size() == 1) {
                    out.write(d_out,
                              density_report(OccupancySpec::from_x(d_xs.front(), d_horizon), d_points));
                } else {
                    out.write(d_out, density_sweep_report(d_xs, d_horizon, d_points));
                }
            } else {
                if (!d_lambda || !d_mu) {
                    throw CommandError("density: give --lambda and --mu, or --x");
                }
                out.write(d_out, density_report(OccupancySpec(OnOffParams(*d_lambda, *d_mu), d_horizon),
                                                d_points));
            }
            out.commit();
        } else if (*mean_curve) {
            OutputSet out(base);
            out.write(m_out, mean_curve_report(m_xmin, m_xmax, m_horizon, m_points));
            out.commit();
        } else if (*discharge) {
            const SodModel model(b_amp, b_tau, b_cap, b_finit);
            std::optional<Trajectory> traj;
            std::string source;
            if (b_mode == "continuous") {
                traj = Trajectory(b_horizon, {{NodeState::On, 0.0, b_horizon}});
                source = "continuous";
            } else if (b_mode == "sampled") {
                traj = sample_trajectory(OnOffParams(b_lambda, b_mu), parse_state_flag(b_initial),
                                         b_horizon, b_seed);
                source = "sampled lambda=" + format_number(b_lambda) + " mu=" + format_number(b_mu) +
                         " initial=" + b_initial + " seed=" + std::to_string(b_seed) +
                         " generator=" + std::string(Rng::algorithm);
            } else {
                if (b_segments.empty()) {
                    throw CommandError("discharge: scripted mode needs --segments");
                }
                traj = parse_segments(b_segments);
                source = "scripted " + b_segments;
            }
            OutputSet out(base);
            out.write(b_out, discharge_report(model, *traj, b_points, source));
            if (!b_trace.empty()) {
                std::ostringstream os;
                write_trajectory_csv(os, *traj);
                out.write(b_trace, os.str());
            }
            out.commit();
        } else if (*validate) {
            if (v_lambdas.size() != v_mus.size()) {
                throw CommandError("validate: --lambda and --mu must have the same length");
            }
            if (v_lambdas.empty()) {
                v_lambdas = {1.0, 0.5, 2.0, 0.0};
                v_mus = {3.0, 0.5, 1.0, 1.0};
            }
            const double step = v_step.value_or(v_horizon / 4096.0);
            std::vector<NodeState> starts;
            if (v_initial != "OFF") {
                starts.push_back(NodeState::On);
            }
            if (v_initial != "ON") {
                starts.push_back(NodeState::Off);
            }
            std::vector<std::future<ValidationRow>> jobs;
            for (std::size_t i = 0; i < v_lambdas.size(); ++i) {
                for (NodeState s : starts) {
                    const OnOffParams params(v_lambdas[i], v_mus[i]);
                    jobs.push_back(std::async(std::launch::async, [=] {
                        return validate_parameter_set(params, v_horizon, s, step, v_reps, v_seed);
                    }));
                }
            }
            std::vector<ValidationRow> rows;
            for (auto& j : jobs) {
                rows.push_back(j.get());
            }
            OutputSet out(base);
            out.write(v_out, validation_report(rows, v_reps, step, v_seed));
            out.commit();
        } else if (*route) {
            ScenarioConfig cfg = load_scenario_config(r_config);
            if (r_seed || r_reps) {
                const std::uint64_t first = r_seed.value_or(cfg.seeds.front());
                const std::size_t count = r_reps.value_or(cfg.seeds.size());
                cfg.seeds.clear();
                for (std::size_t i = 0; i < count; ++i) {
                    cfg.seeds.push_back(first + i);
                }
            }
            cfg.validate();
            const fs::path dir = out_dir.empty() ? resolve_inside(base, cfg.output_dir)
                                                 : fs::path(out_dir);

            std::vector<std::future<ScenarioResult>> jobs;
            for (auto seed : cfg.seeds) {
                jobs.push_back(std::async(std::launch::async,
                                          [&cfg, seed] { return run_scenario(cfg, seed); }));
            }
            std::vector<ScenarioResult> runs;
            for (auto& j : jobs) {
                runs.push_back(j.get());
            }
            std::sort(runs.begin(), runs.end(),
                      [](const auto& a, const auto& b) { return a.seed < b.seed; });

            OutputSet out(dir);
            for (const auto& r : runs) {
                const std::string stem = "route_seed" + std::to_string(r.seed);
                std::ostringstream log;
                write_event_log(log, r);
                out.write(stem + ".log", log.str());
                std::ostringstream metrics;
                write_metrics_csv(metrics, r.metrics);
                out.write(stem + "_metrics.csv", metrics.str());
            }
            std::ostringstream agg;
            agg << "# tool=" << kToolVersion << "\n# config=" << fs::path(r_config).filename().string()
                << "\n# generator=" << Rng::algorithm << '\n';
            write_metrics_csv(agg, aggregate_metrics(runs));
            out.write("metrics.csv", agg.str());
            out.commit();
        }
    } catch (const std::exception& e) {
        std::cerr << "batsim: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
