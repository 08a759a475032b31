#pragma once

#include <atomic>
#include <cstdlib>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "thermadiab/io.hpp"

namespace thermadiab {

// Worker pool size: hardware concurrency capped by THERMADIAB_THREADS.
inline int worker_cap(int n_tasks) {
    unsigned workers = std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    if (const char* env = std::getenv("THERMADIAB_THREADS")) {
        char* end = nullptr;
        const long requested = std::strtol(env, &end, 10);
        if (end != env && requested >= 1)
            workers = std::min<unsigned>(workers, static_cast<unsigned>(requested));
    }
    return static_cast<int>(std::min<unsigned>(workers, static_cast<unsigned>(std::max(n_tasks, 1))));
}

inline ScenarioOutcome run_config(const ScenarioConfig& config) {
    const DrivenHamiltonian family = build_family(config.family, config.s_max);
    const DrivingSchedule schedule(config.omega, config.s_max, config.n_steps);
    ScenarioOptions options;
    options.degeneracy_threshold = config.degeneracy_threshold;
    options.fd_step = config.fd_step;
    return run_scenario(family, schedule, config.beta, options);
}

struct SimulateArtifacts {
    std::filesystem::path trajectory_csv;
    std::filesystem::path bound_csv;
    ScenarioOutcome outcome;
};

// simulate: full pipeline for one scenario, trajectory and bound CSVs.
inline SimulateArtifacts cmd_simulate(const ScenarioConfig& config,
                                      const std::filesystem::path& out_dir,
                                      bool include_states = false) {
    SimulateArtifacts artifacts;
    artifacts.outcome = run_config(config);
    artifacts.trajectory_csv = out_dir / "trajectory.csv";
    artifacts.bound_csv = out_dir / "bound_report.csv";
    write_trajectory_csv(artifacts.trajectory_csv, artifacts.outcome.trajectory, include_states);
    write_bound_csv(artifacts.bound_csv, artifacts.outcome.report);
    return artifacts;
}

struct SweepRow {
    double value = 0.0;
    double final_lhs = std::numeric_limits<double>::quiet_NaN();
    double final_rhs = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";
};

namespace detail {

inline ScenarioConfig apply_axis(ScenarioConfig config, const std::string& axis, double value) {
    if (axis == "omega")
        config.omega = value;
    else if (axis == "beta")
        config.beta = value;
    else if (axis == "n_steps")
        config.n_steps = static_cast<int>(std::lround(value));
    else
        throw ConfigParse("unknown sweep axis '" + axis + "'");
    return config;
}

}  // namespace detail

// sweep: one scenario per axis value, run concurrently. A failing scenario
// becomes a status row instead of aborting the sweep, and the summary keeps
// the input order regardless of completion order.
inline std::vector<SweepRow> cmd_sweep(const ScenarioConfig& base, const std::string& axis,
                                       const std::vector<double>& values,
                                       const std::filesystem::path& out_dir) {
    if (values.empty()) throw ConfigParse("sweep needs at least one value");
    detail::apply_axis(base, axis, values.front());  // validate the axis up front

    std::vector<SweepRow> rows(values.size());
    std::atomic<std::size_t> next{0};
    const auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= values.size()) return;
            SweepRow& row = rows[i];
            row.value = values[i];
            std::ostringstream name;
            name << "bound_" << std::setw(3) << std::setfill('0') << i << ".csv";
            try {
                const ScenarioConfig config = detail::apply_axis(base, axis, values[i]);
                const ScenarioOutcome outcome = run_config(config);
                write_bound_csv(out_dir / name.str(), outcome.report);
                row.final_lhs = outcome.report.lhs_measured.back();
                row.final_rhs = outcome.report.rhs_total.back();
            } catch (const Error& e) {
                row.status = e.tag();
            }
        }
    };

    const int n_workers = worker_cap(static_cast<int>(values.size()));
    if (n_workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }

    std::ofstream out = detail::open_output(out_dir / "summary.csv");
    out << "value,final_lhs,final_rhs,status\n";
    for (const SweepRow& row : rows)
        out << format_double(row.value) << "," << format_double(row.final_lhs) << ","
            << format_double(row.final_rhs) << "," << row.status << "\n";
    if (!out) throw FileIO("failed while writing sweep summary");
    return rows;
}

// ---------------------------------------------------------------------------
// wire experiments

struct WireFidelityConfig {
    std::vector<double> omegas{0.1, 0.5, 2.0, 10.0};
    std::vector<double> gammas{0.1, 0.5, 2.0, 10.0};
    double alpha_max = 4.0 * std::numbers::pi;
    int n_alpha = 10;
    double target_error = 1e-9;
};

inline WireFidelityConfig parse_wire_fidelity_config(const Json& j) {
    WireFidelityConfig config;
    config.omegas = j.value("omegas", config.omegas);
    config.gammas = j.value("gammas", config.gammas);
    config.alpha_max = j.value("alpha_max", config.alpha_max);
    config.n_alpha = j.value("n_alpha", config.n_alpha);
    config.target_error = j.value("target_error", config.target_error);
    if (config.omegas.empty() || config.gammas.empty() || config.n_alpha < 1)
        throw ConfigParse("fidelity experiment needs omegas, gammas and n_alpha >= 1");
    return config;
}

// analytic vs numerically propagated infidelity over the (omega, gamma,
// alpha) grid
inline std::filesystem::path cmd_wire_fidelity(const WireFidelityConfig& config,
                                               const std::filesystem::path& out_dir) {
    std::ofstream out = detail::open_output(out_dir / "wire_fidelity.csv");
    out << "omega,gamma,alpha,analytic,simulated\n";
    for (const double omega : config.omegas) {
        for (const double gamma : config.gammas) {
            const std::vector<double> simulated = simulate_psa_infidelity(
                omega, gamma, config.alpha_max, config.n_alpha, config.target_error);
            for (int k = 1; k <= config.n_alpha; ++k) {
                const double alpha = config.alpha_max * k / config.n_alpha;
                out << format_double(omega) << "," << format_double(gamma) << ","
                    << format_double(alpha) << ","
                    << format_double(psa_fidelity_analytic(omega, gamma, alpha)) << ","
                    << format_double(simulated[static_cast<std::size_t>(k)]) << "\n";
            }
        }
    }
    if (!out) throw FileIO("failed while writing wire fidelity table");
    return out_dir / "wire_fidelity.csv";
}

struct WireRatesConfig {
    std::vector<double> epsilons{0.05, 0.1, 0.5};
    double beta = 1.0;
    double spin = 0.5;
    double alpha = std::numbers::pi;
    double gamma = 1.0;
};

inline WireRatesConfig parse_wire_rates_config(const Json& j) {
    WireRatesConfig config;
    config.epsilons = j.value("epsilons", config.epsilons);
    config.beta = j.value("beta", config.beta);
    config.spin = j.value("spin", config.spin);
    config.alpha = j.value("alpha", config.alpha);
    config.gamma = j.value("gamma", config.gamma);
    if (config.epsilons.empty()) throw ConfigParse("rates experiment needs epsilons");
    return config;
}

inline std::filesystem::path cmd_wire_rates(const WireRatesConfig& config,
                                            const std::filesystem::path& out_dir) {
    std::ofstream out = detail::open_output(out_dir / "wire_rates.csv");
    out << "epsilon,beta,spin,alpha,gamma,psa_critical_rate,finite_T_sufficient_rate\n";
    for (const double eps : config.epsilons) {
        out << format_double(eps) << "," << format_double(config.beta) << ","
            << format_double(config.spin) << "," << format_double(config.alpha) << ","
            << format_double(config.gamma) << ","
            << format_double(psa_critical_rate(config.gamma, eps)) << ","
            << format_double(finite_t_sufficient_rate(eps, config.beta, config.spin, config.alpha))
            << "\n";
    }
    if (!out) throw FileIO("failed while writing wire rates table");
    return out_dir / "wire_rates.csv";
}

struct WireScalingConfig {
    std::vector<long> n_list{100, 1000, 10000};
    double p_fermi = 1.0;
    double epsilon = 0.1;
    int samples = 200;
    std::uint64_t seed = 1;
    WireModelParams base;
};

inline WireScalingConfig parse_wire_scaling_config(const Json& j) {
    WireScalingConfig config;
    config.n_list = j.value("n_list", config.n_list);
    config.p_fermi = j.value("p_fermi", config.p_fermi);
    config.epsilon = j.value("epsilon", config.epsilon);
    config.samples = j.value("samples", config.samples);
    config.seed = j.value("seed", config.seed);
    if (j.contains("params")) config.base = parse_wire_params(j["params"]);
    return config;
}

inline ScalingFit cmd_wire_scaling(const WireScalingConfig& config,
                                   const std::filesystem::path& out_dir) {
    const ScalingFit fit = scaling_experiment(config.n_list, config.p_fermi, config.epsilon,
                                              config.samples, config.seed, config.base);
    write_scaling_csv(out_dir / "wire_scaling.csv", fit);
    write_scaling_fit_json(out_dir / "wire_scaling_fit.json", fit);
    return fit;
}

inline void cmd_wire(const std::string& experiment, const Json& config,
                     const std::filesystem::path& out_dir,
                     std::optional<std::uint64_t> seed_override = std::nullopt) {
    if (experiment == "fidelity") {
        cmd_wire_fidelity(parse_wire_fidelity_config(config), out_dir);
    } else if (experiment == "rates") {
        cmd_wire_rates(parse_wire_rates_config(config), out_dir);
    } else if (experiment == "scaling") {
        WireScalingConfig scaling = parse_wire_scaling_config(config);
        if (seed_override) scaling.seed = *seed_override;
        cmd_wire_scaling(scaling, out_dir);
    } else {
        throw ConfigParse("unknown wire experiment '" + experiment +
                          "' (expected fidelity, rates or scaling)");
    }
}

// ---------------------------------------------------------------------------
// lemma check

struct LemmaCheckResult {
    bool pass = false;
    int trials = 0;
    double worst_deviation = 0.0;
};

// Adjacent-pair functionals against the brute-force all-pairs values on
// random strictly ordered spectra.
inline LemmaCheckResult cmd_lemma_check(int trials, int dim_min, int dim_max, std::uint64_t seed,
                                        double tolerance = 1e-12) {
    if (trials < 1) throw ConfigParse("trials must be >= 1");
    if (dim_min < 2 || dim_max < dim_min) throw ConfigParse("dims must satisfy 2 <= min <= max");
    std::mt19937_64 engine(seed);
    LemmaCheckResult result;
    result.trials = trials;
    for (int t = 0; t < trials; ++t) {
        const auto d = static_cast<Eigen::Index>(
            dim_min + static_cast<int>(engine() % static_cast<std::uint64_t>(dim_max - dim_min + 1)));
        RealVector e0(d), es(d), des(d);
        for (Eigen::Index n = 0; n < d; ++n) {
            e0[n] = 4.0 * rng::uniform01(engine) - 2.0;
            es[n] = 4.0 * rng::uniform01(engine) - 2.0;
            des[n] = 6.0 * rng::uniform01(engine) - 3.0;
        }
        std::sort(e0.begin(), e0.end());
        std::sort(es.begin(), es.end());
        for (Eigen::Index n = 0; n + 1 < d; ++n)
            if (!(es[n + 1] > es[n])) es[n + 1] = std::nextafter(es[n], 10.0);

        const AllPairsFunctionals brute = all_pairs_oracle(e0, es, des);
        const AllPairsFunctionals adjacent = adjacent_pairs_functionals(e0, es, des);
        const double dev =
            std::max(std::abs(brute.mu_inv - adjacent.mu_inv) / std::max(1.0, brute.mu_inv),
                     std::abs(brute.nu - adjacent.nu) / std::max(1.0, brute.nu));
        result.worst_deviation = std::max(result.worst_deviation, dev);
    }
    result.pass = result.worst_deviation <= tolerance;
    return result;
}

}  // namespace thermadiab
