// thermadiab: finite-temperature adiabaticity simulator.
//
// Subcommands: simulate, sweep, wire, lemma-check. Every error path exits
// nonzero with a diagnostic line whose first token is the error tag.

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "thermadiab/thermadiab.hpp"

namespace {

std::vector<double> parse_value_list(const std::string& csv) {
    std::vector<double> values;
    std::stringstream stream(csv);
    std::string token;
    while (std::getline(stream, token, ',')) {
        try {
            values.push_back(std::stod(token));
        } catch (const std::exception&) {
            throw thermadiab::ConfigParse("cannot parse '" + token + "' as a number");
        }
    }
    if (values.empty()) throw thermadiab::ConfigParse("empty value list");
    return values;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace thermadiab;

    CLI::App app{"Finite-temperature adiabaticity simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string axis;
    std::string values_csv;
    std::string experiment;
    std::string dims = "3,10";
    std::int64_t seed = -1;
    int trials = 1000;
    bool include_states = false;

    CLI::App* simulate = app.add_subcommand("simulate", "run one scenario and export CSVs");
    simulate->add_option("--config", config_path, "scenario config JSON")->required();
    simulate->add_option("--out", out_dir, "output directory (default: config 'output')");
    simulate->add_flag("--states", include_states, "include flattened state entries");

    CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    sweep->add_option("--config", config_path, "base scenario config JSON")->required();
    sweep->add_option("--axis", axis, "sweep axis: omega, beta or n_steps")->required();
    sweep->add_option("--values", values_csv, "comma-separated axis values")->required();
    sweep->add_option("--out", out_dir, "output directory (default: config 'output')");

    CLI::App* wire = app.add_subcommand("wire", "spin-around-a-wire experiments");
    wire->add_option("--experiment", experiment, "fidelity, rates or scaling")->required();
    wire->add_option("--config", config_path, "experiment config JSON (optional)");
    wire->add_option("--out", out_dir, "output directory");
    wire->add_option("--seed", seed, "seed override for the scaling experiment");

    CLI::App* lemma = app.add_subcommand("lemma-check", "adjacent vs all-pairs functionals");
    lemma->add_option("--trials", trials, "number of random spectra");
    lemma->add_option("--dims", dims, "dimension range as MIN,MAX");
    lemma->add_option("--seed", seed, "random seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            const ScenarioConfig config = load_scenario_config(config_path);
            const std::string target = out_dir.empty() ? config.output : out_dir;
            const SimulateArtifacts artifacts = cmd_simulate(config, target, include_states);
            std::cout << "wrote " << artifacts.trajectory_csv.string() << " and "
                      << artifacts.bound_csv.string() << "\n";
            std::cout << "final lhs " << format_double(artifacts.outcome.report.lhs_measured.back())
                      << " rhs " << format_double(artifacts.outcome.report.rhs_total.back())
                      << " min margin " << format_double(artifacts.outcome.report.min_margin)
                      << "\n";
            return 0;
        }
        if (sweep->parsed()) {
            const ScenarioConfig config = load_scenario_config(config_path);
            const std::string target = out_dir.empty() ? config.output : out_dir;
            const std::vector<double> values = parse_value_list(values_csv);
            const std::vector<SweepRow> rows = cmd_sweep(config, axis, values, target);
            int failures = 0;
            for (const SweepRow& row : rows)
                if (row.status != "ok") ++failures;
            std::cout << "sweep finished: " << rows.size() - failures << "/" << rows.size()
                      << " scenarios ok, summary in " << target << "/summary.csv\n";
            return 0;
        }
        if (wire->parsed()) {
            const Json config =
                config_path.empty() ? Json::object() : load_json_file(config_path);
            const std::string target = out_dir.empty() ? std::string(".") : out_dir;
            std::optional<std::uint64_t> seed_override;
            if (seed >= 0) seed_override = static_cast<std::uint64_t>(seed);
            cmd_wire(experiment, config, target, seed_override);
            std::cout << "wire " << experiment << " results written to " << target << "\n";
            return 0;
        }
        if (lemma->parsed()) {
            const std::vector<double> range = parse_value_list(dims);
            if (range.size() != 2) throw ConfigParse("--dims expects MIN,MAX");
            const LemmaCheckResult result =
                cmd_lemma_check(trials, static_cast<int>(range[0]), static_cast<int>(range[1]),
                                seed >= 0 ? static_cast<std::uint64_t>(seed) : 0);
            std::cout << (result.pass ? "PASS" : "FAIL") << " lemma-check trials=" << result.trials
                      << " worst_deviation=" << format_double(result.worst_deviation) << "\n";
            return result.pass ? 0 : 1;
        }
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "InternalError " << e.what() << "\n";
        return 1;
    }
    return 0;
}
