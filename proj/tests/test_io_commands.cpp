#include <catch2/catch.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_support.hpp"
#include "thermadiab/commands.hpp"

using namespace thermadiab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& label) {
    static std::atomic<int> counter{0};
    const fs::path dir = fs::temp_directory_path() /
                         ("thermadiab_" + label + "_" + std::to_string(counter.fetch_add(1)));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

Json two_level_isospectral_config(double omega, double beta) {
    Json h0 = {{{0.5, 0.0}, {0.0, 0.0}}, {{0.0, 0.0}, {-0.5, 0.0}}};
    Json v = {{{0.0, 0.0}, {0.4, 0.0}}, {{0.4, 0.0}, {0.0, 0.0}}};
    return Json{{"family", {{"variant", "uniform_isospectral"}, {"h0", h0}, {"v", v}}},
                {"omega", omega},
                {"beta", beta},
                {"s_max", 1.5},
                {"n_steps", 101},
                {"seed", 3}};
}

}  // namespace

TEST_CASE("format_double round-trips exactly") {
    for (double value : {1.0 / 3.0, 0.1, 1e-17, -2.5e300, 0.0, 123456789.123456789}) {
        CHECK(std::stod(format_double(value)) == value);
    }
}

TEST_CASE("complex matrix JSON parsing") {
    SECTION("round trip") {
        std::mt19937_64 engine(167);
        const ComplexMatrix m = test_support::random_complex(3, engine);
        const ComplexMatrix back = parse_complex_matrix(complex_matrix_to_json(m));
        CHECK(test_support::max_abs_diff(m, back) == 0.0);
    }

    SECTION("bad shapes are rejected") {
        CHECK_THROWS_AS(parse_complex_matrix(Json::array()), ConfigParse);
        CHECK_THROWS_AS(parse_complex_matrix(Json::parse("[[[0,0],[1,0]]]")), ConfigParse);
        CHECK_THROWS_AS(parse_complex_matrix(Json::parse("[[[0,0],[1,0]],[[1,0],[0]]]")),
                        ConfigParse);
        CHECK_THROWS_AS(parse_complex_matrix(Json::parse("[[0,1],[1,0]]")), ConfigParse);
    }
}

TEST_CASE("scenario config parsing") {
    SECTION("full config with defaults") {
        const ScenarioConfig config = parse_scenario_config(two_level_isospectral_config(0.1, 2.0));
        CHECK(config.omega == 0.1);
        CHECK(config.beta == 2.0);
        CHECK(config.n_steps == 101);
        CHECK(config.degeneracy_threshold == -1.0);
        CHECK(config.fd_step == 0.0);
        CHECK(config.seed == 3);
        CHECK(config.output == ".");
    }

    SECTION("missing or invalid fields raise ConfigParse") {
        Json j = two_level_isospectral_config(0.1, 2.0);
        j.erase("omega");
        CHECK_THROWS_AS(parse_scenario_config(j), ConfigParse);

        Json bad_omega = two_level_isospectral_config(-0.1, 2.0);
        CHECK_THROWS_AS(parse_scenario_config(bad_omega), ConfigParse);

        Json bad_family = two_level_isospectral_config(0.1, 2.0);
        bad_family["family"]["variant"] = "unknown";
        CHECK_THROWS_AS(parse_scenario_config(bad_family), ConfigParse);
    }

    SECTION("non-Hermitian matrices surface as NonHermitianInput at build time") {
        Json j = two_level_isospectral_config(0.1, 2.0);
        j["family"]["h0"][0][1] = {1.0, 0.5};
        const ScenarioConfig config = parse_scenario_config(j);
        CHECK_THROWS_AS(build_family(config.family, config.s_max), NonHermitianInput);
    }
}

TEST_CASE("linear interpolation families hit both endpoints") {
    Json a = complex_matrix_to_json(ComplexMatrix::Identity(2, 2));
    ComplexMatrix bm(2, 2);
    bm << 2.0, Complex(0.0, 1.0), Complex(0.0, -1.0), -1.0;
    Json j{{"variant", "linear"}, {"a", a}, {"b", complex_matrix_to_json(bm)}};
    const DrivenHamiltonian family = build_family(parse_family_spec(j), 2.0);
    CHECK(test_support::max_abs_diff(family.evaluate(0.0).matrix(),
                                     ComplexMatrix::Identity(2, 2)) < 1e-15);
    CHECK(test_support::max_abs_diff(family.evaluate(2.0).matrix(), bm) < 1e-15);
    CHECK(test_support::max_abs_diff(family.evaluate(1.0).matrix(),
                                     0.5 * (ComplexMatrix::Identity(2, 2) + bm)) < 1e-15);
}

TEST_CASE("wire family config") {
    Json j{{"variant", "wire"},
           {"params", {{"n_electrons", 100}, {"p_total", 20.0}, {"spin", 0.5}}}};
    const FamilySpec spec = parse_family_spec(j);
    const DrivenHamiltonian family = build_family(spec, 1.0);
    CHECK(family.dim() == 2);
    CHECK(family.variant() == DrivenHamiltonian::Variant::WireSpin);
    const double gamma = gamma_coupling(spec.wire);
    CHECK(operator_norm(family.stored_h0()) == Approx(std::abs(gamma) * 0.5));

    Json bad{{"variant", "wire"}, {"params", {{"n_electrons", 0}}}};
    CHECK_THROWS_AS(parse_family_spec(bad), ConfigParse);
}

TEST_CASE("cmd_simulate writes trajectory and bound CSVs") {
    const fs::path dir = fresh_dir("simulate");
    const ScenarioConfig config = parse_scenario_config(two_level_isospectral_config(0.2, 1.5));
    const SimulateArtifacts artifacts = cmd_simulate(config, dir);

    REQUIRE(fs::exists(artifacts.trajectory_csv));
    REQUIRE(fs::exists(artifacts.bound_csv));

    const std::string bound = slurp(artifacts.bound_csv);
    CHECK(bound.rfind("s,term_boundary,term_accel,term_gapdrift,term_quadratic,rhs_total,"
                      "lhs_measured\n", 0) == 0);
    CHECK(std::count(bound.begin(), bound.end(), '\n') == 102);  // header + 101 grid points

    const std::string traj = slurp(artifacts.trajectory_csv);
    CHECK(traj.rfind("t,s,purity\n", 0) == 0);

    const SimulateArtifacts with_states = cmd_simulate(config, dir / "flat", true);
    const std::string flat = slurp(with_states.trajectory_csv);
    CHECK(flat.rfind("t,s,purity,re_0_0,im_0_0", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("cmd_simulate at infinite temperature reports a zero bound") {
    const fs::path dir = fresh_dir("simulate_beta0");
    const ScenarioConfig config = parse_scenario_config(two_level_isospectral_config(0.2, 0.0));
    const SimulateArtifacts artifacts = cmd_simulate(config, dir);
    for (double rhs : artifacts.outcome.report.rhs_total) CHECK(rhs == 0.0);
    for (double lhs : artifacts.outcome.report.lhs_measured) CHECK(lhs <= 1e-10);
    fs::remove_all(dir);
}

TEST_CASE("cmd_sweep") {
    SECTION("a single-value sweep reproduces cmd_simulate") {
        const fs::path sim_dir = fresh_dir("sweep_ref");
        const fs::path sweep_dir = fresh_dir("sweep_single");
        const ScenarioConfig config =
            parse_scenario_config(two_level_isospectral_config(0.2, 1.5));
        cmd_simulate(config, sim_dir);
        const std::vector<SweepRow> rows = cmd_sweep(config, "omega", {0.2}, sweep_dir);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].status == "ok");
        CHECK(slurp(sweep_dir / "bound_000.csv") == slurp(sim_dir / "bound_report.csv"));
        fs::remove_all(sim_dir);
        fs::remove_all(sweep_dir);
    }

    SECTION("rows keep the input order and isolate failures") {
        const fs::path dir = fresh_dir("sweep_fail");
        Json j = two_level_isospectral_config(0.2, 1.5);
        // make the spectrum degenerate so every scenario fails on this axis
        j["family"]["h0"] = Json{{{0.5, 0.0}, {0.0, 0.0}}, {{0.0, 0.0}, {0.5, 0.0}}};
        const ScenarioConfig degenerate = parse_scenario_config(j);
        const std::vector<SweepRow> rows = cmd_sweep(degenerate, "beta", {1.0, 2.0}, dir);
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].value == 1.0);
        CHECK(rows[1].value == 2.0);
        CHECK(rows[0].status == "DegenerateGap");
        CHECK(rows[1].status == "DegenerateGap");

        const std::string summary = slurp(dir / "summary.csv");
        CHECK(summary.find("DegenerateGap") != std::string::npos);
        fs::remove_all(dir);
    }

    SECTION("a beta sweep through zero has a zero-rhs row") {
        const fs::path dir = fresh_dir("sweep_beta");
        const ScenarioConfig config =
            parse_scenario_config(two_level_isospectral_config(0.2, 1.5));
        const std::vector<SweepRow> rows = cmd_sweep(config, "beta", {0.0, 1.0}, dir);
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].final_rhs == 0.0);
        CHECK(rows[0].final_lhs <= 1e-10);
        CHECK(rows[1].final_rhs > 0.0);
        fs::remove_all(dir);
    }

    SECTION("unknown axes are rejected up front") {
        const ScenarioConfig config =
            parse_scenario_config(two_level_isospectral_config(0.2, 1.5));
        CHECK_THROWS_AS(cmd_sweep(config, "temperature", {1.0}, fresh_dir("sweep_axis")),
                        ConfigParse);
    }
}

TEST_CASE("cmd_wire experiments write their artifacts") {
    SECTION("rates") {
        const fs::path dir = fresh_dir("wire_rates");
        cmd_wire("rates", Json::object(), dir);
        const std::string csv = slurp(dir / "wire_rates.csv");
        CHECK(csv.rfind("epsilon,beta,spin,alpha,gamma,psa_critical_rate,"
                        "finite_T_sufficient_rate\n", 0) == 0);
        // default epsilons 0.05, 0.1, 0.5; the 0.1 row carries Eq.-level rates
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
        std::istringstream lines(csv);
        std::string line;
        std::getline(lines, line);  // header
        std::getline(lines, line);  // epsilon = 0.05
        std::getline(lines, line);  // epsilon = 0.1
        const std::size_t last_comma = line.rfind(',');
        CHECK(std::stod(line.substr(last_comma + 1)) == Approx(0.004390).margin(1e-6));
        fs::remove_all(dir);
    }

    SECTION("fidelity on a small grid") {
        const fs::path dir = fresh_dir("wire_fidelity");
        const Json config{{"omegas", {0.5, 2.0}}, {"gammas", {1.0}}, {"alpha_max", 6.0},
                          {"n_alpha", 5}, {"target_error", 1e-8}};
        cmd_wire("fidelity", config, dir);
        const std::string csv = slurp(dir / "wire_fidelity.csv");
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);  // header + 2*1*5

        // analytic and simulated columns agree line by line
        std::istringstream lines(csv);
        std::string line;
        std::getline(lines, line);
        while (std::getline(lines, line)) {
            std::istringstream fields(line);
            std::string field;
            std::vector<double> row;
            while (std::getline(fields, field, ',')) row.push_back(std::stod(field));
            REQUIRE(row.size() == 5);
            CHECK(row[4] == Approx(row[3]).margin(1e-7));
        }
        fs::remove_all(dir);
    }

    SECTION("scaling writes the CSV and the fit JSON") {
        const fs::path dir = fresh_dir("wire_scaling");
        const Json config{{"n_list", {100, 1000, 10000}}, {"samples", 60}, {"seed", 21}};
        cmd_wire("scaling", config, dir);
        const Json fit = load_json_file(dir / "wire_scaling_fit.json");
        CHECK(fit.at("slope").get<double>() == Approx(-0.5).margin(0.15));
        const std::string csv = slurp(dir / "wire_scaling.csv");
        CHECK(csv.rfind("N,median_omega_eps,q25,q75\n", 0) == 0);
        fs::remove_all(dir);
    }

    SECTION("unknown experiments are rejected") {
        CHECK_THROWS_AS(cmd_wire("melting", Json::object(), fresh_dir("wire_bad")), ConfigParse);
    }
}

TEST_CASE("THERMADIAB_THREADS caps the sweep worker pool") {
    const char* saved = std::getenv("THERMADIAB_THREADS");
    setenv("THERMADIAB_THREADS", "1", 1);
    CHECK(worker_cap(8) == 1);
    setenv("THERMADIAB_THREADS", "not-a-number", 1);
    CHECK(worker_cap(8) >= 1);
    if (saved)
        setenv("THERMADIAB_THREADS", saved, 1);
    else
        unsetenv("THERMADIAB_THREADS");
    CHECK(worker_cap(0) == 1);
}

TEST_CASE("cmd_lemma_check") {
    const LemmaCheckResult result = cmd_lemma_check(1000, 3, 10, 2024);
    CHECK(result.pass);
    CHECK(result.trials == 1000);
    CHECK(result.worst_deviation <= 1e-12);

    const LemmaCheckResult two_level = cmd_lemma_check(50, 2, 2, 7);
    CHECK(two_level.pass);

    CHECK_THROWS_AS(cmd_lemma_check(0, 3, 10, 1), ConfigParse);
    CHECK_THROWS_AS(cmd_lemma_check(10, 1, 3, 1), ConfigParse);
}

TEST_CASE("adversarial near-degenerate spectra still match the oracle") {
    // tiny but nonzero gaps blow up the ratios without breaking the identity
    RealVector e0(4), es(4), des(4);
    e0 << 0.0, 1.0, 1.0 + 1e-9, 2.0;
    es << 0.0, 0.5, 0.5 + 1e-10, 0.9;
    des << 0.3, -0.2, 0.7, -0.5;
    const AllPairsFunctionals brute = all_pairs_oracle(e0, es, des);
    const AllPairsFunctionals adjacent = adjacent_pairs_functionals(e0, es, des);
    CHECK(std::abs(brute.mu_inv - adjacent.mu_inv) <= 1e-12 * std::max(1.0, brute.mu_inv));
    CHECK(std::abs(brute.nu - adjacent.nu) <= 1e-12 * std::max(1.0, brute.nu));
}

// ---------------------------------------------------------------------------
// end-to-end checks against the installed binary (path via THERMADIAB_CLI)

namespace {

const char* cli_path() { return std::getenv("THERMADIAB_CLI"); }

int run_cli(const std::string& args, const fs::path& capture) {
    const std::string command =
        std::string(cli_path()) + " " + args + " > " + capture.string() + " 2>&1";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("cli binary: determinism and diagnostics") {
    if (cli_path() == nullptr) {
        WARN("THERMADIAB_CLI not set; skipping binary end-to-end checks");
        return;
    }

    const fs::path dir = fresh_dir("cli");
    const fs::path config_path = dir / "scenario.json";
    {
        std::ofstream out(config_path);
        out << two_level_isospectral_config(0.2, 1.5).dump(2);
    }

    SECTION("identical config and seed give byte-identical CSVs") {
        const fs::path out1 = dir / "run1";
        const fs::path out2 = dir / "run2";
        REQUIRE(run_cli("simulate --config " + config_path.string() + " --out " + out1.string(),
                        dir / "log1.txt") == 0);
        REQUIRE(run_cli("simulate --config " + config_path.string() + " --out " + out2.string(),
                        dir / "log2.txt") == 0);
        CHECK(slurp(out1 / "bound_report.csv") == slurp(out2 / "bound_report.csv"));
        CHECK(slurp(out1 / "trajectory.csv") == slurp(out2 / "trajectory.csv"));
    }

    SECTION("degenerate spectra exit nonzero with the tag first") {
        Json j = two_level_isospectral_config(0.2, 1.5);
        j["family"]["h0"] = Json{{{0.5, 0.0}, {0.0, 0.0}}, {{0.0, 0.0}, {0.5, 0.0}}};
        const fs::path bad_config = dir / "degenerate.json";
        {
            std::ofstream out(bad_config);
            out << j.dump(2);
        }
        const fs::path log = dir / "bad_log.txt";
        CHECK(run_cli("simulate --config " + bad_config.string() + " --out " +
                          (dir / "bad_out").string(),
                      log) != 0);
        CHECK(slurp(log).rfind("DegenerateGap", 0) == 0);
    }

    SECTION("sweep command") {
        const fs::path out = dir / "sweep";
        REQUIRE(run_cli("sweep --config " + config_path.string() +
                            " --axis omega --values 0.4,0.2 --out " + out.string(),
                        dir / "sweep_log.txt") == 0);
        const std::string summary = slurp(out / "summary.csv");
        CHECK(summary.rfind("value,final_lhs,final_rhs,status\n", 0) == 0);
        CHECK(summary.find("0.4") != std::string::npos);
        CHECK(fs::exists(out / "bound_000.csv"));
        CHECK(fs::exists(out / "bound_001.csv"));
    }

    SECTION("lemma-check exits zero") {
        CHECK(run_cli("lemma-check --trials 200 --dims 3,8 --seed 5", dir / "lemma_log.txt") == 0);
        CHECK(slurp(dir / "lemma_log.txt").rfind("PASS", 0) == 0);
    }

    SECTION("a missing config file reports FileIO first") {
        const fs::path log = dir / "missing_log.txt";
        CHECK(run_cli("simulate --config /does/not/exist.json", log) != 0);
        CHECK(slurp(log).rfind("FileIO", 0) == 0);
    }

    SECTION("wire rates runs without a config") {
        const fs::path out = dir / "wire";
        REQUIRE(run_cli("wire --experiment rates --out " + out.string(), dir / "wire_log.txt") ==
                0);
        CHECK(fs::exists(out / "wire_rates.csv"));
    }

    fs::remove_all(dir);
}
