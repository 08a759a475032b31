#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "thermadiab/adiabaticity.hpp"
#include "thermadiab/wire_model.hpp"

namespace thermadiab {

using Json = nlohmann::json;

// 17 significant digits: round-trip exact for 64-bit doubles, so golden CSV
// files stay stable.
inline std::string format_double(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

// Complex matrices travel as nested arrays of [re, im] pairs, row-major.
inline ComplexMatrix parse_complex_matrix(const Json& j) {
    if (!j.is_array() || j.empty())
        throw ConfigParse("matrix must be a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    ComplexMatrix m(rows, rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != rows)
            throw ConfigParse("matrix must be square");
        for (Eigen::Index k = 0; k < rows; ++k) {
            const Json& entry = row[static_cast<std::size_t>(k)];
            if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
                !entry[1].is_number())
                throw ConfigParse("matrix entries must be [re, im] pairs");
            m(i, k) = Complex(entry[0].get<double>(), entry[1].get<double>());
        }
    }
    return m;
}

inline Json complex_matrix_to_json(const ComplexMatrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k)
            row.push_back({m(i, k).real(), m(i, k).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

inline WireModelParams parse_wire_params(const Json& j) {
    WireModelParams p;
    p.mu_magn = j.value("mu_magn", p.mu_magn);
    p.r = j.value("r", p.r);
    p.e_charge = j.value("e_charge", p.e_charge);
    p.m_e = j.value("m_e", p.m_e);
    p.rho_density = j.value("rho_density", p.rho_density);
    p.area = j.value("area", p.area);
    p.n_electrons = j.value("n_electrons", p.n_electrons);
    p.spin = j.value("spin", p.spin);
    p.p_fermi = j.value("p_fermi", p.p_fermi);
    p.p_total = j.value("p_total", p.p_total);
    if (p.n_electrons < 1) throw ConfigParse("n_electrons must be >= 1");
    if (!(p.r > 0.0)) throw ConfigParse("r must be > 0");
    return p;
}

// Family description as found in a scenario config; matrices are validated
// when the family is built.
struct FamilySpec {
    std::string variant;  // "uniform_isospectral", "linear" or "wire"
    ComplexMatrix h0, v;
    ComplexMatrix a, b;
    WireModelParams wire;
};

struct ScenarioConfig {
    FamilySpec family;
    double omega = 0.0;
    double beta = 0.0;
    double s_max = 0.0;
    int n_steps = 0;
    double degeneracy_threshold = -1.0;
    double fd_step = 0.0;
    std::uint64_t seed = 0;
    std::string output = ".";
};

inline FamilySpec parse_family_spec(const Json& j) {
    FamilySpec spec;
    if (!j.is_object() || !j.contains("variant"))
        throw ConfigParse("family must be an object with a 'variant' field");
    spec.variant = j["variant"].get<std::string>();
    if (spec.variant == "uniform_isospectral") {
        if (!j.contains("h0") || !j.contains("v"))
            throw ConfigParse("uniform_isospectral family needs 'h0' and 'v'");
        spec.h0 = parse_complex_matrix(j["h0"]);
        spec.v = parse_complex_matrix(j["v"]);
    } else if (spec.variant == "linear") {
        if (!j.contains("a") || !j.contains("b"))
            throw ConfigParse("linear family needs endpoint matrices 'a' and 'b'");
        spec.a = parse_complex_matrix(j["a"]);
        spec.b = parse_complex_matrix(j["b"]);
    } else if (spec.variant == "wire") {
        spec.wire = parse_wire_params(j.value("params", Json::object()));
    } else {
        throw ConfigParse("unknown family variant '" + spec.variant + "'");
    }
    return spec;
}

// Linear interpolation families H_s = (1 - s/s_max) A + (s/s_max) B need the
// schedule length, hence the s_max argument.
inline DrivenHamiltonian build_family(const FamilySpec& spec, double s_max) {
    if (spec.variant == "uniform_isospectral")
        return DrivenHamiltonian::uniform_isospectral(HermitianOperator(spec.h0),
                                                      HermitianOperator(spec.v));
    if (spec.variant == "linear") {
        const ComplexMatrix a = HermitianOperator(spec.a).matrix();
        const ComplexMatrix b = HermitianOperator(spec.b).matrix();
        if (a.rows() != b.rows()) throw DimensionMismatch("endpoint matrices differ in size");
        return DrivenHamiltonian::generic(a.rows(), [a, b, s_max](double s) {
            const double x = s / s_max;
            return ComplexMatrix((1.0 - x) * a + x * b);
        });
    }
    return make_wire_family(spec.wire);
}

inline ScenarioConfig parse_scenario_config(const Json& j) {
    ScenarioConfig config;
    try {
        if (!j.contains("family")) throw ConfigParse("missing 'family'");
        config.family = parse_family_spec(j["family"]);
        config.omega = j.at("omega").get<double>();
        config.beta = j.at("beta").get<double>();
        config.s_max = j.at("s_max").get<double>();
        config.n_steps = j.at("n_steps").get<int>();
        config.degeneracy_threshold = j.value("degeneracy_threshold", -1.0);
        config.fd_step = j.value("fd_step", 0.0);
        config.seed = j.value("seed", std::uint64_t{0});
        config.output = j.value("output", std::string("."));
    } catch (const Json::exception& e) {
        throw ConfigParse(e.what());
    }
    if (!std::isfinite(config.omega) || config.omega <= 0.0)
        throw ConfigParse("omega must be finite and > 0");
    if (!std::isfinite(config.beta) || config.beta < 0.0)
        throw ConfigParse("beta must be finite and >= 0");
    if (!std::isfinite(config.s_max) || config.s_max <= 0.0)
        throw ConfigParse("s_max must be finite and > 0");
    if (config.n_steps < 2) throw ConfigParse("n_steps must be >= 2");
    return config;
}

inline Json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FileIO("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw ConfigParse(std::string("invalid JSON in ") + path.string() + ": " + e.what());
    }
}

inline ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
    return parse_scenario_config(load_json_file(path));
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path);
    if (!out) throw FileIO("cannot write " + path.string());
    return out;
}

}  // namespace detail

inline void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& traj,
                                 bool include_states = false) {
    std::ofstream out = detail::open_output(path);
    out << "t,s,purity";
    if (include_states) {
        const Eigen::Index d = traj.states.front().dim();
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index k = 0; k < d; ++k)
                out << ",re_" << i << "_" << k << ",im_" << i << "_" << k;
    }
    out << "\n";
    for (std::size_t n = 0; n < traj.states.size(); ++n) {
        out << format_double(traj.times[n]) << "," << format_double(traj.s_values[n]) << ","
            << format_double(traj.states[n].purity());
        if (include_states) {
            const ComplexMatrix& m = traj.states[n].matrix();
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                for (Eigen::Index k = 0; k < m.cols(); ++k)
                    out << "," << format_double(m(i, k).real()) << ","
                        << format_double(m(i, k).imag());
        }
        out << "\n";
    }
    if (!out) throw FileIO("failed while writing " + path.string());
}

inline void write_bound_csv(const std::filesystem::path& path, const BoundReport& report) {
    std::ofstream out = detail::open_output(path);
    out << "s,term_boundary,term_accel,term_gapdrift,term_quadratic,rhs_total,lhs_measured\n";
    for (int k = 0; k < report.points(); ++k) {
        const auto i = static_cast<std::size_t>(k);
        out << format_double(report.s_values[i]) << "," << format_double(report.term_boundary[i])
            << "," << format_double(report.term_accel[i]) << ","
            << format_double(report.term_gapdrift[i]) << ","
            << format_double(report.term_quadratic[i]) << "," << format_double(report.rhs_total[i])
            << "," << format_double(report.lhs_measured[i]) << "\n";
    }
    if (!out) throw FileIO("failed while writing " + path.string());
}

inline void write_scaling_csv(const std::filesystem::path& path, const ScalingFit& fit) {
    std::ofstream out = detail::open_output(path);
    out << "N,median_omega_eps,q25,q75\n";
    for (const ScalingPoint& p : fit.points)
        out << p.n_electrons << "," << format_double(p.median_omega_eps) << ","
            << format_double(p.q25) << "," << format_double(p.q75) << "\n";
    if (!out) throw FileIO("failed while writing " + path.string());
}

inline void write_scaling_fit_json(const std::filesystem::path& path, const ScalingFit& fit) {
    std::ofstream out = detail::open_output(path);
    const Json j{{"slope", fit.slope}, {"intercept", fit.intercept}, {"stderr", fit.stderr_slope}};
    out << j.dump(2) << "\n";
    if (!out) throw FileIO("failed while writing " + path.string());
}

}  // namespace thermadiab
