#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "thermadiab/evolution.hpp"

namespace thermadiab {

inline constexpr double kBoundSlack = 1e-8;

// Quasi-Gibbs state: diagonal in the continuity-matched instantaneous
// eigenbasis, carrying the frozen initial Boltzmann spectrum.
inline DensityMatrix quasi_gibbs(const EigenbasisPath& path, int k, double beta) {
    if (!std::isfinite(beta) || beta < 0.0)
        throw NonFiniteBeta("beta must be finite and >= 0");
    const RealVector& e0 = path.energies.front();
    const double e_min = e0.minCoeff();
    RealVector weights(e0.size());
    for (Eigen::Index n = 0; n < e0.size(); ++n) weights[n] = std::exp(-beta * (e0[n] - e_min));
    weights /= weights.sum();
    const ComplexMatrix& frame = path.vectors[static_cast<std::size_t>(k)];
    ComplexMatrix theta =
        frame * weights.asDiagonal().toDenseMatrix().cast<Complex>() * frame.adjoint();
    return DensityMatrix(0.5 * (theta + theta.adjoint()));
}

// exp(-beta H_s) / tr exp(-beta H_s); generally different from the
// quasi-Gibbs state because its spectrum follows the instantaneous energies.
inline DensityMatrix instantaneous_gibbs(const DrivenHamiltonian& family, double s, double beta) {
    return gibbs_state(family.evaluate(s), beta);
}

// Per-grid-point breakdown of the trace-distance bound: the boundary term
// (1/mu)|V|, the three cumulative integrals, the assembled right-hand side
// and the measured left-hand side.
struct BoundReport {
    std::vector<double> s_values;
    std::vector<double> term_boundary;
    std::vector<double> term_accel;
    std::vector<double> term_gapdrift;
    std::vector<double> term_quadratic;
    std::vector<double> rhs_total;
    std::vector<double> lhs_measured;
    double omega = 0.0;
    double beta = 0.0;
    double min_margin = std::numeric_limits<double>::quiet_NaN();

    int points() const { return static_cast<int>(s_values.size()); }
};

// Evaluates the bound's right-hand side on the shared s-grid, integrating the
// three cumulative terms with the trapezoidal rule.
inline BoundReport bound_general(const EigenbasisPath& path, const SpectralFunctionals& functionals,
                                 const GaugeVelocities& velocities, double omega, double beta) {
    const int n = path.points();
    if (static_cast<int>(functionals.mu.size()) != n ||
        static_cast<int>(velocities.velocity.size()) != n ||
        static_cast<int>(velocities.acceleration.size()) != n)
        throw DimensionMismatch("bound inputs must share the path grid");

    std::vector<double> inv_mu(static_cast<std::size_t>(n));
    std::vector<double> v_norm(static_cast<std::size_t>(n));
    std::vector<double> dv_norm(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const auto i = static_cast<std::size_t>(k);
        inv_mu[i] = 1.0 / functionals.mu[i];
        v_norm[i] = operator_norm(velocities.velocity[i]);
        dv_norm[i] = operator_norm(velocities.acceleration[i]);
    }

    const double sqrt2 = std::numbers::sqrt2;
    BoundReport report;
    report.omega = omega;
    report.beta = beta;
    report.s_values = path.grid;
    report.term_boundary.resize(static_cast<std::size_t>(n));
    report.term_accel.assign(static_cast<std::size_t>(n), 0.0);
    report.term_gapdrift.assign(static_cast<std::size_t>(n), 0.0);
    report.term_quadratic.assign(static_cast<std::size_t>(n), 0.0);
    report.rhs_total.resize(static_cast<std::size_t>(n));
    report.lhs_measured.assign(static_cast<std::size_t>(n),
                               std::numeric_limits<double>::quiet_NaN());

    double accel_integral = 0.0;
    double drift_integral = 0.0;
    double quad_integral = 0.0;
    for (int k = 0; k < n; ++k) {
        const auto i = static_cast<std::size_t>(k);
        if (k > 0) {
            const double h = path.grid[i] - path.grid[i - 1];
            accel_integral +=
                0.5 * h * (inv_mu[i - 1] * dv_norm[i - 1] + inv_mu[i] * dv_norm[i]);
            drift_integral += 0.5 * h *
                              (functionals.nu[i - 1] * inv_mu[i - 1] * v_norm[i - 1] +
                               functionals.nu[i] * inv_mu[i] * v_norm[i]);
            quad_integral += 0.5 * h *
                             (inv_mu[i - 1] * v_norm[i - 1] * v_norm[i - 1] +
                              inv_mu[i] * v_norm[i] * v_norm[i]);
        }
        report.term_boundary[i] = inv_mu[i] * v_norm[i];
        report.term_accel[i] = accel_integral;
        report.term_gapdrift[i] = drift_integral;
        report.term_quadratic[i] = sqrt2 * quad_integral;
        const double bracket = report.term_boundary[i] + report.term_accel[i] +
                               report.term_gapdrift[i] + report.term_quadratic[i];
        report.rhs_total[i] = std::sqrt(sqrt2 * omega * beta * bracket);
    }
    return report;
}

// Closed form of the bound for uniformly isospectral driving:
// sqrt(sqrt(2) omega beta |V| (1 + sqrt(2) s |V|)).
inline double bound_corollary(double omega, double beta, double v_norm, double s) {
    const double sqrt2 = std::numbers::sqrt2;
    return std::sqrt(sqrt2 * omega * beta * v_norm * (1.0 + sqrt2 * s * v_norm));
}

// Measures the trace distance to the quasi-Gibbs state at every grid point
// and enforces the bound. A violation beyond the slack signals a bug or a
// degenerate spectrum upstream, so it aborts loudly.
inline BoundReport adiabatic_audit(const TrajectoryRecord& traj, const EigenbasisPath& path,
                                   double beta, BoundReport report) {
    const int n = path.points();
    if (traj.points() != n || report.points() != n)
        throw DimensionMismatch("trajectory, path and report must share the grid");
    double min_margin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
        const auto i = static_cast<std::size_t>(k);
        const double lhs = trace_distance(traj.states[i], quasi_gibbs(path, k, beta));
        report.lhs_measured[i] = lhs;
        const double margin = report.rhs_total[i] - lhs;
        min_margin = std::min(min_margin, margin);
        if (margin < -kBoundSlack)
            throw BoundViolation("trace distance " + std::to_string(lhs) + " exceeds bound " +
                                 std::to_string(report.rhs_total[i]) + " at s = " +
                                 std::to_string(path.grid[i]));
    }
    report.min_margin = min_margin;
    return report;
}

struct ScenarioOptions {
    double degeneracy_threshold = -1.0;  // <= 0: 1e-8 x spectral range at s = 0
    double fd_step = 0.0;                // <= 0: one grid interval
    int substeps = 0;                    // <= 0: pick from the accuracy model
};

struct ScenarioOutcome {
    EigenbasisPath path;
    SpectralFunctionals functionals;
    GaugeVelocities velocities;
    TrajectoryRecord trajectory;
    BoundReport report;
};

// Full pipeline: eigenbasis path, spectral functionals, gauge velocities,
// bound evaluation, propagation, audit.
inline ScenarioOutcome run_scenario(const DrivenHamiltonian& family,
                                    const DrivingSchedule& schedule, double beta,
                                    const ScenarioOptions& options = {}) {
    ScenarioOutcome out;
    out.path = trace_path(family, schedule, options.degeneracy_threshold);
    out.functionals = spectral_functionals(out.path);
    out.velocities = gauge_velocities(out.path, options.fd_step);
    out.report = bound_general(out.path, out.functionals, out.velocities, schedule.omega, beta);

    int substeps = options.substeps;
    if (substeps <= 0) {
        // propagation error budget: a small fraction of the smallest nonzero
        // bound value, so the audit margins are meaningful
        double rhs_min = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < out.report.rhs_total.size(); ++i)
            rhs_min = std::min(rhs_min, out.report.rhs_total[i]);
        if (beta == 0.0 || !std::isfinite(rhs_min) || rhs_min <= 0.0) {
            substeps = 1;
        } else {
            const double target = std::clamp(1e-2 * rhs_min, 1e-8, 1e-3);
            substeps = substeps_for_accuracy(family, schedule, target);
        }
    }

    out.trajectory = propagate(family, schedule, beta, {substeps});
    out.report = adiabatic_audit(out.trajectory, out.path, beta, std::move(out.report));
    return out;
}

}  // namespace thermadiab
