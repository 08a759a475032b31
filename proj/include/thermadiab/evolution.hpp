#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "thermadiab/hamiltonian.hpp"

namespace thermadiab {

// Time-indexed trajectory of the von Neumann equation on the schedule grid.
struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> s_values;
    std::vector<DensityMatrix> states;
    RealVector initial_spectrum;  // ascending eigenvalues of states[0]

    int points() const { return static_cast<int>(states.size()); }
};

struct PropagationOptions {
    // midpoint substeps per grid interval; records stay on the schedule grid
    int substeps = 1;
};

namespace detail {

// One grid interval of midpoint-exponential stepping for a uniform
// isospectral family. Because H_s = R(s) H0 R(s)^dag with R(s) = exp(isV),
// the midpoint propagator factors as R(s_mid) exp(-i dt H0) R(s_mid)^dag,
// so the expensive exponential is computed once per run. The frame rotation
// is advanced incrementally and periodically rebuilt from the cached
// eigendecomposition of V to keep unitary roundoff from accumulating.
// Restores the structurally exact properties (Hermiticity, unit trace) that
// accumulate roundoff over very long products of unitaries.
template <typename MatrixType>
void renormalize_state(MatrixType& rho) {
    rho = MatrixType(0.5 * (rho + rho.adjoint()));
    rho /= rho.trace().real();
}

template <typename MatrixType>
void isospectral_interval(const DrivenHamiltonian& family, MatrixType& rho,
                          const MatrixType& exp_h0, double s_left, double h_sub, int substeps) {
    constexpr int rebase_period = 512;
    MatrixType r = family.rotation(s_left + 0.5 * h_sub);
    const MatrixType r_step = family.rotation(h_sub);
    for (int j = 0; j < substeps; ++j) {
        if (j > 0) {
            if (j % rebase_period == 0) {
                r = family.rotation(s_left + (j + 0.5) * h_sub);
                renormalize_state(rho);
            } else {
                r = MatrixType(r_step * r);
            }
        }
        const MatrixType w = r * exp_h0 * r.adjoint();
        rho = w * rho * w.adjoint();
    }
    renormalize_state(rho);
}

// Scaled isospectral interval: the midpoint propagator factors as
// Q diag(exp(-i dt (1+c s_mid) lambda_n)) Q^dag with Q(s) = exp(isV) U0, so
// only the diagonal phases change from substep to substep.
template <typename MatrixType>
void scaled_isospectral_interval(const DrivenHamiltonian& family, MatrixType& rho,
                                 const MatrixType& u0, const RealVector& lambda0, double dt_sub,
                                 double s_left, double h_sub, int substeps) {
    constexpr int rebase_period = 512;
    MatrixType q = family.rotation(s_left + 0.5 * h_sub) * u0;
    const MatrixType r_step = family.rotation(h_sub);
    ComplexVector phases(lambda0.size());
    for (int j = 0; j < substeps; ++j) {
        const double s_mid = s_left + (j + 0.5) * h_sub;
        if (j > 0) {
            if (j % rebase_period == 0) {
                q = MatrixType(family.rotation(s_mid) * u0);
                renormalize_state(rho);
            } else {
                q = MatrixType(r_step * q);
            }
        }
        const double scale = family.scale_at(s_mid);
        for (Eigen::Index n = 0; n < lambda0.size(); ++n)
            phases[n] = std::exp(Complex(0.0, -dt_sub * scale * lambda0[n]));
        const MatrixType w = q * phases.asDiagonal() * q.adjoint();
        rho = w * rho * w.adjoint();
    }
    renormalize_state(rho);
}

inline ComplexMatrix exp_minus_i_dt(const SpectralDecomposition& sd, double dt) {
    ComplexVector phases(sd.eigenvalues.size());
    for (Eigen::Index n = 0; n < sd.eigenvalues.size(); ++n)
        phases[n] = std::exp(Complex(0.0, -sd.eigenvalues[n] * dt));
    return sd.eigenvectors * phases.asDiagonal() * sd.eigenvectors.adjoint();
}

}  // namespace detail

// Propagates an arbitrary valid initial state with the midpoint-exponential
// scheme rho_{k+1} = W rho_k W^dag, W = exp(-i H(s_mid) dt). The scheme keeps
// the state spectrum exact up to eigensolver precision, which the quasi-Gibbs
// comparison relies on.
inline TrajectoryRecord propagate_state(const DrivenHamiltonian& family,
                                        const DrivingSchedule& schedule, const DensityMatrix& rho0,
                                        const PropagationOptions& options = {}) {
    if (options.substeps < 1) throw InvalidSchedule("substeps must be >= 1");
    if (rho0.dim() != family.dim())
        throw DimensionMismatch("initial state dimension differs from the family");

    TrajectoryRecord traj;
    traj.s_values = schedule.grid();
    traj.times.resize(traj.s_values.size());
    for (std::size_t k = 0; k < traj.s_values.size(); ++k)
        traj.times[k] = traj.s_values[k] / schedule.omega;
    traj.initial_spectrum =
        Eigen::SelfAdjointEigenSolver<ComplexMatrix>(rho0.matrix(), Eigen::EigenvaluesOnly)
            .eigenvalues();

    const int m = options.substeps;
    const double h_sub = schedule.step() / m;
    const double dt_sub = schedule.dt() / m;

    traj.states.reserve(traj.s_values.size());
    traj.states.push_back(rho0);

    if (family.is_structured()) {
        const bool scaled = family.variant() == DrivenHamiltonian::Variant::ScaledIsospectral;
        double scale_max = 1.0;
        if (scaled) {
            if (family.scale_at(schedule.s_max) <= 0.0)
                throw EvaluationFailure("scaled family reaches a non-positive stretch factor");
            scale_max = std::max(1.0, family.scale_at(schedule.s_max));
        }
        if (operator_norm(family.stored_h0()) * scale_max * dt_sub > 1.0)
            throw StepTooLarge("|H| * dt exceeds 1; refine the grid or add substeps");

        const SpectralDecomposition& h0_eig = family.h0_eig();
        const ComplexMatrix exp_h0 =
            scaled ? ComplexMatrix() : detail::exp_minus_i_dt(h0_eig, dt_sub);
        const auto run_intervals = [&](auto rho) {
            using MatrixType = decltype(rho);
            for (int k = 0; k + 1 < schedule.n_steps; ++k) {
                if (scaled)
                    detail::scaled_isospectral_interval(family, rho,
                                                        MatrixType(h0_eig.eigenvectors),
                                                        h0_eig.eigenvalues, dt_sub,
                                                        traj.s_values[k], h_sub, m);
                else
                    detail::isospectral_interval(family, rho, MatrixType(exp_h0),
                                                 traj.s_values[k], h_sub, m);
                traj.states.emplace_back(ComplexMatrix(rho));
            }
        };
        if (family.dim() == 2)
            run_intervals(Eigen::Matrix2cd(rho0.matrix()));
        else
            run_intervals(ComplexMatrix(rho0.matrix()));
        return traj;
    }

    ComplexMatrix rho = rho0.matrix();
    for (int k = 0; k + 1 < schedule.n_steps; ++k) {
        for (int j = 0; j < m; ++j) {
            const double s_mid = traj.s_values[static_cast<std::size_t>(k)] + (j + 0.5) * h_sub;
            const SpectralDecomposition sd = eig_hermitian(family.evaluate(s_mid));
            if (sd.eigenvalues.cwiseAbs().maxCoeff() * dt_sub > 1.0)
                throw StepTooLarge("|H| * dt exceeds 1; refine the grid or add substeps");
            const ComplexMatrix w = detail::exp_minus_i_dt(sd, dt_sub);
            rho = w * rho * w.adjoint();
            if ((j + 1) % 512 == 0) detail::renormalize_state(rho);
        }
        detail::renormalize_state(rho);
        traj.states.emplace_back(rho);
    }
    return traj;
}

// Thermal initial condition rho_0 = exp(-beta H_0)/Z_0. At beta = 0 the
// maximally mixed state is an exact stationary solution for every family, so
// it is written out directly.
inline TrajectoryRecord propagate(const DrivenHamiltonian& family, const DrivingSchedule& schedule,
                                  double beta, const PropagationOptions& options = {}) {
    if (!std::isfinite(beta) || beta < 0.0)
        throw NonFiniteBeta("beta must be finite and >= 0");
    const DensityMatrix rho0 = gibbs_state(family.evaluate(0.0), beta);
    if (beta == 0.0) {
        TrajectoryRecord traj;
        traj.s_values = schedule.grid();
        traj.times.resize(traj.s_values.size());
        for (std::size_t k = 0; k < traj.s_values.size(); ++k)
            traj.times[k] = traj.s_values[k] / schedule.omega;
        traj.initial_spectrum = RealVector::Constant(family.dim(), 1.0 / family.dim());
        traj.states.assign(traj.s_values.size(), rho0);
        return traj;
    }
    return propagate_state(family, schedule, rho0, options);
}

// Max deviation of any recorded state's sorted spectrum from the initial one.
inline double verify_spectrum_conservation(const TrajectoryRecord& traj) {
    double worst = 0.0;
    for (const DensityMatrix& state : traj.states) {
        const RealVector spectrum =
            Eigen::SelfAdjointEigenSolver<ComplexMatrix>(state.matrix(), Eigen::EigenvaluesOnly)
                .eigenvalues();
        worst = std::max(worst, (spectrum - traj.initial_spectrum).cwiseAbs().maxCoeff());
    }
    return worst;
}

// Crude global-error model for the midpoint scheme, used to choose substeps:
// the error over a run of duration T = s_max/omega at time step dt is about
// T dt^2 (omega^2 |H''|/24 + omega |H'| |H| / 6), with s-derivatives of the
// family. Returns the substep count that brings the model below the target
// while also keeping |H| dt <= 1/2.
inline int substeps_for_accuracy(double h_norm, double dh_ds_norm, double d2h_ds2_norm,
                                 const DrivingSchedule& schedule, double target_error) {
    const double duration = schedule.s_max / schedule.omega;
    const double c = schedule.omega * schedule.omega * d2h_ds2_norm / 24.0 +
                     schedule.omega * dh_ds_norm * h_norm / 6.0;
    double dt_max = schedule.dt();
    if (c > 0.0 && target_error > 0.0)
        dt_max = std::min(dt_max, std::sqrt(target_error / (duration * c)));
    if (h_norm > 0.0) dt_max = std::min(dt_max, 0.5 / h_norm);
    const int m = static_cast<int>(std::ceil(schedule.dt() / dt_max));
    return std::max(m, 1);
}

namespace detail {

// Probes |H|, |dH/ds| and |d2H/ds2| numerically when no analytic norms are
// available.
inline int substeps_for_generic(const DrivenHamiltonian& family, const DrivingSchedule& schedule,
                                double target_error) {
    const double h = schedule.s_max * 1e-4;
    double h_norm = 0.0, dh_norm = 0.0, d2h_norm = 0.0;
    for (double frac : {0.05, 0.5, 0.95}) {
        const double s = frac * schedule.s_max;
        const ComplexMatrix center = family.evaluate(s).matrix();
        const ComplexMatrix plus = family.evaluate(s + h).matrix();
        const ComplexMatrix minus = family.evaluate(s - h < 0.0 ? 0.0 : s - h).matrix();
        h_norm = std::max(h_norm, operator_norm(HermitianOperator(center)));
        dh_norm = std::max(dh_norm, (plus - minus).cwiseAbs().maxCoeff() / (2.0 * h) *
                                        static_cast<double>(center.rows()));
        d2h_norm = std::max(d2h_norm, (plus - 2.0 * center + minus).cwiseAbs().maxCoeff() /
                                          (h * h) * static_cast<double>(center.rows()));
    }
    return substeps_for_accuracy(h_norm, dh_norm, d2h_norm, schedule, target_error);
}

}  // namespace detail

// Family-aware version: exact derivative bounds for the structured variants
// (|H'| <= 2 |V| |H0| under rotation plus the stretch-rate term), numeric
// probing otherwise.
inline int substeps_for_accuracy(const DrivenHamiltonian& family, const DrivingSchedule& schedule,
                                 double target_error) {
    if (!family.is_structured())
        return detail::substeps_for_generic(family, schedule, target_error);
    const double h0 = operator_norm(family.stored_h0());
    const double v = operator_norm(family.stored_v());
    if (family.variant() == DrivenHamiltonian::Variant::ScaledIsospectral) {
        const double c = std::abs(family.scale_rate());
        const double scale_max = std::max(1.0, std::abs(family.scale_at(schedule.s_max)));
        const double h_norm = scale_max * h0;
        const double dh = c * h0 + scale_max * 2.0 * v * h0;
        const double d2h = 4.0 * c * v * h0 + scale_max * 4.0 * v * v * h0;
        return substeps_for_accuracy(h_norm, dh, d2h, schedule, target_error);
    }
    return substeps_for_accuracy(h0, 2.0 * v * h0, 4.0 * v * v * h0, schedule, target_error);
}

}  // namespace thermadiab
