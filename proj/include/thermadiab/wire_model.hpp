#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

#include "thermadiab/adiabaticity.hpp"
#include "thermadiab/random.hpp"
#include "thermadiab/spin.hpp"

namespace thermadiab {

// Single quantum spin moved on a circle around a current-carrying wire.
// Reduced units: hbar = 1 and all wire constants are dimensionless inputs;
// only ratios enter any testable quantity.
struct WireModelParams {
    double mu_magn = 1.0;     // magnetic moment of the sensor spin
    double r = 1.0;           // distance from the wire
    double e_charge = 1.0;    // electron charge
    double m_e = 1.0;         // electron mass
    double rho_density = 1.0; // electron number density
    double area = 1.0;        // wire cross-section
    long n_electrons = 1;     // N
    double spin = 0.5;        // S
    double p_fermi = 1.0;     // momentum scale for sampling P_e
    double p_total = 0.0;     // total electron momentum P_e (a c-number)
};

// Effective spin-electron coupling for a given total momentum.
inline double gamma_coupling(const WireModelParams& p) {
    return -(p.mu_magn / (2.0 * std::numbers::pi * p.r)) *
           (p.e_charge * p.rho_density * p.area / (p.m_e * static_cast<double>(p.n_electrons))) *
           p.p_total;
}

// gamma (-sin(alpha) S_x + cos(alpha) S_y) on the 2S+1 dimensional spin space.
inline HermitianOperator effective_hamiltonian(double gamma, double alpha, double s = 0.5) {
    const ComplexMatrix m = gamma * (-std::sin(alpha) * spin::sx(s).matrix() +
                                     std::cos(alpha) * spin::sy(s).matrix());
    return HermitianOperator(m);
}

// The wire as a uniformly isospectral family: H_0 = gamma S_y, V = -S_z.
inline DrivenHamiltonian make_wire_family(const WireModelParams& p) {
    const double gamma = gamma_coupling(p);
    HermitianOperator h0 = effective_hamiltonian(gamma, 0.0, p.spin);
    HermitianOperator v(ComplexMatrix(-spin::sz(p.spin).matrix()));
    return DrivenHamiltonian::uniform_isospectral(std::move(h0), std::move(v),
                                                  DrivenHamiltonian::Variant::WireSpin);
}

inline DrivenHamiltonian make_wire_family(double gamma, double s = 0.5) {
    HermitianOperator h0 = effective_hamiltonian(gamma, 0.0, s);
    HermitianOperator v(ComplexMatrix(-spin::sz(s).matrix()));
    return DrivenHamiltonian::uniform_isospectral(std::move(h0), std::move(v),
                                                  DrivenHamiltonian::Variant::WireSpin);
}

// Rotating-frame infidelity of the S = 1/2 spin following its instantaneous
// eigenstate: 1 - F = omega^2/(omega^2+gamma^2) sin^2((alpha/2) sqrt(1+gamma^2/omega^2)).
inline double psa_fidelity_analytic(double omega, double gamma, double alpha) {
    if (omega == 0.0 && gamma == 0.0)
        throw UndefinedLimit("infidelity is undefined at omega = gamma = 0");
    if (omega == 0.0) return 0.0;
    const double rabi = std::hypot(omega, gamma);
    const double prefactor = (omega * omega) / (rabi * rabi);
    const double phase = 0.5 * alpha * rabi / std::abs(omega);
    const double s = std::sin(phase);
    return std::clamp(prefactor * s * s, 0.0, 1.0);
}

// Largest driving rate keeping the infidelity below epsilon for targets
// alpha > pi, where the sine squared reaches unity on the way.
inline double psa_critical_rate(double gamma, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw EpsilonOutOfRange("epsilon must lie in (0, 1)");
    return std::abs(gamma) * std::sqrt(epsilon / (1.0 - epsilon));
}

// Driving rate sufficient for finite-temperature adiabaticity with precision
// epsilon up to angle alpha; independent of the electron count.
inline double finite_t_sufficient_rate(double epsilon, double beta, double s, double alpha) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw EpsilonOutOfRange("epsilon must lie in (0, 1)");
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw NonPositiveBeta("beta must be finite and > 0");
    const double sqrt2 = std::numbers::sqrt2;
    return epsilon * epsilon / (sqrt2 * beta * s * (1.0 + sqrt2 * alpha * s));
}

// Gaussian surrogate for the total electron momentum: a sum of N independent
// zero-mean momenta of standard deviation p_F each, so std(P_e) = p_F sqrt(N).
inline double sample_total_momentum(long n, double p_fermi, rng::NormalSampler& normals) {
    double total = 0.0;
    for (long i = 0; i < n; ++i) total += normals();
    return p_fermi * total;
}

inline double sample_total_momentum(long n, double p_fermi, std::uint64_t seed) {
    rng::NormalSampler normals(seed);
    return sample_total_momentum(n, p_fermi, normals);
}

// Numeric propagation of the S = 1/2 wire spin from the +1/2 eigenstate of
// S_y, reporting 1 - F against the instantaneous eigenstate at every grid
// point alpha_k = k alpha_max / n_alpha.
inline std::vector<double> simulate_psa_infidelity(double omega, double gamma, double alpha_max,
                                                   int n_alpha, double target_error = 1e-9) {
    const DrivenHamiltonian family = make_wire_family(gamma);
    const DrivingSchedule schedule(omega, alpha_max, n_alpha + 1);
    const int substeps = substeps_for_accuracy(family, schedule, target_error);

    ComplexVector psi0(2);
    psi0 << Complex(1.0, 0.0) / std::numbers::sqrt2, Complex(0.0, 1.0) / std::numbers::sqrt2;
    const DensityMatrix rho0{ComplexMatrix(psi0 * psi0.adjoint())};

    const TrajectoryRecord traj = propagate_state(family, schedule, rho0, {substeps});
    std::vector<double> infidelity(traj.states.size());
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const ComplexVector phi = family.rotation(traj.s_values[k]) * psi0;
        const double f = (phi.adjoint() * traj.states[k].matrix() * phi)(0, 0).real();
        infidelity[k] = std::clamp(1.0 - f, 0.0, 1.0);
    }
    return infidelity;
}

// One N-point of the breakdown experiment.
struct ScalingPoint {
    long n_electrons = 0;
    double median_omega_eps = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
};

struct ScalingFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    std::vector<ScalingPoint> points;
};

using MomentumSampler = std::function<double(long n, double p_fermi, rng::NormalSampler&)>;

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace detail

// Median critical rate over the momentum ensemble for each N, and the
// least-squares slope of log(median omega_eps) against log N. Per-N seeds
// derive from the master seed, so the result is independent of execution
// order.
inline ScalingFit scaling_experiment(
    const std::vector<long>& n_list, double p_fermi, double epsilon, int samples,
    std::uint64_t seed, WireModelParams base = {},
    const MomentumSampler& sampler =
        [](long n, double p, rng::NormalSampler& normals) {
            return sample_total_momentum(n, p, normals);
        }) {
    if (n_list.size() < 2)
        throw InsufficientSpan("need at least two electron counts");
    const auto [min_it, max_it] = std::minmax_element(n_list.begin(), n_list.end());
    if (static_cast<double>(*max_it) < 100.0 * static_cast<double>(*min_it))
        throw InsufficientSpan("N values must span at least two decades");
    if (samples < 1) throw InsufficientSpan("need at least one sample per N");

    ScalingFit fit;
    fit.points.reserve(n_list.size());
    for (std::size_t idx = 0; idx < n_list.size(); ++idx) {
        const long n = n_list[idx];
        rng::NormalSampler normals(rng::derive_seed(seed, idx));
        std::vector<double> rates(static_cast<std::size_t>(samples));
        WireModelParams params = base;
        params.n_electrons = n;
        params.p_fermi = p_fermi;
        for (int i = 0; i < samples; ++i) {
            params.p_total = sampler(n, p_fermi, normals);
            rates[static_cast<std::size_t>(i)] =
                psa_critical_rate(gamma_coupling(params), epsilon);
        }
        std::sort(rates.begin(), rates.end());
        fit.points.push_back({n, detail::quantile_sorted(rates, 0.5),
                              detail::quantile_sorted(rates, 0.25),
                              detail::quantile_sorted(rates, 0.75)});
    }

    const auto m = static_cast<double>(fit.points.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const ScalingPoint& p : fit.points) {
        const double x = std::log(static_cast<double>(p.n_electrons));
        const double y = std::log(p.median_omega_eps);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = m * sxx - sx * sx;
    fit.slope = (m * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / m;

    double ss_res = 0.0;
    for (const ScalingPoint& p : fit.points) {
        const double x = std::log(static_cast<double>(p.n_electrons));
        const double res = std::log(p.median_omega_eps) - (fit.intercept + fit.slope * x);
        ss_res += res * res;
    }
    if (fit.points.size() > 2)
        fit.stderr_slope = std::sqrt(ss_res / (m - 2.0) / (sxx - sx * sx / m));
    return fit;
}

}  // namespace thermadiab
