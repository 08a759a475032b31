#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "thermadiab/linalg.hpp"

namespace thermadiab {

// Linear-in-time driving s = omega * t on a uniform s-grid.
struct DrivingSchedule {
    double omega = 0.0;
    double s_max = 0.0;
    int n_steps = 0;

    DrivingSchedule(double omega_, double s_max_, int n_steps_)
        : omega(omega_), s_max(s_max_), n_steps(n_steps_) {
        if (!(std::isfinite(omega) && omega > 0.0))
            throw InvalidSchedule("omega must be finite and > 0");
        if (!(std::isfinite(s_max) && s_max > 0.0))
            throw InvalidSchedule("s_max must be finite and > 0");
        if (n_steps < 2) throw InvalidSchedule("n_steps must be >= 2");
    }

    double step() const { return s_max / static_cast<double>(n_steps - 1); }
    double dt() const { return step() / omega; }

    std::vector<double> grid() const {
        std::vector<double> s(static_cast<std::size_t>(n_steps));
        for (int k = 0; k < n_steps; ++k) s[static_cast<std::size_t>(k)] = step() * k;
        s.back() = s_max;
        return s;
    }
};

// Family s -> H_s. The uniform isospectral variant H_s = exp(isV) H0 exp(-isV)
// keeps the eigendecomposition of V cached so evaluate() and the frame
// rotation are cheap inside propagation loops.
class DrivenHamiltonian {
public:
    enum class Variant { UniformIsospectral, ScaledIsospectral, Generic, WireSpin };

    static DrivenHamiltonian uniform_isospectral(HermitianOperator h0, HermitianOperator v,
                                                 Variant tag = Variant::UniformIsospectral) {
        if (h0.dim() != v.dim())
            throw DimensionMismatch("H0 and V must share the same dimension");
        DrivenHamiltonian family;
        family.variant_ = tag;
        family.dim_ = h0.dim();
        family.h0_ = std::move(h0);
        family.v_ = std::move(v);
        family.v_eig_ = eig_hermitian(*family.v_);
        return family;
    }

    // Gap-dilating drive H_s = (1 + c s) exp(isV) H0 exp(-isV): the rotated
    // spectrum stretches uniformly, so mu and nu are nontrivial while the
    // propagator still factors through cached eigendecompositions.
    static DrivenHamiltonian scaled_isospectral(HermitianOperator h0, HermitianOperator v,
                                                double scale_rate) {
        DrivenHamiltonian family =
            uniform_isospectral(std::move(h0), std::move(v), Variant::ScaledIsospectral);
        family.scale_rate_ = scale_rate;
        return family;
    }

    static DrivenHamiltonian generic(Eigen::Index dim, std::function<ComplexMatrix(double)> fn) {
        DrivenHamiltonian family;
        family.variant_ = Variant::Generic;
        family.dim_ = dim;
        family.fn_ = std::move(fn);
        return family;
    }

    Variant variant() const { return variant_; }
    Eigen::Index dim() const { return dim_; }
    bool is_uniform_isospectral() const {
        return variant_ == Variant::UniformIsospectral || variant_ == Variant::WireSpin;
    }
    bool is_structured() const { return variant_ != Variant::Generic; }

    const HermitianOperator& stored_h0() const { return *h0_; }
    const HermitianOperator& stored_v() const { return *v_; }
    const SpectralDecomposition& h0_eig() const {
        if (!h0_eig_) h0_eig_ = eig_hermitian(*h0_);
        return *h0_eig_;
    }
    double scale_rate() const { return scale_rate_; }

    // spectrum stretch factor 1 + c s (identically 1 unless scaled)
    double scale_at(double s) const { return 1.0 + scale_rate_ * s; }

    // exp(isV); only defined for the structured variants.
    ComplexMatrix rotation(double s) const {
        ComplexVector phases(dim_);
        for (Eigen::Index n = 0; n < dim_; ++n)
            phases[n] = std::exp(Complex(0.0, s * v_eig_->eigenvalues[n]));
        return v_eig_->eigenvectors * phases.asDiagonal() * v_eig_->eigenvectors.adjoint();
    }

    HermitianOperator evaluate(double s) const {
        if (is_structured()) {
            if (variant_ == Variant::ScaledIsospectral && scale_at(s) <= 0.0)
                throw EvaluationFailure("scaled family reaches a non-positive stretch factor");
            if (s == 0.0) return *h0_;
            const ComplexMatrix r = rotation(s);
            ComplexMatrix m = scale_at(s) * (r * h0_->matrix() * r.adjoint());
            return HermitianOperator(0.5 * (m + m.adjoint()));
        }
        ComplexMatrix m = fn_(s);
        if (m.rows() != dim_ || m.cols() != dim_)
            throw EvaluationFailure("family callable returned a wrong-sized matrix");
        if (!detail::is_hermitian(m))
            throw EvaluationFailure("family callable returned a non-Hermitian matrix");
        return HermitianOperator(std::move(m));
    }

private:
    DrivenHamiltonian() = default;

    Variant variant_ = Variant::Generic;
    Eigen::Index dim_ = 0;
    double scale_rate_ = 0.0;
    std::optional<HermitianOperator> h0_;
    std::optional<HermitianOperator> v_;
    std::optional<SpectralDecomposition> v_eig_;
    mutable std::optional<SpectralDecomposition> h0_eig_;
    std::function<ComplexMatrix(double)> fn_;
};

// Eigenvalues and eigenvectors along the s-grid with labels matched for
// continuity (adiabatic labeling): each grid point's columns are assigned to
// the previous point's labels by maximal overlap and phase-fixed so the
// consecutive overlap is real and positive.
struct EigenbasisPath {
    std::vector<double> grid;
    std::vector<RealVector> energies;    // label-ordered, ascending at s = 0
    std::vector<ComplexMatrix> vectors;  // unitary column frames per grid point
    std::vector<RealVector> gaps;        // adjacent label gaps, d-1 per point
    double degeneracy_threshold = 0.0;

    // set for uniform isospectral families: V_s is the stored V exactly,
    // mu = 1, nu = 0 and dV/ds = 0 without finite differencing
    std::optional<ComplexMatrix> analytic_velocity;

    Eigen::Index dim() const { return energies.empty() ? 0 : energies.front().size(); }
    int points() const { return static_cast<int>(grid.size()); }
};

// Gap-compression and gap-drift functionals per grid point.
struct SpectralFunctionals {
    std::vector<double> mu;
    std::vector<double> nu;
};

namespace detail {

inline void check_gaps(const RealVector& energies, double threshold, double s) {
    for (Eigen::Index n = 0; n + 1 < energies.size(); ++n) {
        if (energies[n + 1] - energies[n] < threshold)
            throw DegenerateGap("adjacent gap below degeneracy threshold at s = " +
                                std::to_string(s));
    }
}

// Greedy maximal-overlap assignment between the previous frame's labels and
// the freshly computed eigenvector columns.
inline std::vector<Eigen::Index> match_labels(const ComplexMatrix& overlaps) {
    const Eigen::Index d = overlaps.rows();
    struct Entry {
        double weight;
        Eigen::Index label, column;
    };
    std::vector<Entry> entries;
    entries.reserve(static_cast<std::size_t>(d * d));
    for (Eigen::Index n = 0; n < d; ++n)
        for (Eigen::Index m = 0; m < d; ++m)
            entries.push_back({std::abs(overlaps(n, m)), n, m});
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.weight > b.weight; });

    std::vector<Eigen::Index> assignment(static_cast<std::size_t>(d), -1);
    std::vector<bool> column_used(static_cast<std::size_t>(d), false);
    Eigen::Index assigned = 0;
    for (const Entry& e : entries) {
        if (assignment[static_cast<std::size_t>(e.label)] >= 0 ||
            column_used[static_cast<std::size_t>(e.column)])
            continue;
        assignment[static_cast<std::size_t>(e.label)] = e.column;
        column_used[static_cast<std::size_t>(e.column)] = true;
        if (++assigned == d) break;
    }
    return assignment;
}

}  // namespace detail

// Follows the eigensystem of the family along the schedule grid. A
// non-positive degeneracy_threshold requests the default of 1e-8 times the
// spectral range at s = 0.
inline EigenbasisPath trace_path(const DrivenHamiltonian& family, const DrivingSchedule& schedule,
                                 double degeneracy_threshold = -1.0) {
    EigenbasisPath path;
    path.grid = schedule.grid();
    const int n_points = schedule.n_steps;
    path.energies.reserve(static_cast<std::size_t>(n_points));
    path.vectors.reserve(static_cast<std::size_t>(n_points));
    path.gaps.reserve(static_cast<std::size_t>(n_points));

    SpectralDecomposition sd0 = eig_hermitian(family.evaluate(0.0));
    const Eigen::Index d = sd0.eigenvalues.size();
    if (degeneracy_threshold <= 0.0) {
        const double range = sd0.eigenvalues.maxCoeff() - sd0.eigenvalues.minCoeff();
        degeneracy_threshold = 1e-8 * std::max(range, 1e-300);
    }
    path.degeneracy_threshold = degeneracy_threshold;

    if (d > 1) detail::check_gaps(sd0.eigenvalues, degeneracy_threshold, 0.0);
    path.energies.push_back(sd0.eigenvalues);
    path.vectors.push_back(sd0.eigenvectors);

    for (int k = 1; k < n_points; ++k) {
        const double s = path.grid[static_cast<std::size_t>(k)];
        SpectralDecomposition sd = eig_hermitian(family.evaluate(s));
        const ComplexMatrix& prev = path.vectors.back();
        const ComplexMatrix overlaps = prev.adjoint() * sd.eigenvectors;
        const std::vector<Eigen::Index> assignment = detail::match_labels(overlaps);

        RealVector energies(d);
        ComplexMatrix frame(d, d);
        for (Eigen::Index n = 0; n < d; ++n) {
            const Eigen::Index m = assignment[static_cast<std::size_t>(n)];
            const Complex overlap = overlaps(n, m);
            if (std::abs(overlap) <= 0.5)
                throw ContinuityLoss("eigenvector overlap fell below 0.5 at s = " +
                                     std::to_string(s) + "; refine the grid");
            energies[n] = sd.eigenvalues[m];
            frame.col(n) = sd.eigenvectors.col(m) * (std::conj(overlap) / std::abs(overlap));
        }
        if (d > 1) detail::check_gaps(energies, degeneracy_threshold, s);
        path.energies.push_back(std::move(energies));
        path.vectors.push_back(std::move(frame));
    }

    for (int k = 0; k < n_points; ++k) {
        RealVector g(std::max<Eigen::Index>(d - 1, 0));
        for (Eigen::Index n = 0; n + 1 < d; ++n)
            g[n] = path.energies[static_cast<std::size_t>(k)][n + 1] -
                   path.energies[static_cast<std::size_t>(k)][n];
        path.gaps.push_back(std::move(g));
    }

    if (family.is_uniform_isospectral()) path.analytic_velocity = family.stored_v().matrix();
    return path;
}

// U_{s_k} = sum_n |Phi_{s_k}^n><Phi_0^n|; U_{s_0} = identity.
inline ComplexMatrix transport_unitary(const EigenbasisPath& path, int k) {
    return path.vectors[static_cast<std::size_t>(k)] * path.vectors.front().adjoint();
}

namespace detail {

// Differencing stride: fd_step is snapped to a whole number of grid
// intervals (the path only exists on its grid), minimum one.
inline int fd_stride(const EigenbasisPath& path, double fd_step) {
    const double h = path.grid[1] - path.grid[0];
    if (fd_step <= 0.0) return 1;
    const int stride = static_cast<int>(std::lround(fd_step / h));
    return std::clamp(stride, 1, std::max(1, path.points() - 1));
}

// Second-order derivative of a matrix-valued grid function: central in the
// interior, three-point one-sided at the edges (two-point when the grid is
// too short).
template <typename Fetch>
ComplexMatrix grid_derivative(Fetch&& at, int k, int n_points, double h, int stride) {
    const auto inside = [&](int idx) { return idx >= 0 && idx < n_points; };
    if (inside(k - stride) && inside(k + stride))
        return (at(k + stride) - at(k - stride)) / (2.0 * h * stride);
    if (k - stride < 0) {
        if (inside(k + 2 * stride))
            return (-3.0 * at(k) + 4.0 * at(k + stride) - at(k + 2 * stride)) / (2.0 * h * stride);
        return (at(k + stride) - at(k)) / (h * stride);
    }
    if (inside(k - 2 * stride))
        return (3.0 * at(k) - 4.0 * at(k - stride) + at(k - 2 * stride)) / (2.0 * h * stride);
    return (at(k) - at(k - stride)) / (h * stride);
}

}  // namespace detail

// V_s = -i U_s^dag dU_s/ds on the path grid. Uniform isospectral families
// short-circuit to the stored V; everything else is finite-differenced.
inline HermitianOperator gauge_velocity(const EigenbasisPath& path, int k, double fd_step = 0.0) {
    if (path.analytic_velocity) return HermitianOperator(*path.analytic_velocity);
    const int stride = detail::fd_stride(path, fd_step);
    const double h = path.grid[1] - path.grid[0];
    const auto at = [&](int idx) { return transport_unitary(path, idx); };
    const ComplexMatrix du = detail::grid_derivative(at, k, path.points(), h, stride);
    const ComplexMatrix v = Complex(0.0, -1.0) * (transport_unitary(path, k).adjoint() * du);
    if (detail::hermiticity_defect(v) > 1e-6)
        throw GridTooCoarse("finite-difference gauge velocity is not Hermitian; refine the grid");
    return HermitianOperator(0.5 * (v + v.adjoint()));
}

// dV_s/ds by differencing gauge_velocity along the grid; identically zero for
// uniform isospectral families.
inline HermitianOperator gauge_acceleration(const EigenbasisPath& path, int k,
                                            double fd_step = 0.0) {
    if (path.analytic_velocity)
        return HermitianOperator::zero(path.analytic_velocity->rows());
    const int stride = detail::fd_stride(path, fd_step);
    const double h = path.grid[1] - path.grid[0];
    const auto at = [&](int idx) { return gauge_velocity(path, idx, fd_step).matrix(); };
    const ComplexMatrix dv = detail::grid_derivative(at, k, path.points(), h, stride);
    if (detail::hermiticity_defect(dv) > 1e-6)
        throw GridTooCoarse("finite-difference gauge acceleration is not Hermitian");
    return HermitianOperator(0.5 * (dv + dv.adjoint()));
}

// V_s and dV_s/ds for every grid point.
struct GaugeVelocities {
    std::vector<HermitianOperator> velocity;
    std::vector<HermitianOperator> acceleration;
};

inline GaugeVelocities gauge_velocities(const EigenbasisPath& path, double fd_step = 0.0) {
    GaugeVelocities out;
    out.velocity.reserve(static_cast<std::size_t>(path.points()));
    out.acceleration.reserve(static_cast<std::size_t>(path.points()));
    for (int k = 0; k < path.points(); ++k) {
        out.velocity.push_back(gauge_velocity(path, k, fd_step));
        out.acceleration.push_back(gauge_acceleration(path, k, fd_step));
    }
    return out;
}

// mu_s and nu_s from adjacent matched gaps: 1/mu_s is the worst gap
// compression relative to s = 0, nu_s the worst logarithmic gap drift.
inline SpectralFunctionals spectral_functionals(const EigenbasisPath& path) {
    const int n_points = path.points();
    SpectralFunctionals f;
    f.mu.assign(static_cast<std::size_t>(n_points), 1.0);
    f.nu.assign(static_cast<std::size_t>(n_points), 0.0);
    if (path.analytic_velocity || path.dim() < 2) return f;

    const double h = path.grid[1] - path.grid[0];
    const Eigen::Index n_gaps = path.gaps.front().size();
    for (int k = 0; k < n_points; ++k) {
        double mu_inv = 0.0;
        double nu = 0.0;
        for (Eigen::Index n = 0; n < n_gaps; ++n) {
            const double gap_s = path.gaps[static_cast<std::size_t>(k)][n];
            if (std::abs(gap_s) < path.degeneracy_threshold)
                throw DegenerateGap("gap below threshold in spectral functionals");
            mu_inv = std::max(mu_inv, std::abs(path.gaps.front()[n] / gap_s));
            const auto gap_at = [&](int idx) { return path.gaps[static_cast<std::size_t>(idx)][n]; };
            double dgap;
            if (k > 0 && k + 1 < n_points)
                dgap = (gap_at(k + 1) - gap_at(k - 1)) / (2.0 * h);
            else if (k == 0)
                dgap = n_points > 2 ? (-3.0 * gap_at(0) + 4.0 * gap_at(1) - gap_at(2)) / (2.0 * h)
                                    : (gap_at(1) - gap_at(0)) / h;
            else
                dgap = n_points > 2 ? (3.0 * gap_at(k) - 4.0 * gap_at(k - 1) + gap_at(k - 2)) /
                                          (2.0 * h)
                                    : (gap_at(k) - gap_at(k - 1)) / h;
            nu = std::max(nu, std::abs(dgap / gap_s));
        }
        f.mu[static_cast<std::size_t>(k)] = 1.0 / mu_inv;
        f.nu[static_cast<std::size_t>(k)] = nu;
    }
    return f;
}

// Brute-force all-pairs evaluation of the spectral functionals. The adjacent
// formula must coincide with this; the equality is exactly the supplement's
// point and is verified as such in the tests.
struct AllPairsFunctionals {
    double mu_inv = 0.0;
    double nu = 0.0;
};

// Adjacent-pair evaluation on raw spectra; the form actually used by
// spectral_functionals, exposed so the lemma check can compare both routes.
inline AllPairsFunctionals adjacent_pairs_functionals(const RealVector& e0, const RealVector& es,
                                                      const RealVector& des) {
    if (e0.size() != es.size() || des.size() != es.size())
        throw DimensionMismatch("spectra must have equal lengths");
    for (Eigen::Index n = 0; n + 1 < es.size(); ++n)
        if (!(es[n + 1] > es[n]))
            throw UnorderedSpectrum("E_s must be strictly increasing");
    AllPairsFunctionals out;
    if (es.size() < 2) {
        out.mu_inv = 1.0;
        return out;
    }
    for (Eigen::Index n = 0; n + 1 < es.size(); ++n) {
        const double gap = es[n + 1] - es[n];
        out.mu_inv = std::max(out.mu_inv, std::abs((e0[n + 1] - e0[n]) / gap));
        out.nu = std::max(out.nu, std::abs((des[n + 1] - des[n]) / gap));
    }
    return out;
}

inline AllPairsFunctionals all_pairs_oracle(const RealVector& e0, const RealVector& es,
                                            const RealVector& des) {
    if (e0.size() != es.size() || des.size() != es.size())
        throw DimensionMismatch("spectra must have equal lengths");
    for (Eigen::Index n = 0; n + 1 < es.size(); ++n)
        if (!(es[n + 1] > es[n]))
            throw UnorderedSpectrum("E_s must be strictly increasing");
    AllPairsFunctionals out;
    if (es.size() < 2) {
        out.mu_inv = 1.0;
        return out;
    }
    for (Eigen::Index m = 1; m < es.size(); ++m) {
        for (Eigen::Index n = 0; n < m; ++n) {
            const double gap = es[m] - es[n];
            out.mu_inv = std::max(out.mu_inv, std::abs((e0[m] - e0[n]) / gap));
            out.nu = std::max(out.nu, std::abs((des[m] - des[n]) / gap));
        }
    }
    return out;
}

// exp(-beta H)/Z with the energy origin shifted to the ground state before
// exponentiation, so large beta cannot overflow.
inline DensityMatrix gibbs_state(const HermitianOperator& h, double beta) {
    if (!std::isfinite(beta) || beta < 0.0)
        throw NonFiniteBeta("beta must be finite and >= 0");
    if (beta == 0.0) return DensityMatrix::maximally_mixed(h.dim());
    const SpectralDecomposition sd = eig_hermitian(h);
    const double e_min = sd.eigenvalues.minCoeff();
    RealVector weights(sd.eigenvalues.size());
    for (Eigen::Index n = 0; n < sd.eigenvalues.size(); ++n)
        weights[n] = std::exp(-beta * (sd.eigenvalues[n] - e_min));
    weights /= weights.sum();
    ComplexMatrix rho = sd.eigenvectors * weights.asDiagonal().toDenseMatrix().cast<Complex>() *
                        sd.eigenvectors.adjoint();
    return DensityMatrix(0.5 * (rho + rho.adjoint()));
}

}  // namespace thermadiab
