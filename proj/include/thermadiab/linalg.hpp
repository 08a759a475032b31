#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <utility>

#include "thermadiab/errors.hpp"

namespace thermadiab {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kHermiticityTol = 1e-12;
inline constexpr double kPsdTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;

namespace detail {

inline double hermiticity_defect(const ComplexMatrix& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const ComplexMatrix& m, double tol = kHermiticityTol) {
    if (m.rows() != m.cols() || m.rows() < 1) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return hermiticity_defect(m) <= tol * scale;
}

}  // namespace detail

// Dense complex square matrix with a Hermiticity invariant enforced at
// construction. Energy units with hbar = 1 throughout.
class HermitianOperator {
public:
    explicit HermitianOperator(ComplexMatrix entries) : entries_(std::move(entries)) {
        if (entries_.rows() != entries_.cols() || entries_.rows() < 1)
            throw NonHermitianInput("matrix must be square with dim >= 1");
        if (!detail::is_hermitian(entries_))
            throw NonHermitianInput("Hermiticity defect exceeds tolerance");
    }

    static HermitianOperator zero(Eigen::Index dim) {
        return HermitianOperator(ComplexMatrix::Zero(dim, dim));
    }

    Eigen::Index dim() const { return entries_.rows(); }
    const ComplexMatrix& matrix() const { return entries_; }

private:
    ComplexMatrix entries_;
};

// Eigenvalues ascending, eigenvectors as unitary column matrix.
struct SpectralDecomposition {
    RealVector eigenvalues;
    ComplexMatrix eigenvectors;
};

// Positive-semidefinite, unit-trace Hermitian matrix.
class DensityMatrix {
public:
    explicit DensityMatrix(ComplexMatrix entries) : entries_(std::move(entries)) {
        if (entries_.rows() != entries_.cols() || entries_.rows() < 1)
            throw InvalidDensityMatrix("matrix must be square with dim >= 1");
        if (!detail::is_hermitian(entries_))
            throw NonHermitianInput("density matrix not Hermitian within tolerance");
        if (std::abs(entries_.trace().real() - 1.0) > kTraceTol ||
            std::abs(entries_.trace().imag()) > kTraceTol)
            throw InvalidDensityMatrix("trace differs from 1 beyond tolerance");
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(entries_, Eigen::EigenvaluesOnly);
        if (solver.eigenvalues().minCoeff() < -kPsdTol)
            throw NegativeEigenvalue("density matrix has eigenvalue below -1e-10");
    }

    static DensityMatrix maximally_mixed(Eigen::Index dim) {
        return DensityMatrix(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim));
    }

    Eigen::Index dim() const { return entries_.rows(); }
    const ComplexMatrix& matrix() const { return entries_; }

    double purity() const { return (entries_ * entries_).trace().real(); }

private:
    ComplexMatrix entries_;
};

// Ascending eigenvalues with an orthonormal eigenbasis. Output is
// deterministic for identical input; degenerate subspaces get an arbitrary
// but reproducible basis.
inline SpectralDecomposition eig_hermitian(const HermitianOperator& h) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h.matrix());
    if (solver.info() != Eigen::Success)
        throw NonHermitianInput("eigensolver failed to converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

// Operator norm as the maximum absolute eigenvalue.
inline double operator_norm(const HermitianOperator& h) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h.matrix(), Eigen::EigenvaluesOnly);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

// exp(-i H dt) through the spectral decomposition, so the result is unitary
// to eigensolver precision and conjugation preserves spectra.
inline ComplexMatrix propagator_step(const HermitianOperator& h, double dt) {
    if (!std::isfinite(dt)) throw StepTooLarge("time step must be finite");
    const SpectralDecomposition sd = eig_hermitian(h);
    ComplexVector phases(sd.eigenvalues.size());
    for (Eigen::Index n = 0; n < sd.eigenvalues.size(); ++n)
        phases[n] = std::exp(Complex(0.0, -sd.eigenvalues[n] * dt));
    return sd.eigenvectors * phases.asDiagonal() * sd.eigenvectors.adjoint();
}

// PSD square root. Eigenvalues in [-1e-8, 0) are clamped to zero; anything
// below -1e-8 is treated as a genuinely indefinite input.
inline HermitianOperator matrix_sqrt_psd(const HermitianOperator& h) {
    SpectralDecomposition sd = eig_hermitian(h);
    RealVector roots(sd.eigenvalues.size());
    for (Eigen::Index n = 0; n < sd.eigenvalues.size(); ++n) {
        double lambda = sd.eigenvalues[n];
        if (lambda < -1e-8)
            throw NegativeEigenvalue("eigenvalue below -1e-8; matrix is not PSD");
        roots[n] = std::sqrt(std::max(lambda, 0.0));
    }
    ComplexMatrix result = sd.eigenvectors * roots.asDiagonal().toDenseMatrix().cast<Complex>() *
                           sd.eigenvectors.adjoint();
    // symmetrize away eigensolver roundoff before revalidating
    return HermitianOperator(0.5 * (result + result.adjoint()));
}

inline HermitianOperator matrix_sqrt_psd(const DensityMatrix& rho) {
    return matrix_sqrt_psd(HermitianOperator(rho.matrix()));
}

// (1/2) tr |rho2 - rho1|.
inline double trace_distance(const DensityMatrix& rho1, const DensityMatrix& rho2) {
    if (rho1.dim() != rho2.dim())
        throw DimensionMismatch("trace_distance requires equal dimensions");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(rho2.matrix() - rho1.matrix(),
                                                        Eigen::EigenvaluesOnly);
    const double d = 0.5 * solver.eigenvalues().cwiseAbs().sum();
    return std::clamp(d, 0.0, 1.0);
}

// Affinity defect D = 1 - tr(sqrt(rho1) sqrt(rho2)); zero iff the states
// coincide, one for orthogonal pure states.
inline double affinity_defect(const DensityMatrix& rho1, const DensityMatrix& rho2) {
    if (rho1.dim() != rho2.dim())
        throw DimensionMismatch("affinity_defect requires equal dimensions");
    const ComplexMatrix s1 = matrix_sqrt_psd(rho1).matrix();
    const ComplexMatrix s2 = matrix_sqrt_psd(rho2).matrix();
    const double overlap = (s1 * s2).trace().real();
    return std::clamp(1.0 - overlap, 0.0, 1.0);
}

}  // namespace thermadiab
