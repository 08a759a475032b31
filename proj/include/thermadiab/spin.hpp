#pragma once

#include <cmath>

#include "thermadiab/linalg.hpp"

namespace thermadiab {

// Spin-S operators in the S_z eigenbasis, ordered m = +S ... -S so that the
// first basis vector is the highest-weight state. Valid for S = 1/2, 1, 3/2, ...
namespace spin {

inline Eigen::Index dimension(double s) {
    const double d = 2.0 * s + 1.0;
    const auto dim = static_cast<Eigen::Index>(std::lround(d));
    if (dim < 2 || std::abs(d - static_cast<double>(dim)) > 1e-12)
        throw EvaluationFailure("spin magnitude must be a positive half-integer");
    return dim;
}

inline HermitianOperator sz(double s) {
    const Eigen::Index dim = dimension(s);
    ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) m(i, i) = s - static_cast<double>(i);
    return HermitianOperator(std::move(m));
}

namespace detail {
// raising-operator amplitude <m+1| S_+ |m>
inline double ladder(double s, double m) { return std::sqrt(s * (s + 1.0) - m * (m + 1.0)); }
}  // namespace detail

inline HermitianOperator sx(double s) {
    const Eigen::Index dim = dimension(s);
    ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
    for (Eigen::Index i = 0; i + 1 < dim; ++i) {
        const double amp = 0.5 * detail::ladder(s, s - static_cast<double>(i + 1));
        m(i, i + 1) = amp;
        m(i + 1, i) = amp;
    }
    return HermitianOperator(std::move(m));
}

inline HermitianOperator sy(double s) {
    const Eigen::Index dim = dimension(s);
    ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
    for (Eigen::Index i = 0; i + 1 < dim; ++i) {
        const double amp = 0.5 * detail::ladder(s, s - static_cast<double>(i + 1));
        m(i, i + 1) = Complex(0.0, -amp);
        m(i + 1, i) = Complex(0.0, amp);
    }
    return HermitianOperator(std::move(m));
}

}  // namespace spin
}  // namespace thermadiab
