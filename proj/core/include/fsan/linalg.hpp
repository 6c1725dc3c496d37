#ifndef FSAN_LINALG_HPP
#define FSAN_LINALG_HPP

#include <complex>

#include <Eigen/Core>

namespace fsan
{

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;
using Index   = Eigen::Index;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kPi    = 3.141592653589793238462643383280;

/// Frobenius inner product `sum(conj(a) .* b)`, conjugate-linear in `a`.
inline Complex frobenius_inner(const CMatrix& a, const CMatrix& b)
{
    return (a.array().conjugate() * b.array()).sum();
}

/// Largest entry of `|m - m^H|`.
double max_hermitian_defect(const CMatrix& m);

/// `(m + m^H) / 2`.
CMatrix hermitian_part(const CMatrix& m);

/// Eigenvalues of a Hermitian matrix in ascending order (lower triangle
/// is read after symmetrization).
RVector hermitian_eigenvalues(const CMatrix& m);

/// Nearest PSD matrix in Frobenius norm: eigenvalues clipped at zero.
CMatrix project_psd(const CMatrix& m);

} // namespace fsan

#endif // FSAN_LINALG_HPP
