#include <fsan/linalg.hpp>

#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace fsan
{

double max_hermitian_defect(const CMatrix& m)
{
    if (m.rows() != m.cols())
    {
        throw std::invalid_argument("max_hermitian_defect: matrix is not square");
    }
    if (m.size() == 0)
    {
        return 0.0;
    }
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

CMatrix hermitian_part(const CMatrix& m)
{
    if (m.rows() != m.cols())
    {
        throw std::invalid_argument("hermitian_part: matrix is not square");
    }
    return (m + m.adjoint()) * 0.5;
}

RVector hermitian_eigenvalues(const CMatrix& m)
{
    if (m.rows() != m.cols())
    {
        throw std::invalid_argument("hermitian_eigenvalues: matrix is not square");
    }
    if (m.size() == 0)
    {
        return RVector();
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(m), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
    {
        throw std::runtime_error("hermitian_eigenvalues: eigensolver did not converge");
    }
    return es.eigenvalues();
}

CMatrix project_psd(const CMatrix& m)
{
    if (m.rows() != m.cols())
    {
        throw std::invalid_argument("project_psd: matrix is not square");
    }
    const Index n = m.rows();
    if (n == 0)
    {
        return m;
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(m));
    if (es.info() != Eigen::Success)
    {
        throw std::runtime_error("project_psd: eigensolver did not converge");
    }
    const RVector& lambda = es.eigenvalues();
    Index first_positive = 0;
    while (first_positive < n && lambda(first_positive) <= 0.0)
    {
        ++first_positive;
    }
    const Index kept = n - first_positive;
    if (kept == 0)
    {
        return CMatrix::Zero(n, n);
    }
    CMatrix v = es.eigenvectors().rightCols(kept);
    CMatrix scaled = v * lambda.tail(kept).asDiagonal();
    return scaled * v.adjoint();
}

} // namespace fsan
