#include <fsan/vandermonde.hpp>

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>

namespace fsan
{

Decomposition vandermonde_decompose(const CMatrix& t, const DimsSpec& dims,
                                    const DecompositionOptions& options)
{
    if (t.rows() != dims.total() || t.cols() != dims.total())
    {
        throw std::invalid_argument("vandermonde_decompose: matrix size does not match the grid");
    }
    const SignalSubspace probe(t, dims, Index{0}, options.rank_tol);
    const RVector& lambda = probe.eigenvalues();
    const double lambda_max = lambda(0);
    const double lambda_min = lambda(lambda.size() - 1);
    if (lambda_min < -options.rank_tol * std::max(lambda_max, 0.0) ||
        (lambda_max <= 0.0 && lambda_min < 0.0))
    {
        throw DecompositionError("vandermonde_decompose: matrix is not positive semidefinite "
                                 "(lambda_min = " + std::to_string(lambda_min) + ")");
    }
    const Index r = model_order(std::span<const double>(lambda.data(), static_cast<std::size_t>(lambda.size())),
                                options.rank_tol);
    Decomposition out;
    if (r == 0)
    {
        out.residual = t.norm();
        return out;
    }
    if (r >= dims.min_size())
    {
        throw DecompositionError("vandermonde_decompose: rank " + std::to_string(r) +
                                 " is not below min_i N_i = " + std::to_string(dims.min_size()));
    }

    const SignalSubspace subspace(t, dims, r, options.rank_tol);
    const MusicResult music = music_frequencies(subspace, BandSystem::unconstrained(dims.d()),
                                                options.music);
    if (static_cast<Index>(music.frequencies.size()) != r)
    {
        throw DecompositionError("vandermonde_decompose: found " +
                                 std::to_string(music.frequencies.size()) + " of " +
                                 std::to_string(r) + " frequency tuples");
    }

    // weights: least squares on the atom outer products
    CMatrix a(dims.total(), r);
    for (Index l = 0; l < r; ++l)
    {
        a.col(l) = steering_vector(music.frequencies[static_cast<std::size_t>(l)], dims);
    }
    const CMatrix cross = a.adjoint() * a;
    const RMatrix gram  = cross.cwiseAbs2();
    RVector rhs(r);
    for (Index l = 0; l < r; ++l)
    {
        rhs(l) = a.col(l).dot(t * a.col(l)).real();
    }
    const RVector sigma = gram.colPivHouseholderQr().solve(rhs);

    std::vector<SpectralComponent> entries;
    CMatrix recon = CMatrix::Zero(t.rows(), t.cols());
    for (Index l = 0; l < r; ++l)
    {
        if (!(sigma(l) > 0.0))
        {
            throw DecompositionError("vandermonde_decompose: nonpositive weight " +
                                     std::to_string(sigma(l)));
        }
        entries.push_back({music.frequencies[static_cast<std::size_t>(l)], Complex(sigma(l), 0.0)});
        recon += sigma(l) * a.col(l) * a.col(l).adjoint();
    }
    out.model    = SpectralModel(std::move(entries));
    out.residual = (t - recon).norm();
    if (out.residual > options.reconstruction_tol * t.norm())
    {
        throw DecompositionError("vandermonde_decompose: reconstruction residual " +
                                 std::to_string(out.residual / t.norm()) +
                                 " (relative) exceeds tolerance");
    }
    return out;
}

BlockCheck check_psd(const CMatrix& m, double psd_tol)
{
    BlockCheck c;
    const RVector lambda = hermitian_eigenvalues(m);
    if (lambda.size() == 0)
    {
        return c;
    }
    c.lambda_min = lambda(0);
    c.lambda_max = lambda(lambda.size() - 1);
    c.psd        = c.lambda_min >= -psd_tol * std::max(c.lambda_max, 1.0);
    return c;
}

CertificateReport verify_fs_certificate(const HalfSpectrumTensor& b, const BandSystem& bands,
                                        double psd_tol, double rank_tol)
{
    const DimsSpec& dims = b.dims();
    if (bands.d() != dims.d())
    {
        throw std::invalid_argument("verify_fs_certificate: band system dimension differs "
                                    "from the tensor");
    }
    if (!bands.single_band())
    {
        throw std::invalid_argument("verify_fs_certificate: expected one band per dimension; "
                                    "use verify_multiband_certificate");
    }
    CertificateReport rep;
    const CMatrix t = build_level_toeplitz(b);
    rep.t           = check_psd(t, psd_tol);
    rep.rank_t      = numerical_rank(t, rank_tol);
    rep.rank_hypothesis = rep.rank_t < dims.min_size();
    rep.pass            = rep.t.psd;
    for (Index i = 0; i < dims.d(); ++i)
    {
        CertificateReport::GCheck gc;
        gc.dim = i;
        if (!bands.band(i).is_full())
        {
            gc.constrained = true;
            gc.block       = check_psd(build_tg(b, g_coefficients(bands.band(i), i)), psd_tol);
            rep.pass       = rep.pass && gc.block.psd;
        }
        rep.g.push_back(gc);
    }
    return rep;
}

MultibandReport verify_multiband_certificate(const std::vector<HalfSpectrumTensor>& parts,
                                             const HalfSpectrumTensor& b,
                                             const BandSystem& bands, double psd_tol,
                                             double rank_tol)
{
    const DimsSpec& dims = b.dims();
    if (bands.d() != dims.d())
    {
        throw std::invalid_argument("verify_multiband_certificate: band system dimension "
                                    "differs from the tensor");
    }
    const std::size_t count = parts.size();
    for (Index i = 0; i < dims.d(); ++i)
    {
        if (bands.bands(i).size() != count)
        {
            throw std::invalid_argument("verify_multiband_certificate: dimension " +
                                        std::to_string(i) + " lists " +
                                        std::to_string(bands.bands(i).size()) + " bands for " +
                                        std::to_string(count) + " parts");
        }
    }
    MultibandReport rep;
    CVector sum = CVector::Zero(b.size());
    for (const auto& part : parts)
    {
        if (!(part.dims() == dims))
        {
            throw std::invalid_argument("verify_multiband_certificate: part shape mismatch");
        }
        sum += part.values();
    }
    rep.sum_defect = b.size() == 0 ? 0.0 : (sum - b.values()).cwiseAbs().maxCoeff();
    const double scale = b.size() == 0 ? 0.0 : b.values().cwiseAbs().maxCoeff();
    rep.sum_ok = rep.sum_defect <= 1e-12 * std::max(scale, 1.0);

    rep.pass = rep.sum_ok;
    for (std::size_t j = 0; j < count; ++j)
    {
        std::vector<FrequencyBand> slice;
        for (Index i = 0; i < dims.d(); ++i)
        {
            slice.push_back(bands.bands(i)[j]);
        }
        CertificateReport part = verify_fs_certificate(parts[j], BandSystem(slice), psd_tol, rank_tol);
        rep.rank_sum += part.rank_t;
        rep.pass = rep.pass && part.pass;
        rep.parts.push_back(std::move(part));
    }
    rep.rank_t           = numerical_rank(build_level_toeplitz(b), rank_tol);
    rep.rank_sum_matches = rep.rank_sum == rep.rank_t;
    return rep;
}

} // namespace fsan
