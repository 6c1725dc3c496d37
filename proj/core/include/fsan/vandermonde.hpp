#ifndef FSAN_VANDERMONDE_HPP
#define FSAN_VANDERMONDE_HPP

#include <stdexcept>
#include <vector>

#include <fsan/bands.hpp>
#include <fsan/model.hpp>
#include <fsan/music.hpp>
#include <fsan/toeplitz.hpp>

namespace fsan
{

/// Raised when a matrix does not admit a certified Vandermonde decomposition.
class DecompositionError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// T = sum_l sigma_l a(f_l) a(f_l)^H with sigma_l > 0.
struct Decomposition
{
    SpectralModel model;
    /// ||T - sum sigma_l a a^H||_F.
    double residual = 0.0;
};

struct DecompositionOptions
{
    double rank_tol = 1e-6;
    /// Relative Frobenius residual allowed for the reconstruction.
    double reconstruction_tol = 1e-6;
    MusicOptions music;
};

///
/// Vandermonde decomposition of a PSD d-level Toeplitz matrix of rank
/// r < min_i N_i: signal subspace from the eigendecomposition, frequency
/// tuples from MUSIC over the full torus, then the positive weights by least
/// squares on the atom outer products. Throws DecompositionError when T is
/// not PSD, the rank hypothesis fails or the residual is not certified.
///
Decomposition vandermonde_decompose(const CMatrix& t, const DimsSpec& dims,
                                    const DecompositionOptions& options = {});

struct BlockCheck
{
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    bool psd          = true;
};

struct CertificateReport
{
    BlockCheck t;
    /// One entry per dimension; `constrained` is false for full-circle bands.
    struct GCheck
    {
        Index dim        = 0;
        bool constrained = false;
        BlockCheck block;
    };
    std::vector<GCheck> g;
    Index rank_t         = 0;
    bool rank_hypothesis = false;
    bool pass            = true;
};

/// PSD test of one Hermitian block: lambda_min >= -psd_tol * max(lambda_max, 1).
BlockCheck check_psd(const CMatrix& m, double psd_tol);

/// Eigenvalue checks of T(B) and every T_{g_i}(B) for a single-band system.
CertificateReport verify_fs_certificate(const HalfSpectrumTensor& b, const BandSystem& bands,
                                        double psd_tol = 1e-8, double rank_tol = 1e-6);

struct MultibandReport
{
    /// max |sum_j B_j - B|.
    double sum_defect = 0.0;
    bool sum_ok       = false;
    /// Part j checked against band j of every dimension.
    std::vector<CertificateReport> parts;
    Index rank_sum = 0;
    Index rank_t   = 0;
    /// Reported only, never enforced.
    bool rank_sum_matches = false;
    bool pass             = false;
};

/// Multi-band certificate. Every dimension must list the same number J of
/// bands as there are parts; part j is tested against the j-th band of
/// each dimension.
MultibandReport verify_multiband_certificate(const std::vector<HalfSpectrumTensor>& parts,
                                             const HalfSpectrumTensor& b,
                                             const BandSystem& bands, double psd_tol = 1e-8,
                                             double rank_tol = 1e-6);

} // namespace fsan

#endif // FSAN_VANDERMONDE_HPP
