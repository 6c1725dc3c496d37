#ifndef FSAN_MUSIC_HPP
#define FSAN_MUSIC_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fsan/bands.hpp>
#include <fsan/model.hpp>

namespace fsan
{

struct SDPSolution;

struct MusicOptions
{
    /// Coarse grid step is 1 / (grid_factor * N_i) in dimension i.
    double grid_factor = 16.0;
    /// Local grid-shrinking rounds; each divides the step by `shrink`.
    int refine_rounds = 4;
    double shrink     = 10.0;
    /// Newton iterations on the subspace projection after the grid rounds.
    int polish_iterations = 20;
    /// Model order threshold relative to the largest eigenvalue.
    double order_rel_tol = 1e-6;
};

/// Number of eigenvalues (sorted descending) above rel_tol * lambda_1.
Index model_order(std::span<const double> eigenvalues_desc, double rel_tol = 1e-6);

///
/// Signal subspace of a Hermitian PSD matrix and the noise projection
/// J(f) = ||E_n^H a(f)||^2 = N_D - ||E_s^H a(f)||^2 evaluated through it.
///
class SignalSubspace
{
public:
    SignalSubspace(const CMatrix& t, const DimsSpec& dims, std::optional<Index> order,
                   double order_rel_tol);

    Index order() const noexcept { return basis_.cols(); }
    const DimsSpec& dims() const noexcept { return dims_; }
    /// Eigenvalues of the input, descending.
    const RVector& eigenvalues() const noexcept { return eigenvalues_; }
    const CMatrix& basis() const noexcept { return basis_; }

    double noise_projection(const FrequencyTuple& f) const;
    double pseudospectrum(const FrequencyTuple& f) const;

    /// Newton steps maximizing ||E_s^H a(f)||^2 started at `f`; returns the
    /// start point if a step fails to decrease the noise projection.
    FrequencyTuple polish(const FrequencyTuple& f, int iterations, double max_move) const;

private:
    DimsSpec dims_;
    RVector eigenvalues_;
    CMatrix basis_;
    std::vector<std::vector<Index>> coords_;
};

/// Band-restricted evaluation grid and P(f) = 1 / J(f) on it.
struct Pseudospectrum
{
    /// Grid points per dimension.
    std::vector<std::vector<double>> axes;
    /// Values in flat order, dimension 1 outermost.
    std::vector<double> values;
    Index signal_dim = 0;
};

Pseudospectrum music_pseudospectrum(const CMatrix& t, const DimsSpec& dims,
                                    const BandSystem& bands, std::optional<Index> order,
                                    const MusicOptions& options = {});

struct MusicResult
{
    std::vector<FrequencyTuple> frequencies;
    /// J(f) at each returned frequency.
    std::vector<double> noise_projection;
    Index signal_dim = 0;
    /// Fewer local maxima than the signal dimension.
    bool degraded = false;
};

///
/// MD-MUSIC on T: noise subspace from the eigenvectors beyond the top r,
/// coarse search over the band-restricted grid, the r strongest local
/// maxima (ties: larger P, then lexicographically smaller f), then
/// `refine_rounds` grid-shrinking passes and a Newton polish. Throws when the
/// signal subspace fills the whole space.
///
MusicResult music_frequencies(const CMatrix& t, const DimsSpec& dims, const BandSystem& bands,
                              std::optional<Index> order, const MusicOptions& options = {});

/// Same search on a precomputed subspace.
MusicResult music_frequencies(const SignalSubspace& subspace, const BandSystem& bands,
                              const MusicOptions& options = {});

struct GainEstimate
{
    std::vector<Complex> gains;
    /// 2-norm condition number of the atom matrix.
    double condition = 1.0;
    bool ill_conditioned = false;
    /// ||x - A sigma||.
    double residual = 0.0;
};

/// Least-squares gains sigma = argmin ||x - A sigma|| for atoms at `freqs`.
GainEstimate estimate_gains(const CVector& x, std::span<const FrequencyTuple> freqs,
                            const DimsSpec& dims);

enum class RetrievalSource
{
    FromT,
    FromX
};

struct RetrievalResult
{
    SpectralModel model;
    std::vector<double> refinement_residual;
    Index order = 0;
    RetrievalSource source = RetrievalSource::FromT;
    bool degraded = false;
    bool ill_conditioned = false;
};

/// MUSIC on T(B_hat) followed by least-squares gains on x_hat.
RetrievalResult retrieve(const SDPSolution& solution, const DimsSpec& dims,
                         const BandSystem& bands, const MusicOptions& options = {});

} // namespace fsan

#endif // FSAN_MUSIC_HPP
