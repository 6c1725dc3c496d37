#ifndef FSAN_SDP_HPP
#define FSAN_SDP_HPP

#include <optional>
#include <string>
#include <vector>

#include <fsan/bands.hpp>
#include <fsan/model.hpp>
#include <fsan/toeplitz.hpp>

namespace fsan
{

///
/// Frequency-selective atomic norm program
///
///     minimize   B(0) / 2 + t / 2        (= Tr T(B) / (2 N_D) + t / 2)
///     subject to x_j = y_j / w_j            for every observed j
///                [[T(B), x], [x^H, t]] >= 0
///                T_{g_i}(B) >= 0            for every constrained dimension i
///
/// Without bands the last family is dropped and the program is the plain
/// atomic norm baseline.
///
struct SDPInstance
{
    DimsSpec dims;
    std::optional<BandSystem> bands;
    Observation observation;
    /// One entry per band-constrained dimension.
    std::vector<GCoefficients> g;

    bool frequency_selective() const noexcept { return bands.has_value(); }
    /// Sizes of the PSD blocks: N_D + 1, then N_{D-1} per constrained dimension.
    std::vector<Index> block_sizes() const;
    /// Observed entries of x, y_j / w_j, keyed by flat index.
    std::vector<std::pair<Index, Complex>> fixed_entries() const;
};

SDPInstance assemble(const std::vector<Complex>& values, const ObservationMask& mask,
                     const DimsSpec& dims, std::optional<BandSystem> bands);

inline SDPInstance assemble(const Observation& y, const DimsSpec& dims,
                            std::optional<BandSystem> bands)
{
    return assemble(y.values, y.mask, dims, std::move(bands));
}

enum class SolverBackend
{
    /// Primal-dual path following; the default.
    InteriorPoint,
    /// First-order splitting.
    Admm
};

std::string to_string(SolverBackend backend);
SolverBackend solver_backend_from_string(const std::string& s);

struct SolverOptions
{
    SolverBackend backend = SolverBackend::InteriorPoint;
    /// ADMM termination: primal residual <= eps_abs + eps_rel * max(|A v + C|, |Z|)
    /// and dual residual <= eps_abs + eps_rel * max(rho |A^* U|, |c|).
    double eps_abs = 1e-9;
    double eps_rel = 1e-9;
    /// ADMM iteration cap.
    int max_iter   = 100000;
    /// Interior-point iteration cap.
    int ipm_max_iter = 100;
    /// Interior-point termination: relative primal and dual infeasibility
    /// and relative duality gap all below this value. Rounding in the
    /// products with S^-1 puts a floor near 1e-8 on degenerate instances,
    /// so eps_abs / eps_rel (which govern ADMM) are not used here.
    double ipm_tol = 1e-7;
    /// Initial penalty.
    double rho = 1.0;
    /// Residual balancing: scale rho by 2 when the normalized residual ratio
    /// exceeds `adapt_ratio`, checked every `adapt_interval` iterations.
    bool adaptive_rho   = true;
    double adapt_ratio  = 10.0;
    int adapt_interval  = 25;
    /// Over-relaxation factor in (0, 2).
    double relaxation = 1.6;

    void validate() const;
};

enum class SolveStatus
{
    Solved,
    MaxIter,
    InfeasibleLike
};

std::string to_string(SolveStatus status);
SolveStatus solve_status_from_string(const std::string& s);

struct SolverDiagnostics
{
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual   = 0.0;
    /// Relative duality gap (interior point only).
    double gap = 0.0;
    /// Final penalty (ADMM) or complementarity measure (interior point).
    double rho             = 0.0;
    SolveStatus status     = SolveStatus::MaxIter;
    double seconds         = 0.0;
    /// numerical_rank(T(B_hat)) and whether it is below min_i N_i.
    Index rank_t          = 0;
    bool rank_condition   = false;
};

struct SDPSolution
{
    CVector x_hat;
    HalfSpectrumTensor b_hat;
    double t_hat     = 0.0;
    double objective = 0.0;
    SolverDiagnostics diagnostics;
};

/// Seam for alternative conic solvers behind the `solve` contract.
class SdpBackend
{
public:
    virtual ~SdpBackend() = default;
    virtual SDPSolution solve(const SDPInstance& instance, const SolverOptions& options) const = 0;
};

///
/// ADMM over one matrix copy per PSD block, linked to the structured
/// variables (x, B, t) by the Toeplitz maps. Each iteration solves the
/// least-squares step in (x, B, t) with a factorization cached at setup,
/// projects every copy onto the PSD cone by eigenvalue clipping and updates
/// the scaled duals. Data are normalized to unit RMS internally.
///
class AdmmBackend final : public SdpBackend
{
public:
    SDPSolution solve(const SDPInstance& instance, const SolverOptions& options) const override;
};

///
/// Infeasible primal-dual path following on the same block structure, with
/// HKM search directions and Mehrotra predictor-corrector steps. The Schur
/// complement is assembled from the Toeplitz classes of every block (all
/// entries of a class share one coefficient), which keeps each iteration at
/// O(n^4) for an n x n block.
///
class InteriorPointBackend final : public SdpBackend
{
public:
    SDPSolution solve(const SDPInstance& instance, const SolverOptions& options) const override;
};

/// Dispatches on `options.backend`.
SDPSolution solve(const SDPInstance& instance, const SolverOptions& options = {});

/// Explicit feasible point built from an atomic decomposition.
struct FeasiblePoint
{
    /// sum_l |sigma_l|.
    double value = 0.0;
    CVector x;
    HalfSpectrumTensor b;
    double t = 0.0;
};

/// Upper bound on the program value for x = sum sigma_l a(f_l): B = sum
/// |sigma_l| B_{f_l}, t = sum |sigma_l|. Throws if a frequency leaves the bands.
FeasiblePoint feasible_value_from_model(const SpectralModel& model, const DimsSpec& dims,
                                        const std::optional<BandSystem>& bands);

/// [[Re H, -Im H], [Im H, Re H]].
RMatrix real_embedding(const CMatrix& h, double tol = 1e-12);

/// Inverse of real_embedding (averages the redundant blocks).
CMatrix real_unembedding(const RMatrix& r);

} // namespace fsan

#endif // FSAN_SDP_HPP
