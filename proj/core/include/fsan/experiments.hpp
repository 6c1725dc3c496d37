#ifndef FSAN_EXPERIMENTS_HPP
#define FSAN_EXPERIMENTS_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <fsan/bands.hpp>
#include <fsan/model.hpp>
#include <fsan/music.hpp>
#include <fsan/sdp.hpp>

namespace fsan
{

/// FS-AN solves with the configured bands, AN drops the band constraints.
enum class TrialMode
{
    FsAn,
    An
};

std::string to_string(TrialMode mode);
TrialMode trial_mode_from_string(const std::string& s);

/// Half-open sampling interval [lo, hi) for one frequency component.
struct SamplingInterval
{
    double lo = 0.0;
    double hi = 1.0;
};

///
/// One Monte-Carlo trial: random (or fixed) frequencies, unit-magnitude
/// random-phase gains and a random mask of `ns` samples, all drawn from
/// streams keyed by `seed`.
///
struct TrialConfig
{
    DimsSpec dims{8, 8};
    /// Prior used in FS-AN mode; nullopt means no prior.
    std::optional<BandSystem> bands = BandSystem::accurate_prior();
    Index r  = 3;
    Index ns = 12;
    /// Per-dimension sampling region for random frequencies.
    std::vector<SamplingInterval> region{{0.3, 0.4}, {0.5, 0.6}};
    /// Fixed frequency tuples; when set they replace the random draw and r
    /// must equal their count.
    std::optional<std::vector<FrequencyTuple>> frequencies;
    std::uint64_t seed = 1;
    /// success <=> NMSE < threshold.
    double threshold = 1e-5;
    /// Random draws reject a tuple if any component lies closer than this
    /// (torus distance) to the same component of an earlier tuple.
    double min_separation = 1e-3;
    /// Frequency localization bound used for `frequencies_ok`.
    double frequency_tol = 1e-3;
    SolverOptions solver;
    MusicOptions music;

    /// Throws std::invalid_argument on violated invariants.
    void validate() const;
};

/// Dims (8, 8), r = 3, the two fixed frequency rows
/// f1 = [0.35, 0.31, 0.37], f2 = [0.51, 0.59, 0.57], Ns = 12, accurate prior.
TrialConfig fig1_config(std::uint64_t seed);

/// Stream keys of the per-trial generators.
inline constexpr std::uint64_t kFrequencyStream = 0;
inline constexpr std::uint64_t kPhaseStream     = 1;
inline constexpr std::uint64_t kMaskStream      = 2;

/// Ground truth and observation of a trial, independent of the mode.
struct TrialData
{
    SpectralModel truth;
    CVector x_star;
    Observation observation;
};

TrialData draw_trial(const TrialConfig& config);

struct TrialResult
{
    TrialMode mode = TrialMode::FsAn;
    std::uint64_t seed = 0;
    double nmse  = 0.0;
    bool success = false;
    /// Per true component, the largest component-wise torus error of its
    /// matched estimate (+inf when unmatched).
    std::vector<double> frequency_errors;
    /// Every true tuple matched within `frequency_tol`.
    bool frequencies_ok = false;
    double seconds = 0.0;
    double objective = 0.0;
    SolverDiagnostics diagnostics;
    /// The solve threw or reported infeasible-like.
    bool solver_failed = false;
    /// Retrieval threw; frequency errors are then +inf.
    bool retrieval_failed = false;
    std::string error;
    SpectralModel truth;
    SpectralModel estimate;
};

/// Runs one trial; solver and retrieval errors are recorded, not thrown.
TrialResult run_trial(const TrialConfig& config, TrialMode mode);

/// One curve of a phase-transition sweep.
struct PhaseArm
{
    std::string name;
    TrialMode mode = TrialMode::FsAn;
    std::optional<BandSystem> bands;
};

/// The accurate, rough and no-prior arms.
std::vector<PhaseArm> default_arms();

struct PhaseGrid
{
    std::vector<Index> ns_values;
    std::vector<Index> r_values;
    int trials = 10;
    std::uint64_t base_seed = 1;
    /// Dims, region, thresholds and solver settings shared by every trial.
    TrialConfig base;
    std::vector<PhaseArm> arms = default_arms();

    /// Desk-scale default: Ns in {4, 8, ..., 40}, r in {1, ..., 6}.
    static PhaseGrid desk_scale();
    void validate() const;
};

/// Seed of trial `trial` in cell (r, ns); identical for every arm, so the
/// arms see the same data. Depends only on the cell values, not on grid
/// position, so any cell can be recomputed in isolation.
std::uint64_t cell_seed(std::uint64_t base, Index r, Index ns, int trial);

/// Success rates of one arm; rows follow r_values, columns ns_values.
struct RateTable
{
    std::vector<Index> ns_values;
    std::vector<Index> r_values;
    RMatrix rates;

    double mean() const;
    void write_csv(std::ostream& os) const;
    static RateTable parse_csv(std::istream& is);
    friend bool operator==(const RateTable& a, const RateTable& b)
    {
        return a.ns_values == b.ns_values && a.r_values == b.r_values && a.rates == b.rates;
    }
};

struct PhaseResult
{
    PhaseGrid grid;
    /// One table per arm.
    std::vector<RateTable> tables;
    /// Trials whose solve threw or was infeasible-like.
    int solver_failures = 0;
    double seconds = 0.0;
};

/// Called after each finished trial with (done, total); may run on any
/// worker thread but never concurrently with itself.
using ProgressFn = std::function<void(std::size_t, std::size_t)>;

/// Runs every (arm, cell, trial) on a pool of `jobs` threads (0: hardware
/// concurrency). Results do not depend on `jobs`.
PhaseResult phase_transition(const PhaseGrid& grid, unsigned jobs = 1,
                             const ProgressFn& progress = {});

/// Writes `rates_<arm>.csv` and a gnuplot heatmap stub `rates_<arm>.gp`
/// per arm into `dir` (created if missing). Returns the written paths.
std::vector<std::string> emit_plotdata(const PhaseResult& result, const std::string& dir);

/// CSV with columns f_1..f_d, P over a pseudospectrum grid.
void write_pseudospectrum_csv(const Pseudospectrum& spectrum, std::ostream& os);

} // namespace fsan

#endif // FSAN_EXPERIMENTS_HPP
