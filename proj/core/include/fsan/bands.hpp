#ifndef FSAN_BANDS_HPP
#define FSAN_BANDS_HPP

#include <optional>
#include <vector>

#include <fsan/model.hpp>
#include <fsan/toeplitz.hpp>

namespace fsan
{

///
/// Closed arc of the unit torus [0, 1).
///
/// For f_L < f_H the band is [f_L, f_H]; for f_L > f_H it is the wrap-around
/// set [0, 1) \ (f_H, f_L). The unconstrained full circle is a separate
/// variant made with `full()`.
///
class FrequencyBand
{
public:
    FrequencyBand(double f_low, double f_high);
    static FrequencyBand full() noexcept { return FrequencyBand(); }

    bool is_full() const noexcept { return full_; }
    bool wraps() const noexcept { return !full_ && f_low_ > f_high_; }
    double f_low() const noexcept { return f_low_; }
    double f_high() const noexcept { return f_high_; }
    /// Arc length, 1 for the full circle.
    double width() const noexcept;

    friend bool operator==(const FrequencyBand&, const FrequencyBand&) = default;

private:
    FrequencyBand() = default;

    double f_low_  = 0.0;
    double f_high_ = 0.0;
    bool full_     = true;
};

bool band_contains(const FrequencyBand& band, double f);

/// Whether two bands share at least one point.
bool bands_intersect(const FrequencyBand& a, const FrequencyBand& b);

/// Lemma coefficients: r0 = -2 cos(pi (f_H - f_L)) s, r1 = exp(i pi (f_L + f_H)) s
/// with s = sign(f_H - f_L). Throws for the full circle.
GCoefficients g_coefficients(const FrequencyBand& band, Index dim = 0);

/// g(f) = r0 + 2 Re(r1 exp(-i 2 pi f)); positive inside the band, negative
/// outside, zero at both endpoints.
double g_eval(double f, const GCoefficients& g);

///
/// Frequency prior: per dimension either one band (single-band mode) or a
/// list of pairwise disjoint bands (multi-band mode).
///
class BandSystem
{
public:
    BandSystem() = default;
    /// Single-band mode.
    explicit BandSystem(std::vector<FrequencyBand> bands);
    /// Multi-band mode.
    explicit BandSystem(std::vector<std::vector<FrequencyBand>> bands);

    /// Full circle in every one of d dimensions.
    static BandSystem unconstrained(Index d);
    /// [0.3, 0.4] x [0.5, 0.6].
    static BandSystem accurate_prior();
    /// [0.2, 0.4] x [0.5, 0.7].
    static BandSystem rough_prior();

    Index d() const noexcept { return static_cast<Index>(bands_.size()); }
    bool single_band() const noexcept;
    /// Bands of dimension i.
    const std::vector<FrequencyBand>& bands(Index i) const
    {
        return bands_.at(static_cast<std::size_t>(i));
    }
    /// The band of dimension i in single-band mode.
    const FrequencyBand& band(Index i) const;
    const std::vector<std::vector<FrequencyBand>>& all() const noexcept { return bands_; }

    /// Every component lies in some band of its dimension.
    bool contains(const FrequencyTuple& f) const;

    /// One coefficient set per constrained dimension (full-circle dimensions
    /// are skipped). Single-band mode only.
    std::vector<GCoefficients> g_constraints() const;

    friend bool operator==(const BandSystem&, const BandSystem&) = default;

private:
    std::vector<std::vector<FrequencyBand>> bands_;
};

} // namespace fsan

#endif // FSAN_BANDS_HPP
