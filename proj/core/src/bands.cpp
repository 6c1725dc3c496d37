#include <fsan/bands.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

namespace fsan
{

FrequencyBand::FrequencyBand(double f_low, double f_high)
    : f_low_(f_low), f_high_(f_high), full_(false)
{
    if (!(f_low >= 0.0 && f_low < 1.0 && f_high >= 0.0 && f_high < 1.0))
    {
        throw std::invalid_argument("FrequencyBand: endpoints must lie in [0, 1)");
    }
    if (f_low == f_high)
    {
        throw std::invalid_argument("FrequencyBand: degenerate band with f_L == f_H; widen it "
                                    "explicitly for a point prior");
    }
}

double FrequencyBand::width() const noexcept
{
    if (full_)
    {
        return 1.0;
    }
    return wraps() ? 1.0 - (f_low_ - f_high_) : f_high_ - f_low_;
}

bool band_contains(const FrequencyBand& band, double f)
{
    if (band.is_full())
    {
        return true;
    }
    const double w = wrap_unit(f);
    if (band.wraps())
    {
        return w >= band.f_low() || w <= band.f_high();
    }
    return w >= band.f_low() && w <= band.f_high();
}

bool bands_intersect(const FrequencyBand& a, const FrequencyBand& b)
{
    if (a.is_full() || b.is_full())
    {
        return true;
    }
    // two closed arcs meet iff one of them holds the other's start point
    return band_contains(a, b.f_low()) || band_contains(b, a.f_low());
}

GCoefficients g_coefficients(const FrequencyBand& band, Index dim)
{
    if (band.is_full())
    {
        throw std::invalid_argument("g_coefficients: the full circle has no band polynomial");
    }
    const double delta = band.f_high() - band.f_low();
    const double s     = delta > 0.0 ? 1.0 : -1.0;
    GCoefficients g;
    g.r0  = -2.0 * std::cos(kPi * delta) * s;
    g.r1  = std::polar(1.0, kPi * (band.f_low() + band.f_high())) * s;
    g.dim = dim;
    return g;
}

double g_eval(double f, const GCoefficients& g)
{
    return g.r0 + 2.0 * (g.r1 * std::polar(1.0, -kTwoPi * f)).real();
}

BandSystem::BandSystem(std::vector<FrequencyBand> bands)
{
    bands_.reserve(bands.size());
    for (auto& b : bands)
    {
        bands_.push_back({b});
    }
}

BandSystem::BandSystem(std::vector<std::vector<FrequencyBand>> bands) : bands_(std::move(bands))
{
    for (std::size_t i = 0; i < bands_.size(); ++i)
    {
        const auto& list = bands_[i];
        if (list.empty())
        {
            throw std::invalid_argument("BandSystem: dimension " + std::to_string(i) +
                                        " has no band");
        }
        for (std::size_t j = 0; j < list.size(); ++j)
        {
            for (std::size_t k = 0; k < j; ++k)
            {
                if (bands_intersect(list[j], list[k]))
                {
                    throw std::invalid_argument("BandSystem: bands " + std::to_string(k) +
                                                " and " + std::to_string(j) + " of dimension " +
                                                std::to_string(i) + " overlap");
                }
            }
        }
    }
}

BandSystem BandSystem::unconstrained(Index d)
{
    return BandSystem(std::vector<FrequencyBand>(static_cast<std::size_t>(d),
                                                 FrequencyBand::full()));
}

BandSystem BandSystem::accurate_prior()
{
    return BandSystem(std::vector<FrequencyBand>{FrequencyBand(0.3, 0.4), FrequencyBand(0.5, 0.6)});
}

BandSystem BandSystem::rough_prior()
{
    return BandSystem(std::vector<FrequencyBand>{FrequencyBand(0.2, 0.4), FrequencyBand(0.5, 0.7)});
}

bool BandSystem::single_band() const noexcept
{
    for (const auto& list : bands_)
    {
        if (list.size() != 1)
        {
            return false;
        }
    }
    return true;
}

const FrequencyBand& BandSystem::band(Index i) const
{
    const auto& list = bands(i);
    if (list.size() != 1)
    {
        throw std::logic_error("BandSystem::band: dimension has several bands");
    }
    return list.front();
}

bool BandSystem::contains(const FrequencyTuple& f) const
{
    if (f.d() != d())
    {
        throw std::invalid_argument("BandSystem::contains: dimension mismatch");
    }
    for (Index i = 0; i < d(); ++i)
    {
        bool inside = false;
        for (const auto& b : bands(i))
        {
            inside = inside || band_contains(b, f[i]);
        }
        if (!inside)
        {
            return false;
        }
    }
    return true;
}

std::vector<GCoefficients> BandSystem::g_constraints() const
{
    if (!single_band())
    {
        throw std::logic_error("BandSystem::g_constraints: multi-band systems have one "
                               "polynomial per band");
    }
    std::vector<GCoefficients> out;
    for (Index i = 0; i < d(); ++i)
    {
        if (!band(i).is_full())
        {
            out.push_back(g_coefficients(band(i), i));
        }
    }
    return out;
}

} // namespace fsan
