#include <fsan/model.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include <fsan/rng.hpp>

namespace fsan
{

DimsSpec::DimsSpec(std::vector<Index> sizes) : sizes_(std::move(sizes))
{
    if (sizes_.empty())
    {
        throw std::invalid_argument("DimsSpec: at least one dimension is required");
    }
    total_         = 1;
    total_reduced_ = 1;
    min_size_      = std::numeric_limits<Index>::max();
    for (Index n : sizes_)
    {
        if (n < 2)
        {
            throw std::invalid_argument("DimsSpec: every size must be at least 2, got " +
                                        std::to_string(n));
        }
        total_ *= n;
        total_reduced_ *= n - 1;
        min_size_ = std::min(min_size_, n);
    }
}

Index DimsSpec::flatten(std::span<const Index> multi) const
{
    if (static_cast<Index>(multi.size()) != d())
    {
        throw std::invalid_argument("DimsSpec::flatten: dimension mismatch");
    }
    Index flat = 0;
    for (std::size_t i = 0; i < sizes_.size(); ++i)
    {
        if (multi[i] < 0 || multi[i] >= sizes_[i])
        {
            throw std::out_of_range("DimsSpec::flatten: index out of range");
        }
        flat = flat * sizes_[i] + multi[i];
    }
    return flat;
}

std::vector<Index> DimsSpec::unflatten(Index flat) const
{
    if (flat < 0 || flat >= total_)
    {
        throw std::out_of_range("DimsSpec::unflatten: index out of range");
    }
    std::vector<Index> multi(sizes_.size());
    for (std::size_t i = sizes_.size(); i-- > 0;)
    {
        multi[i] = flat % sizes_[i];
        flat /= sizes_[i];
    }
    return multi;
}

double wrap_unit(double f) noexcept
{
    double w = f - std::floor(f);
    // floor can leave exactly 1.0 for tiny negative inputs
    return w >= 1.0 ? 0.0 : w;
}

double torus_distance(double a, double b) noexcept
{
    const double delta = std::abs(wrap_unit(a) - wrap_unit(b));
    return std::min(delta, 1.0 - delta);
}

FrequencyTuple::FrequencyTuple(std::vector<double> components) : f_(std::move(components))
{
    for (double& c : f_)
    {
        if (!std::isfinite(c))
        {
            throw std::invalid_argument("FrequencyTuple: non-finite component");
        }
        c = wrap_unit(c);
    }
}

double FrequencyTuple::distance(const FrequencyTuple& other) const
{
    if (other.d() != d())
    {
        throw std::invalid_argument("FrequencyTuple::distance: dimension mismatch");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < f_.size(); ++i)
    {
        total += torus_distance(f_[i], other.f_[i]);
    }
    return total;
}

SpectralModel::SpectralModel(std::vector<SpectralComponent> entries) : entries_(std::move(entries))
{
    for (std::size_t l = 0; l < entries_.size(); ++l)
    {
        const auto& e = entries_[l];
        if (e.frequency.d() != entries_.front().frequency.d())
        {
            throw std::invalid_argument("SpectralModel: tuples of different dimension");
        }
        if (e.gain == Complex(0.0, 0.0))
        {
            throw std::invalid_argument("SpectralModel: zero gain in entry " + std::to_string(l));
        }
        for (std::size_t m = 0; m < l; ++m)
        {
            if (entries_[m].frequency == e.frequency)
            {
                throw std::invalid_argument("SpectralModel: duplicate frequency tuple");
            }
        }
    }
}

std::vector<FrequencyTuple> SpectralModel::frequencies() const
{
    std::vector<FrequencyTuple> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_)
    {
        out.push_back(e.frequency);
    }
    return out;
}

std::vector<Complex> SpectralModel::gains() const
{
    std::vector<Complex> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_)
    {
        out.push_back(e.gain);
    }
    return out;
}

ObservationMask::ObservationMask(DimsSpec dims, std::vector<Index> indices,
                                 std::vector<Complex> weights)
    : dims_(std::move(dims))
{
    if (indices.size() != weights.size())
    {
        throw std::invalid_argument("ObservationMask: index and weight counts differ");
    }
    std::vector<std::size_t> order(indices.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return indices[a] < indices[b]; });
    indices_.reserve(indices.size());
    weights_.reserve(indices.size());
    for (std::size_t k : order)
    {
        const Index j = indices[k];
        if (j < 0 || j >= dims_.total())
        {
            throw std::out_of_range("ObservationMask: index " + std::to_string(j) +
                                    " outside the grid");
        }
        if (!indices_.empty() && indices_.back() == j)
        {
            throw std::invalid_argument("ObservationMask: duplicate index " + std::to_string(j));
        }
        if (weights[k] == Complex(0.0, 0.0))
        {
            throw std::invalid_argument("ObservationMask: zero weight at index " +
                                        std::to_string(j));
        }
        indices_.push_back(j);
        weights_.push_back(weights[k]);
    }
}

ObservationMask::ObservationMask(DimsSpec dims, std::vector<Index> indices)
    : ObservationMask(dims, indices, std::vector<Complex>(indices.size(), Complex(1.0, 0.0)))
{
}

ObservationMask ObservationMask::full(const DimsSpec& dims)
{
    std::vector<Index> all(static_cast<std::size_t>(dims.total()));
    std::iota(all.begin(), all.end(), Index{0});
    return ObservationMask(dims, std::move(all));
}

namespace
{

CVector kron_steering(const FrequencyTuple& f, const DimsSpec& dims, Index shrink)
{
    if (f.d() != dims.d())
    {
        throw std::invalid_argument("steering_vector: frequency has " + std::to_string(f.d()) +
                                    " components but the grid has " +
                                    std::to_string(dims.d()) + " dimensions");
    }
    CVector a = CVector::Ones(1);
    for (Index i = 0; i < dims.d(); ++i)
    {
        const Index n = dims.size(i) - shrink;
        CVector s(n);
        for (Index k = 0; k < n; ++k)
        {
            // reduce the phase first so large k keeps full precision
            const double phase = kTwoPi * wrap_unit(static_cast<double>(k) * f[i]);
            s(k) = Complex(std::cos(phase), std::sin(phase));
        }
        CVector next(a.size() * n);
        for (Index p = 0; p < a.size(); ++p)
        {
            next.segment(p * n, n) = a(p) * s;
        }
        a = std::move(next);
    }
    return a;
}

} // namespace

CVector steering_vector(const FrequencyTuple& f, const DimsSpec& dims)
{
    return kron_steering(f, dims, 0);
}

CVector reduced_steering_vector(const FrequencyTuple& f, const DimsSpec& dims)
{
    return kron_steering(f, dims, 1);
}

CVector synthesize(std::span<const SpectralComponent> components, const DimsSpec& dims)
{
    CVector x = CVector::Zero(dims.total());
    for (const auto& c : components)
    {
        x += c.gain * steering_vector(c.frequency, dims);
    }
    return x;
}

CVector synthesize(const SpectralModel& model, const DimsSpec& dims)
{
    return synthesize(std::span<const SpectralComponent>(model.entries()), dims);
}

Observation apply_mask(const CVector& x, const ObservationMask& mask)
{
    if (x.size() != mask.dims().total())
    {
        throw std::invalid_argument("apply_mask: vector length does not match the grid");
    }
    Observation y{mask, {}};
    y.values.reserve(mask.indices().size());
    for (std::size_t k = 0; k < mask.indices().size(); ++k)
    {
        const Index j = mask.indices()[k];
        if (j < 0 || j >= x.size())
        {
            throw std::out_of_range("apply_mask: index out of range");
        }
        y.values.push_back(mask.weights()[k] * x(j));
    }
    return y;
}

ObservationMask random_mask(const DimsSpec& dims, Index count, std::uint64_t seed)
{
    const Index n = dims.total();
    if (count < 0 || count > n)
    {
        throw std::invalid_argument("random_mask: sample count " + std::to_string(count) +
                                    " outside [0, " + std::to_string(n) + "]");
    }
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    CounterRng rng(seed);
    for (Index i = 0; i < count; ++i)
    {
        const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    perm.resize(static_cast<std::size_t>(count));
    return ObservationMask(dims, std::move(perm));
}

double nmse(const CVector& x_hat, const CVector& x_star)
{
    if (x_hat.size() != x_star.size())
    {
        throw std::invalid_argument("nmse: length mismatch");
    }
    const double ref = x_star.norm();
    if (ref == 0.0)
    {
        throw std::domain_error("nmse: reference vector is zero");
    }
    return (x_hat - x_star).norm() / ref;
}

namespace
{

struct MatchSearch
{
    std::span<const FrequencyTuple> ref;
    std::span<const FrequencyTuple> est;
    std::vector<std::vector<double>> cost;
    std::vector<Index> current;
    std::vector<Index> best;
    std::vector<bool> used;
    double best_total = std::numeric_limits<double>::infinity();
    Index skips_allowed = 0;

    void run(std::size_t l, double total, Index skips)
    {
        if (total >= best_total)
        {
            return;
        }
        if (l == ref.size())
        {
            best_total = total;
            best       = current;
            return;
        }
        for (std::size_t j = 0; j < est.size(); ++j)
        {
            if (used[j])
            {
                continue;
            }
            used[j]    = true;
            current[l] = static_cast<Index>(j);
            run(l + 1, total + cost[l][j], skips);
            used[j] = false;
        }
        if (skips < skips_allowed)
        {
            current[l] = -1;
            run(l + 1, total, skips + 1);
        }
    }
};

} // namespace

FrequencyMatch match_frequencies(std::span<const FrequencyTuple> reference,
                                 std::span<const FrequencyTuple> estimate)
{
    MatchSearch search{reference, estimate, {}, {}, {}, {}};
    search.cost.assign(reference.size(), std::vector<double>(estimate.size(), 0.0));
    for (std::size_t l = 0; l < reference.size(); ++l)
    {
        for (std::size_t j = 0; j < estimate.size(); ++j)
        {
            search.cost[l][j] = reference[l].distance(estimate[j]);
        }
    }
    search.current.assign(reference.size(), -1);
    search.best.assign(reference.size(), -1);
    search.used.assign(estimate.size(), false);
    search.skips_allowed = std::max<Index>(
        0, static_cast<Index>(reference.size()) - static_cast<Index>(estimate.size()));
    search.run(0, 0.0, 0);

    FrequencyMatch out;
    out.assignment     = search.best;
    out.total_distance = reference.empty() ? 0.0 : search.best_total;
    out.max_component_error.assign(reference.size(), std::numeric_limits<double>::infinity());
    for (std::size_t l = 0; l < reference.size(); ++l)
    {
        const Index j = out.assignment[l];
        if (j < 0)
        {
            continue;
        }
        double worst = 0.0;
        for (Index i = 0; i < reference[l].d(); ++i)
        {
            worst = std::max(worst, torus_distance(reference[l][i],
                                                   estimate[static_cast<std::size_t>(j)][i]));
        }
        out.max_component_error[l] = worst;
    }
    return out;
}

} // namespace fsan
