#include <fsan/music.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <fsan/sdp.hpp>

namespace fsan
{

Index model_order(std::span<const double> eigenvalues_desc, double rel_tol)
{
    if (eigenvalues_desc.empty() || !(eigenvalues_desc.front() > 0.0))
    {
        return 0;
    }
    const double cut = rel_tol * eigenvalues_desc.front();
    Index count = 0;
    for (double lambda : eigenvalues_desc)
    {
        if (lambda > cut)
        {
            ++count;
        }
    }
    return count;
}

SignalSubspace::SignalSubspace(const CMatrix& t, const DimsSpec& dims, std::optional<Index> order,
                               double order_rel_tol)
    : dims_(dims)
{
    if (t.rows() != dims.total() || t.cols() != dims.total())
    {
        throw std::invalid_argument("SignalSubspace: matrix size does not match the grid");
    }
    const Index n = dims.total();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(t));
    if (es.info() != Eigen::Success)
    {
        throw std::runtime_error("SignalSubspace: eigensolver did not converge");
    }
    eigenvalues_ = es.eigenvalues().reverse();
    Index r = order.value_or(-1);
    if (!order)
    {
        r = model_order(std::span<const double>(eigenvalues_.data(),
                                                static_cast<std::size_t>(n)),
                        order_rel_tol);
    }
    if (r < 0 || r > n)
    {
        throw std::invalid_argument("SignalSubspace: order outside [0, N_D]");
    }
    basis_ = es.eigenvectors().rightCols(r).rowwise().reverse();

    coords_.assign(static_cast<std::size_t>(dims.d()), std::vector<Index>(static_cast<std::size_t>(n)));
    for (Index p = 0; p < n; ++p)
    {
        const auto multi = dims.unflatten(p);
        for (Index i = 0; i < dims.d(); ++i)
        {
            coords_[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)] =
                multi[static_cast<std::size_t>(i)];
        }
    }
}

double SignalSubspace::noise_projection(const FrequencyTuple& f) const
{
    const CVector a = steering_vector(f, dims_);
    const double captured = (basis_.adjoint() * a).squaredNorm();
    return std::max(0.0, static_cast<double>(dims_.total()) - captured);
}

double SignalSubspace::pseudospectrum(const FrequencyTuple& f) const
{
    const double j = noise_projection(f);
    return 1.0 / std::max(j, std::numeric_limits<double>::min());
}

FrequencyTuple SignalSubspace::polish(const FrequencyTuple& start, int iterations,
                                      double max_move) const
{
    const Index d = dims_.d();
    const Index n = dims_.total();
    const Index r = order();
    if (r == 0 || iterations <= 0)
    {
        return start;
    }
    std::vector<double> f = start.components();
    double j_current      = noise_projection(start);
    const double noise_floor = 64.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(n);

    for (int it = 0; it < iterations; ++it)
    {
        const CVector a = steering_vector(FrequencyTuple(f), dims_);
        const CVector w = basis_.adjoint() * a;
        std::vector<CVector> wi(static_cast<std::size_t>(d));
        for (Index i = 0; i < d; ++i)
        {
            CVector da(n);
            for (Index p = 0; p < n; ++p)
            {
                da(p) = Complex(0.0, kTwoPi * static_cast<double>(coords_[static_cast<std::size_t>(i)]
                                                                          [static_cast<std::size_t>(p)])) *
                        a(p);
            }
            wi[static_cast<std::size_t>(i)] = basis_.adjoint() * da;
        }
        RVector grad(d);
        RMatrix hess(d, d);
        for (Index i = 0; i < d; ++i)
        {
            grad(i) = 2.0 * w.dot(wi[static_cast<std::size_t>(i)]).real();
            for (Index k = i; k < d; ++k)
            {
                CVector dda(n);
                for (Index p = 0; p < n; ++p)
                {
                    const double ni = static_cast<double>(coords_[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)]);
                    const double nk = static_cast<double>(coords_[static_cast<std::size_t>(k)][static_cast<std::size_t>(p)]);
                    dda(p) = -kTwoPi * kTwoPi * ni * nk * a(p);
                }
                const CVector wik = basis_.adjoint() * dda;
                hess(i, k) = 2.0 * (wi[static_cast<std::size_t>(i)].dot(wi[static_cast<std::size_t>(k)]) +
                                    w.dot(wik))
                                       .real();
                hess(k, i) = hess(i, k);
            }
        }
        // maximizing: the Hessian must be negative definite
        Eigen::LLT<RMatrix> llt(-hess);
        if (llt.info() != Eigen::Success)
        {
            break;
        }
        const RVector step = llt.solve(grad);
        std::vector<double> trial(f);
        bool ok = true;
        for (Index i = 0; i < d; ++i)
        {
            trial[static_cast<std::size_t>(i)] = wrap_unit(trial[static_cast<std::size_t>(i)] + step(i));
            if (torus_distance(trial[static_cast<std::size_t>(i)], start[i]) > max_move)
            {
                ok = false;
            }
        }
        if (!ok)
        {
            break;
        }
        const FrequencyTuple candidate(trial);
        const double j_trial = noise_projection(candidate);
        if (j_trial > j_current + noise_floor)
        {
            break;
        }
        f         = candidate.components();
        j_current = std::min(j_current, j_trial);
        if (step.cwiseAbs().maxCoeff() < 1e-15)
        {
            break;
        }
    }
    return FrequencyTuple(f);
}

namespace
{

/// One dimension of the band-restricted grid. Consecutive points of a
/// segment are neighbors; `cyclic` joins the ends of the only segment.
struct Axis
{
    std::vector<double> points;
    std::vector<int> segment;
    bool cyclic = false;
    double step = 0.0;

    Index size() const { return static_cast<Index>(points.size()); }

    /// Neighbor of point j in direction `dir` (-1 or +1), or -1.
    Index neighbor(Index j, int dir) const
    {
        const Index n = size();
        Index k       = j + dir;
        if (cyclic)
        {
            return (k + n) % n;
        }
        if (k < 0 || k >= n || segment[static_cast<std::size_t>(k)] != segment[static_cast<std::size_t>(j)])
        {
            return -1;
        }
        return k;
    }
};

Axis make_axis(const std::vector<FrequencyBand>& bands, Index n, double grid_factor)
{
    Axis axis;
    axis.step = 1.0 / (grid_factor * static_cast<double>(n));
    int seg   = 0;
    for (const auto& band : bands)
    {
        if (band.is_full())
        {
            const auto count = static_cast<Index>(std::llround(grid_factor * static_cast<double>(n)));
            for (Index k = 0; k < count; ++k)
            {
                axis.points.push_back(static_cast<double>(k) * axis.step);
                axis.segment.push_back(seg);
            }
            axis.cyclic = bands.size() == 1;
        }
        else
        {
            const double width = band.width();
            const auto count   = static_cast<Index>(std::floor(width / axis.step + 1e-9));
            for (Index k = 0; k <= count; ++k)
            {
                axis.points.push_back(wrap_unit(band.f_low() + static_cast<double>(k) * axis.step));
                axis.segment.push_back(seg);
            }
            if (static_cast<double>(count) * axis.step < width - 1e-12)
            {
                axis.points.push_back(band.f_high());
                axis.segment.push_back(seg);
            }
        }
        ++seg;
    }
    return axis;
}

bool in_bands(const std::vector<FrequencyBand>& bands, double f)
{
    return std::any_of(bands.begin(), bands.end(),
                       [f](const FrequencyBand& b) { return band_contains(b, f); });
}

/// J on the full product grid, flat order dimension 1 outermost.
std::vector<double> grid_noise_projection(const SignalSubspace& subspace,
                                          const std::vector<Axis>& axes)
{
    const DimsSpec& dims = subspace.dims();
    const Index d        = dims.d();
    const Index n        = dims.total();
    // per-axis steering vectors s_i(f) for every grid point
    std::vector<std::vector<CVector>> steer(static_cast<std::size_t>(d));
    Index grid_total = 1;
    for (Index i = 0; i < d; ++i)
    {
        const Axis& ax = axes[static_cast<std::size_t>(i)];
        grid_total *= ax.size();
        for (double f : ax.points)
        {
            CVector s(dims.size(i));
            for (Index k = 0; k < dims.size(i); ++k)
            {
                s(k) = std::polar(1.0, kTwoPi * wrap_unit(static_cast<double>(k) * f));
            }
            steer[static_cast<std::size_t>(i)].push_back(std::move(s));
        }
    }
    const CMatrix basis_h = subspace.basis().adjoint();
    std::vector<double> out(static_cast<std::size_t>(grid_total));
    std::vector<Index> idx(static_cast<std::size_t>(d), 0);
    CVector a(n);
    for (Index g = 0; g < grid_total; ++g)
    {
        // a = s_1 (x) ... (x) s_d
        a(0)      = Complex(1.0, 0.0);
        Index len = 1;
        for (Index i = 0; i < d; ++i)
        {
            const CVector& s = steer[static_cast<std::size_t>(i)][static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
            const Index m    = s.size();
            for (Index p = len; p-- > 0;)
            {
                const Complex v = a(p);
                for (Index k = m; k-- > 0;)
                {
                    a(p * m + k) = v * s(k);
                }
            }
            len *= m;
        }
        const double captured = (basis_h * a).squaredNorm();
        out[static_cast<std::size_t>(g)] = static_cast<double>(n) - captured;
        for (Index i = d; i-- > 0;)
        {
            auto& k = idx[static_cast<std::size_t>(i)];
            if (++k < axes[static_cast<std::size_t>(i)].size())
            {
                break;
            }
            k = 0;
        }
    }
    return out;
}

std::vector<Axis> make_axes(const DimsSpec& dims, const BandSystem& bands, double grid_factor)
{
    if (bands.d() != dims.d())
    {
        throw std::invalid_argument("music: band system has " + std::to_string(bands.d()) +
                                    " dimensions, grid has " + std::to_string(dims.d()));
    }
    std::vector<Axis> axes;
    for (Index i = 0; i < dims.d(); ++i)
    {
        axes.push_back(make_axis(bands.bands(i), dims.size(i), grid_factor));
    }
    return axes;
}

std::vector<Index> unflatten_grid(Index g, const std::vector<Axis>& axes)
{
    std::vector<Index> idx(axes.size());
    for (std::size_t i = axes.size(); i-- > 0;)
    {
        idx[i] = g % axes[i].size();
        g /= axes[i].size();
    }
    return idx;
}

Index flatten_grid(const std::vector<Index>& idx, const std::vector<Axis>& axes)
{
    Index g = 0;
    for (std::size_t i = 0; i < axes.size(); ++i)
    {
        g = g * axes[i].size() + idx[i];
    }
    return g;
}

bool is_local_min(Index g, const std::vector<double>& j, const std::vector<Axis>& axes)
{
    const auto center = unflatten_grid(g, axes);
    const std::size_t d = axes.size();
    Index combos = 1;
    for (std::size_t i = 0; i < d; ++i)
    {
        combos *= 3;
    }
    std::vector<Index> nb(d);
    for (Index c = 0; c < combos; ++c)
    {
        Index code   = c;
        bool is_self = true;
        bool exists  = true;
        for (std::size_t i = 0; i < d; ++i)
        {
            const int dir = static_cast<int>(code % 3) - 1;
            code /= 3;
            if (dir == 0)
            {
                nb[i] = center[i];
                continue;
            }
            is_self = false;
            nb[i]   = axes[i].neighbor(center[i], dir);
            if (nb[i] < 0)
            {
                exists = false;
                break;
            }
        }
        if (is_self || !exists)
        {
            continue;
        }
        const Index q = flatten_grid(nb, axes);
        if (q != g && j[static_cast<std::size_t>(q)] < j[static_cast<std::size_t>(g)])
        {
            return false;
        }
    }
    return true;
}

FrequencyTuple grid_point(Index g, const std::vector<Axis>& axes)
{
    const auto idx = unflatten_grid(g, axes);
    std::vector<double> f(axes.size());
    for (std::size_t i = 0; i < axes.size(); ++i)
    {
        f[i] = axes[i].points[static_cast<std::size_t>(idx[i])];
    }
    return FrequencyTuple(f);
}

FrequencyTuple refine(const SignalSubspace& subspace, const BandSystem& bands,
                      const FrequencyTuple& start, std::vector<double> steps,
                      const MusicOptions& options)
{
    const std::size_t d = steps.size();
    FrequencyTuple best = start;
    double best_j       = subspace.noise_projection(start);
    const auto half     = static_cast<Index>(std::llround(options.shrink));
    Index per_round = 1;
    for (std::size_t i = 0; i < d; ++i)
    {
        per_round *= 2 * half + 1;
    }
    // Peaks of closely spaced atoms sit in narrow tilted valleys, so the true
    // minimum can lie more than one coarse step from the grid minimum. A round
    // whose best point lands on the window edge is repeated around that point
    // before the step shrinks.
    constexpr int kMaxRecenters = 16;
    for (int round = 0; round < options.refine_rounds; ++round)
    {
        for (double& s : steps)
        {
            s /= options.shrink;
        }
        for (int pass = 0; pass <= kMaxRecenters; ++pass)
        {
            const FrequencyTuple center = best;
            bool on_edge                = false;
            for (Index c = 0; c < per_round; ++c)
            {
                Index code = c;
                std::vector<double> f(d);
                bool ok   = true;
                bool edge = false;
                for (std::size_t i = 0; i < d; ++i)
                {
                    const Index off = code % (2 * half + 1) - half;
                    code /= 2 * half + 1;
                    edge = edge || off == half || off == -half;
                    f[i] = wrap_unit(center[static_cast<Index>(i)] + static_cast<double>(off) * steps[i]);
                    ok   = ok && in_bands(bands.bands(static_cast<Index>(i)), f[i]);
                }
                if (!ok)
                {
                    continue;
                }
                const FrequencyTuple candidate(f);
                const double jv = subspace.noise_projection(candidate);
                if (jv < best_j || (jv == best_j && candidate < best))
                {
                    best_j  = jv;
                    best    = candidate;
                    on_edge = edge;
                }
            }
            if (!on_edge)
            {
                break;
            }
        }
    }
    const double max_move = 2.0 * *std::max_element(steps.begin(), steps.end());
    FrequencyTuple polished = subspace.polish(best, options.polish_iterations, max_move);
    if (bands.contains(polished))
    {
        return polished;
    }
    return best;
}

} // namespace

Pseudospectrum music_pseudospectrum(const CMatrix& t, const DimsSpec& dims,
                                    const BandSystem& bands, std::optional<Index> order,
                                    const MusicOptions& options)
{
    const SignalSubspace subspace(t, dims, order, options.order_rel_tol);
    const auto axes = make_axes(dims, bands, options.grid_factor);
    const auto j    = grid_noise_projection(subspace, axes);
    Pseudospectrum out;
    for (const auto& ax : axes)
    {
        out.axes.push_back(ax.points);
    }
    out.values.reserve(j.size());
    for (double v : j)
    {
        out.values.push_back(1.0 / std::max(v, std::numeric_limits<double>::min()));
    }
    out.signal_dim = subspace.order();
    return out;
}

MusicResult music_frequencies(const SignalSubspace& subspace, const BandSystem& bands,
                              const MusicOptions& options)
{
    const DimsSpec& dims = subspace.dims();
    MusicResult result;
    result.signal_dim = subspace.order();
    if (result.signal_dim == 0)
    {
        return result;
    }
    if (result.signal_dim >= dims.total())
    {
        throw std::domain_error("music_frequencies: signal subspace fills the space, no noise "
                                "subspace left");
    }
    const auto axes = make_axes(dims, bands, options.grid_factor);
    const auto j    = grid_noise_projection(subspace, axes);

    std::vector<Index> minima;
    for (Index g = 0; g < static_cast<Index>(j.size()); ++g)
    {
        if (is_local_min(g, j, axes))
        {
            minima.push_back(g);
        }
    }
    std::sort(minima.begin(), minima.end(), [&](Index a, Index b) {
        const double ja = j[static_cast<std::size_t>(a)];
        const double jb = j[static_cast<std::size_t>(b)];
        if (ja != jb)
        {
            return ja < jb;
        }
        return grid_point(a, axes) < grid_point(b, axes);
    });

    std::vector<double> steps;
    for (const auto& ax : axes)
    {
        steps.push_back(ax.step);
    }
    for (Index g : minima)
    {
        if (static_cast<Index>(result.frequencies.size()) == result.signal_dim)
        {
            break;
        }
        FrequencyTuple f = refine(subspace, bands, grid_point(g, axes), steps, options);
        // neighboring grid minima can converge onto one peak (to within the
        // 1e-6 refinement resolution)
        const bool duplicate =
            std::any_of(result.frequencies.begin(), result.frequencies.end(),
                        [&](const FrequencyTuple& other) { return other.distance(f) < 1e-6; });
        if (duplicate)
        {
            continue;
        }
        result.noise_projection.push_back(subspace.noise_projection(f));
        result.frequencies.push_back(std::move(f));
    }
    result.degraded = static_cast<Index>(result.frequencies.size()) < result.signal_dim;
    return result;
}

MusicResult music_frequencies(const CMatrix& t, const DimsSpec& dims, const BandSystem& bands,
                              std::optional<Index> order, const MusicOptions& options)
{
    const SignalSubspace subspace(t, dims, order, options.order_rel_tol);
    return music_frequencies(subspace, bands, options);
}

GainEstimate estimate_gains(const CVector& x, std::span<const FrequencyTuple> freqs,
                            const DimsSpec& dims)
{
    if (x.size() != dims.total())
    {
        throw std::invalid_argument("estimate_gains: vector length does not match the grid");
    }
    GainEstimate out;
    if (freqs.empty())
    {
        out.residual = x.norm();
        return out;
    }
    CMatrix a(dims.total(), static_cast<Index>(freqs.size()));
    for (std::size_t l = 0; l < freqs.size(); ++l)
    {
        a.col(static_cast<Index>(l)) = steering_vector(freqs[l], dims);
    }
    Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector& s = svd.singularValues();
    out.condition    = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1)
                                             : std::numeric_limits<double>::infinity();
    out.ill_conditioned = !(out.condition <= 1e10);
    const CVector sigma = a.colPivHouseholderQr().solve(x);
    out.gains.assign(sigma.data(), sigma.data() + sigma.size());
    out.residual = (x - a * sigma).norm();
    return out;
}

RetrievalResult retrieve(const SDPSolution& solution, const DimsSpec& dims,
                         const BandSystem& bands, const MusicOptions& options)
{
    const CMatrix t         = build_level_toeplitz(solution.b_hat);
    const MusicResult music = music_frequencies(t, dims, bands, std::nullopt, options);
    const GainEstimate gains = estimate_gains(solution.x_hat, music.frequencies, dims);

    std::vector<SpectralComponent> entries;
    RetrievalResult out;
    for (std::size_t l = 0; l < music.frequencies.size(); ++l)
    {
        if (gains.gains[l] == Complex(0.0, 0.0))
        {
            continue;
        }
        entries.push_back({music.frequencies[l], gains.gains[l]});
        out.refinement_residual.push_back(music.noise_projection[l]);
    }
    out.model           = SpectralModel(std::move(entries));
    out.order           = music.signal_dim;
    out.source          = RetrievalSource::FromT;
    out.degraded        = music.degraded;
    out.ill_conditioned = gains.ill_conditioned;
    return out;
}

} // namespace fsan
