#include <fsan/sdp.hpp>

#include <algorithm>
#include <chrono>
#include <limits>
#include <map>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace fsan
{

std::vector<Index> SDPInstance::block_sizes() const
{
    std::vector<Index> sizes{dims.total() + 1};
    for (std::size_t i = 0; i < g.size(); ++i)
    {
        sizes.push_back(dims.total_reduced());
    }
    return sizes;
}

std::vector<std::pair<Index, Complex>> SDPInstance::fixed_entries() const
{
    std::vector<std::pair<Index, Complex>> out;
    const auto& idx = observation.mask.indices();
    const auto& w   = observation.mask.weights();
    out.reserve(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k)
    {
        out.emplace_back(idx[k], observation.values[k] / w[k]);
    }
    return out;
}

SDPInstance assemble(const std::vector<Complex>& values, const ObservationMask& mask,
                     const DimsSpec& dims, std::optional<BandSystem> bands)
{
    if (!(mask.dims() == dims))
    {
        throw std::invalid_argument("assemble: mask grid differs from the problem grid");
    }
    if (static_cast<Index>(values.size()) != mask.count())
    {
        throw std::invalid_argument("assemble: " + std::to_string(values.size()) +
                                    " values for " + std::to_string(mask.count()) +
                                    " observed indices");
    }
    SDPInstance inst;
    inst.dims        = dims;
    inst.observation = Observation{mask, values};
    if (bands)
    {
        if (bands->d() != dims.d())
        {
            throw std::invalid_argument("assemble: band system dimension differs from the grid");
        }
        if (!bands->single_band())
        {
            throw std::invalid_argument("assemble: the program takes one band per dimension");
        }
        inst.g = bands->g_constraints();
    }
    inst.bands = std::move(bands);
    return inst;
}

void SolverOptions::validate() const
{
    if (!(eps_abs > 0.0) || !(eps_rel > 0.0))
    {
        throw std::invalid_argument("SolverOptions: tolerances must be positive");
    }
    if (!(ipm_tol > 0.0))
    {
        throw std::invalid_argument("SolverOptions: ipm_tol must be positive");
    }
    if (max_iter < 1 || ipm_max_iter < 1)
    {
        throw std::invalid_argument("SolverOptions: iteration caps must be at least 1");
    }
    if (!(rho > 0.0))
    {
        throw std::invalid_argument("SolverOptions: rho must be positive");
    }
    if (!(relaxation > 0.0 && relaxation < 2.0))
    {
        throw std::invalid_argument("SolverOptions: relaxation must lie in (0, 2)");
    }
    if (adapt_interval < 1 || !(adapt_ratio > 1.0))
    {
        throw std::invalid_argument("SolverOptions: bad penalty adaptation settings");
    }
}

std::string to_string(SolverBackend backend)
{
    return backend == SolverBackend::Admm ? "admm" : "ipm";
}

SolverBackend solver_backend_from_string(const std::string& s)
{
    if (s == "ipm")
    {
        return SolverBackend::InteriorPoint;
    }
    if (s == "admm")
    {
        return SolverBackend::Admm;
    }
    throw std::invalid_argument("unknown solver backend '" + s + "'");
}

std::string to_string(SolveStatus status)
{
    switch (status)
    {
    case SolveStatus::Solved:
        return "solved";
    case SolveStatus::MaxIter:
        return "max_iter";
    case SolveStatus::InfeasibleLike:
        return "infeasible-like";
    }
    return "unknown";
}

SolveStatus solve_status_from_string(const std::string& s)
{
    if (s == "solved")
    {
        return SolveStatus::Solved;
    }
    if (s == "max_iter")
    {
        return SolveStatus::MaxIter;
    }
    if (s == "infeasible-like")
    {
        return SolveStatus::InfeasibleLike;
    }
    throw std::invalid_argument("unknown solve status '" + s + "'");
}

namespace
{

using Blocks = std::vector<CMatrix>;

double blocks_inner(const Blocks& a, const Blocks& b)
{
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
    {
        s += frobenius_inner(a[k], b[k]).real();
    }
    return s;
}

double blocks_norm(const Blocks& a)
{
    double s = 0.0;
    for (const auto& m : a)
    {
        s += m.squaredNorm();
    }
    return std::sqrt(s);
}

///
/// Real coordinates of a conjugate-symmetric tensor with m slots (m odd):
/// p[0] = B(center), p[2j-1] + i p[2j] = B(center + j) for j = 1..(m-1)/2.
/// Lags center - j hold the conjugates.
///
class HalfParam
{
public:
    explicit HalfParam(Index slots) : m_(slots), c_((slots - 1) / 2) {}

    Index size() const noexcept { return m_; }

    template <class Vec>
    void to_tensor(const Vec& p, CVector& b) const
    {
        b.resize(m_);
        b(c_) = Complex(p(0), 0.0);
        for (Index j = 1; j <= c_; ++j)
        {
            const Complex v(p(2 * j - 1), p(2 * j));
            b(c_ + j) = v;
            b(c_ - j) = std::conj(v);
        }
    }

    /// Gradient of Re <B(p), W> in p given the complex adjoint G of W.
    template <class Vec>
    void from_adjoint(const CVector& g, Vec&& p) const
    {
        p(0) = g(c_).real();
        for (Index j = 1; j <= c_; ++j)
        {
            p(2 * j - 1) = (g(c_ + j) + g(c_ - j)).real();
            p(2 * j)     = (g(c_ + j) - g(c_ - j)).imag();
        }
    }

private:
    Index m_;
    Index c_;
};

///
/// The program in standard inequality form over a real vector
/// v = [B half-parameters | (Re, Im) of every unobserved x_j | t]:
///
///     minimize c^T v   subject to   F_k(v) = C_k + A_k(v) >= 0.
///
/// Block 0 is the bordered Toeplitz block, blocks 1.. are the T_g blocks.
/// Observed data enter only through the constant C_0 and are normalized to
/// unit RMS.
///
class Structure
{
public:
    explicit Structure(const SDPInstance& inst)
        : dims_(inst.dims),
          n_(inst.dims.total()),
          toeplitz_(inst.dims),
          param_(HalfSpectrumTensor(inst.dims).size())
    {
        for (const auto& g : inst.g)
        {
            shifted_.emplace_back(inst.dims, g);
        }
        fixed_ = CVector::Zero(n_);
        std::vector<bool> observed(static_cast<std::size_t>(n_), false);
        double energy = 0.0;
        for (const auto& [j, v] : inst.fixed_entries())
        {
            fixed_(j) = v;
            observed[static_cast<std::size_t>(j)] = true;
            energy += std::norm(v);
        }
        const auto count = static_cast<double>(inst.observation.values.size());
        scale_ = (count > 0.0 && energy > 0.0) ? std::sqrt(energy / count) : 1.0;
        fixed_ /= scale_;
        for (Index j = 0; j < n_; ++j)
        {
            if (!observed[static_cast<std::size_t>(j)])
            {
                free_.push_back(j);
            }
        }
        m_ = param_.size() + 2 * static_cast<Index>(free_.size()) + 1;
    }

    Index size() const noexcept { return m_; }
    Index param_size() const noexcept { return param_.size(); }
    Index grid() const noexcept { return n_; }
    std::size_t blocks() const noexcept { return shifted_.size() + 1; }
    Index block_rows(std::size_t k) const { return k == 0 ? n_ + 1 : shifted_[k - 1].rows(); }
    double scale() const noexcept { return scale_; }
    const std::vector<Index>& free_indices() const noexcept { return free_; }
    const ToeplitzMap& toeplitz() const noexcept { return toeplitz_; }
    const std::vector<ShiftedToeplitzMap>& shifted() const noexcept { return shifted_; }

    RVector cost() const
    {
        RVector c = RVector::Zero(m_);
        c(0) += 0.5;
        c(m_ - 1) += 0.5;
        return c;
    }

    Blocks zeros() const
    {
        Blocks out(blocks());
        for (std::size_t k = 0; k < out.size(); ++k)
        {
            out[k] = CMatrix::Zero(block_rows(k), block_rows(k));
        }
        return out;
    }

    Blocks identity(double s) const
    {
        Blocks out(blocks());
        for (std::size_t k = 0; k < out.size(); ++k)
        {
            out[k] = s * CMatrix::Identity(block_rows(k), block_rows(k));
        }
        return out;
    }

    /// C: the observed entries in the border of block 0.
    Blocks constant() const
    {
        Blocks out = zeros();
        out[0].col(n_).head(n_) = fixed_;
        out[0].row(n_).head(n_) = fixed_.adjoint();
        return out;
    }

    /// A(v), the linear part.
    void apply(const RVector& v, Blocks& out) const
    {
        out.resize(blocks());
        param_.to_tensor(v.head(param_.size()), tensor_);
        toeplitz_.apply(tensor_, block_);
        out[0].setZero(n_ + 1, n_ + 1);
        out[0].topLeftCorner(n_, n_) = block_;
        Index q = param_.size();
        for (const Index j : free_)
        {
            const Complex xj(v(q), v(q + 1));
            out[0](j, n_) = xj;
            out[0](n_, j) = std::conj(xj);
            q += 2;
        }
        out[0](n_, n_) = Complex(v(m_ - 1), 0.0);
        for (std::size_t i = 0; i < shifted_.size(); ++i)
        {
            shifted_[i].apply(tensor_, out[i + 1]);
        }
    }

    /// A^*(W)_p = Re tr(A_p W) for Hermitian W.
    RVector adjoint(const Blocks& w) const
    {
        RVector g(m_);
        adj_.setZero(param_.size());
        toeplitz_.adjoint_add(w[0].topLeftCorner(n_, n_), adj_);
        for (std::size_t i = 0; i < shifted_.size(); ++i)
        {
            shifted_[i].adjoint_add(w[i + 1], adj_);
        }
        param_.from_adjoint(adj_, g.head(param_.size()));
        Index q = param_.size();
        for (const Index j : free_)
        {
            const Complex s = w[0](j, n_) + std::conj(w[0](n_, j));
            g(q)     = s.real();
            g(q + 1) = s.imag();
            q += 2;
        }
        g(m_ - 1) = w[0](n_, n_).real();
        return g;
    }

    SDPSolution unpack(const RVector& v) const
    {
        SDPSolution sol;
        param_.to_tensor(v.head(param_.size()), tensor_);
        sol.b_hat = HalfSpectrumTensor(dims_, tensor_ * scale_);
        sol.x_hat = fixed_ * scale_;
        Index q = param_.size();
        for (const Index j : free_)
        {
            sol.x_hat(j) = Complex(v(q), v(q + 1)) * scale_;
            q += 2;
        }
        sol.t_hat     = v(m_ - 1) * scale_;
        sol.objective = cost().dot(v) * scale_;
        return sol;
    }

private:
    DimsSpec dims_;
    Index n_;
    ToeplitzMap toeplitz_;
    std::vector<ShiftedToeplitzMap> shifted_;
    HalfParam param_;
    CVector fixed_;
    std::vector<Index> free_;
    Index m_      = 0;
    double scale_ = 1.0;
    mutable CVector tensor_;
    mutable CVector adj_;
    mutable CMatrix block_;
};

void finish(const SDPInstance& inst, SDPSolution& sol, SolverDiagnostics diag,
            std::chrono::steady_clock::time_point t0)
{
    const CMatrix tb    = build_level_toeplitz(sol.b_hat);
    diag.rank_t         = numerical_rank(tb, 1e-6);
    diag.rank_condition = diag.rank_t < inst.dims.min_size();
    diag.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    sol.diagnostics = diag;
    // observed entries are returned exactly as given
    for (const auto& [j, v] : inst.fixed_entries())
    {
        sol.x_hat(j) = v;
    }
}

bool tracing()
{
    static const bool on = std::getenv("FSAN_TRACE") != nullptr;
    return on;
}

class AdmmSolver
{
public:
    AdmmSolver(const SDPInstance& inst, const SolverOptions& opts)
        : inst_(inst), opts_(opts), st_(inst)
    {
        factor_gram();
    }

    SDPSolution run()
    {
        const auto t0   = std::chrono::steady_clock::now();
        const Blocks c0 = st_.constant();
        const RVector c = st_.cost();
        Blocks z        = st_.zeros();
        Blocks u        = st_.zeros();
        Blocks lin      = st_.zeros();
        Blocks w(z.size());
        Blocks z_old(z.size());

        RVector v  = RVector::Zero(st_.size());
        double rho = opts_.rho;
        const double alpha = opts_.relaxation;

        SolverDiagnostics diag;
        diag.status = SolveStatus::MaxIter;

        for (int it = 1; it <= opts_.max_iter; ++it)
        {
            // least-squares step: (A^* A) v = A^*(Z - U - C) - c / rho
            for (std::size_t k = 0; k < z.size(); ++k)
            {
                w[k] = z[k] - u[k] - c0[k];
            }
            v = gram_.solve(st_.adjoint(w) - c / rho);
            st_.apply(v, lin);

            double primal_sq = 0.0;
            double lin_sq    = 0.0;
            double z_sq      = 0.0;
            for (std::size_t k = 0; k < z.size(); ++k)
            {
                lin[k] += c0[k];
                z_old[k]            = z[k];
                const CMatrix relax = alpha * lin[k] + (1.0 - alpha) * z_old[k];
                z[k]                = project_psd(relax + u[k]);
                u[k] += relax - z[k];
                primal_sq += (lin[k] - z[k]).squaredNorm();
                lin_sq += lin[k].squaredNorm();
                z_sq += z[k].squaredNorm();
            }
            for (std::size_t k = 0; k < z.size(); ++k)
            {
                z_old[k] = z[k] - z_old[k];
            }
            const double primal       = std::sqrt(primal_sq);
            const double dual         = rho * st_.adjoint(z_old).norm();
            const double primal_scale = std::max(std::sqrt(lin_sq), std::sqrt(z_sq));
            const double dual_scale   = std::max(rho * st_.adjoint(u).norm(), c.norm());

            if (tracing() && it % 500 == 0)
            {
                std::fprintf(stderr, "admm %6d rp %.3e rd %.3e rho %.3e obj %.9f\n", it,
                             primal / std::max(primal_scale, 1e-300), dual / dual_scale, rho,
                             c.dot(v) * st_.scale());
            }
            diag.iterations      = it;
            diag.primal_residual = primal / std::max(primal_scale, 1.0);
            diag.dual_residual   = dual / dual_scale;

            if (!std::isfinite(primal) || !std::isfinite(dual))
            {
                diag.status = SolveStatus::InfeasibleLike;
                break;
            }
            if (primal <= opts_.eps_abs + opts_.eps_rel * primal_scale &&
                dual <= opts_.eps_abs + opts_.eps_rel * dual_scale)
            {
                diag.status = SolveStatus::Solved;
                break;
            }
            if (opts_.adaptive_rho && it % opts_.adapt_interval == 0)
            {
                const double rp = primal / std::max(primal_scale, 1e-300);
                const double rd = dual / std::max(dual_scale, 1e-300);
                if (rp > opts_.adapt_ratio * rd)
                {
                    rho *= 2.0;
                    for (auto& uk : u)
                    {
                        uk *= 0.5;
                    }
                }
                else if (rd > opts_.adapt_ratio * rp)
                {
                    rho *= 0.5;
                    for (auto& uk : u)
                    {
                        uk *= 2.0;
                    }
                }
            }
        }
        diag.rho = rho;

        SDPSolution sol = st_.unpack(v);
        finish(inst_, sol, diag, t0);
        return sol;
    }

private:
    /// Cholesky of A^* A, assembled column by column.
    void factor_gram()
    {
        const Index m = st_.size();
        RMatrix gram(m, m);
        Blocks blocks;
        RVector e = RVector::Zero(m);
        for (Index q = 0; q < m; ++q)
        {
            e.setZero();
            e(q) = 1.0;
            st_.apply(e, blocks);
            gram.col(q) = st_.adjoint(blocks);
        }
        gram_.compute(0.5 * (gram + gram.transpose()));
        if (gram_.info() != Eigen::Success)
        {
            throw std::runtime_error("AdmmBackend: structure Gram matrix is not positive definite");
        }
    }

    const SDPInstance& inst_;
    SolverOptions opts_;
    Structure st_;
    Eigen::LLT<RMatrix> gram_;
};

///
/// Entries of one PSD block grouped into classes that share a single
/// coefficient under every variable, and each variable's coefficient on
/// each class: A_p = sum_b coef(p, b) E_b with E_b the 0/1 pattern of class b.
///
struct BlockClasses
{
    std::vector<std::vector<std::pair<Index, Index>>> members; // (row, col)
    std::vector<std::vector<std::pair<Index, Complex>>> coef;  // per variable
    std::vector<Index> used;                                   // classes touched by a variable
};

class IpmSolver
{
public:
    IpmSolver(const SDPInstance& inst, const SolverOptions& opts)
        : inst_(inst), opts_(opts), st_(inst)
    {
        build_classes();
        factor_gram();
    }

    SDPSolution run()
    {
        const auto t0   = std::chrono::steady_clock::now();
        const Blocks cc = st_.constant();
        const RVector c = st_.cost();
        const double c_norm  = c.norm();
        const double cc_norm = blocks_norm(cc);
        const std::size_t nb = st_.blocks();
        double order = 0.0;
        for (std::size_t k = 0; k < nb; ++k)
        {
            order += static_cast<double>(st_.block_rows(k));
        }

        RVector v = RVector::Zero(st_.size());
        Blocks s  = st_.identity(kStart);
        Blocks z  = st_.identity(kStart);
        Blocks lin, rp(nb), sinv(nb), g(nb), ds(nb), dz(nb), ds_aff(nb), dz_aff(nb), corr(nb);

        SolverDiagnostics diag;
        diag.status      = SolveStatus::MaxIter;
        const double tol = opts_.ipm_tol;
        int stalled      = 0;
        double best_merit = std::numeric_limits<double>::infinity();
        RVector best_v    = v;
        SolverDiagnostics best_diag;

        for (int it = 0;; ++it)
        {
            st_.apply(v, lin);
            for (std::size_t k = 0; k < nb; ++k)
            {
                rp[k] = cc[k] + lin[k] - s[k];
            }
            const RVector rd  = st_.adjoint(z) - c;
            const double pobj = c.dot(v);
            const double dobj = -blocks_inner(cc, z);
            const double mu   = blocks_inner(s, z) / order;
            const double pinf = blocks_norm(rp) / (1.0 + cc_norm);
            const double dinf = rd.norm() / (1.0 + c_norm);
            const double gap  = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

            diag.iterations      = it;
            diag.primal_residual = pinf;
            diag.dual_residual   = dinf;
            diag.gap             = gap;
            diag.rho             = mu;
            if (tracing())
            {
                std::fprintf(stderr, "ipm %3d pobj %.12f dobj %.12f pinf %.2e dinf %.2e gap %.2e mu %.2e\n",
                             it, pobj * st_.scale(), dobj * st_.scale(), pinf, dinf, gap, mu);
            }
            if (!std::isfinite(pobj) || !std::isfinite(dobj) || !std::isfinite(mu))
            {
                diag.status = SolveStatus::InfeasibleLike;
                break;
            }
            const double merit = std::max({pinf, dinf, gap});
            if (merit < best_merit)
            {
                best_merit = merit;
                best_v     = v;
                best_diag  = diag;
            }
            if (merit <= tol)
            {
                diag.status = SolveStatus::Solved;
                break;
            }
            if (it >= opts_.ipm_max_iter)
            {
                break;
            }

            bool ok = true;
            for (std::size_t k = 0; k < nb && ok; ++k)
            {
                Eigen::LLT<CMatrix> llt(s[k]);
                ok      = llt.info() == Eigen::Success;
                sinv[k] = llt.solve(CMatrix::Identity(s[k].rows(), s[k].cols()));
                sinv[k] = hermitian_part(sinv[k]);
            }
            if (!ok || !factor_schur(sinv, z))
            {
                if (tracing())
                {
                    std::fprintf(stderr, "    %s factorization failed\n", ok ? "Schur" : "slack");
                }
                break;
            }

            // predictor: target mu = 0
            for (std::size_t k = 0; k < nb; ++k)
            {
                corr[k].setZero(s[k].rows(), s[k].cols());
            }
            direction(0.0, rp, sinv, z, corr, ds_aff, dz_aff);
            const double ap_aff = std::min(1.0, max_step(s, ds_aff));
            const double ad_aff = std::min(1.0, max_step(z, dz_aff));
            double mu_aff       = 0.0;
            for (std::size_t k = 0; k < nb; ++k)
            {
                mu_aff += frobenius_inner(s[k] + ap_aff * ds_aff[k], z[k] + ad_aff * dz_aff[k]).real();
            }
            mu_aff /= order;
            const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

            // corrector with the second-order term
            for (std::size_t k = 0; k < nb; ++k)
            {
                corr[k] = ds_aff[k] * dz_aff[k];
            }
            const RVector dv = direction(sigma * mu, rp, sinv, z, corr, ds, dz);
            const double gamma = 0.9 + 0.09 * std::min(ap_aff, ad_aff);
            const double ap    = std::min(1.0, gamma * max_step(s, ds));
            const double ad    = std::min(1.0, gamma * max_step(z, dz));
            if (tracing())
            {
                std::fprintf(stderr, "    sigma %.2e ap %.3e ad %.3e (aff %.3e %.3e)\n", sigma, ap, ad,
                             ap_aff, ad_aff);
            }
            // both steps blocked: rounding floor reached
            stalled = (ap < 1e-3 && ad < 1e-3) ? stalled + 1 : 0;
            if (stalled >= kStallLimit)
            {
                break;
            }
            v += ap * dv;
            for (std::size_t k = 0; k < nb; ++k)
            {
                s[k] = hermitian_part(s[k] + ap * ds[k]);
                z[k] = hermitian_part(z[k] + ad * dz[k]);
            }
        }

        if (diag.status != SolveStatus::Solved && std::isfinite(best_merit))
        {
            // stalled: report the most accurate iterate seen
            const int iterations = diag.iterations;
            diag                 = best_diag;
            diag.iterations      = iterations;
            diag.status          = SolveStatus::MaxIter;
            v                    = best_v;
        }
        SDPSolution sol = st_.unpack(v);
        finish(inst_, sol, diag, t0);
        return sol;
    }

private:
    static constexpr double kStart     = 10.0;
    static constexpr int kRefinePasses = 3;
    static constexpr int kStallLimit   = 3;

    ///
    /// HKM direction for complementarity target `target`:
    ///   dS = A(dv) + Rp,
    ///   dZ = target S^-1 - Z - sym(S^-1 dS Z) - sym(S^-1 corr),
    /// with dv from the Schur system H dv = A^*(G) + Rd, where G collects the
    /// dv-independent part of dZ. Rd is folded in through A^*(Z) - c.
    ///
    RVector direction(double target, const Blocks& rp, const Blocks& sinv, const Blocks& z,
                      const Blocks& corr, Blocks& ds, Blocks& dz)
    {
        const std::size_t nb = rp.size();
        Blocks g(nb);
        for (std::size_t k = 0; k < nb; ++k)
        {
            g[k] = target * sinv[k] - hermitian_part(sinv[k] * (rp[k] * z[k] + corr[k]));
        }
        // A^*(G - Z) + A^*(Z) - c = A^*(G) - c
        const RVector rhs = st_.adjoint(g) - st_.cost();
        const RVector rd  = st_.adjoint(z) - st_.cost();
        RVector dv        = schur_.solve(rhs);
        // refine against the operator itself: the Schur matrix loses
        // accuracy as the iterates approach the boundary
        for (int pass = 0;; ++pass)
        {
            st_.apply(dv, ds);
            for (std::size_t k = 0; k < nb; ++k)
            {
                ds[k] += rp[k];
                dz[k] = target * sinv[k] - z[k] - hermitian_part(sinv[k] * (ds[k] * z[k] + corr[k]));
            }
            if (pass == kRefinePasses)
            {
                break;
            }
            const RVector e = st_.adjoint(dz) + rd;
            if (e.norm() <= 1e-15 * (1.0 + rhs.norm()))
            {
                break;
            }
            dv += schur_.solve(e);
        }
        // rounding in the products with S^-1 leaves A^*(dZ) + Rd slightly
        // off near the boundary; remove the remainder along the range of A
        // so that the dual residual contracts exactly by (1 - step)
        const RVector e = st_.adjoint(dz) + rd;
        Blocks fix;
        st_.apply(gram_.solve(e), fix);
        for (std::size_t k = 0; k < nb; ++k)
        {
            dz[k] -= fix[k];
        }
        return dv;
    }

    /// Largest a with X + a dX >= 0 (infinity when dX keeps X inside).
    static double max_step(const Blocks& x, const Blocks& dx)
    {
        double step = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < x.size(); ++k)
        {
            Eigen::LLT<CMatrix> llt(x[k]);
            const auto l = llt.matrixL();
            CMatrix m    = l.solve(dx[k]);
            m            = l.solve(m.adjoint().eval());
            const RVector lambda = hermitian_eigenvalues(m);
            if (lambda.size() > 0 && lambda(0) < 0.0)
            {
                step = std::min(step, -1.0 / lambda(0));
            }
        }
        return step;
    }

    void build_classes()
    {
        const std::size_t nb = st_.blocks();
        const Index n        = st_.grid();
        classes_.resize(nb);
        for (std::size_t k = 0; k < nb; ++k)
        {
            const Index rows = st_.block_rows(k);
            std::vector<Index> id(static_cast<std::size_t>(rows * rows));
            if (k == 0)
            {
                const auto& slots = st_.toeplitz().slots();
                const Index slot_count = st_.param_size();
                for (Index col = 0; col <= n; ++col)
                {
                    for (Index row = 0; row <= n; ++row)
                    {
                        Index cls;
                        if (row < n && col < n)
                        {
                            cls = slots[static_cast<std::size_t>(col * n + row)];
                        }
                        else if (row < n)
                        {
                            cls = slot_count + row;
                        }
                        else if (col < n)
                        {
                            cls = slot_count + n + col;
                        }
                        else
                        {
                            cls = slot_count + 2 * n;
                        }
                        id[static_cast<std::size_t>(col * rows + row)] = cls;
                    }
                }
            }
            else
            {
                const auto& slots = st_.shifted()[k - 1].slots();
                std::map<Index, Index> dense;
                for (std::size_t e = 0; e < slots.size(); ++e)
                {
                    const auto [pos, inserted] = dense.emplace(slots[e], static_cast<Index>(dense.size()));
                    id[e] = pos->second;
                }
            }
            const Index count = *std::max_element(id.begin(), id.end()) + 1;
            auto& bc          = classes_[k];
            bc.members.assign(static_cast<std::size_t>(count), {});
            for (Index col = 0; col < rows; ++col)
            {
                for (Index row = 0; row < rows; ++row)
                {
                    bc.members[static_cast<std::size_t>(id[static_cast<std::size_t>(col * rows + row)])]
                        .emplace_back(row, col);
                }
            }
            bc.coef.assign(static_cast<std::size_t>(st_.size()), {});
        }

        // probe every variable; all members of a class carry the same value
        Blocks probe;
        RVector e = RVector::Zero(st_.size());
        std::vector<std::vector<bool>> touched(nb);
        for (std::size_t k = 0; k < nb; ++k)
        {
            touched[k].assign(classes_[k].members.size(), false);
        }
        for (Index p = 0; p < st_.size(); ++p)
        {
            e.setZero();
            e(p) = 1.0;
            st_.apply(e, probe);
            for (std::size_t k = 0; k < nb; ++k)
            {
                auto& bc = classes_[k];
                for (std::size_t b = 0; b < bc.members.size(); ++b)
                {
                    if (bc.members[b].empty())
                    {
                        continue;
                    }
                    const auto [row, col] = bc.members[b].front();
                    const Complex val     = probe[k](row, col);
                    if (val != Complex(0.0, 0.0))
                    {
                        bc.coef[static_cast<std::size_t>(p)].emplace_back(static_cast<Index>(b), val);
                        touched[k][b] = true;
                    }
                }
            }
        }
        for (std::size_t k = 0; k < nb; ++k)
        {
            auto& bc = classes_[k];
            for (std::size_t b = 0; b < touched[k].size(); ++b)
            {
                if (touched[k][b])
                {
                    bc.used.push_back(static_cast<Index>(b));
                }
            }
        }
    }

    ///
    /// H(p, q) = sum_k Re tr(A_kp S_k^-1 A_kq Z_k)
    ///         = sum_k Re sum_{b, b'} coef(p, b) coef(q, b') W_k(b, b'),
    /// W_k(b, b') = tr(E_b S^-1 E_b' Z) = sum_{(r, c) in b} (S^-1 E_b' Z)(c, r).
    ///
    bool factor_schur(const Blocks& sinv, const Blocks& z)
    {
        const Index m = st_.size();
        RMatrix h     = RMatrix::Zero(m, m);
        for (std::size_t k = 0; k < classes_.size(); ++k)
        {
            const auto& bc    = classes_[k];
            const Index rows  = sinv[k].rows();
            const Index total = static_cast<Index>(bc.members.size());
            CMatrix w         = CMatrix::Zero(total, total);
            CMatrix left, right, y;
            for (const Index b2 : bc.used)
            {
                const auto& mem = bc.members[static_cast<std::size_t>(b2)];
                const Index sz  = static_cast<Index>(mem.size());
                left.resize(rows, sz);
                right.resize(sz, rows);
                for (Index e = 0; e < sz; ++e)
                {
                    left.col(e)  = sinv[k].col(mem[static_cast<std::size_t>(e)].first);
                    right.row(e) = z[k].row(mem[static_cast<std::size_t>(e)].second);
                }
                y.noalias() = left * right;
                for (const Index b1 : bc.used)
                {
                    Complex acc(0.0, 0.0);
                    for (const auto& [r, c] : bc.members[static_cast<std::size_t>(b1)])
                    {
                        acc += y(c, r);
                    }
                    w(b1, b2) = acc;
                }
            }
            CVector col(total);
            for (Index q = 0; q < m; ++q)
            {
                const auto& lq = bc.coef[static_cast<std::size_t>(q)];
                if (lq.empty())
                {
                    continue;
                }
                col.setZero();
                for (const auto& [b2, cq] : lq)
                {
                    col += cq * w.col(b2);
                }
                for (Index p = 0; p < m; ++p)
                {
                    Complex acc(0.0, 0.0);
                    for (const auto& [b1, cp] : bc.coef[static_cast<std::size_t>(p)])
                    {
                        acc += cp * col(b1);
                    }
                    h(p, q) += acc.real();
                }
            }
        }
        h = 0.5 * (h + h.transpose());
        schur_.compute(h);
        return schur_.info() == Eigen::Success;
    }

    void factor_gram()
    {
        const Index m = st_.size();
        RMatrix gram(m, m);
        Blocks blocks;
        RVector e = RVector::Zero(m);
        for (Index q = 0; q < m; ++q)
        {
            e.setZero();
            e(q) = 1.0;
            st_.apply(e, blocks);
            gram.col(q) = st_.adjoint(blocks);
        }
        gram_.compute(0.5 * (gram + gram.transpose()));
    }

    const SDPInstance& inst_;
    SolverOptions opts_;
    Structure st_;
    std::vector<BlockClasses> classes_;
    Eigen::LLT<RMatrix> schur_;
    Eigen::LLT<RMatrix> gram_;
};

} // namespace

SDPSolution AdmmBackend::solve(const SDPInstance& instance, const SolverOptions& options) const
{
    options.validate();
    AdmmSolver solver(instance, options);
    return solver.run();
}

SDPSolution InteriorPointBackend::solve(const SDPInstance& instance,
                                        const SolverOptions& options) const
{
    options.validate();
    IpmSolver solver(instance, options);
    return solver.run();
}

SDPSolution solve(const SDPInstance& instance, const SolverOptions& options)
{
    if (options.backend == SolverBackend::Admm)
    {
        return AdmmBackend{}.solve(instance, options);
    }
    return InteriorPointBackend{}.solve(instance, options);
}

FeasiblePoint feasible_value_from_model(const SpectralModel& model, const DimsSpec& dims,
                                        const std::optional<BandSystem>& bands)
{
    FeasiblePoint pt;
    pt.b = HalfSpectrumTensor(dims);
    pt.x = CVector::Zero(dims.total());
    for (const auto& e : model.entries())
    {
        if (bands && !bands->contains(e.frequency))
        {
            throw std::domain_error("feasible_value_from_model: frequency outside the bands");
        }
        const double mag = std::abs(e.gain);
        pt.value += mag;
        pt.x += e.gain * steering_vector(e.frequency, dims);
        pt.b.values() += mag * atom_tensor(e.frequency, dims).values();
    }
    pt.t = pt.value;
    return pt;
}

RMatrix real_embedding(const CMatrix& h, double tol)
{
    if (h.rows() != h.cols())
    {
        throw std::invalid_argument("real_embedding: matrix is not square");
    }
    const double defect = max_hermitian_defect(h);
    const double scale  = h.size() == 0 ? 0.0 : h.cwiseAbs().maxCoeff();
    if (defect > tol * std::max(scale, 1.0))
    {
        throw std::invalid_argument("real_embedding: matrix is not Hermitian");
    }
    const Index n = h.rows();
    RMatrix r(2 * n, 2 * n);
    r.topLeftCorner(n, n)     = h.real();
    r.topRightCorner(n, n)    = -h.imag();
    r.bottomLeftCorner(n, n)  = h.imag();
    r.bottomRightCorner(n, n) = h.real();
    return r;
}

CMatrix real_unembedding(const RMatrix& r)
{
    if (r.rows() != r.cols() || r.rows() % 2 != 0)
    {
        throw std::invalid_argument("real_unembedding: expected a square matrix of even size");
    }
    const Index n = r.rows() / 2;
    const RMatrix re = 0.5 * (r.topLeftCorner(n, n) + r.bottomRightCorner(n, n));
    const RMatrix im = 0.5 * (r.bottomLeftCorner(n, n) - r.topRightCorner(n, n));
    CMatrix h(n, n);
    h.real() = re;
    h.imag() = im;
    return h;
}

} // namespace fsan
