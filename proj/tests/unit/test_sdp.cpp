#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <fsan/experiments.hpp>
#include <fsan/sdp.hpp>
#include <fsan/vandermonde.hpp>

#include "oracles.hpp"

using namespace fsan;
namespace or_ = fsan::oracle;

namespace
{

/// Smallest eigenvalue relative to max(lambda_max, 1) of every block of the program at
/// the returned point.
double worst_block(const SDPInstance& inst, const SDPSolution& sol)
{
    const Index n = inst.dims.total();
    CMatrix border(n + 1, n + 1);
    border.topLeftCorner(n, n)  = build_level_toeplitz(sol.b_hat);
    border.topRightCorner(n, 1) = sol.x_hat;
    border.bottomLeftCorner(1, n) = sol.x_hat.adjoint();
    border(n, n)                  = sol.t_hat;
    auto rel = [](const CMatrix& m) {
        const auto [lo, hi] = or_::eig_range(m);
        return lo / std::max(hi, 1.0);
    };
    double worst = rel(border);
    for (const auto& g : inst.g)
    {
        worst = std::min(worst, rel(build_tg(sol.b_hat, g)));
    }
    return worst;
}

SpectralModel unit_model(or_::Random& rng, const BandSystem& bands, Index r, double sep)
{
    std::vector<SpectralComponent> comps;
    for (const auto& f : rng.tuples_in(bands, r, sep))
    {
        comps.push_back({f, rng.unit_phase()});
    }
    return SpectralModel(comps);
}

} // namespace

TEST_SUITE("sdp-solver")
{

TEST_CASE("assemble block structure")
{
    const DimsSpec dims{8, 8};
    const ObservationMask mask = random_mask(dims, 12, 1);
    const std::vector<Complex> y(12, Complex(1.0, 0.0));

    const SDPInstance fs = assemble(y, mask, dims, BandSystem::accurate_prior());
    CHECK(fs.frequency_selective());
    CHECK(fs.block_sizes() == std::vector<Index>{65, 49, 49});
    CHECK(fs.g.size() == 2);

    const SDPInstance an = assemble(y, mask, dims, std::nullopt);
    CHECK_FALSE(an.frequency_selective());
    CHECK(an.block_sizes() == std::vector<Index>{65});

    const SDPInstance half =
        assemble(y, mask, dims, BandSystem({FrequencyBand(0.1, 0.2), FrequencyBand::full()}));
    CHECK(half.block_sizes() == std::vector<Index>{65, 49});

    CHECK_THROWS_AS(assemble(std::vector<Complex>(11), mask, dims, std::nullopt), std::invalid_argument);
    CHECK_THROWS_AS(assemble(y, mask, DimsSpec{4, 16}, std::nullopt), std::invalid_argument);
    CHECK_THROWS_AS(assemble(y, mask, dims, BandSystem::unconstrained(3)), std::invalid_argument);
    CHECK_THROWS_AS(assemble(y, mask, dims,
                             BandSystem(std::vector<std::vector<FrequencyBand>>{
                                 {FrequencyBand(0.1, 0.2), FrequencyBand(0.5, 0.6)},
                                 {FrequencyBand(0.1, 0.2)}})),
                    std::invalid_argument);

    const ObservationMask wmask(DimsSpec{2, 2}, {1, 3}, {Complex(0, 2), Complex(0.5, 0)});
    const SDPInstance w = assemble({Complex(2, 2), Complex(1, 0)}, wmask, DimsSpec{2, 2}, std::nullopt);
    const auto fixed    = w.fixed_entries();
    REQUIRE(fixed.size() == 2);
    CHECK(fixed[0].first == 1);
    CHECK(std::abs(fixed[0].second - Complex(1, -1)) < 1e-15);
    CHECK(std::abs(fixed[1].second - Complex(2, 0)) < 1e-15);
}

TEST_CASE("empty mask gives the zero solution")
{
    const DimsSpec dims{4, 4};
    const SDPInstance inst = assemble({}, ObservationMask(dims, {}), dims, BandSystem::accurate_prior());
    const SDPSolution sol  = solve(inst);
    CHECK(std::abs(sol.objective) < 1e-6);
    CHECK(sol.x_hat.norm() < 1e-6);
}

TEST_CASE("single atom under full observation")
{
    const DimsSpec dims{8, 8};
    const FrequencyTuple f{0.33, 0.56};
    const Complex sigma = std::polar(1.0, 0.7);
    const CVector x     = sigma * steering_vector(f, dims);
    const SDPInstance inst =
        assemble(apply_mask(x, ObservationMask::full(dims)), dims, BandSystem::accurate_prior());
    const SDPSolution sol = solve(inst);
    CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-6));
    CHECK((sol.x_hat - x).norm() == 0.0);
    CHECK(sol.diagnostics.rank_t == 1);
    CHECK(sol.diagnostics.rank_condition);
    CHECK(sol.b_hat.conjugate_symmetry_defect() < 1e-12);
    CHECK(worst_block(inst, sol) > -1e-7);
}

TEST_CASE("feasible_value_from_model")
{
    const DimsSpec dims{8, 8};
    const BandSystem bands = BandSystem::accurate_prior();
    const FeasiblePoint one = feasible_value_from_model(
        SpectralModel({{FrequencyTuple{0.35, 0.51}, std::polar(1.0, 1.0)}}), dims, bands);
    CHECK(one.value == doctest::Approx(1.0));

    const SpectralModel three({{FrequencyTuple{0.35, 0.51}, std::polar(1.0, 0.1)},
                               {FrequencyTuple{0.31, 0.59}, std::polar(1.0, 2.1)},
                               {FrequencyTuple{0.37, 0.57}, std::polar(1.0, -1.3)}});
    const FeasiblePoint pt = feasible_value_from_model(three, dims, bands);
    CHECK(pt.value == doctest::Approx(3.0));
    CHECK(pt.t == doctest::Approx(3.0));
    CHECK((pt.x - synthesize(three, dims)).norm() < 1e-12);
    CHECK(verify_fs_certificate(pt.b, bands).pass);

    const Index n = dims.total();
    CMatrix border(n + 1, n + 1);
    border.topLeftCorner(n, n)    = build_level_toeplitz(pt.b);
    border.topRightCorner(n, 1)   = pt.x;
    border.bottomLeftCorner(1, n) = pt.x.adjoint();
    border(n, n)                  = pt.t;
    const auto [lo, hi] = or_::eig_range(border);
    CHECK(lo >= -1e-10 * hi);

    CHECK_THROWS_AS(feasible_value_from_model(SpectralModel({{FrequencyTuple{0.45, 0.51}, 1.0}}), dims,
                                              bands),
                    std::domain_error);
    CHECK_NOTHROW(feasible_value_from_model(SpectralModel({{FrequencyTuple{0.45, 0.51}, 1.0}}), dims,
                                            std::nullopt));
}

TEST_CASE("program value is sandwiched by the atomic value, FS dominates the baseline")
{
    or_::Random rng(17);
    const DimsSpec dims{6, 6};
    const BandSystem bands = BandSystem::accurate_prior();
    for (int rep = 0; rep < 4; ++rep)
    {
        const SpectralModel m = unit_model(rng, bands, rng.integer(1, 3), 0.02);
        const CVector x       = synthesize(m, dims);
        const Observation y   = apply_mask(x, random_mask(dims, 18, 100 + rep));
        const SDPInstance fs  = assemble(y, dims, bands);
        const SDPInstance an  = assemble(y, dims, std::nullopt);
        const SDPSolution sfs = solve(fs);
        const SDPSolution san = solve(an);
        const double bound    = feasible_value_from_model(m, dims, bands).value;
        CHECK(sfs.objective <= bound + 1e-6);
        CHECK(san.objective <= bound + 1e-6);
        CHECK(sfs.objective >= san.objective - 1e-6);

        for (std::size_t k = 0; k < y.mask.indices().size(); ++k)
        {
            CHECK(sfs.x_hat(y.mask.indices()[k]) == y.values[k]);
            CHECK(san.x_hat(y.mask.indices()[k]) == y.values[k]);
        }
        CHECK(worst_block(fs, sfs) > -1e-6);
        if (sfs.diagnostics.status == SolveStatus::Solved)
        {
            CHECK(worst_block(fs, sfs) >= -1e-7);
        }
    }
}

TEST_CASE("low-rank optimum decomposes with matching weight")
{
    or_::Random rng(23);
    const DimsSpec dims{8, 8};
    const BandSystem bands = BandSystem::accurate_prior();
    for (int rep = 0; rep < 2; ++rep)
    {
        std::vector<SpectralComponent> comps;
        for (const auto& f : rng.tuples_in(bands, 2, 0.02))
        {
            comps.push_back({f, std::polar(rng.uniform(0.5, 1.5), rng.uniform(0.0, kTwoPi))});
        }
        const SpectralModel m(comps);
        const SDPInstance inst =
            assemble(apply_mask(synthesize(m, dims), ObservationMask::full(dims)), dims, bands);
        const SDPSolution sol = solve(inst);
        REQUIRE(sol.diagnostics.rank_condition);
        const Decomposition dec = vandermonde_decompose(build_level_toeplitz(sol.b_hat), dims);
        double weight = 0.0;
        for (const auto& e : dec.model.entries())
        {
            weight += e.gain.real();
        }
        double l1 = 0.0;
        for (const auto& e : comps)
        {
            l1 += std::abs(e.gain);
        }
        // The bordered block is invariant under (T, t) -> (c T, t / c), so only
        // B(0) t is pinned: sqrt(B(0) t) is the atomic norm, and the split
        // between the two halves of B(0)/2 + t/2 is flat to second order.
        const double b0 = sol.b_hat.values()(sol.b_hat.center()).real();
        CHECK(sol.objective == doctest::Approx(l1).epsilon(1e-6));
        CHECK(std::sqrt(b0 * sol.t_hat) == doctest::Approx(l1).epsilon(1e-6));
        // the decomposition accounts for the whole trace of T(B_hat)
        CHECK(weight == doctest::Approx(b0).epsilon(1e-6));
        for (double e : or_::matched_errors(m.frequencies(), dec.model.frequencies()))
        {
            CHECK(e < 1e-4);
        }
    }
}

TEST_CASE("solve is deterministic")
{
    const TrialConfig cfg = fig1_config(2);
    const TrialData data  = draw_trial(cfg);
    const SDPInstance inst = assemble(data.observation, cfg.dims, cfg.bands);
    const SDPSolution a    = solve(inst);
    const SDPSolution b    = solve(inst);
    CHECK(std::abs(a.objective - b.objective) <= 1e-9);
    CHECK((a.x_hat - b.x_hat).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("band-limited recovery on the 8x8 three-tone instance")
{
    const TrialConfig cfg  = fig1_config(1);
    const TrialData data   = draw_trial(cfg);
    const SDPSolution fs   = solve(assemble(data.observation, cfg.dims, cfg.bands));
    CHECK(nmse(fs.x_hat, data.x_star) < 1e-5);
    const SDPSolution an   = solve(assemble(data.observation, cfg.dims, std::nullopt));
    CHECK(nmse(an.x_hat, data.x_star) > 1e-2);
}

TEST_CASE("ADMM backend reaches the same optimum on a small instance")
{
    or_::Random rng(31);
    const DimsSpec dims{4, 4};
    const BandSystem bands = BandSystem::accurate_prior();
    const SpectralModel m  = unit_model(rng, bands, 1, 0.0);
    const SDPInstance inst = assemble(apply_mask(synthesize(m, dims), random_mask(dims, 10, 4)), dims, bands);
    SolverOptions ipm;
    SolverOptions admm;
    admm.backend  = SolverBackend::Admm;
    admm.eps_abs  = admm.eps_rel = 1e-7;
    admm.max_iter = 50000;
    const SDPSolution a = solve(inst, ipm);
    const SDPSolution b = solve(inst, admm);
    CHECK(b.objective == doctest::Approx(a.objective).epsilon(1e-4));
    CHECK((b.x_hat - a.x_hat).norm() <= 1e-3 * a.x_hat.norm());
    const SDPSolution c = AdmmBackend().solve(inst, admm);
    CHECK(c.objective == b.objective);
}

TEST_CASE("solver options")
{
    SolverOptions o;
    CHECK_NOTHROW(o.validate());
    CHECK(o.backend == SolverBackend::InteriorPoint);
    CHECK(o.eps_abs == 1e-9);
    CHECK(o.max_iter == 100000);
    SolverOptions bad = o;
    bad.eps_abs       = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad          = o;
    bad.max_iter = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad            = o;
    bad.relaxation = 2.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    CHECK(to_string(SolverBackend::Admm) == "admm");
    CHECK(solver_backend_from_string("ipm") == SolverBackend::InteriorPoint);
    CHECK_THROWS_AS(solver_backend_from_string("cvx"), std::invalid_argument);
    for (auto s : {SolveStatus::Solved, SolveStatus::MaxIter, SolveStatus::InfeasibleLike})
    {
        CHECK(solve_status_from_string(to_string(s)) == s);
    }
}

TEST_CASE("a capped run reports max_iter and returns its iterate")
{
    const TrialConfig cfg = fig1_config(3);
    const TrialData data  = draw_trial(cfg);
    SolverOptions o;
    o.ipm_max_iter        = 3;
    const SDPSolution sol = solve(assemble(data.observation, cfg.dims, cfg.bands), o);
    CHECK(sol.diagnostics.status == SolveStatus::MaxIter);
    CHECK(sol.diagnostics.iterations == 3);
    CHECK(sol.x_hat.size() == 64);
}

TEST_CASE("real embedding")
{
    const RMatrix one = real_embedding(CMatrix::Identity(1, 1));
    CHECK(one.isApprox(RMatrix::Identity(2, 2)));

    CMatrix h(2, 2);
    h << 0.0, Complex(0, 1), Complex(0, -1), 0.0;
    Eigen::SelfAdjointEigenSolver<RMatrix> es(real_embedding(h));
    const RVector ev = es.eigenvalues();
    CHECK(ev(0) == doctest::Approx(-1.0));
    CHECK(ev(1) == doctest::Approx(-1.0));
    CHECK(ev(2) == doctest::Approx(1.0));
    CHECK(ev(3) == doctest::Approx(1.0));

    CHECK_THROWS_AS(real_embedding(CMatrix::Ones(2, 3)), std::invalid_argument);
    CMatrix nh = CMatrix::Zero(2, 2);
    nh(0, 1)   = 1.0;
    CHECK_THROWS_AS(real_embedding(nh), std::invalid_argument);

    or_::Random rng(9);
    for (int rep = 0; rep < 10; ++rep)
    {
        const CMatrix g  = rng.matrix(6, 6);
        const CMatrix hh = 0.5 * (g + g.adjoint());
        // complex projection from the definition
        Eigen::SelfAdjointEigenSolver<CMatrix> ces(hh);
        const CMatrix cproj = ces.eigenvectors() * ces.eigenvalues().cwiseMax(0.0).asDiagonal() *
                              ces.eigenvectors().adjoint();
        Eigen::SelfAdjointEigenSolver<RMatrix> res(real_embedding(hh));
        const RMatrix rproj = res.eigenvectors() * res.eigenvalues().cwiseMax(0.0).asDiagonal() *
                              res.eigenvectors().transpose();
        CHECK((real_unembedding(rproj) - cproj).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((project_psd(hh) - cproj).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((real_unembedding(real_embedding(hh)) - hh).cwiseAbs().maxCoeff() == 0.0);
        // spectrum doubles
        RVector cev(12);
        cev << ces.eigenvalues(), ces.eigenvalues();
        std::sort(cev.begin(), cev.end());
        CHECK((res.eigenvalues() - cev).cwiseAbs().maxCoeff() < 1e-12);
    }
}

} // TEST_SUITE
