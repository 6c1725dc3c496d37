#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fsan/model.hpp>
#include <fsan/rng.hpp>

#include "oracles.hpp"

using namespace fsan;
namespace or_ = fsan::oracle;

namespace
{

CVector ones(Index n) { return CVector::Constant(n, Complex(1.0, 0.0)); }

} // namespace

TEST_SUITE("core-model")
{

TEST_CASE("DimsSpec derived sizes and invariants")
{
    const DimsSpec dims{8, 8};
    CHECK(dims.d() == 2);
    CHECK(dims.total() == 64);
    CHECK(dims.total_reduced() == 49);
    CHECK(dims.min_size() == 8);

    const DimsSpec d3{5, 4, 3};
    CHECK(d3.total() == 60);
    CHECK(d3.total_reduced() == 4 * 3 * 2);
    CHECK(d3.min_size() == 3);

    CHECK_THROWS_AS(DimsSpec(std::vector<Index>{}), std::invalid_argument);
    CHECK_THROWS_AS(DimsSpec({4, 1}), std::invalid_argument);
}

TEST_CASE("flatten puts dimension 1 outermost and inverts unflatten")
{
    const DimsSpec dims{3, 4, 2};
    const auto grid = or_::multi_indices(dims.sizes());
    for (std::size_t j = 0; j < grid.size(); ++j)
    {
        CHECK(dims.flatten(grid[j]) == static_cast<Index>(j));
        CHECK(dims.unflatten(static_cast<Index>(j)) == grid[j]);
    }
    // ((n1 N2 + n2) N3 + n3)
    const std::vector<Index> m{2, 1, 1};
    CHECK(dims.flatten(m) == (2 * 4 + 1) * 2 + 1);
    const std::vector<Index> bad{3, 0, 0};
    CHECK_THROWS_AS(dims.flatten(bad), std::out_of_range);
}

TEST_CASE("FrequencyTuple components are reduced modulo one")
{
    const FrequencyTuple f{1.25, -0.25, 0.5};
    CHECK(f[0] == doctest::Approx(0.25));
    CHECK(f[1] == doctest::Approx(0.75));
    CHECK(f[2] == doctest::Approx(0.5));
    const FrequencyTuple edge{-1e-18, 3.0, 0.999999999};
    for (double c : edge.components())
    {
        CHECK(c >= 0.0);
        CHECK(c < 1.0);
    }
}

TEST_CASE("SpectralModel rejects repeated tuples and zero gains")
{
    const FrequencyTuple f{0.1, 0.2};
    CHECK_THROWS_AS(SpectralModel({{f, 1.0}, {f, 2.0}}), std::invalid_argument);
    CHECK_THROWS_AS(SpectralModel({{f, 0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(SpectralModel({{f, 1.0}, {FrequencyTuple{0.1}, 1.0}}), std::invalid_argument);
    const SpectralModel ok({{f, 1.0}, {FrequencyTuple{0.3, 0.2}, Complex(0, 1)}});
    CHECK(ok.order() == 2);
    CHECK(ok.d() == 2);
}

TEST_CASE("steering_vector examples")
{
    const CVector a0 = steering_vector(FrequencyTuple{0.0}, DimsSpec({2}));
    CHECK(std::abs(a0(0) - 1.0) < 1e-15);
    CHECK(std::abs(a0(1) - 1.0) < 1e-15);

    const CVector ah = steering_vector(FrequencyTuple{0.5}, DimsSpec({2}));
    CHECK(std::abs(ah(0) - 1.0) < 1e-15);
    CHECK(std::abs(ah(1) + 1.0) < 1e-15);

    const CVector a2 = steering_vector(FrequencyTuple{0.25, 0.0}, DimsSpec{2, 2});
    const Complex i(0.0, 1.0);
    const Complex expect[4] = {1.0, 1.0, i, i};
    for (int j = 0; j < 4; ++j)
    {
        CHECK(std::abs(a2(j) - expect[j]) < 1e-15);
    }

    CHECK_THROWS_AS(steering_vector(FrequencyTuple{0.1}, DimsSpec{2, 2}), std::invalid_argument);
}

TEST_CASE("steering_vector matches the direct product over multi-indices")
{
    or_::Random rng(11);
    const std::vector<std::vector<Index>> shapes{{7}, {3, 5}, {4, 3, 2}, {2, 2, 2, 3}};
    for (const auto& s : shapes)
    {
        for (int rep = 0; rep < 5; ++rep)
        {
            std::vector<double> f;
            for (std::size_t i = 0; i < s.size(); ++i)
            {
                f.push_back(rng.uniform());
            }
            const CVector a = steering_vector(FrequencyTuple(f), DimsSpec(s));
            const CVector o = or_::steering(f, s);
            CHECK((a - o).cwiseAbs().maxCoeff() < 1e-12);
            // unit modulus entries, ||a||^2 = N_D
            CHECK((a.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-14);
            CHECK(a.squaredNorm() == doctest::Approx(static_cast<double>(or_::product(s))));
        }
        const std::vector<double> zero(s.size(), 0.0);
        CHECK((steering_vector(FrequencyTuple(zero), DimsSpec(s)) - ones(or_::product(s)))
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    }
}

TEST_CASE("reduced_steering_vector lives on the (N_i - 1) grid")
{
    const DimsSpec dims{4, 3};
    const std::vector<double> f{0.13, 0.71};
    const CVector r = reduced_steering_vector(FrequencyTuple(f), dims);
    CHECK((r - or_::steering(f, {3, 2})).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("synthesize examples and linearity")
{
    const DimsSpec dims{3, 4};
    const SpectralModel dc({{FrequencyTuple{0.0, 0.0}, 1.0}});
    CHECK((synthesize(dc, dims) - ones(12)).cwiseAbs().maxCoeff() < 1e-15);

    // arithmetic cancellation through the unchecked overload
    const FrequencyTuple f{0.2, 0.7};
    const std::vector<SpectralComponent> cancel{{f, 1.0}, {f, -1.0}};
    CHECK(synthesize(std::span<const SpectralComponent>(cancel), dims).cwiseAbs().maxCoeff() <
          1e-15);

    or_::Random rng(5);
    std::vector<SpectralComponent> m1, m2;
    for (int l = 0; l < 3; ++l)
    {
        m1.push_back({FrequencyTuple{rng.uniform(), rng.uniform()}, rng.normal()});
        m2.push_back({FrequencyTuple{rng.uniform(), rng.uniform()}, rng.normal()});
    }
    std::vector<SpectralComponent> both = m1;
    both.insert(both.end(), m2.begin(), m2.end());
    const CVector lhs = synthesize(SpectralModel(both), dims);
    const CVector rhs = synthesize(SpectralModel(m1), dims) + synthesize(SpectralModel(m2), dims);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("synthesize on the 8x8 three-tone model agrees with direct summation")
{
    const DimsSpec dims{8, 8};
    const double f1[3] = {0.35, 0.31, 0.37};
    const double f2[3] = {0.51, 0.59, 0.57};
    or_::Random rng(3);
    std::vector<SpectralComponent> comps;
    for (int l = 0; l < 3; ++l)
    {
        comps.push_back({FrequencyTuple{f1[l], f2[l]}, rng.unit_phase()});
    }
    const CVector x = synthesize(SpectralModel(comps), dims);
    REQUIRE(x.size() == 64);

    CVector direct = CVector::Zero(64);
    for (Index n1 = 0; n1 < 8; ++n1)
    {
        for (Index n2 = 0; n2 < 8; ++n2)
        {
            for (int l = 0; l < 3; ++l)
            {
                direct(n1 * 8 + n2) +=
                    comps[l].gain * std::exp(Complex(0, kTwoPi * (n1 * f1[l] + n2 * f2[l])));
            }
        }
    }
    CHECK((x - direct).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(x.squaredNorm() == doctest::Approx(direct.squaredNorm()).epsilon(1e-13));
}

TEST_CASE("ObservationMask invariants")
{
    const DimsSpec dims{2, 3};
    CHECK_THROWS_AS(ObservationMask(dims, {0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(ObservationMask(dims, {6}), std::out_of_range);
    CHECK_THROWS_AS(ObservationMask(dims, {1}, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(ObservationMask(dims, {1, 2}, {1.0}), std::invalid_argument);
    const ObservationMask m(dims, {4, 1, 3});
    CHECK(m.indices() == std::vector<Index>{1, 3, 4});
    CHECK(m.count() == 3);
    CHECK(ObservationMask::full(dims).count() == 6);
}

TEST_CASE("apply_mask examples")
{
    const DimsSpec dims{2, 3};
    or_::Random rng(2);
    const CVector x = rng.vector(6);

    const Observation full = apply_mask(x, ObservationMask::full(dims));
    REQUIRE(full.values.size() == 6);
    for (Index j = 0; j < 6; ++j)
    {
        CHECK(full.values[j] == x(j));
    }

    CHECK(apply_mask(x, ObservationMask(dims, {})).values.empty());

    const Observation y = apply_mask(ones(6), ObservationMask(dims, {0}, {2.0}));
    REQUIRE(y.values.size() == 1);
    CHECK(y.values[0] == Complex(2.0, 0.0));

    const ObservationMask wmask(dims, {1, 5}, {Complex(0, 1), Complex(2, -1)});
    const Observation yw = apply_mask(x, wmask);
    CHECK(std::abs(yw.values[0] - Complex(0, 1) * x(1)) < 1e-15);
    CHECK(std::abs(yw.values[1] - Complex(2, -1) * x(5)) < 1e-15);

    CHECK_THROWS(apply_mask(rng.vector(5), ObservationMask::full(dims)));
}

TEST_CASE("random_mask follows the partial Fisher-Yates contract")
{
    const DimsSpec dims{8, 8};
    CHECK(random_mask(dims, 64, 9) == ObservationMask::full(dims));
    CHECK(random_mask(dims, 0, 9).count() == 0);
    CHECK(random_mask(dims, 12, 77) == random_mask(dims, 12, 77));
    CHECK_THROWS_AS(random_mask(dims, 65, 1), std::invalid_argument);
    CHECK_THROWS_AS(random_mask(dims, -1, 1), std::invalid_argument);

    for (std::uint64_t seed : {1ULL, 2ULL, 12345ULL})
    {
        // reference shuffle from the generator definition
        std::vector<Index> perm(64);
        std::iota(perm.begin(), perm.end(), 0);
        CounterRng rng(seed);
        for (Index i = 0; i < 12; ++i)
        {
            const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(64 - i)));
            std::swap(perm[i], perm[j]);
        }
        std::vector<Index> expect(perm.begin(), perm.begin() + 12);
        std::sort(expect.begin(), expect.end());
        const ObservationMask m = random_mask(dims, 12, seed);
        CHECK(m.indices() == expect);
        for (const auto& w : m.weights())
        {
            CHECK(w == Complex(1.0, 0.0));
        }
    }
}

TEST_CASE("random_mask covers the grid roughly uniformly")
{
    const DimsSpec dims{4, 4};
    std::vector<int> hits(16, 0);
    const int draws = 4000;
    for (int s = 0; s < draws; ++s)
    {
        const ObservationMask mask = random_mask(dims, 4, static_cast<std::uint64_t>(s));
        for (Index j : mask.indices())
        {
            ++hits[j];
        }
    }
    // expected 1000 per cell, standard deviation about 27
    for (int h : hits)
    {
        CHECK(std::abs(h - 1000) < 150);
    }
}

TEST_CASE("nmse examples")
{
    or_::Random rng(8);
    const CVector x = rng.vector(10);
    CHECK(nmse(x, x) == 0.0);
    CHECK(nmse(CVector::Zero(10), x) == doctest::Approx(1.0));
    CHECK(nmse(2.0 * x, x) == doctest::Approx(1.0));
    const CVector y = rng.vector(10);
    CHECK(nmse(y, x) == doctest::Approx((y - x).norm() / x.norm()));
    CHECK_THROWS_AS(nmse(x, CVector::Zero(10)), std::domain_error);
    CHECK_THROWS(nmse(x, rng.vector(9)));
}

TEST_CASE("torus distance and wrap")
{
    CHECK(torus_distance(0.95, 0.05) == doctest::Approx(0.1));
    CHECK(torus_distance(0.2, 0.7) == doctest::Approx(0.5));
    CHECK(wrap_unit(-0.25) == doctest::Approx(0.75));
    or_::Random rng(1);
    for (int k = 0; k < 200; ++k)
    {
        const double a = rng.uniform(), b = rng.uniform();
        CHECK(torus_distance(a, b) == doctest::Approx(or_::torus(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("match_frequencies agrees with exhaustive assignment")
{
    or_::Random rng(21);
    for (int rep = 0; rep < 30; ++rep)
    {
        const Index r = rng.integer(1, 5);
        std::vector<FrequencyTuple> ref, est;
        for (Index l = 0; l < r; ++l)
        {
            ref.push_back(FrequencyTuple{rng.uniform(), rng.uniform()});
            est.push_back(FrequencyTuple{rng.uniform(), rng.uniform()});
        }
        std::shuffle(est.begin(), est.end(), rng.engine());
        const FrequencyMatch m = match_frequencies(ref, est);
        const auto expect      = or_::matched_errors(ref, est);
        REQUIRE(m.max_component_error.size() == expect.size());
        for (std::size_t l = 0; l < expect.size(); ++l)
        {
            CHECK(m.max_component_error[l] == doctest::Approx(expect[l]));
        }
    }

    // permuted copies match exactly
    const std::vector<FrequencyTuple> ref{{0.1, 0.2}, {0.5, 0.9}, {0.99, 0.01}};
    const std::vector<FrequencyTuple> est{{0.99, 0.01}, {0.1, 0.2}, {0.5, 0.9}};
    const FrequencyMatch m = match_frequencies(ref, est);
    CHECK(m.assignment == std::vector<Index>{1, 2, 0});
    CHECK(m.total_distance == 0.0);

    // fewer estimates than references
    const FrequencyMatch short_m = match_frequencies(ref, std::vector<FrequencyTuple>{{0.5, 0.9}});
    CHECK(short_m.assignment[1] == 0);
    CHECK(std::isinf(short_m.max_component_error[0]));
}

} // TEST_SUITE
