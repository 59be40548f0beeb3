#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hess/mtip/mtip.hpp"
#include "mtip_oracle.hpp"

using namespace hess;

namespace {

MicroContext context(std::vector<double> micro, double parent, double e0, double e_min, double e_max, double eta,
                     double dt) {
    MicroContext c;
    c.micro_forecast = TimeSeries(0, 1, std::move(micro));
    c.parent_residual = parent;
    c.child.energy = e0;
    c.child.e_min = e_min;
    c.child.e_max = e_max;
    c.child.eta_c = eta;
    c.child.eta_d = eta;
    c.child.power_cap = 1e9;
    c.dt_child = dt;
    return c;
}

}  // namespace

TEST(MicroFluctuation, ConstantForecastGivesZero) {
    const auto xi = micro_fluctuation(context({50, 50, 50}, 50, 0, 0, 1, 1, 1));
    for (double x : xi) EXPECT_EQ(x, 0.0);
}

TEST(MicroFluctuation, Alternating) {
    const auto xi = micro_fluctuation(context({60, 40, 60, 40}, 50, 0, 0, 1, 1, 1));
    EXPECT_EQ(xi, (std::vector<double>{10, -10, 10, -10}));
    double sum = 0.0;
    for (double x : xi) sum += x;
    EXPECT_EQ(sum, 0.0);
}

TEST(MicroFluctuation, LengthMustSpanOneParentStep) {
    auto c = context({1, 2, 3}, 0, 0, 0, 1, 1, 0.25);
    c.dt_parent = 1.0;
    EXPECT_THROW(micro_fluctuation(c), AlignmentError);
    c.micro_forecast = TimeSeries(0, 1, {1, 2, 3, 4});
    EXPECT_NO_THROW(micro_fluctuation(c));
}

TEST(Psi, Examples) {
    EXPECT_EQ(psi(0.0, 0.83, 0.83), 0.0);
    EXPECT_NEAR(psi(83.0, 0.83, 0.83), 100.0, 1e-12);
    EXPECT_NEAR(psi(-100.0, 0.83, 0.83), -83.0, 1e-12);
}

TEST(Psi, MonotoneAndMagnitudeOrdering) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> x(-500, 500), eta(0.05, 1.0);
    for (int t = 0; t < 2000; ++t) {
        const double ec = eta(rng), ed = eta(rng), a = x(rng), b = x(rng);
        if (a < b) EXPECT_LE(psi(a, ec, ed), psi(b, ec, ed));
        const double p = psi(a, ec, ed);
        if (a >= 0) EXPECT_GE(std::abs(p), std::abs(a));
        else EXPECT_LE(std::abs(p), std::abs(a));
        EXPECT_NEAR(psi_inverse(p, ec, ed), a, 1e-9);
    }
}

TEST(FluctuationPotentials, Examples) {
    const auto z = fluctuation_potentials({0, 0, 0}, 0.9, 0.9, 1.0);
    for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_EQ(z.plus[j], 0.0);
        EXPECT_EQ(z.minus[j], 0.0);
    }
    const auto p = fluctuation_potentials({10, -10}, 0.9, 0.9, 1.0);
    EXPECT_NEAR(p.plus[0], 10.0, 1e-12);
    EXPECT_NEAR(p.plus[1], 1.9, 1e-12);
    EXPECT_NEAR(p.minus[0], 12.346, 1e-3);
    EXPECT_NEAR(p.minus[1], 2.346, 1e-3);

    const std::vector<double> xi{3, -7, 2.5, 4};
    const auto one = fluctuation_potentials(xi, 1.0, 1.0, 0.5);
    double cum = 0.0;
    for (std::size_t j = 0; j < xi.size(); ++j) {
        cum += xi[j] * 0.5;
        EXPECT_NEAR(one.plus[j], cum, 1e-12);
        EXPECT_NEAR(one.minus[j], cum, 1e-12);
    }
}

TEST(FluctuationPotentials, LiteralConventionWeightsNegativesByDischargeSquared) {
    const auto p = fluctuation_potentials({10, -10}, 0.8, 0.9, 1.0, PhiConvention::Literal);
    EXPECT_NEAR(p.plus[1], 10.0 - 10.0 * 0.81, 1e-12);
}

TEST(PhysicalBounds, QuietChildFourQuarterHours) {
    const auto b = physical_bounds(context({0, 0, 0, 0}, 0, 500, 0, 1000, 1.0, 0.25));
    EXPECT_NEAR(b.upper, 500.0, 1e-9);
    EXPECT_NEAR(b.lower, -500.0, 1e-9);
    // the binding step is the last one
    for (int j = 1; j <= 4; ++j) EXPECT_LE(b.upper, 500.0 / (0.25 * j) + 1e-9);
}

TEST(PhysicalBounds, EarlySurplusActsAsVirtualCapacity) {
    // empty child, but a surplus arrives first
    const auto c = context({-40, 10, 10, 10}, 0, 0, 0, 1000, 0.9, 0.25);
    const auto b = physical_bounds(c);
    EXPECT_GT(b.upper, 0.0);
    EXPECT_TRUE(brute_force_band_oracle(c, b.upper - 1e-6).respects_lower_envelope);
    EXPECT_FALSE(brute_force_band_oracle(c, b.upper + 1.0).respects_lower_envelope);
}

TEST(PhysicalBounds, EarlyDeficitOnFullChild) {
    const auto c = context({40, -10, -10, -10}, 0, 1000, 0, 1000, 0.9, 0.25);
    const auto b = physical_bounds(c);
    EXPECT_LT(b.lower, 0.0);
    EXPECT_TRUE(brute_force_band_oracle(c, b.lower + 1e-6).respects_upper_envelope);
    EXPECT_FALSE(brute_force_band_oracle(c, b.lower - 1.0).respects_upper_envelope);
}

TEST(BandOracle, Examples) {
    const auto c = context({5, -5, 5, -5}, 0, 300, 100, 900, 0.85, 0.25);
    const auto b = physical_bounds(c);
    EXPECT_TRUE(brute_force_band_oracle(c, b.upper - 1e-6).feasible);
    EXPECT_FALSE(brute_force_band_oracle(c, b.upper + 1.0).feasible);
    EXPECT_TRUE(brute_force_band_oracle(context({0, 0}, 0, 5, 0, 10, 0.9, 1.0), 0.0).feasible);
}

TEST(PhysicalBounds, MatchesBisectionOverOracle) {
    std::mt19937_64 rng(2024);
    for (int t = 0; t < 1000; ++t) {
        const auto c = oracle::random_micro_context(rng);
        const auto b = physical_bounds(c);
        const auto ref = oracle::bisect_band(c);
        ASSERT_NEAR(b.upper, ref.upper, 1e-6) << "instance " << t;
        ASSERT_NEAR(b.lower, ref.lower, 1e-6) << "instance " << t;
    }
}

TEST(PhysicalBounds, LiteralConventionMatchesItsOracle) {
    std::mt19937_64 rng(77);
    for (int t = 0; t < 200; ++t) {
        const auto c = oracle::random_micro_context(rng);
        const auto b = physical_bounds(c, PhiConvention::Literal);
        const auto ref = oracle::bisect_band(c, PhiConvention::Literal);
        ASSERT_NEAR(b.upper, ref.upper, 1e-6) << "instance " << t;
        ASSERT_NEAR(b.lower, ref.lower, 1e-6) << "instance " << t;
    }
}

TEST(PhysicalBounds, ZeroMeanWiggleCostsItsPeakCumulativeEnergy) {
    // unit efficiencies: the wiggle shifts the binding window by its running peak
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 30.0);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> xi(16);
        double mean = 0.0;
        for (auto& x : xi) mean += (x = g(rng));
        mean /= 16.0;
        for (auto& x : xi) x -= mean;
        const auto quiet = context(std::vector<double>(16, 0.0), 0, 50, 0, 100, 1.0, 0.25);
        const auto noisy = context(xi, 0, 50, 0, 100, 1.0, 0.25);
        const auto bq = physical_bounds(quiet), bn = physical_bounds(noisy);
        const auto ref = oracle::bisect_band(noisy);
        EXPECT_NEAR(bn.upper, ref.upper, 1e-6);
        double cum = 0.0, peak = 0.0, best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < xi.size(); ++j) {
            cum += xi[j] * 0.25;
            peak = std::max(peak, cum);
            best = std::min(best, (50.0 - cum) / (0.25 * static_cast<double>(j + 1)));
        }
        EXPECT_NEAR(bn.upper, best, 1e-9);
        // never tighter than the quiet bound less the whole peak over one step
        EXPECT_GE(bn.upper, bq.upper - peak / 0.25 - 1e-9);
        if (peak == 0.0) EXPECT_GE(bn.upper, bq.upper - 1e-9);
    }
}

TEST(MarginalCost, Examples) {
    EXPECT_EQ(marginal_cost({0.0, 0.0}, 1.0), 0.0);
    EXPECT_EQ(marginal_cost({20.0, 20.0}, 1.0), 20.0);
    EXPECT_EQ(marginal_cost({6, 8, 3, 10}, 2.0), 2.0 * marginal_cost({6, 8, 3, 10}, 1.0));
    EXPECT_EQ(marginal_cost({6, 8, 3, 10}, 1.0, {false, true, false, true}), 9.0);
}

TEST(AdaptiveBounds, MidpointGivesHalf) {
    const auto m = adaptive_bounds({-100, 100}, 3.0, 3.0, 5.0, 1.0, 2.0);
    EXPECT_EQ(m.gamma, 0.5);
    EXPECT_DOUBLE_EQ(m.r_upper, 51.0);
    EXPECT_DOUBLE_EQ(m.r_lower, -51.0);
}

TEST(AdaptiveBounds, TableValues) {
    const auto m = adaptive_bounds({-80, 120}, 2.0, 1.0, 5.0, 1.0, 2.0);
    const double g = 1.0 / (1.0 + std::exp(-5.0));
    EXPECT_NEAR(m.gamma, 0.9933, 1e-4);
    EXPECT_NEAR(m.r_upper, g * 120.0 + (1 - g) * 2.0, 1e-12);
    EXPECT_NEAR((1 - g) * 2.0, 0.0134, 1e-4);
}

TEST(AdaptiveBounds, SmallRatioShrinksTowardDeadband) {
    const auto m = adaptive_bounds({-1000, 1000}, 1e-12, 1.0, 5.0, 1.0, 2.0);
    const double g = 1.0 / (1.0 + std::exp(5.0));
    EXPECT_NEAR(m.gamma, g, 1e-9);
    EXPECT_NEAR(m.r_upper, g * 1000 + (1 - g) * 2.0, 1e-6);
}

TEST(AdaptiveBounds, GammaStrictlyInsideAndMonotone) {
    double prev = 0.0;
    for (double ratio = 0.01; ratio < 4.0; ratio += 0.01) {
        const double g = blend_factor(ratio, 5.0, 1.0);
        EXPECT_GT(g, 0.0);
        EXPECT_LT(g, 1.0);
        EXPECT_GT(g, prev);
        prev = g;
    }
}

TEST(AdaptiveBounds, NestingAtBoundaryValues) {
    const auto one = blend_bounds({-37, 81}, 1.0, 2.0);
    EXPECT_EQ(one.r_lower, -37.0);
    EXPECT_EQ(one.r_upper, 81.0);
    const auto zero = blend_bounds({-37, 81}, 0.0, 2.0);
    EXPECT_EQ(zero.r_lower, -2.0);
    EXPECT_EQ(zero.r_upper, 2.0);
}

TEST(AdaptiveBounds, CrossedBandCollapsesToMidpoint) {
    const auto m = blend_bounds({30, 10}, 1.0, 2.0);
    EXPECT_TRUE(m.clamped);
    EXPECT_EQ(m.r_lower, 20.0);
    EXPECT_EQ(m.r_upper, 20.0);
    EXPECT_FALSE(blend_bounds({-1, 1}, 0.7, 2.0).clamped);
}

TEST(AdaptiveBounds, SidesBlendIndependently) {
    const auto m = adaptive_bounds({-100, 100}, SideCosts{9.0, 9.0, 6.0, 9.0}, 5.0, 1.0, 2.0);
    EXPECT_EQ(m.gamma, 0.5);
    EXPECT_LT(m.gamma_lower, 0.5);
    EXPECT_EQ(m.r_upper, 51.0);
    EXPECT_GT(m.r_lower, -51.0);
}

TEST(AdaptiveBounds, RejectsZeroChildCost) {
    EXPECT_THROW(adaptive_bounds({-1, 1}, 1.0, 0.0, 5.0, 1.0, 2.0), DomainError);
}
