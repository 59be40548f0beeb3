#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "hess/scenario/scenario.hpp"

using namespace hess;

namespace {

ScenarioConfig short_config(Archetype a, std::uint64_t seed, int days = 1) {
    ScenarioConfig c;
    c.archetype = a;
    c.seed = seed;
    c.days = days;
    return c;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

TEST(Synthesize, SameSeedIsIdentical) {
    const auto c = short_config(Archetype::Balanced, 42);
    const auto a = synthesize(c), b = synthesize(c);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.start_epoch, b.start_epoch);
    EXPECT_NE(a.values, synthesize(short_config(Archetype::Balanced, 43)).values);
}

TEST(Synthesize, OneSecondSamplesAndFinite) {
    const auto ts = synthesize(short_config(Archetype::Oversupply, 3, 2));
    EXPECT_EQ(ts.dt, 1);
    ASSERT_EQ(ts.size(), 2u * 86400u);
    for (double v : ts.values) ASSERT_TRUE(std::isfinite(v));
}

TEST(Synthesize, ExtremeCalmWindowHasNoRenewables) {
    auto c = short_config(Archetype::ExtremeCalm, 5, 4);
    c.calm_start_day = 1.0;
    c.calm_days = 2.0;
    const auto parts = synthesize_components(c);
    double outside = 0.0;
    for (std::size_t i = 0; i < parts.wind.size(); ++i) {
        const bool inside = i >= 86400 && i < 3 * 86400;
        if (inside) {
            ASSERT_EQ(parts.wind[i], 0.0) << i;
            ASSERT_EQ(parts.pv[i], 0.0) << i;
        } else {
            outside += parts.wind[i] + parts.pv[i];
        }
    }
    EXPECT_GT(outside, 0.0);
}

TEST(Synthesize, OversupplyRunsNegativeOnMostSeeds) {
    int negative = 0;
    constexpr int seeds = 20;
    for (int s = 1; s <= seeds; ++s)
        if (mean(synthesize(short_config(Archetype::Oversupply, static_cast<std::uint64_t>(s), 7)).values) < 0.0) ++negative;
    EXPECT_GE(negative, 19);  // 95 % of seeds
}

TEST(Synthesize, ComponentsStayWithinCapacities) {
    const auto c = short_config(Archetype::Balanced, 9, 2);
    const auto parts = synthesize_components(c);
    for (std::size_t i = 0; i < parts.wind.size(); ++i) {
        ASSERT_GE(parts.wind[i], 0.0);
        ASSERT_LE(parts.wind[i], c.wind_capacity);
        ASSERT_GE(parts.pv[i], 0.0);
        ASSERT_LE(parts.pv[i], c.pv_capacity);
        ASSERT_GT(parts.load[i], 0.0);
    }
}

TEST(Synthesize, RejectsZeroDays) {
    EXPECT_THROW(synthesize(short_config(Archetype::Balanced, 1, 0)), ConfigError);
}

TEST(Forecast, UnitAccuracyIsTheAggregate) {
    const auto a = synthesize(short_config(Archetype::Balanced, 7));
    for (std::int64_t dt : {60, 900, 3600}) {
        const auto f = make_forecast(a, dt, 1.0, 11);
        EXPECT_EQ(f.values, resample(a, dt).values);
    }
}

TEST(Forecast, ConstantSeriesAggregatesToItself) {
    TimeSeries c(0, 1, std::vector<double>(7200, -3.5));
    for (std::int64_t dt : {1, 60, 900, 3600}) {
        const auto f = make_forecast(c, dt, 1.0, 1);
        for (double v : f.values) EXPECT_DOUBLE_EQ(v, -3.5);
    }
}

TEST(Forecast, NinetyPercentHasTenPercentError) {
    const auto a = synthesize(short_config(Archetype::Balanced, 2, 3));
    const auto agg = resample(a, 900);
    const auto f = make_forecast(a, 900, 0.9, 99);
    double err = 0.0, mag = 0.0;
    for (std::size_t i = 0; i < agg.size(); ++i) {
        err += std::abs(f[i] - agg[i]);
        mag += std::abs(agg[i]);
    }
    EXPECT_NEAR(err / mag, 0.10, 0.01);
}

TEST(Forecast, CalibratedAcrossSeedsAndLevels) {
    const auto a = synthesize(short_config(Archetype::Balanced, 4, 7));
    for (double acc : {0.95, 0.9, 0.8, 0.7}) {
        for (std::uint64_t s = 1; s <= 50; ++s) {
            for (std::int64_t dt : {60, 900, 3600}) {
                const auto f = make_forecast(a, dt, acc, s);
                ASSERT_NEAR(forecast_accuracy(resample(a, dt), f), acc, 0.015) << acc << " seed " << s << " dt " << dt;
            }
        }
    }
}

TEST(Forecast, ErrorIsZeroMeanAndPersistent) {
    const auto a = synthesize(short_config(Archetype::Balanced, 8, 7));
    const auto agg = resample(a, 60);
    const auto f = make_forecast(a, 60, 0.8, 5);
    std::vector<double> e(agg.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = f[i] - agg[i];
    const double m = mean(e);
    double var = 0.0, lag = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        var += (e[i] - m) * (e[i] - m);
        if (i > 0) lag += (e[i] - m) * (e[i - 1] - m);
    }
    EXPECT_NEAR(m, 0.0, 1e-9 * std::sqrt(var));
    EXPECT_NEAR(lag / var, 0.8, 0.03);
}

TEST(Forecast, DeterministicPerSeed) {
    const auto a = synthesize(short_config(Archetype::Deficit, 1));
    EXPECT_EQ(make_forecast(a, 900, 0.85, 3).values, make_forecast(a, 900, 0.85, 3).values);
    EXPECT_NE(make_forecast(a, 900, 0.85, 3).values, make_forecast(a, 900, 0.85, 4).values);
}

TEST(Forecast, AllZeroActualsAreFlagged) {
    TimeSeries z(0, 1, std::vector<double>(3600, 0.0));
    const auto r = make_forecast_checked(z, 60, 0.9, 1);
    EXPECT_TRUE(r.degenerate);
    for (double v : r.forecast.values) EXPECT_EQ(v, 0.0);
}

TEST(Forecast, RejectsAccuracyOutsideUnitInterval) {
    TimeSeries a(0, 1, std::vector<double>(120, 1.0));
    EXPECT_THROW(make_forecast(a, 60, 0.0, 1), DomainError);
    EXPECT_THROW(make_forecast(a, 60, 1.01, 1), DomainError);
    EXPECT_THROW(make_forecast(a, 7, 0.9, 1), IncompatibleStep);
}

TEST(ForecastWindow, PadsPastTheEndWithTheLastDay) {
    std::vector<double> v(2 * 24);
    std::iota(v.begin(), v.end(), 0.0);
    TimeSeries ts(0, 3600, v);
    const auto w = forecast_window(ts, 47 * 3600, 3);
    EXPECT_EQ(w[0], 47.0);
    EXPECT_EQ(w[1], 24.0);
    EXPECT_EQ(w[2], 25.0);
}

TEST(BuildScenario, LayerForecastsUseTheirSteps) {
    const auto s = build_scenario(short_config(Archetype::Balanced, 1));
    EXPECT_EQ(s.forecasts[0].dt, 3600);
    EXPECT_EQ(s.forecasts[1].dt, 900);
    EXPECT_EQ(s.forecasts[2].dt, 60);
    EXPECT_EQ(s.forecasts[0].size(), 24u);
    EXPECT_EQ(s.name, "balanced-seed1");
    // layers draw independent errors
    EXPECT_NE(layer_seed(1, 1), layer_seed(1, 2));
}
