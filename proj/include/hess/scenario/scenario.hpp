#pragma once

// Synthetic net-load scenarios (wind, PV and an industrial load) at 1 s, and
// layer forecasts with a controlled error level.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "hess/core/errors.hpp"
#include "hess/core/time_series.hpp"

namespace hess {

enum class Archetype { Balanced, Oversupply, Deficit, ExtremeCalm };

inline const char* to_string(Archetype a) {
    switch (a) {
        case Archetype::Balanced: return "balanced";
        case Archetype::Oversupply: return "oversupply";
        case Archetype::Deficit: return "deficit";
        case Archetype::ExtremeCalm: return "extreme_calm";
    }
    return "?";
}

inline Archetype parse_archetype(const std::string& s) {
    if (s == "balanced") return Archetype::Balanced;
    if (s == "oversupply") return Archetype::Oversupply;
    if (s == "deficit") return Archetype::Deficit;
    if (s == "extreme_calm") return Archetype::ExtremeCalm;
    throw ConfigError("unknown archetype '" + s + "'");
}

struct ScenarioConfig {
    std::uint64_t seed = 1;
    int days = 7;
    std::int64_t start_epoch = 0;
    double wind_capacity = 425.0;  // MW
    double pv_capacity = 375.0;
    double load_peak = 200.0;
    Archetype archetype = Archetype::Balanced;
    std::array<double, 3> forecast_accuracy{0.9, 0.9, 0.9};  // L1, L2, L3
    double calm_start_day = 1.0;  // extreme_calm window
    double calm_days = 3.0;
    double turbulence_intensity = 0.04;  // farm level, fraction of mean speed
    double weibull_shape = 2.0;
    double wind_tau_h = 3.0;  // correlation time of the weather process
};

struct ScenarioComponents {
    TimeSeries wind, pv, load;
    TimeSeries net_load() const {
        TimeSeries n = load;
        for (std::size_t i = 0; i < n.size(); ++i) n.values[i] = load[i] - wind[i] - pv[i];
        return n;
    }
};

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Unit-variance Ornstein-Uhlenbeck samples at a fixed step.
inline std::vector<double> ou_process(std::mt19937_64& rng, std::size_t n, double step, double tau) {
    std::normal_distribution<double> g(0.0, 1.0);
    const double a = std::exp(-step / tau), b = std::sqrt(1.0 - a * a);
    std::vector<double> z(n);
    double cur = g(rng);
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = cur;
        cur = a * cur + b * g(rng);
    }
    return z;
}

// Linear interpolation of minute knots onto seconds.
inline double knot_value(const std::vector<double>& knots, std::size_t second) {
    const std::size_t k = second / 60;
    const double f = static_cast<double>(second % 60) / 60.0;
    const double a = knots[k], b = knots[std::min(k + 1, knots.size() - 1)];
    return a + (b - a) * f;
}

inline double wind_power_curve(double v, double cap) {
    constexpr double cut_in = 3.0, rated = 12.0, cut_out = 25.0;
    if (v < cut_in || v > cut_out) return 0.0;
    if (v >= rated) return cap;
    return cap * (v * v * v - cut_in * cut_in * cut_in) / (rated * rated * rated - cut_in * cut_in * cut_in);
}

struct ArchetypeScale {
    double weibull_scale, pv, load;
};

inline ArchetypeScale archetype_scale(Archetype a) {
    switch (a) {
        case Archetype::Oversupply: return {9.0, 1.1, 0.8};
        case Archetype::Deficit: return {5.0, 0.6, 1.1};
        case Archetype::Balanced: return {8.0, 1.0, 1.0};
        case Archetype::ExtremeCalm: break;
    }
    return {7.0, 1.0, 1.0};
}

}  // namespace detail

inline ScenarioComponents synthesize_components(const ScenarioConfig& c) {
    if (c.days < 1) throw ConfigError("scenario must last at least one day");
    const std::size_t n = static_cast<std::size_t>(c.days) * 86400;
    const std::size_t knots = n / 60 + 1;
    const auto sc = detail::archetype_scale(c.archetype);
    std::mt19937_64 rng(c.seed);

    // slow weather: latent Gaussian mapped onto a Weibull speed
    const auto z_wind = detail::ou_process(rng, knots, 60.0, c.wind_tau_h * 3600.0);
    const auto z_cloud = detail::ou_process(rng, knots, 60.0, 2.0 * 3600.0);
    const auto z_load = detail::ou_process(rng, knots, 60.0, 300.0);
    const auto turb = detail::ou_process(rng, n, 1.0, 20.0);

    std::vector<double> speed_knots(knots), cloud_knots(knots);
    for (std::size_t k = 0; k < knots; ++k) {
        const double u = std::clamp(detail::normal_cdf(z_wind[k]), 1e-12, 1.0 - 1e-12);
        speed_knots[k] = sc.weibull_scale * std::pow(-std::log(1.0 - u), 1.0 / c.weibull_shape);
        // mostly clear skies with passing cloud banks
        cloud_knots[k] = 1.0 - 0.75 * std::pow(detail::normal_cdf(z_cloud[k]), 2.0);
    }

    ScenarioComponents out;
    out.wind = TimeSeries(c.start_epoch, 1, std::vector<double>(n));
    out.pv = TimeSeries(c.start_epoch, 1, std::vector<double>(n));
    out.load = TimeSeries(c.start_epoch, 1, std::vector<double>(n));
    const double calm_lo = c.calm_start_day * 86400.0, calm_hi = (c.calm_start_day + c.calm_days) * 86400.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i);
        const double hour = std::fmod(t / 3600.0, 24.0);

        const double v_mean = detail::knot_value(speed_knots, i);
        const double v = std::max(0.0, v_mean * (1.0 + c.turbulence_intensity * turb[i]));
        double wind = detail::wind_power_curve(v, c.wind_capacity);

        double pv = 0.0;
        if (hour > 6.0 && hour < 18.0) {
            const double clear = std::pow(std::sin(std::numbers::pi * (hour - 6.0) / 12.0), 1.3);
            pv = 0.85 * c.pv_capacity * sc.pv * clear * detail::knot_value(cloud_knots, i);
        }

        // three shifts with changeover dips, a 15 minute process cycle and noise
        const double into_shift = std::fmod(hour, 8.0);
        const double dip = (into_shift < 0.3 || into_shift > 7.8) ? 0.12 : 0.0;
        const double day_shape = 0.06 * std::sin(2.0 * std::numbers::pi * (hour - 9.0) / 24.0);
        const double cycle = 0.03 * std::sin(2.0 * std::numbers::pi * t / 900.0);
        const double noise = 0.02 * detail::knot_value(z_load, i);
        const double load = c.load_peak * sc.load * (0.8 + day_shape + cycle + noise - dip);

        if (c.archetype == Archetype::ExtremeCalm && t >= calm_lo && t < calm_hi) {
            wind = 0.0;
            pv = 0.0;
        }
        out.wind.values[i] = wind;
        out.pv.values[i] = pv;
        out.load.values[i] = load;
    }
    return out;
}

inline TimeSeries synthesize(const ScenarioConfig& c) { return synthesize_components(c).net_load(); }

struct ForecastResult {
    TimeSeries forecast;
    bool degenerate = false;  // actuals all zero, accuracy undefined
};

// Aggregate to the layer step and add a zero-mean AR(1) error scaled so that
// 1 - MAE / mean|aggregate| equals the requested accuracy.
inline ForecastResult make_forecast_checked(const TimeSeries& actuals, std::int64_t dt, double accuracy,
                                            std::uint64_t seed, double ar = 0.8) {
    if (!(accuracy > 0.0 && accuracy <= 1.0)) throw DomainError("forecast accuracy must lie in (0, 1]");
    ForecastResult out{resample(actuals, dt)};
    double mean_abs = 0.0;
    for (double v : out.forecast.values) mean_abs += std::abs(v);
    mean_abs /= static_cast<double>(out.forecast.size());
    if (mean_abs == 0.0) {
        out.degenerate = true;
        return out;
    }
    if (accuracy == 1.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> e(out.forecast.size());
    double cur = g(rng);
    for (auto& x : e) {
        x = cur;
        cur = ar * cur + std::sqrt(1.0 - ar * ar) * g(rng);
    }
    double mean = 0.0;
    for (double x : e) mean += x;
    mean /= static_cast<double>(e.size());
    double mae = 0.0;
    for (auto& x : e) {
        x -= mean;
        mae += std::abs(x);
    }
    mae /= static_cast<double>(e.size());
    if (mae == 0.0) return out;
    const double scale = (1.0 - accuracy) * mean_abs / mae;
    for (std::size_t i = 0; i < e.size(); ++i) out.forecast.values[i] += scale * e[i];
    return out;
}

inline TimeSeries make_forecast(const TimeSeries& actuals, std::int64_t dt, double accuracy, std::uint64_t seed) {
    return make_forecast_checked(actuals, dt, accuracy, seed).forecast;
}

// Realized accuracy of a forecast against aggregated actuals.
inline double forecast_accuracy(const TimeSeries& aggregated, const TimeSeries& forecast) {
    require_aligned(aggregated, forecast);
    double err = 0.0, mag = 0.0;
    for (std::size_t i = 0; i < forecast.size(); ++i) {
        err += std::abs(forecast[i] - aggregated[i]);
        mag += std::abs(aggregated[i]);
    }
    return 1.0 - err / mag;
}

// Value at an epoch; past the end the last day repeats.
inline double padded_value(const TimeSeries& ts, std::int64_t epoch) {
    if (epoch < ts.start_epoch) return ts.values.front();
    const std::int64_t end = ts.end_epoch();
    if (epoch >= end) {
        const std::int64_t span = std::min<std::int64_t>(86400, end - ts.start_epoch);
        epoch = end - span + (epoch - end) % span;
    }
    return ts[static_cast<std::size_t>((epoch - ts.start_epoch) / ts.dt)];
}

inline TimeSeries forecast_window(const TimeSeries& ts, std::int64_t start, std::size_t n) {
    TimeSeries w(start, ts.dt, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) w.values[i] = padded_value(ts, start + static_cast<std::int64_t>(i) * ts.dt);
    return w;
}

// Seeds for the three layer forecasts derived from the scenario seed.
inline std::uint64_t layer_seed(std::uint64_t seed, int layer) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(layer), 0x5eedu};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

struct Scenario {
    TimeSeries actual;                    // 1 s net load
    std::array<TimeSeries, 3> forecasts;  // L1, L2, L3
    std::string name;
};

inline Scenario build_scenario(const TimeSeries& actual, const std::array<double, 3>& accuracy, std::uint64_t seed,
                               std::array<std::int64_t, 3> steps = {3600, 900, 60}) {
    Scenario s;
    s.actual = actual;
    for (int l = 0; l < 3; ++l)
        s.forecasts[static_cast<std::size_t>(l)] =
            make_forecast(actual, steps[static_cast<std::size_t>(l)], accuracy[static_cast<std::size_t>(l)], layer_seed(seed, l + 1));
    return s;
}

inline Scenario build_scenario(const ScenarioConfig& c) {
    Scenario s = build_scenario(synthesize(c), c.forecast_accuracy, c.seed);
    s.name = std::string(to_string(c.archetype)) + "-seed" + std::to_string(c.seed);
    return s;
}

}  // namespace hess
