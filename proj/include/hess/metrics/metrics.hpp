#pragma once

// Evaluation quantities: smoothing, minute fluctuation, round-trip
// efficiency and the two-part tariff benefit.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hess/core/errors.hpp"
#include "hess/core/time_series.hpp"

namespace hess {

// A ratio that may be undefined when its denominator vanishes.
struct Ratio {
    double value = std::numeric_limits<double>::quiet_NaN();
    bool defined = false;
};

inline Ratio one_minus_ratio(double num, double den) {
    if (den == 0.0) return {};
    return {1.0 - num / den, true};
}

inline Ratio smoothing_rate(const TimeSeries& original, const TimeSeries& residual) {
    require_aligned(original, residual);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < original.size(); ++i) {
        num += std::abs(residual[i]);
        den += std::abs(original[i]);
    }
    return one_minus_ratio(num, den);
}

// Same idea on root-mean-square power.
inline Ratio smoothing_rate_rms(const TimeSeries& original, const TimeSeries& residual) {
    require_aligned(original, residual);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < original.size(); ++i) {
        num += residual[i] * residual[i];
        den += original[i] * original[i];
    }
    if (den == 0.0) return {};
    return {1.0 - std::sqrt(num / den), true};
}

namespace detail {

inline double minute_variation(const TimeSeries& ts) {
    if (ts.dt > 60 || 60 % ts.dt != 0) throw AlignmentError("series step must divide one minute");
    const std::size_t per = static_cast<std::size_t>(60 / ts.dt);
    const std::size_t minutes = ts.size() / per;
    double total = 0.0, prev = 0.0;
    for (std::size_t m = 0; m < minutes; ++m) {
        double mean = 0.0;
        for (std::size_t i = 0; i < per; ++i) mean += ts[m * per + i];
        mean /= static_cast<double>(per);
        if (m > 0) total += std::abs(mean - prev);
        prev = mean;
    }
    return total;
}

}  // namespace detail

// Whole minutes only; a trailing partial minute is ignored.
inline Ratio minute_fluctuation_reduction(const TimeSeries& original, const TimeSeries& residual) {
    require_aligned(original, residual);
    return one_minus_ratio(detail::minute_variation(residual), detail::minute_variation(original));
}

// Grid-side energy account of one storage device over a run. For the hydrogen
// and methanol chain, stored energy is expressed in hydrogen-equivalent units
// and the efficiencies are the realized averages.
struct DeviceLedger {
    std::string name;
    double absorbed = 0.0;   // MWh taken from the grid
    double delivered = 0.0;  // MWh returned to the grid
    double stored_start = 0.0, stored_end = 0.0;  // MWh
    double eta_c = 1.0, eta_d = 1.0;
};

// Delivered over absorbed. A stock gain is credited as the grid energy it can
// still deliver (dE * eta_d); a stock loss is charged as the grid energy it
// took to store (|dE| / eta_c).
inline Ratio round_trip_efficiency(const std::vector<DeviceLedger>& devices) {
    double out = 0.0, in = 0.0;
    for (const auto& d : devices) {
        const double dE = d.stored_end - d.stored_start;
        out += d.delivered;
        in += d.absorbed;
        if (dE > 0.0) out += dE * d.eta_d;
        else in += -dE / d.eta_c;
    }
    if (!(in > 0.0)) return {};
    return {out / in, true};
}

struct TouBand {
    double start_hour, end_hour;  // [start, end)
    double price;                 // currency/MWh
};

struct TariffConfig {
    std::vector<TouBand> tou{{0, 8, 40}, {8, 12, 90}, {12, 17, 60}, {17, 21, 120}, {21, 24, 60}};
    double capacity_rate = 3000.0;  // currency/MW

    // Problems with the schedule; empty when it tiles the day.
    std::vector<std::string> problems() const {
        std::vector<std::string> out;
        if (tou.empty()) {
            out.push_back("TOU schedule is empty");
            return out;
        }
        auto sorted = tou;
        std::sort(sorted.begin(), sorted.end(), [](const TouBand& a, const TouBand& b) { return a.start_hour < b.start_hour; });
        double at = 0.0;
        for (const auto& b : sorted) {
            if (!(b.end_hour > b.start_hour)) out.push_back("TOU band with non-positive length");
            if (b.start_hour < at - 1e-12) out.push_back("TOU bands overlap");
            else if (b.start_hour > at + 1e-12) out.push_back("TOU schedule has a gap");
            at = std::max(at, b.end_hour);
        }
        if (std::abs(at - 24.0) > 1e-12) out.push_back("TOU schedule does not end at 24 h");
        if (!(capacity_rate >= 0.0)) out.push_back("capacity rate must be nonnegative");
        return out;
    }

    double price_at(std::int64_t epoch) const {
        const double h = std::fmod(static_cast<double>(epoch) / 3600.0, 24.0);
        const double hour = h < 0 ? h + 24.0 : h;
        for (const auto& b : tou)
            if (hour >= b.start_hour && hour < b.end_hour) return b.price;
        throw ConfigError("TOU schedule does not cover hour " + std::to_string(hour));
    }
};

struct Benefit {
    double tou = 0.0;
    double capacity = 0.0;
    double operating_cost = 0.0;
    double total = 0.0;  // tou + capacity - operating_cost
};

inline Benefit economic_benefit(const TimeSeries& load, const TimeSeries& grid, const TariffConfig& tariff,
                                double operating_cost) {
    require_aligned(load, grid);
    Benefit b;
    const double dt_h = static_cast<double>(load.dt) / 3600.0;
    double peak_l = -std::numeric_limits<double>::infinity(), peak_g = peak_l;
    for (std::size_t i = 0; i < load.size(); ++i) {
        b.tou += tariff.price_at(load.epoch_at(i)) * (load[i] - grid[i]) * dt_h;
        peak_l = std::max(peak_l, load[i]);
        peak_g = std::max(peak_g, grid[i]);
    }
    if (load.size() > 0) b.capacity = tariff.capacity_rate * (peak_l - peak_g);
    b.operating_cost = operating_cost;
    b.total = b.tou + b.capacity - b.operating_cost;
    return b;
}

}  // namespace hess
