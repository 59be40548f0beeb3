#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "hess/core/errors.hpp"

namespace hess {

// Uniformly sampled power (MW) or energy trace. Sample i covers
// [start_epoch + i*dt, start_epoch + (i+1)*dt).
struct TimeSeries {
    std::int64_t start_epoch = 0;  // s
    std::int64_t dt = 1;           // s
    std::vector<double> values;

    TimeSeries() = default;
    TimeSeries(std::int64_t start, std::int64_t step, std::vector<double> v)
        : start_epoch(start), dt(step), values(std::move(v)) {
        if (dt <= 0) throw IncompatibleStep("time series step must be positive");
    }

    std::size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }
    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
    std::int64_t end_epoch() const { return start_epoch + dt * static_cast<std::int64_t>(values.size()); }
    std::int64_t epoch_at(std::size_t i) const { return start_epoch + dt * static_cast<std::int64_t>(i); }

    // Integral in MWh.
    double energy_mwh() const {
        return std::accumulate(values.begin(), values.end(), 0.0) * static_cast<double>(dt) / 3600.0;
    }
};

inline bool aligned(const TimeSeries& a, const TimeSeries& b) {
    return a.start_epoch == b.start_epoch && a.dt == b.dt && a.size() == b.size();
}

inline void require_aligned(const TimeSeries& a, const TimeSeries& b) {
    if (!aligned(a, b)) throw AlignmentError("time series are not aligned");
}

// Downsample by block mean, upsample by zero-order hold.
inline TimeSeries resample(const TimeSeries& ts, std::int64_t new_dt) {
    if (new_dt <= 0) throw IncompatibleStep("resample step must be positive");
    if (new_dt == ts.dt) return ts;
    TimeSeries out;
    out.start_epoch = ts.start_epoch;
    out.dt = new_dt;
    if (new_dt > ts.dt) {
        if (new_dt % ts.dt != 0) throw IncompatibleStep("new step is not a multiple of the old step");
        const auto k = static_cast<std::size_t>(new_dt / ts.dt);
        if (ts.size() % k != 0) throw IncompatibleStep("series length is not a whole number of new steps");
        out.values.resize(ts.size() / k);
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < k; ++j) s += ts.values[i * k + j];
            out.values[i] = s / static_cast<double>(k);
        }
    } else {
        if (ts.dt % new_dt != 0) throw IncompatibleStep("new step does not divide the old step");
        const auto k = static_cast<std::size_t>(ts.dt / new_dt);
        out.values.reserve(ts.size() * k);
        for (double v : ts.values) out.values.insert(out.values.end(), k, v);
    }
    return out;
}

// Value of a zero-order-held series at an epoch; returns fallback outside its span.
inline double held_value(const TimeSeries& ts, std::int64_t epoch, double fallback = 0.0) {
    if (epoch < ts.start_epoch || epoch >= ts.end_epoch()) return fallback;
    return ts.values[static_cast<std::size_t>((epoch - ts.start_epoch) / ts.dt)];
}

}  // namespace hess
