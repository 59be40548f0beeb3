#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hess/core/errors.hpp"
#include "hess/core/time_series.hpp"
#include "hess/devices/rainflow.hpp"

namespace hess {

struct BatteryDegParams {
    double alpha_sei = 0.0575;
    double alpha_sds = 0.9;
    double beta_sei = 121.0;
    double beta_cps = 2.5;
    double knee_kappa = 1e-3;
    double k_T = 0.0693;
    double k_t = 4.14e-10;  // per second
    double k_tau = 1.04;
    double k_nu1 = 1.4e5;
    double k_nu2 = -0.501;
    double k_nu3 = -1.23e5;
    double T_ref = 25.0;     // degC
    double tau_ref = 0.5;
    double invest = 8.0e7;
    double rated_energy = 200.0;  // MWh
    double om_rate = 1.5;         // currency/MWh
};

// Raw capacity fraction; see soh_clamped for the reported value.
inline double battery_soh(double d, const BatteryDegParams& p) {
    return p.alpha_sei * std::exp(-p.beta_sei * d) + p.alpha_sds * std::exp(-d) +
           (1.0 - p.alpha_sei - p.alpha_sds) * (1.0 - p.knee_kappa * std::exp(p.beta_cps * d));
}

inline double soh_clamped(double d, const BatteryDegParams& p) { return std::max(battery_soh(d, p), 0.0); }

struct StressFactors {
    double temperature, time, soc, depth;
};

inline double stress_temperature(double T, const BatteryDegParams& p) {
    return std::exp(p.k_T * (T - p.T_ref) * p.T_ref / (273.0 + T));
}
inline double stress_time(double t_hours, const BatteryDegParams& p) { return p.k_t * t_hours * 3600.0; }
inline double stress_soc(double tau, const BatteryDegParams& p) { return std::exp(p.k_tau * (tau - p.tau_ref)); }
inline double stress_depth(double nu, const BatteryDegParams& p) {
    if (nu < 0.0 || nu > 1.0) throw DomainError("depth of discharge must lie in (0, 1]");
    if (nu == 0.0 && p.k_nu3 == 0.0) throw DomainError("depth stress undefined at zero depth");
    double den = p.k_nu1 * std::pow(nu, p.k_nu2) + p.k_nu3;  // pow(0, negative) is +inf
    if (std::isinf(den)) return 0.0;
    if (!(den > 0.0)) throw DomainError("depth stress is not positive");
    return 1.0 / den;
}

inline StressFactors stress_factors(double T, double t_hours, double tau, double nu, const BatteryDegParams& p) {
    return {stress_temperature(T, p), stress_time(t_hours, p), stress_soc(tau, p), stress_depth(nu, p)};
}

struct DamageBreakdown {
    double calendar = 0.0;
    double cyclic = 0.0;
    double total = 0.0;
    std::vector<Cycle> cycles;
};

inline DamageBreakdown battery_damage(const TimeSeries& soc, const TimeSeries& temp, const BatteryDegParams& p) {
    require_aligned(soc, temp);
    if (soc.size() < 2) throw AlignmentError("damage needs at least two samples");
    DamageBreakdown d;
    const double n = static_cast<double>(soc.size());
    double mean_soc = 0.0, mean_t = 0.0;
    for (std::size_t i = 0; i < soc.size(); ++i) {
        mean_soc += soc[i];
        mean_t += temp[i];
    }
    mean_soc /= n;
    mean_t /= n;
    const double span_h = static_cast<double>(soc.dt) * (n - 1.0) / 3600.0;
    d.calendar = stress_time(span_h, p) * stress_soc(mean_soc, p) * stress_temperature(mean_t, p);
    d.cycles = rainflow(soc.values);
    for (const auto& c : d.cycles) {
        if (c.range <= 0.0) continue;
        double tc = 0.0;
        for (std::size_t i = c.first; i <= c.last; ++i) tc += temp[i];
        tc /= static_cast<double>(c.last - c.first + 1);
        d.cyclic += c.count * stress_soc(c.mean, p) * stress_depth(c.range, p) * stress_temperature(tc, p);
    }
    d.total = d.calendar + d.cyclic;
    return d;
}

inline double bess_cycle_cost(double delta_lc, const BatteryDegParams& p) {
    if (delta_lc < 0.0) throw DomainError("capacity fade per cycle must be nonnegative");
    return (p.invest / 0.8) * delta_lc / (2.0 * p.rated_energy) + p.om_rate;
}

// Capacity fade caused by one reference full cycle starting from damage d.
inline double full_cycle_fade(double d, const BatteryDegParams& p) {
    double dc = stress_soc(p.tau_ref, p) * stress_depth(1.0, p) * stress_temperature(p.T_ref, p);
    return battery_soh(d, p) - battery_soh(d + dc, p);
}

}  // namespace hess
