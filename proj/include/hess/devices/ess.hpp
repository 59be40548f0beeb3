#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "hess/core/errors.hpp"

namespace hess {

// Absolute slack used when checking energy envelopes and power caps.
inline constexpr double kEnvelopeTol = 1e-9;

// Static description of a storage unit; EssState is its running state.
struct StorageParams {
    double capacity = 0.0;  // MWh
    double e_min = 0.0, e_max = 0.0;
    double power_cap = 0.0;
    double eta_c = 1.0, eta_d = 1.0;
    double self_discharge_per_hour = 0.0;
    double standby_loss = 0.0;  // MW
    double initial_soc = 0.5;   // fraction of capacity
    double cycle_cost = 0.0;    // currency/MWh
};

struct EssState {
    double energy = 0.0;          // MWh
    double e_min = 0.0;           // MWh
    double e_max = 0.0;           // MWh
    double power_cap = 0.0;       // MW
    double eta_c = 1.0;
    double eta_d = 1.0;
    double self_discharge = 0.0;  // fraction of energy lost per step
    double standby_loss = 0.0;    // MW, flywheel only

    double usable_energy() const { return energy - e_min; }
    double headroom() const { return e_max - energy; }
};

// Standby draw over one step, MWh. Dropped below the minimum speed and never
// allowed to pull the energy under the envelope floor.
inline double standby_energy(const EssState& s, double dt_h) {
    if (s.standby_loss <= 0.0 || s.energy <= s.e_min) return 0.0;
    return std::min(s.standby_loss * dt_h, s.energy - s.e_min);
}

inline void check_envelope(const EssState& s, const char* who = "storage") {
    if (s.energy < s.e_min - kEnvelopeTol || s.energy > s.e_max + kEnvelopeTol)
        throw EnvelopeViolation(std::string(who) + " energy outside envelope", s.energy, s.e_min, s.e_max);
}

// Energy after one step with no envelope check.
inline double ess_next_energy(const EssState& s, double p_charge, double p_discharge, double dt_h) {
    return s.energy * (1.0 - s.self_discharge) - standby_energy(s, dt_h) + p_charge * s.eta_c * dt_h -
           p_discharge / s.eta_d * dt_h;
}

inline EssState ess_step(const EssState& s, double p_charge, double p_discharge, double dt_h) {
    if (p_charge < 0.0 || p_discharge < 0.0) throw DomainError("dispatch powers must be nonnegative");
    if (p_charge > 0.0 && p_discharge > 0.0) throw ExclusivityViolation("simultaneous charge and discharge");
    if (p_charge > s.power_cap + kEnvelopeTol || p_discharge > s.power_cap + kEnvelopeTol)
        throw DomainError("dispatch power exceeds the power cap");
    EssState n = s;
    n.energy = ess_next_energy(s, p_charge, p_discharge, dt_h);
    check_envelope(n);
    // snap rounding noise back onto the envelope
    n.energy = std::clamp(n.energy, n.e_min, n.e_max);
    return n;
}

// Largest charge / discharge powers that keep the next energy inside the envelope.
inline double max_charge_power(const EssState& s, double dt_h) {
    double base = s.energy * (1.0 - s.self_discharge) - standby_energy(s, dt_h);
    double p = (s.e_max - base) / (s.eta_c * dt_h);
    return std::clamp(p, 0.0, s.power_cap);
}

inline double max_discharge_power(const EssState& s, double dt_h) {
    double base = s.energy * (1.0 - s.self_discharge) - standby_energy(s, dt_h);
    double p = (base - s.e_min) * s.eta_d / dt_h;
    return std::clamp(p, 0.0, s.power_cap);
}

// Admissible grid exchange for one step, discharge positive. When losses alone
// would leave the envelope the range excludes zero and forces a correction.
struct ExchangeRange {
    double lo, hi;
};

inline ExchangeRange exchange_range(const EssState& s, double dt_h) {
    const double base = s.energy * (1.0 - s.self_discharge) - standby_energy(s, dt_h);
    double hi = base >= s.e_min ? (base - s.e_min) * s.eta_d / dt_h : -(s.e_min - base) / (s.eta_c * dt_h);
    double lo = base <= s.e_max ? -(s.e_max - base) / (s.eta_c * dt_h) : (base - s.e_max) * s.eta_d / dt_h;
    hi = std::clamp(hi, -s.power_cap, s.power_cap);
    lo = std::clamp(lo, -s.power_cap, s.power_cap);
    return {lo, hi};
}

// Apply a grid exchange after forcing it into the admissible range.
inline EssState ess_exchange(const EssState& s, double exchange, double dt_h, double* applied = nullptr) {
    const auto r = exchange_range(s, dt_h);
    const double p = std::clamp(exchange, r.lo, std::max(r.lo, r.hi));
    if (applied) *applied = p;
    return ess_step(s, std::max(-p, 0.0), std::max(p, 0.0), dt_h);
}

// Per-step self-discharge fraction from an hourly rate.
inline double self_discharge_per_step(double rate_per_hour, double dt_h) {
    return 1.0 - std::pow(1.0 - rate_per_hour, dt_h);
}

inline EssState make_state(const StorageParams& p, double dt_h) {
    EssState s;
    s.energy = p.initial_soc * p.capacity;
    s.e_min = p.e_min;
    s.e_max = p.e_max;
    s.power_cap = p.power_cap;
    s.eta_c = p.eta_c;
    s.eta_d = p.eta_d;
    s.self_discharge = self_discharge_per_step(p.self_discharge_per_hour, dt_h);
    s.standby_loss = p.standby_loss;
    return s;
}

}  // namespace hess
