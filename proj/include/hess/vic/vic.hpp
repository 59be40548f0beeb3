#pragma once

// Flywheel virtual inertia control for the last, per-second layer.

#include <algorithm>
#include <cmath>

#include "hess/core/errors.hpp"
#include "hess/devices/ess.hpp"

namespace hess {

struct VicParams {
    double k_pf = 15.0;   // MW/Hz
    double k_p = 120.0;   // MW/Hz
    double k_d = 25.0;    // MW s/Hz
    double dt = 1.0;      // s
    double p0 = 0.0;      // MW
    void validate() const {
        if (!(k_pf > 0.0 && k_p > 0.0 && k_d > 0.0)) throw DomainError("VIC gains must be positive");
        if (!(dt > 0.0)) throw DomainError("VIC step must be positive");
    }
};

inline double l4_residual(double net_load, double l1, double l2, double l3, double target) {
    return net_load - l1 - l2 - l3 - target;
}

inline double equivalent_frequency_deviation(double r, double k_pf) {
    if (!(k_pf > 0.0)) throw DomainError("power-frequency coefficient must be positive");
    return r / k_pf;
}

// Flywheel power request with absorption positive, so an unserved load
// (r > 0) asks for discharge.
inline double vic_command(double r_now, double r_prev, const VicParams& p) {
    const double df = equivalent_frequency_deviation(r_now, p.k_pf);
    const double ddf = (r_now - r_prev) / p.k_pf / p.dt;
    return p.p0 - p.k_p * df - p.k_d * ddf;
}

// Closed-loop form used by the engine. The law reacts to the imbalance left
// after the flywheel itself, r = r0 + P, which gives a linear equation in P.
inline double vic_command_closed_loop(double r0, double r_prev, bool first, const VicParams& p) {
    const double a = p.k_p / p.k_pf;
    const double b = first ? 0.0 : p.k_d / (p.k_pf * p.dt);
    return (p.p0 - (a + b) * r0 + b * r_prev) / (1.0 + a + b);
}

struct FessApplied {
    double actual;  // MW absorbed, negative when discharging
    EssState state;
};

// Saturate to the power cap and to what the envelope allows, then step.
inline FessApplied apply_fess(double command, const EssState& s, double dt_s) {
    const double dt_h = dt_s / 3600.0;
    double p = std::clamp(command, -s.power_cap, s.power_cap);
    if (p > 0.0) p = std::min(p, max_charge_power(s, dt_h));
    if (p < 0.0) p = std::max(p, -max_discharge_power(s, dt_h));
    return {p, ess_step(s, std::max(p, 0.0), std::max(-p, 0.0), dt_h)};
}

}  // namespace hess
