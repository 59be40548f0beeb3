#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "hess/core/errors.hpp"

namespace hess {

struct FessParams {
    std::vector<double> rotor_inertias{562.5, 562.5, 562.5, 562.5, 562.5,
                                       562.5, 562.5, 562.5, 562.5, 562.5};  // kg m^2
    double rated_speed = 1600.0;         // rad/s
    double initial_elec_speed = 1600.0;  // rad/s
    double windage_coeff = 2e-7;         // W/(rad/s)^3
    double bearing_coeff = 1.0;          // W/(rad/s)
    double bop_power = 3000.0;           // W
    double power_cap = 60.0;             // MW
    double e_min = 0.2;                  // MWh
    double e_max = 2.0;                  // MWh
    double eta_c = 0.95;
    double eta_d = 0.95;
    double invest = 3.0e6;
    double om_cost_per_cycle = 0.5;
    long lifetime_cycles = 200000;
    double decay_factor = 1e-6;
    double discount_rate = 1e-6;  // per cycle
};

// Inertia seen by the grid from the rotors' speed response to a frequency step.
inline double fess_virtual_inertia(const FessParams& p, double delta_f, double delta_omega_e) {
    if (delta_f == 0.0) throw DomainError("frequency deviation must be nonzero");
    const double two_pi_df = 2.0 * std::numbers::pi * delta_f;
    if (!(p.rated_speed / std::abs(two_pi_df) > 10.0))
        throw DomainError("rated speed must dominate the frequency deviation");
    double total = 0.0;
    for (double j : p.rotor_inertias)
        total += j * (p.initial_elec_speed / p.rated_speed) * (delta_omega_e / two_pi_df);
    return total;
}

// MW drawn by windage, bearings and balance of plant at rated speed.
inline double fess_standby_loss(const FessParams& p) {
    const double w = p.rated_speed;
    return (p.windage_coeff * w * w * w + p.bearing_coeff * w + p.bop_power) * 1e-6;
}

inline double lcoe(double invest, double om_per_cycle, long cycles, double capacity_mwh, double decay,
                   double discount) {
    if (cycles < 1) throw DomainError("lifetime must cover at least one cycle");
    double num = invest, den = 0.0, disc = 1.0;
    for (long n = 1; n <= cycles; ++n) {
        disc /= (1.0 + discount);
        num += om_per_cycle * disc;
        den += capacity_mwh * (1.0 - static_cast<double>(n) * decay) * disc;
    }
    if (!(den > 0.0)) throw DomainError("discounted lifetime energy must be positive");
    return num / den;
}

inline double fess_lcoe(const FessParams& p) {
    return lcoe(p.invest, p.om_cost_per_cycle, p.lifetime_cycles, p.e_max, p.decay_factor, p.discount_rate);
}

}  // namespace hess
