#pragma once

#include <cmath>

#include "hess/core/errors.hpp"
#include "hess/devices/hydrogen.hpp"

namespace hess {

struct MeohParams {
    double x_min = 0.75, x_max = 0.85;
    double kappa_x = 0.5;
    double rho_min = 0.3;
    double s_min = 0.90, s_max = 0.97;
    double beta_s = 4.0;
    double rho_star = 0.7;
    double lhv_meoh = 6.09;           // kWh/kg
    double molar_mass_meoh = 32.04e-3;  // kg/mol
    double rated_power = 200.0;       // MW
};

struct MeohConversion {
    double conversion;   // X_H
    double selectivity;  // S_HM
    double efficiency;   // hydrogen to methanol energy
};

inline double meoh_energy_efficiency(double conversion, double selectivity, const MeohParams& p) {
    return conversion * selectivity * (p.molar_mass_meoh / (3.0 * constants::molar_mass_h2)) *
           (p.lhv_meoh / constants::lhv_h2);
}

inline MeohConversion meoh_conversion(double rho, const MeohParams& p) {
    if (rho < p.rho_min || rho > 1.0) throw LoadOutOfRange("synthesis load ratio outside [rho_min, 1]");
    double x = p.x_min + (p.x_max - p.x_min) * (1.0 - std::exp(-p.kappa_x / rho)) /
                             (1.0 - std::exp(-p.kappa_x / p.rho_min));
    double d = rho - p.rho_star;
    double s = p.s_min + (p.s_max - p.s_min) * std::exp(-p.beta_s * d * d);
    return {x, s, meoh_energy_efficiency(x, s, p)};
}

struct TurbineParams {
    double eta_max = 0.52;
    double x_star = 0.85;
    double k = 0.5;
    double rated = 200.0;  // MW
    double x_min = 0.2;    // lowest load used when freezing efficiencies
};

inline double turbine_efficiency(double x, const TurbineParams& p) {
    if (!(x > 0.0) || x > 1.0) throw DomainError("turbine load ratio outside (0, 1]");
    double d = x - p.x_star;
    double eta = p.eta_max * (1.0 - p.k * d * d);
    if (!(eta > 0.0)) throw DomainError("turbine efficiency is not positive");
    return eta;
}

}  // namespace hess
