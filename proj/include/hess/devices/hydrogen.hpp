#pragma once

#include <algorithm>
#include <cmath>

#include "hess/core/errors.hpp"

namespace hess {

namespace constants {
inline constexpr double faraday = 96485.0;       // C/mol
inline constexpr double molar_mass_h2 = 2.016e-3;  // kg/mol
inline constexpr double lhv_h2 = 33.33;          // kWh/kg
inline constexpr double hhv_h2 = 39.4;           // kWh/kg
inline constexpr double gas_constant = 8.314;    // J/(mol K)
inline constexpr double joule_per_kwh = 3.6e6;
}  // namespace constants

// Alkaline electrolyzer stack. Current density J = i/area is in A/cm^2.
struct AweParams {
    double r1 = 0.445153, r2 = 6.88874e-5;
    double d1 = -0.0312996, d2 = 0.00447137;
    double t1 = -153.9, t2 = 20018.1, t3 = 152417.8;
    double s = 0.2;
    double f1 = 0.004786, f2 = -2.95315e-5, f3 = 1.0396, f4 = -0.00104;
    double area = 2000.0;  // cm^2
    int n_cells = 200;
    double u_rev = 1.18;   // V
    double temp = 80.0;    // degC
    double pressure = 7.0; // bar
    double j_min = 0.1;    // admissible operating window, A/cm^2
    double j_rated = 0.4;
};

inline double awe_cell_voltage(double i, const AweParams& p) {
    if (i < 0.0) throw DomainError("electrolyzer current must be nonnegative");
    const double J = i / p.area, th = p.temp;
    const double arg = (p.t1 + p.t2 / th + p.t3 / (th * th)) * J + 1.0;
    if (!(arg > 0.0)) throw DomainError("electrolyzer overvoltage log argument is not positive");
    return p.u_rev + ((p.r1 + p.d1) + p.r2 * th + p.d2 * p.pressure) * J + p.s * std::log10(arg);
}

inline double faradaic_efficiency_raw(double i, const AweParams& p) {
    if (!(i > 0.0)) throw DomainError("Faradaic efficiency needs a positive current");
    const double J = i / p.area, th = p.temp;
    const double den = p.f1 + p.f2 * th + J * J;
    if (!(den > 0.0)) throw DomainError("Faradaic efficiency denominator is not positive");
    return J * J / den * (p.f3 + p.f4 * th);
}

// Clamped into (0, 1].
inline double faradaic_efficiency(double i, const AweParams& p) {
    return std::clamp(faradaic_efficiency_raw(i, p), 1e-12, 1.0);
}

// Charging efficiency for a given Faradaic efficiency and cell voltage.
inline double awe_charge_efficiency(double eta_f, double u_cell) {
    using namespace constants;
    return eta_f * molar_mass_h2 * lhv_h2 * joule_per_kwh / (2.0 * faraday * u_cell);
}

struct HydrogenOutput {
    double rate_kg_h;
    double eta_charge;
    double eta_faradaic;
    double cell_voltage;
};

inline HydrogenOutput awe_hydrogen(double i, const AweParams& p) {
    using namespace constants;
    const double u = awe_cell_voltage(i, p);
    const double ef = faradaic_efficiency(i, p);
    const double rate = 3600.0 * ef * molar_mass_h2 * i * p.n_cells / (2.0 * faraday);
    return {rate, awe_charge_efficiency(ef, u), ef, u};
}

// Proton exchange membrane fuel cell. Temperatures in K.
struct PemfcParams {
    double a1 = 0.098, a2 = 0.0, a3 = 1e-5, a4 = 1.2e-4;
    double membrane_resistivity = 5.0;  // ohm cm
    double thickness = 0.0178;          // cm
    double contact_res = 1.1e-3;        // ohm
    double conc_coeff = 0.016;          // V
    double j_max = 1.5;                 // A/cm^2
    int n_cells = 400;
    double area = 100.0;                // cm^2
    double delta_G = 237180.0;          // J/mol
    double delta_S = 163.2;             // J/(mol K)
    double p_h2 = 3.0, p_o2 = 3.0;      // atm
    double c_o2 = 8.4e-7;               // mol/cm^3
    double temp = 343.15;               // K
    double temp_ref = 298.15;           // K
    double hhv = constants::hhv_h2;
    double j_min = 0.02;
    double j_rated = 0.4;
};

inline double pemfc_nernst(const PemfcParams& p) {
    using namespace constants;
    return (p.delta_G - p.delta_S * (p.temp - p.temp_ref) +
            gas_constant * p.temp * (std::log(p.p_h2) + 0.5 * std::log(p.p_o2))) /
           (2.0 * faraday);
}

struct PemfcLosses {
    double nernst, activation, ohmic, concentration;
    double voltage() const { return nernst - activation - ohmic - concentration; }
};

inline PemfcLosses pemfc_losses(double i, const PemfcParams& p) {
    const double J = i / p.area;
    if (!(J > 0.0) || !(J < p.j_max)) throw DomainError("fuel cell current density outside (0, J_max)");
    PemfcLosses l{};
    l.nernst = pemfc_nernst(p);
    l.activation = p.a1 + p.a2 * p.temp + p.a3 * p.temp * std::log(p.c_o2) + p.a4 * p.temp * std::log(i);
    l.ohmic = i * (p.membrane_resistivity * p.thickness / p.area + p.contact_res);
    l.concentration = -p.conc_coeff * std::log(1.0 - J / p.j_max);
    return l;
}

inline double pemfc_voltage(double i, const PemfcParams& p) { return pemfc_losses(i, p).voltage(); }

inline double pemfc_efficiency_from_voltage(double u_cell, double hhv = constants::hhv_h2) {
    using namespace constants;
    return 2.0 * faraday * u_cell / (molar_mass_h2 * hhv * joule_per_kwh);
}

inline double pemfc_discharge_efficiency(double i, const PemfcParams& p) {
    return pemfc_efficiency_from_voltage(pemfc_voltage(i, p), p.hhv);
}

namespace detail {
template <class F>
double bisect_increasing(F f, double lo, double hi, double target) {
    for (int k = 0; k < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++k) {
        double mid = 0.5 * (lo + hi);
        (f(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}
}  // namespace detail

struct OperatingPoint {
    double current_density;  // A/cm^2
    double efficiency;
    bool clamped;
};

// Stack power is proportional to J*U(J); loads are ratios of rated power.
inline double awe_relative_power(double J, const AweParams& p) {
    return J * awe_cell_voltage(J * p.area, p) / (p.j_rated * awe_cell_voltage(p.j_rated * p.area, p));
}

inline OperatingPoint awe_operating_point(double load_ratio, const AweParams& p) {
    const double lo = awe_relative_power(p.j_min, p);
    bool clamped = load_ratio < lo || load_ratio > 1.0;
    double x = std::clamp(load_ratio, lo, 1.0);
    double J = detail::bisect_increasing([&](double j) { return awe_relative_power(j, p); }, p.j_min, p.j_rated, x);
    return {J, awe_hydrogen(J * p.area, p).eta_charge, clamped};
}

inline double pemfc_relative_power(double J, const PemfcParams& p) {
    return J * pemfc_voltage(J * p.area, p) / (p.j_rated * pemfc_voltage(p.j_rated * p.area, p));
}

inline OperatingPoint pemfc_operating_point(double load_ratio, const PemfcParams& p) {
    const double lo = pemfc_relative_power(p.j_min, p);
    bool clamped = load_ratio < lo || load_ratio > 1.0;
    double x = std::clamp(load_ratio, lo, 1.0);
    double J = detail::bisect_increasing([&](double j) { return pemfc_relative_power(j, p); }, p.j_min, p.j_rated, x);
    return {J, pemfc_discharge_efficiency(J * p.area, p), clamped};
}

}  // namespace hess
