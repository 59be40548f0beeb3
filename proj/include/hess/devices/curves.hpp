#pragma once

// Tabulated device curves at the default parameters. The tables are written
// with shortest round-trip formatting, so a rebuild reproduces them byte for
// byte.

#include <charconv>
#include <string>
#include <utility>
#include <vector>

#include "hess/devices/hydrogen.hpp"
#include "hess/devices/methanol.hpp"

namespace hess {

namespace detail {

inline void put(std::string& out, double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
}

inline void row(std::string& out, std::initializer_list<double> vals) {
    bool first = true;
    for (double v : vals) {
        if (!first) out += ',';
        put(out, v);
        first = false;
    }
    out += '\n';
}

}  // namespace detail

// AWE polarization and efficiency over the operating window.
inline std::string awe_curve_csv(const AweParams& p = {}, int points = 101) {
    std::string out = "current_density_a_cm2,cell_voltage_v,faradaic_efficiency,charge_efficiency,h2_kg_per_h\n";
    for (int k = 0; k < points; ++k) {
        const double J = 0.01 + (0.6 - 0.01) * k / (points - 1);
        const auto h = awe_hydrogen(J * p.area, p);
        detail::row(out, {J, h.cell_voltage, h.eta_faradaic, h.eta_charge, h.rate_kg_h});
    }
    return out;
}

// PEMFC polarization with its loss split and HHV efficiency.
inline std::string pemfc_curve_csv(const PemfcParams& p = {}, int points = 101) {
    std::string out = "current_density_a_cm2,cell_voltage_v,activation_v,ohmic_v,concentration_v,efficiency\n";
    for (int k = 0; k < points; ++k) {
        const double J = 0.01 + (0.95 * p.j_max - 0.01) * k / (points - 1);
        const auto l = pemfc_losses(J * p.area, p);
        detail::row(out, {J, l.voltage(), l.activation, l.ohmic, l.concentration,
                          pemfc_efficiency_from_voltage(l.voltage(), p.hhv)});
    }
    return out;
}

// Methanol synthesis conversion, selectivity and energy efficiency over load,
// with the turbine efficiency at the same load ratio.
inline std::string meoh_curve_csv(const MeohParams& m = {}, const TurbineParams& t = {}, int points = 71) {
    std::string out = "load_ratio,conversion,selectivity,synthesis_efficiency,turbine_efficiency\n";
    for (int k = 0; k < points; ++k) {
        const double rho = m.rho_min + (1.0 - m.rho_min) * k / (points - 1);
        const auto c = meoh_conversion(rho, m);
        detail::row(out, {rho, c.conversion, c.selectivity, c.efficiency, turbine_efficiency(rho, t)});
    }
    return out;
}

// File name and contents of every golden table.
inline std::vector<std::pair<std::string, std::string>> device_golden_tables() {
    return {{"awe_curve.csv", awe_curve_csv()}, {"pemfc_curve.csv", pemfc_curve_csv()}, {"meoh_curve.csv", meoh_curve_csv()}};
}

}  // namespace hess
