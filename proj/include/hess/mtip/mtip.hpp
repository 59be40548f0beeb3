#pragma once

// Micro trajectory inverse projection: turns a child layer's storage headroom
// and the forecast wiggle inside one parent step into a band on the parent's
// residual net load.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hess/core/errors.hpp"
#include "hess/core/time_series.hpp"
#include "hess/devices/ess.hpp"

namespace hess {

struct MtipBounds {
    double r_lower = -std::numeric_limits<double>::infinity();
    double r_upper = std::numeric_limits<double>::infinity();
    double phy_lower = -std::numeric_limits<double>::infinity();
    double phy_upper = std::numeric_limits<double>::infinity();
    double gamma = 1.0;        // upper side
    double gamma_lower = 1.0;
    bool clamped = false;
};

struct MicroContext {
    TimeSeries micro_forecast;     // child granularity, one parent step long
    double parent_residual = 0.0;  // MW
    EssState child;
    double dt_child = 0.0;   // h
    double dt_parent = 0.0;  // h, 0 skips the length check
};

// How the negative branch of phi+ is weighted.
enum class PhiConvention { RoundTrip, Literal };

inline void check_micro_context(const MicroContext& c) {
    if (!(c.dt_child > 0.0)) throw DomainError("child step must be positive");
    if (c.micro_forecast.size() == 0) throw AlignmentError("empty micro forecast");
    if (c.dt_parent > 0.0) {
        const double ratio = c.dt_parent / c.dt_child;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 ||
            static_cast<std::size_t>(std::llround(ratio)) != c.micro_forecast.size())
            throw AlignmentError("micro forecast does not span exactly one parent step");
    }
}

inline std::vector<double> micro_fluctuation(const MicroContext& c) {
    check_micro_context(c);
    std::vector<double> xi(c.micro_forecast.size());
    for (std::size_t j = 0; j < xi.size(); ++j) xi[j] = c.micro_forecast[j] - c.parent_residual;
    return xi;
}

// Internal energy rate drawn by an exchange of p MW toward the grid.
inline double psi(double p, double eta_c, double eta_d) { return p >= 0.0 ? p / eta_d : p * eta_c; }

inline double psi_inverse(double y, double eta_c, double eta_d) { return y >= 0.0 ? y * eta_d : y / eta_c; }

struct FluctuationPotentials {
    std::vector<double> plus, minus;  // MWh, prefix sums
};

inline FluctuationPotentials fluctuation_potentials(const std::vector<double>& xi, double eta_c, double eta_d,
                                                    double dt, PhiConvention conv = PhiConvention::RoundTrip) {
    if (!(eta_c > 0.0 && eta_c <= 1.0 && eta_d > 0.0 && eta_d <= 1.0))
        throw DomainError("efficiencies must lie in (0, 1]");
    const double neg_weight = conv == PhiConvention::RoundTrip ? eta_c * eta_d : eta_d * eta_d;
    FluctuationPotentials out;
    out.plus.resize(xi.size());
    out.minus.resize(xi.size());
    double a = 0.0, b = 0.0;
    for (std::size_t j = 0; j < xi.size(); ++j) {
        const double x = xi[j];
        a += (x >= 0.0 ? x : x * neg_weight) * dt;
        b += (x >= 0.0 ? x / (eta_c * eta_d) : x) * dt;
        out.plus[j] = a;
        out.minus[j] = b;
    }
    return out;
}

struct PhysicalBand {
    double lower, upper;
};

// Extreme constant baselines that keep the child inside its envelope at every
// micro step, starting from the energy at the parent-step start.
inline PhysicalBand physical_bounds(const MicroContext& c, const FluctuationPotentials& phi) {
    const auto& s = c.child;
    const double ec = s.eta_c, ed = s.eta_d;
    PhysicalBand b{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    for (std::size_t j = 0; j < phi.plus.size(); ++j) {
        const double span = static_cast<double>(j + 1) * c.dt_child;
        const double up = ((s.energy - s.e_min) - phi.plus[j] / ed) / span;
        const double lo = ((s.energy - s.e_max) - ec * phi.minus[j]) / span;
        b.upper = std::min(b.upper, psi_inverse(up, ec, ed));
        b.lower = std::max(b.lower, psi_inverse(lo, ec, ed));
    }
    return b;
}

inline PhysicalBand physical_bounds(const MicroContext& c, PhiConvention conv = PhiConvention::RoundTrip) {
    return physical_bounds(c, fluctuation_potentials(micro_fluctuation(c), c.child.eta_c, c.child.eta_d, c.dt_child, conv));
}

// R times the mean cost of the actuators selected by `serves`.
inline double marginal_cost(const std::vector<double>& cost, double cost_weight, const std::vector<bool>& serves = {}) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < cost.size(); ++i) {
        if (!serves.empty() && !serves[i]) continue;
        sum += cost[i];
        ++n;
    }
    return n ? cost_weight * sum / n : 0.0;
}

inline double blend_factor(double ratio, double kappa, double chi_th) {
    return 1.0 / (1.0 + std::exp(-kappa * (ratio - chi_th)));
}

inline MtipBounds blend_bounds(PhysicalBand phy, double gamma_upper, double gamma_lower, double eps_db) {
    MtipBounds m;
    m.phy_lower = phy.lower;
    m.phy_upper = phy.upper;
    m.gamma = gamma_upper;
    m.gamma_lower = gamma_lower;
    m.r_upper = gamma_upper * phy.upper + (1.0 - gamma_upper) * eps_db;
    m.r_lower = gamma_lower * phy.lower - (1.0 - gamma_lower) * eps_db;
    if (m.r_lower > m.r_upper) {
        const double mid = 0.5 * (m.r_lower + m.r_upper);
        m.r_lower = m.r_upper = mid;
        m.clamped = true;
    }
    return m;
}

inline MtipBounds blend_bounds(PhysicalBand phy, double gamma, double eps_db) {
    return blend_bounds(phy, gamma, gamma, eps_db);
}

inline MtipBounds adaptive_bounds(PhysicalBand phy, double lambda_parent, double lambda_child, double kappa,
                                  double chi_th, double eps_db) {
    if (!(lambda_child > 0.0)) throw DomainError("child marginal cost must be positive");
    return blend_bounds(phy, blend_factor(lambda_parent / lambda_child, kappa, chi_th), eps_db);
}

// Separate cost ratios for the two sides of the band.
struct SideCosts {
    double parent_upper, child_upper, parent_lower, child_lower;
};

inline MtipBounds adaptive_bounds(PhysicalBand phy, const SideCosts& c, double kappa, double chi_th, double eps_db) {
    if (!(c.child_upper > 0.0 && c.child_lower > 0.0)) throw DomainError("child marginal cost must be positive");
    return blend_bounds(phy, blend_factor(c.parent_upper / c.child_upper, kappa, chi_th),
                        blend_factor(c.parent_lower / c.child_lower, kappa, chi_th), eps_db);
}

struct BandCheck {
    bool feasible;
    bool respects_lower_envelope;  // energy never under E_min
    bool respects_upper_envelope;  // energy never over E_max
};

// Step-by-step child energy under a constant baseline plus the fluctuation.
inline BandCheck brute_force_band_oracle(const MicroContext& c, double r, PhiConvention conv = PhiConvention::RoundTrip) {
    const auto xi = micro_fluctuation(c);
    const auto& s = c.child;
    double e_lo = s.energy, e_hi = s.energy;
    bool low_ok = true, high_ok = true;
    const double base = psi(r, s.eta_c, s.eta_d) * c.dt_child;
    // phi+ drives the floor check and phi- the ceiling check; under the round-trip
    // convention both reduce to psi
    const double neg_floor = conv == PhiConvention::RoundTrip ? s.eta_c : s.eta_d;
    for (double x : xi) {
        const double floor_draw = (x >= 0.0 ? x / s.eta_d : x * neg_floor) * c.dt_child;
        const double ceil_draw = psi(x, s.eta_c, s.eta_d) * c.dt_child;
        e_lo -= base + floor_draw;
        e_hi -= base + ceil_draw;
        if (e_lo < s.e_min) low_ok = false;
        if (e_hi > s.e_max) high_ok = false;
    }
    return {low_ok && high_ok, low_ok, high_ok};
}

}  // namespace hess
