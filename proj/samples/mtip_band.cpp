// Band that a half-full flywheel can absorb under one 15-minute step of a
// slow sinusoidal wiggle, and how the cost ratio narrows it.

#include <cmath>
#include <cstdio>
#include <numbers>

#include "hess/mtip/mtip.hpp"

int main() {
    using namespace hess;
    MicroContext c;
    c.dt_child = 1.0 / 60.0;  // one-minute child steps
    std::vector<double> xi(15);
    for (std::size_t j = 0; j < xi.size(); ++j) xi[j] = 8.0 * std::sin(2.0 * std::numbers::pi * j / 15.0);
    c.micro_forecast = TimeSeries(0, 60, xi);
    c.child.e_min = 10.0;
    c.child.e_max = 50.0;
    c.child.energy = 30.0;
    c.child.eta_c = 0.92;
    c.child.eta_d = 0.92;
    c.child.power_cap = 200.0;

    const auto phy = physical_bounds(c);
    std::printf("physical band: [%.3f, %.3f] MW\n", phy.lower, phy.upper);
    for (double ratio : {0.5, 1.0, 2.0, 5.0}) {
        const auto b = adaptive_bounds(phy, ratio, 1.0, 5.0, 1.0, 2.0);
        std::printf("cost ratio %4.1f: [%.3f, %.3f] MW, gamma %.3f\n", ratio, b.r_lower, b.r_upper, b.gamma);
    }
}
