// Electrolyzer and fuel cell efficiency at a few operating points, then the
// full default tables written to the current directory.

#include <cstdio>
#include <fstream>

#include "hess/devices/curves.hpp"

int main() {
    using namespace hess;
    const AweParams awe;
    const PemfcParams fc;
    std::printf("%8s %10s %10s %10s\n", "J A/cm2", "AWE V", "AWE eta", "PEMFC eta");
    for (double J : {0.05, 0.1, 0.2, 0.4, 0.6}) {
        const auto h = awe_hydrogen(J * awe.area, awe);
        const auto l = pemfc_losses(J * fc.area, fc);
        std::printf("%8.2f %10.4f %10.4f %10.4f\n", J, h.cell_voltage, h.eta_charge,
                    pemfc_efficiency_from_voltage(l.voltage(), fc.hhv));
    }
    for (const auto& [name, text] : device_golden_tables()) std::ofstream(name, std::ios::binary) << text;
}
