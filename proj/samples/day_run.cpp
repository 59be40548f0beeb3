// Runs one synthetic day under the proposed controller and the periodic-SOC
// baseline, then prints the headline metrics side by side.
//
//   sample_day_run [config.json]

#include <cstdio>

#include "hess/hess.hpp"

int main(int argc, char** argv) {
    using namespace hess;
    EngineConfig cfg = default_config();
    if (argc > 1) {
        const auto loaded = load_config(argv[1]);
        for (const auto& f : loaded.findings) std::fprintf(stderr, "%s: %s\n", f.path.c_str(), f.message.c_str());
        if (has_errors(loaded.findings)) return 2;
        cfg = loaded.config;
    } else {
        cfg.scenario.days = 1;
    }
    const auto sc = make_scenario(cfg);

    std::printf("%-22s %10s %10s %10s %12s\n", "controller", "smoothing", "minute", "rte", "benefit");
    for (auto kind : {ControllerKind::Proposed, ControllerKind::PeriodicSoc, ControllerKind::FilterDecomposition}) {
        const auto rep = run_controller(sc, cfg, kind);
        const auto& m = rep.metrics;
        std::printf("%-22s %10.4f %10.4f %10.4f %12.0f\n", to_string(kind), m.smoothing.value, m.minute_reduction.value,
                    m.round_trip.defined ? m.round_trip.value : 0.0, m.benefit.total);
    }
}
