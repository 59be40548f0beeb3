// End-to-end acceptance checks. Prints one PASS or FAIL line per criterion
// and exits nonzero when any fails. Progress goes to stderr.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "hess/hess.hpp"
#include "mtip_oracle.hpp"
#include "qp_oracles.hpp"

using namespace hess;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
    std::printf("criterion %2d %s  %s\n", n, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

EngineConfig week(Archetype a, std::uint64_t seed, double accuracy = 0.9) {
    auto c = default_config();
    c.scenario.days = 7;
    c.scenario.archetype = a;
    c.scenario.seed = seed;
    c.scenario.forecast_accuracy = {accuracy, accuracy, accuracy};
    return c;
}

constexpr Archetype kArchetypes[] = {Archetype::Balanced, Archetype::Oversupply, Archetype::Deficit,
                                     Archetype::ExtremeCalm};

struct RunSummary {
    double smoothing = std::nan("");
    double rte = std::nan("");
    long violations = 0, clamped = 0, dropped = 0, saturated = 0;
    long forced_recharge = 0, slack = 0;
    bool all_devices_moved = false;
    std::string error;
};

RunSummary summarize(const EngineConfig& cfg, ControllerKind kind) {
    RunSummary s;
    try {
        const auto rep = run_controller(make_scenario(cfg), cfg, kind);
        s.smoothing = rep.metrics.smoothing.value;
        s.rte = rep.metrics.round_trip.defined ? rep.metrics.round_trip.value : std::nan("");
        s.violations = rep.counters.envelope_violations;
        s.clamped = rep.counters.band_clamped;
        s.dropped = rep.counters.band_dropped;
        s.saturated = rep.counters.saturated_solves;
        s.forced_recharge = rep.counters.forced_recharge;
        s.slack = rep.counters.slack_events;
        s.all_devices_moved = std::all_of(rep.ledgers.begin(), rep.ledgers.end(),
                                          [](const DeviceLedger& l) { return l.absorbed > 0.0 && l.delivered > 0.0; });
    } catch (const std::exception& e) {
        s.error = e.what();
    }
    return s;
}

void mtip_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240601);
    double worst = 0.0;
    int bad = 0;
    for (int t = 0; t < 1000; ++t) {
        const auto c = oracle::random_micro_context(rng);
        const auto band = physical_bounds(c);
        const auto ref = oracle::bisect_band(c);
        const double e = std::max(std::abs(band.upper - ref.upper), std::abs(band.lower - ref.lower));
        worst = std::max(worst, e);
        if (!(e <= 1e-6)) ++bad;
    }
    const double secs = seconds_since(t0);
    report(1, bad == 0 && secs < 30.0, fmt("1000 instances, max error %.3g MW, %d over 1e-6, %.2f s", worst, bad, secs));
}

void qp_oracle() {
    std::mt19937_64 rng(77);
    double worst = 0.0;
    int compared = 0, not_optimal = 0, over = 0;
    for (int t = 0; t < 500; ++t) {
        const int n = 1 + t % 6;
        const auto bp = oracle::random_box_problem(rng, n);
        auto p = qp::QpProblem::unconstrained(bp.H, bp.f);
        p.var_lower = bp.lo;
        p.var_upper = bp.hi;
        const auto s = qp::solve_qp(p);
        bool ok = false;
        const auto ref = oracle::projected_gradient(bp.H, bp.f, bp.lo, bp.hi, 1e-13, 2000000, &ok);
        if (!ok) continue;
        ++compared;
        if (s.status != qp::QpStatus::Optimal) {
            ++not_optimal;
            continue;
        }
        const double e = (s.u_star - ref).lpNorm<Eigen::Infinity>();
        worst = std::max(worst, e);
        if (!(e <= 1e-5)) ++over;
    }
    report(2, not_optimal == 0 && over == 0 && compared > 0,
           fmt("%d/500 compared, max error %.3g, %d not optimal, %d over 1e-5", compared, worst, not_optimal, over));
}

std::map<Archetype, RunSummary> soc_safety() {
    std::map<Archetype, RunSummary> seed1;
    long violations = 0, clamped = 0, dropped = 0, saturated = 0;
    int errors = 0;
    std::string first_error;
    const auto t0 = Clock::now();
    for (auto a : kArchetypes) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto s = summarize(week(a, seed), ControllerKind::Proposed);
            std::fprintf(stderr, "  soc %-13s seed %2lu smoothing %.4f violations %ld%s%s\n", to_string(a),
                         static_cast<unsigned long>(seed), s.smoothing, s.violations, s.error.empty() ? "" : " error ",
                         s.error.c_str());
            violations += s.violations;
            clamped += s.clamped;
            dropped += s.dropped;
            saturated += s.saturated;
            if (!s.error.empty()) {
                ++errors;
                if (first_error.empty()) first_error = s.error;
            }
            if (seed == 1) seed1[a] = s;
        }
    }
    report(3, violations == 0 && errors == 0,
           fmt("40 week runs, %ld envelope violations, %d unhandled failures, %ld clamped bands, %ld dropped bands, "
               "%ld saturated solves, %.0f s%s%s",
               violations, errors, clamped, dropped, saturated, seconds_since(t0), first_error.empty() ? "" : ", ",
               first_error.c_str()));
    return seed1;
}

void smoothing_and_robustness(const RunSummary& balanced) {
    report(4, balanced.smoothing >= 0.90, fmt("balanced week at 0.9 accuracy: smoothing %.4f (need >= 0.90)", balanced.smoothing));

    const double accs[] = {0.95, 0.9, 0.8, 0.7};
    double s[4];
    for (int i = 0; i < 4; ++i) {
        s[i] = accs[i] == 0.9 ? balanced.smoothing
                              : summarize(week(Archetype::Balanced, 1, accs[i]), ControllerKind::Proposed).smoothing;
    }
    const bool monotone = s[0] >= s[1] && s[1] >= s[2] && s[2] >= s[3];
    report(5, monotone && s[3] >= 0.75,
           fmt("smoothing at 0.95/0.9/0.8/0.7: %.4f %.4f %.4f %.4f (monotone %s, need >= 0.75 at 0.7)", s[0], s[1], s[2],
               s[3], monotone ? "yes" : "no"));
}

void baseline_ordering(const std::map<Archetype, RunSummary>& proposed) {
    bool ordered = true;
    long deficit_events = 0;
    std::string detail;
    for (auto a : kArchetypes) {
        const auto p = summarize(week(a, 1), ControllerKind::PeriodicSoc);
        const double mine = proposed.at(a).smoothing;
        if (!(mine >= p.smoothing) || !p.error.empty()) ordered = false;
        if (a == Archetype::Deficit) deficit_events = p.forced_recharge + p.slack;
        detail += fmt("%s %.3f vs %.3f; ", to_string(a), mine, p.smoothing);
    }
    report(6, ordered && deficit_events >= 1,
           detail + fmt("periodic deficit events %ld (need >= 1)", deficit_events));
}

double min_engine_seconds(const EngineConfig& cfg, const Scenario& sc, int repeats) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = Clock::now();
        const auto rep = run_engine(cfg, sc);
        best = std::min(best, seconds_since(t0));
        if (rep.grid.size() != sc.actual.size()) return 1e300;
    }
    return best;
}

void performance() {
    auto cfg = default_config();
    cfg.scenario.days = 1;
    const auto day = make_scenario(cfg);
    const double day_s = min_engine_seconds(cfg, day, 3);

    TimeSeries hour = day.actual;
    hour.values.resize(3600);
    const auto hour_sc = build_scenario(hour, cfg.scenario.forecast_accuracy, cfg.scenario.seed);
    const double hour_s = min_engine_seconds(cfg, hour_sc, 5);
    report(7, hour_s <= 0.02 && day_s <= 0.5,
           fmt("one hour %.4f s (need <= 0.02), one day %.3f s (need <= 0.5), best of repeated runs", hour_s, day_s));
}

void round_trip(const RunSummary& balanced) {
    report(8, balanced.rte >= 0.45 && balanced.rte <= 0.70 && balanced.all_devices_moved,
           fmt("balanced week round-trip efficiency %.4f (need [0.45, 0.70]), every device charged and discharged: %s",
               balanced.rte, balanced.all_devices_moved ? "yes" : "no"));
}

void device_goldens() {
    int mismatched = 0, checked = 0;
    for (const auto& [name, text] : device_golden_tables()) {
        std::ifstream in(std::string(HESS_SOURCE_DIR) + "/tests/golden/" + name, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        ++checked;
        if (!in.good() && s.str().empty()) ++mismatched;
        else if (s.str() != text) ++mismatched;
    }
    using namespace constants;
    const double u_lhv = molar_mass_h2 * lhv_h2 * joule_per_kwh / (2.0 * faraday);
    const double u_hhv = molar_mass_h2 * hhv_h2 * joule_per_kwh / (2.0 * faraday);
    const double e_lhv = awe_charge_efficiency(1.0, 1.2535);
    const double e_hhv = pemfc_efficiency_from_voltage(1.4818);
    const bool units = std::abs(u_lhv - 1.2535) <= 1e-3 && std::abs(u_hhv - 1.4818) <= 1e-3 &&
                       std::abs(e_lhv - 1.0) <= 1e-3 && std::abs(e_hhv - 1.0) <= 1e-3;
    report(9, mismatched == 0 && units,
           fmt("%d/%d tables bit-identical; eta at 1.2535 V (LHV) %.5f, at 1.4818 V (HHV) %.5f", checked - mismatched,
               checked, e_lhv, e_hhv));
}

void degradation() {
    BatteryDegParams p;
    TimeSeries one(0, 60, {0.5, 1.0, 0.5});
    TimeSeries temp1(0, 60, std::vector<double>(3, 30.0));
    const double single = battery_damage(one, temp1, p).cyclic;
    double worst = 0.0;
    for (int k = 2; k <= 200; ++k) {
        TimeSeries many(0, 60, {0.5});
        for (int i = 0; i < k; ++i) {
            many.values.push_back(1.0);
            many.values.push_back(0.5);
        }
        TimeSeries temp(0, 60, std::vector<double>(many.size(), 30.0));
        const double d = battery_damage(many, temp, p).cyclic;
        worst = std::max(worst, std::abs(d - k * single) / (k * single));
    }
    bool monotone = true;
    double prev = battery_soh(0.0, p);
    for (int k = 1; k <= 200000; ++k) {
        const double s = battery_soh(2.0 * k / 200000.0, p);
        if (s > prev) monotone = false;
        prev = s;
    }
    report(10, worst <= 1e-9 && monotone,
           fmt("stacked-cycle relative error %.3g (need <= 1e-9), SOH nonincreasing on 200001 points of [0, 2]: %s", worst,
               monotone ? "yes" : "no"));
}

}  // namespace

int main() {
    mtip_oracle();
    qp_oracle();
    const auto seed1 = soc_safety();
    smoothing_and_robustness(seed1.at(Archetype::Balanced));
    baseline_ordering(seed1);
    performance();
    round_trip(seed1.at(Archetype::Balanced));
    device_goldens();
    degradation();
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
