#pragma once

// Reference controllers: the same layer stack with storage pulled back to
// its starting energy every period, and a moving-average band split.

#include <cmath>
#include <cstdint>
#include <deque>
#include <vector>

#include "hess/engine/engine.hpp"

namespace hess {

namespace detail {

// Quadratic pull of the stored energy toward its run-start value at every
// step that ends on a period boundary. Acts as a relaxed equality row.
template <int Nx, int Nu>
void add_period_pull(qp::StagedQp<Nx, Nu>& q, std::int64_t start, std::int64_t dt, std::int64_t run_start,
                     std::int64_t period, const Eigen::Matrix<double, Nx, 1>& target, double weight,
                     const Eigen::Matrix<double, Nx, 1>& mask) {
    using VecX = Eigen::Matrix<double, Nx, 1>;
    if (q.hx.empty()) {
        q.hx.assign(static_cast<std::size_t>(q.horizon), VecX::Zero());
        q.fx.assign(static_cast<std::size_t>(q.horizon), VecX::Zero());
    }
    for (int k = 0; k < q.horizon; ++k) {
        const std::int64_t end = start + (k + 1) * dt - run_start;
        if (end % period != 0) continue;
        const auto kk = static_cast<std::size_t>(k);
        q.hx[kk] += 2.0 * weight * mask;
        q.fx[kk] -= 2.0 * weight * mask.cwiseProduct(target);
        q.constant += weight * mask.dot(target.cwiseProduct(target));
    }
}

// Period boundaries where a store missed its start value. The engine samples
// energies every trace step, so the boundary sample is exact.
inline void count_slack(SimulationReport& rep, const TimeSeries& trace, double start, double tol, std::int64_t period,
                        const char* who) {
    for (std::size_t i = 1; i < trace.size(); ++i) {
        const std::int64_t at = trace.dt * static_cast<std::int64_t>(i);
        if (at % period != 0) continue;
        const double gap = trace[i] - start;
        if (std::abs(gap) > tol) {
            ++rep.counters.slack_events;
            rep.events.push_back({trace.start_epoch + at, who, EventKind::SlackUsed, gap});
        }
    }
}

}  // namespace detail

inline SimulationReport run_periodic_soc_mpc(const Scenario& sc, const EngineConfig& cfg) {
    const std::int64_t period = std::llround(cfg.baseline.soc_period_h * 3600.0);
    const std::int64_t run_start = sc.actual.start_epoch;
    const double w = cfg.baseline.slack_weight;
    const auto l1 = cfg.l1_spec();
    const auto l2 = cfg.l2_spec();
    const auto l3 = cfg.l3_spec();
    const Eigen::Vector2d h_target(cfg.hmes.e_h0, cfg.hmes.e_m0);
    const Eigen::Matrix<double, 1, 1> c_target(cfg.caes.initial_soc * cfg.caes.capacity);
    const Eigen::Matrix<double, 1, 1> b_target(cfg.bess.initial_soc * cfg.bess.capacity);
    const Eigen::Matrix<double, 1, 1> one(1.0);

    EngineHooks hooks;
    hooks.mtip = false;
    hooks.l1 = [&](L1Qp& q, std::int64_t start) {
        detail::add_period_pull(q, start, l1.dt_s, run_start, period, h_target, w, Eigen::Vector2d(1.0, 1.0));
    };
    hooks.l2 = [&](StorageQp& q, std::int64_t start) {
        detail::add_period_pull(q, start, l2.dt_s, run_start, period, c_target, w, one);
    };
    hooks.l3 = [&](StorageQp& q, std::int64_t start) {
        detail::add_period_pull(q, start, l3.dt_s, run_start, period, b_target, w, one);
    };
    auto rep = run_engine(cfg, sc, hooks);
    rep.controller = ControllerKind::PeriodicSoc;

    // a store more than 0.1 % of its size away from the start value
    detail::count_slack(rep, rep.energy.hydrogen, cfg.hmes.e_h0, 1e-3 * cfg.hmes.e_h_max, period, "hydrogen");
    detail::count_slack(rep, rep.energy.caes, c_target[0], 1e-3 * cfg.caes.capacity, period, "caes");
    detail::count_slack(rep, rep.energy.bess, b_target[0], 1e-3 * cfg.bess.capacity, period, "bess");
    return rep;
}

// Causal trailing mean over the last `window` samples.
inline std::vector<double> trailing_mean(const std::vector<double>& x, std::size_t window) {
    std::vector<double> out(x.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sum += x[i];
        if (i >= window) sum -= x[i - window];
        out[i] = sum / static_cast<double>(std::min(i + 1, window));
    }
    return out;
}

struct FilterBands {
    std::vector<double> fess, bess, caes, hmes;  // MW toward the grid
};

// Split a 1 s signal into four bands that add back to it exactly.
inline FilterBands split_bands(const TimeSeries& nl, const std::array<double, 3>& cutoffs_s) {
    const auto m1 = trailing_mean(nl.values, static_cast<std::size_t>(cutoffs_s[0] / static_cast<double>(nl.dt)));
    const auto m2 = trailing_mean(nl.values, static_cast<std::size_t>(cutoffs_s[1] / static_cast<double>(nl.dt)));
    const auto m3 = trailing_mean(nl.values, static_cast<std::size_t>(cutoffs_s[2] / static_cast<double>(nl.dt)));
    FilterBands b;
    const std::size_t n = nl.size();
    b.fess.resize(n);
    b.bess.resize(n);
    b.caes.resize(n);
    b.hmes = m3;
    for (std::size_t i = 0; i < n; ++i) {
        b.fess[i] = nl[i] - m1[i];
        b.bess[i] = m1[i] - m2[i];
        b.caes[i] = m2[i] - m3[i];
    }
    return b;
}

inline SimulationReport run_filter_decomposition(const Scenario& sc, const EngineConfig& cfg) {
    const TimeSeries& nl = sc.actual;
    if (nl.dt != 1) throw IncompatibleStep("engine input must be sampled at 1 s");
    const auto bands = split_bands(nl, cfg.baseline.filter_cutoffs_s);
    const double dt_h = 1.0 / 3600.0;
    const std::int64_t t0 = nl.start_epoch;
    const std::size_t T = nl.size();

    SimulationReport rep;
    rep.controller = ControllerKind::FilterDecomposition;
    rep.scenario = sc.name;
    rep.has_qp_stats = false;
    rep.original = nl;
    rep.grid = TimeSeries(t0, 1, std::vector<double>(T));
    rep.fess_output = TimeSeries(t0, 1, std::vector<double>(T));
    // band outputs are reported at 1 s here
    rep.l1_output = TimeSeries(t0, 1, std::vector<double>(T));
    rep.l2_output = TimeSeries(t0, 1, std::vector<double>(T));
    rep.l3_output = TimeSeries(t0, 1, std::vector<double>(T));
    for (auto* tr : {&rep.energy.hydrogen, &rep.energy.methanol, &rep.energy.caes, &rep.energy.bess, &rep.energy.fess})
        *tr = TimeSeries(t0, cfg.trace_step, {});

    EssState caes = make_state(cfg.caes, dt_h), bess = make_state(cfg.bess, dt_h), fess = make_state(cfg.fess, dt_h);
    // hydrogen path only: electrolysis in, fuel cell out, at frozen efficiencies
    const auto eff = freeze_efficiencies(cfg.hmes, {});
    EssState h2;
    h2.energy = cfg.hmes.e_h0;
    h2.e_min = 0.0;
    h2.e_max = cfg.hmes.e_h_max;
    h2.power_cap = std::min(cfg.hmes.awe_cap, cfg.hmes.fc_cap);
    h2.eta_c = eff.h_charge;
    h2.eta_d = eff.h_discharge;

    const double fess_cost = cfg.fess_cycle_cost();
    const double caes_cost = cfg.caes_cycle_cost();
    const double bess_cost = cfg.bess_cycle_cost_value();
    const auto l1 = cfg.l1_spec();
    DeviceLedger lh{"hmes"}, lc{"caes"}, lb{"bess"}, lf{"fess"};
    const double h0 = h2.energy, c0 = caes.energy, b0 = bess.energy, f0 = fess.energy;
    long sat_run = 0;
    std::int64_t sat_start = 0;

    auto sample = [&] {
        rep.energy.hydrogen.values.push_back(h2.energy);
        rep.energy.methanol.values.push_back(cfg.hmes.e_m0);
        rep.energy.caes.values.push_back(caes.energy);
        rep.energy.bess.values.push_back(bess.energy);
        rep.energy.fess.values.push_back(fess.energy);
    };
    auto serve = [&](EssState& s, double want, DeviceLedger& led) {
        double got = 0.0;
        s = ess_exchange(s, want, dt_h, &got);
        led.absorbed += std::max(-got, 0.0) * dt_h;
        led.delivered += std::max(got, 0.0) * dt_h;
        return got;
    };

    for (std::size_t i = 0; i < T; ++i) {
        if (static_cast<std::int64_t>(i) % cfg.trace_step == 0) sample();
        const double ph = serve(h2, bands.hmes[i], lh);
        const double pc = serve(caes, bands.caes[i], lc);
        const double pb = serve(bess, bands.bess[i], lb);
        const double pf = serve(fess, bands.fess[i], lf);
        if (std::abs(pf - bands.fess[i]) > 1e-9) {
            if (sat_run == 0) sat_start = nl.epoch_at(i);
            ++sat_run;
            ++rep.counters.fess_saturated_seconds;
        } else if (sat_run > 0) {
            rep.events.push_back({sat_start, "fess", EventKind::FessSaturated, static_cast<double>(sat_run)});
            sat_run = 0;
        }
        rep.l1_output[i] = ph;
        rep.l2_output[i] = pc;
        rep.l3_output[i] = pb;
        rep.fess_output[i] = pf;
        rep.grid[i] = nl[i] - ph - pc - pb - pf;
        const double closure = std::abs(nl[i] - (ph + pc + pb + pf + rep.grid[i]));
        rep.metrics.closure_max_error = std::max(rep.metrics.closure_max_error, closure);
        if (closure > 1e-9) throw LedgerFailure("power balance does not close");
        rep.cost.hmes += (ph >= 0.0 ? l1.cost[1] * ph : -l1.cost[0] * ph) * dt_h * l1.cost_weight;
        rep.cost.caes += caes_cost * std::abs(pc) * dt_h;
        rep.cost.bess += bess_cost * std::abs(pb) * dt_h;
        rep.cost.fess += fess_cost * std::abs(pf) * dt_h;
    }
    if (sat_run > 0) rep.events.push_back({sat_start, "fess", EventKind::FessSaturated, static_cast<double>(sat_run)});
    sample();
    auto close = [](DeviceLedger& l, double start, const EssState& s) {
        l.stored_start = start;
        l.stored_end = s.energy;
        l.eta_c = s.eta_c;
        l.eta_d = s.eta_d;
    };
    close(lh, h0, h2);
    close(lc, c0, caes);
    close(lb, b0, bess);
    close(lf, f0, fess);
    rep.ledgers = {lh, lc, lb, lf};
    detail::Clock::finalize_metrics(rep, cfg);
    return rep;
}

// Dispatch on the configured controller.
inline SimulationReport run_controller(const Scenario& sc, const EngineConfig& cfg, ControllerKind kind) {
    switch (kind) {
        case ControllerKind::Proposed: return run_engine(cfg, sc);
        case ControllerKind::PeriodicSoc: return run_periodic_soc_mpc(sc, cfg);
        case ControllerKind::FilterDecomposition: return run_filter_decomposition(sc, cfg);
    }
    throw ConfigError("unknown controller");
}

}  // namespace hess
