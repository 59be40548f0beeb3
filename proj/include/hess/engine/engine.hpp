#pragma once

// Simulation clock: L1 to L3 receding-horizon layers on their boundaries,
// adaptive bands child-first, and the flywheel every second.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hess/core/errors.hpp"
#include "hess/core/time_series.hpp"
#include "hess/devices/battery.hpp"
#include "hess/engine/config.hpp"
#include "hess/metrics/metrics.hpp"
#include "hess/mpc/layers.hpp"
#include "hess/mtip/mtip.hpp"
#include "hess/scenario/scenario.hpp"
#include "hess/vic/vic.hpp"

namespace hess {

struct DecisionRecord {
    std::int64_t epoch = 0;
    LayerId layer = LayerId::L1;
    double forecast0 = 0.0;  // residual the layer tracks at its first step
    double output = 0.0;     // applied, MW toward the grid
    std::vector<double> u;
    MtipBounds band;
    SolveStats stats;
};

enum class EventKind {
    BandClamped,
    BandCrossed,
    BandDropped,
    SolveSaturated,
    DenseFallback,
    EfficiencyClamped,
    FessSaturated,
    ForcedRecharge,
    SlackUsed,
};

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::BandClamped: return "band_clamped";
        case EventKind::BandCrossed: return "band_crossed";
        case EventKind::BandDropped: return "band_dropped";
        case EventKind::SolveSaturated: return "solve_saturated";
        case EventKind::DenseFallback: return "dense_fallback";
        case EventKind::EfficiencyClamped: return "efficiency_clamped";
        case EventKind::FessSaturated: return "fess_saturated";
        case EventKind::ForcedRecharge: return "forced_recharge";
        case EventKind::SlackUsed: return "slack_used";
    }
    return "?";
}

struct Event {
    std::int64_t epoch;
    std::string source;  // L1, L2, L3, L4 or a device name
    EventKind kind;
    double value;  // seconds for saturation episodes, MW or MWh otherwise
};

struct OperatingCost {
    double hmes = 0.0, caes = 0.0, bess = 0.0, fess = 0.0;
    double total() const { return hmes + caes + bess + fess; }
};

struct Counters {
    long band_clamped = 0, band_crossed = 0, band_dropped = 0;
    long saturated_solves = 0, dense_fallbacks = 0, efficiency_clamped = 0;
    long fess_saturated_seconds = 0;
    long envelope_violations = 0;
    long forced_recharge = 0, slack_events = 0;
    long solves = 0, iterations = 0;
    double max_kkt = 0.0;
};

struct MetricBlock {
    Ratio smoothing, smoothing_rms, minute_reduction, round_trip;
    Benefit benefit;
    double bess_damage = 0.0, bess_soh = 1.0;
    double closure_max_error = 0.0;  // MW
};

struct EnergyTraces {
    TimeSeries hydrogen, methanol, caes, bess, fess;  // MWh, instantaneous samples
};

struct SimulationReport {
    ControllerKind controller = ControllerKind::Proposed;
    std::string scenario;
    TimeSeries original;  // net load, 1 s
    TimeSeries grid;      // what remains for the grid, 1 s
    TimeSeries l1_output, l2_output, l3_output;  // at each layer step
    TimeSeries fess_output;                      // 1 s, toward the grid
    EnergyTraces energy;
    std::vector<DecisionRecord> records;
    std::vector<Event> events;
    std::vector<DeviceLedger> ledgers;
    OperatingCost cost;
    Counters counters;
    MetricBlock metrics;
    std::vector<json> qp_dumps;
    bool has_qp_stats = true;
};

struct EngineHooks {
    L1Hook l1;
    StorageHook l2, l3;
    bool mtip = true;
};

namespace detail {

inline constexpr double kForcedRechargeMw = 1.0;

inline json dense_dump(const qp::QpProblem& p, const std::string& layer, std::int64_t epoch, const std::string& why) {
    auto vec = [](const Eigen::VectorXd& v) {
        std::vector<double> out(v.data(), v.data() + v.size());
        return out;
    };
    auto mat = [&](const Eigen::MatrixXd& m) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec(m.row(i).transpose()));
        return rows;
    };
    return json{{"layer", layer},         {"epoch_s", epoch},         {"reason", why},
                {"hessian", mat(p.hessian)}, {"linear", vec(p.linear)},  {"var_lower", vec(p.var_lower)},
                {"var_upper", vec(p.var_upper)}, {"ineq_matrix", mat(p.ineq_matrix)},
                {"ineq_lower", vec(p.ineq_lower)}, {"ineq_upper", vec(p.ineq_upper)}, {"constant", p.constant}};
}

// Realized average efficiency, falling back to a nominal value when unused.
struct EffAverage {
    double weighted = 0.0, weight = 0.0;
    void add(double eta, double w) {
        weighted += eta * w;
        weight += w;
    }
    double value(double fallback) const { return weight > 0.0 ? weighted / weight : fallback; }
};

class Clock {
public:
    Clock(const EngineConfig& cfg, const Scenario& sc, const EngineHooks& hooks)
        : cfg_(cfg), sc_(sc), hooks_(hooks), nl_(sc.actual) {
        if (nl_.dt != 1) throw IncompatibleStep("engine input must be sampled at 1 s");
        if (nl_.size() == 0) throw AlignmentError("empty scenario");
        spec1_ = cfg.l1_spec();
        spec2_ = cfg.l2_spec();
        spec3_ = cfg.l3_spec();
        fess_cost_ = cfg.fess_cycle_cost();
        x1_ = L1State{cfg.hmes.e_h0, cfg.hmes.e_m0};
        caes_ = make_state(cfg.caes, spec2_.dt_h());
        bess_ = make_state(cfg.bess, spec3_.dt_h());
        fess_ = make_state(cfg.fess, 1.0 / 3600.0);
        eff_ = freeze_efficiencies(cfg.hmes, ratios_);
        nominal_ = eff_;
        e_start_ = {0.0, caes_.energy, bess_.energy, fess_.energy};
    }

    SimulationReport run() {
        const std::size_t T = nl_.size();
        const std::int64_t t0 = nl_.start_epoch;
        rep_.scenario = sc_.name;
        rep_.original = nl_;
        rep_.grid = TimeSeries(t0, 1, std::vector<double>(T));
        rep_.fess_output = TimeSeries(t0, 1, std::vector<double>(T));
        rep_.l1_output = TimeSeries(t0, spec1_.dt_s, {});
        rep_.l2_output = TimeSeries(t0, spec2_.dt_s, {});
        rep_.l3_output = TimeSeries(t0, spec3_.dt_s, {});
        const std::int64_t ts = cfg_.trace_step;
        for (auto* tr : {&rep_.energy.hydrogen, &rep_.energy.methanol, &rep_.energy.caes, &rep_.energy.bess,
                         &rep_.energy.fess})
            *tr = TimeSeries(t0, ts, {});

        for (std::size_t s = 0; s < T; ++s) {
            const auto si = static_cast<std::int64_t>(s);
            const std::int64_t t = t0 + si;
            if (si % ts == 0) sample_energy();
            if (si % spec1_.dt_s == 0) tick_l1(t, si);
            if (si % spec2_.dt_s == 0) tick_l2(t, si);
            if (si % spec3_.dt_s == 0) tick_l3(t, si);
            tick_l4(s);
        }
        sample_energy();
        finish();
        return std::move(rep_);
    }

private:
    const EngineConfig& cfg_;
    const Scenario& sc_;
    const EngineHooks& hooks_;
    const TimeSeries& nl_;
    LayerSpec spec1_, spec2_, spec3_;
    double fess_cost_ = 0.0;

    L1State x1_;
    EssState caes_, bess_, fess_;
    FrozenEfficiencies eff_, nominal_;
    LoadRatios ratios_;
    TimeSeries plan1_, plan2_;
    double out1_ = 0.0, out2_ = 0.0, out3_ = 0.0;
    double r_prev_ = 0.0;
    bool first_l4_ = true;
    long sat_run_ = 0;
    std::int64_t sat_start_ = 0;

    std::array<double, 4> e_start_{};
    DeviceLedger led_h_{"hmes"}, led_c_{"caes"}, led_b_{"bess"}, led_f_{"fess"};
    EffAverage awe_eff_, fc_eff_, turbine_eff_;
    std::array<bool, 3> dumped_{};

    SimulationReport rep_;

    // Layer forecast over n steps from t, shifted by the last realized error.
    std::vector<double> forecast(int layer, std::int64_t t, std::int64_t si, std::size_t n) const {
        const TimeSeries& f = sc_.forecasts[static_cast<std::size_t>(layer)];
        std::vector<double> w(n);
        for (std::size_t k = 0; k < n; ++k) w[k] = padded_value(f, t + static_cast<std::int64_t>(k) * f.dt);
        if (cfg_.feedback.enabled && si >= f.dt) {
            double mean = 0.0;
            for (std::int64_t j = si - f.dt; j < si; ++j) mean += nl_[static_cast<std::size_t>(j)];
            mean /= static_cast<double>(f.dt);
            const double e = mean - padded_value(f, t - f.dt);
            double g = cfg_.feedback.decay;
            for (auto& v : w) {
                v += e * g;
                g *= cfg_.feedback.decay;
            }
        }
        return w;
    }

    MtipBounds band(const MicroContext& ctx, const SideCosts& costs, const char* who, std::int64_t t) {
        if (!hooks_.mtip || !cfg_.mtip.enabled) return {};
        const auto phy = physical_bounds(ctx, cfg_.mtip.convention);
        auto b = adaptive_bounds(phy, costs, cfg_.mtip.kappa, cfg_.mtip.chi_th, cfg_.mtip.eps_db);
        if (b.clamped) {
            ++rep_.counters.band_crossed;
            rep_.events.push_back({t, who, EventKind::BandCrossed, b.r_upper});
        }
        return b;
    }

    void note_solve(const LayerDecision& d, LayerId id, std::int64_t t, double forecast0) {
        auto& c = rep_.counters;
        const char* who = to_string(id);
        ++c.solves;
        c.iterations += d.stats.iterations;
        if (std::isfinite(d.stats.kkt_residual)) c.max_kkt = std::max(c.max_kkt, d.stats.kkt_residual);
        auto ev = [&](bool on, EventKind k, long& n, double v) {
            if (!on) return;
            ++n;
            rep_.events.push_back({t, who, k, v});
        };
        ev(d.stats.band_clamped, EventKind::BandClamped, c.band_clamped, d.band.r_upper - d.band.r_lower);
        ev(d.stats.band_dropped, EventKind::BandDropped, c.band_dropped, 0.0);
        ev(d.stats.saturated, EventKind::SolveSaturated, c.saturated_solves, d.output);
        ev(d.stats.dense_fallback, EventKind::DenseFallback, c.dense_fallbacks, 0.0);
        ev(d.output < -kForcedRechargeMw && forecast0 > kForcedRechargeMw, EventKind::ForcedRecharge,
           c.forced_recharge, d.output);
        rep_.records.push_back({t, id, forecast0, d.output, d.u_applied, d.band, d.stats});
    }

    template <class Q>
    void maybe_dump(const std::optional<Q>& q, const LayerDecision& d, LayerId id, std::int64_t t) {
        if (!q) return;
        const auto idx = static_cast<std::size_t>(id);
        std::string why;
        if (!dumped_[idx]) why = "first";
        else if (d.stats.saturated) why = "saturated";
        else if (d.stats.band_dropped) why = "band_dropped";
        else if (d.stats.dense_fallback) why = "dense_fallback";
        if (why.empty()) return;
        dumped_[idx] = true;
        rep_.qp_dumps.push_back(dense_dump(qp::to_dense(*q), to_string(id), t, why));
    }

    void check_store(const EssState& s, const char* who, std::int64_t t) {
        if (s.energy < s.e_min - 1e-9 || s.energy > s.e_max + 1e-9) {
            ++rep_.counters.envelope_violations;
            (void)who;
            (void)t;
        }
    }

    void tick_l1(std::int64_t t, std::int64_t si) {
        const auto w1 = forecast(0, t, si, static_cast<std::size_t>(spec1_.horizon));
        MtipBounds b;
        if (hooks_.mtip && cfg_.mtip.enabled) {
            const auto per = static_cast<std::size_t>(spec1_.dt_s / spec2_.dt_s);
            MicroContext ctx{TimeSeries(t, spec2_.dt_s, forecast(1, t, si, per)), w1[0], caes_, spec2_.dt_h(),
                             spec1_.dt_h()};
            const SideCosts sc{marginal_cost(spec1_.cost, spec1_.cost_weight, {false, true, false, true}),
                               spec2_.cost_weight * spec2_.cost[1],
                               marginal_cost(spec1_.cost, spec1_.cost_weight, {true, false, false, false}),
                               spec2_.cost_weight * spec2_.cost[0]};
            b = band(ctx, sc, "L1", t);
        }
        eff_ = freeze_efficiencies(cfg_.hmes, ratios_);
        if (eff_.clamped) {
            ++rep_.counters.efficiency_clamped;
            rep_.events.push_back({t, "L1", EventKind::EfficiencyClamped, 0.0});
        }
        std::optional<L1Qp> captured;
        L1Hook hook = hooks_.l1;
        if (cfg_.qp_dump)
            hook = [&](L1Qp& q, std::int64_t start) {
                if (hooks_.l1) hooks_.l1(q, start);
                captured = q;
            };
        const auto d = l1_receding_step(spec1_, cfg_.hmes, x1_, eff_, w1, b, cfg_.ipm, hook, t);
        maybe_dump(captured, d, LayerId::L1, t);
        note_solve(d, LayerId::L1, t, w1[0]);

        const double dt = spec1_.dt_h();
        const auto& u = d.u_applied;
        led_h_.absorbed += u[0] * dt;
        led_h_.delivered += (u[1] + u[3]) * dt;
        awe_eff_.add(eff_.h_charge, u[0]);
        fc_eff_.add(eff_.h_discharge, u[1]);
        turbine_eff_.add(eff_.m_discharge, u[3]);
        double c = 0.0;
        for (std::size_t i = 0; i < 4; ++i) c += spec1_.cost[i] * u[i];
        rep_.cost.hmes += spec1_.cost_weight * c * dt;
        ratios_ = {u[0] / cfg_.hmes.awe_cap, u[1] / cfg_.hmes.fc_cap, u[2] / cfg_.hmes.synth_cap,
                   u[3] / cfg_.hmes.turbine_cap};
        out1_ = d.output;
        plan1_ = TimeSeries(t, spec1_.dt_s, d.plan_output);
        rep_.l1_output.values.push_back(out1_);
    }

    void tick_l2(std::int64_t t, std::int64_t si) {
        const auto w2 = forecast(1, t, si, static_cast<std::size_t>(spec2_.horizon));
        const auto r2 = cascade_residual({&plan1_}, TimeSeries(t, spec2_.dt_s, w2));
        MtipBounds b;
        if (hooks_.mtip && cfg_.mtip.enabled) {
            const auto per = static_cast<std::size_t>(spec2_.dt_s / spec3_.dt_s);
            const auto w3 = forecast(2, t, si, per);
            const auto r3 = cascade_residual({&plan1_}, TimeSeries(t, spec3_.dt_s, w3));
            MicroContext ctx{TimeSeries(t, spec3_.dt_s, r3), r2[0], bess_, spec3_.dt_h(), spec2_.dt_h()};
            const SideCosts sc{spec2_.cost_weight * spec2_.cost[1], spec3_.cost_weight * spec3_.cost[1],
                               spec2_.cost_weight * spec2_.cost[0], spec3_.cost_weight * spec3_.cost[0]};
            b = band(ctx, sc, "L2", t);
        }
        std::optional<StorageQp> captured;
        StorageHook hook = hooks_.l2;
        if (cfg_.qp_dump)
            hook = [&](StorageQp& q, std::int64_t start) {
                if (hooks_.l2) hooks_.l2(q, start);
                captured = q;
            };
        const auto d = storage_receding_step(spec2_, caes_, r2, b, cfg_.ipm, hook, t);
        check_store(caes_, "caes", t);
        maybe_dump(captured, d, LayerId::L2, t);
        note_solve(d, LayerId::L2, t, r2[0]);
        const double dt = spec2_.dt_h();
        led_c_.absorbed += d.u_applied[0] * dt;
        led_c_.delivered += d.u_applied[1] * dt;
        rep_.cost.caes += spec2_.cost[0] * std::abs(d.output) * dt;
        out2_ = d.output;
        plan2_ = TimeSeries(t, spec2_.dt_s, d.plan_output);
        rep_.l2_output.values.push_back(out2_);
    }

    void tick_l3(std::int64_t t, std::int64_t si) {
        const auto w3 = forecast(2, t, si, static_cast<std::size_t>(spec3_.horizon));
        const auto r3 = cascade_residual({&plan1_, &plan2_}, TimeSeries(t, spec3_.dt_s, w3));
        MtipBounds b;
        if (hooks_.mtip && cfg_.mtip.enabled) {
            // the flywheel sees the last step's wiggle again
            const std::int64_t n = spec3_.dt_s;
            std::vector<double> micro(static_cast<std::size_t>(n), r3[0]);
            if (si >= n) {
                double mean = 0.0;
                for (std::int64_t j = si - n; j < si; ++j) mean += nl_[static_cast<std::size_t>(j)];
                mean /= static_cast<double>(n);
                for (std::int64_t j = 0; j < n; ++j) micro[static_cast<std::size_t>(j)] += nl_[static_cast<std::size_t>(si - n + j)] - mean;
            }
            MicroContext ctx{TimeSeries(t, 1, std::move(micro)), r3[0], fess_, 1.0 / 3600.0, spec3_.dt_h()};
            const SideCosts sc{spec3_.cost_weight * spec3_.cost[1], fess_cost_, spec3_.cost_weight * spec3_.cost[0],
                               fess_cost_};
            b = band(ctx, sc, "L3", t);
        }
        std::optional<StorageQp> captured;
        StorageHook hook = hooks_.l3;
        if (cfg_.qp_dump)
            hook = [&](StorageQp& q, std::int64_t start) {
                if (hooks_.l3) hooks_.l3(q, start);
                captured = q;
            };
        const auto d = storage_receding_step(spec3_, bess_, r3, b, cfg_.ipm, hook, t);
        check_store(bess_, "bess", t);
        maybe_dump(captured, d, LayerId::L3, t);
        note_solve(d, LayerId::L3, t, r3[0]);
        const double dt = spec3_.dt_h();
        led_b_.absorbed += d.u_applied[0] * dt;
        led_b_.delivered += d.u_applied[1] * dt;
        rep_.cost.bess += spec3_.cost[0] * std::abs(d.output) * dt;
        out3_ = d.output;
        rep_.l3_output.values.push_back(out3_);
    }

    void tick_l4(std::size_t s) {
        const std::int64_t t = nl_.epoch_at(s);
        const double r0 = l4_residual(nl_[s], out1_, out2_, out3_, cfg_.l4_target);
        const double cmd = vic_command_closed_loop(r0, r_prev_, first_l4_, cfg_.vic);
        const auto a = apply_fess(cmd, fess_, 1.0);
        fess_ = a.state;
        check_store(fess_, "fess", t);
        const bool sat = std::abs(a.actual - cmd) > 1e-9;
        if (sat) {
            if (sat_run_ == 0) sat_start_ = t;
            ++sat_run_;
            ++rep_.counters.fess_saturated_seconds;
        } else {
            close_saturation();
        }
        const double r = r0 + a.actual;
        const double grid = r + cfg_.l4_target;
        const double fess_out = -a.actual;
        const double closure = std::abs(nl_[s] - (out1_ + out2_ + out3_ + fess_out) - grid);
        rep_.metrics.closure_max_error = std::max(rep_.metrics.closure_max_error, closure);
        if (closure > 1e-9)
            throw LedgerFailure("power balance does not close at epoch " + std::to_string(t) + ": " +
                                std::to_string(closure) + " MW");
        rep_.grid[s] = grid;
        rep_.fess_output[s] = fess_out;
        led_f_.absorbed += std::max(a.actual, 0.0) / 3600.0;
        led_f_.delivered += std::max(-a.actual, 0.0) / 3600.0;
        rep_.cost.fess += fess_cost_ * std::abs(a.actual) / 3600.0;
        r_prev_ = r;
        first_l4_ = false;
    }

    void close_saturation() {
        if (sat_run_ == 0) return;
        rep_.events.push_back({sat_start_, "L4", EventKind::FessSaturated, static_cast<double>(sat_run_)});
        sat_run_ = 0;
    }

    void sample_energy() {
        auto& e = rep_.energy;
        e.hydrogen.values.push_back(x1_.e_h);
        e.methanol.values.push_back(x1_.e_m);
        e.caes.values.push_back(caes_.energy);
        e.bess.values.push_back(bess_.energy);
        e.fess.values.push_back(fess_.energy);
        if (x1_.e_h < -1e-9 || x1_.e_h > cfg_.hmes.e_h_max + 1e-9 || x1_.e_m < -1e-9)
            ++rep_.counters.envelope_violations;
    }

    void finish() {
        close_saturation();
        const double eta_awe = awe_eff_.value(nominal_.h_charge), eta_fc = fc_eff_.value(nominal_.h_discharge);
        // both ends use the realized weighting of methanol
        const double w = turbine_eff_.value(nominal_.m_discharge) / eta_fc;
        led_h_.stored_start = cfg_.hmes.e_h0 + cfg_.hmes.e_m0 * w;
        led_h_.stored_end = x1_.e_h + x1_.e_m * w;
        led_h_.eta_c = eta_awe;
        led_h_.eta_d = eta_fc;
        auto store = [](DeviceLedger& l, double start, const EssState& s) {
            l.stored_start = start;
            l.stored_end = s.energy;
            l.eta_c = s.eta_c;
            l.eta_d = s.eta_d;
        };
        store(led_c_, e_start_[1], caes_);
        store(led_b_, e_start_[2], bess_);
        store(led_f_, e_start_[3], fess_);
        rep_.ledgers = {led_h_, led_c_, led_b_, led_f_};
        finalize_metrics(rep_, cfg_);
    }

public:
    static void finalize_metrics(SimulationReport& rep, const EngineConfig& cfg) {
        TimeSeries orig = rep.original, resid = rep.grid;
        for (auto& v : orig.values) v -= cfg.l4_target;
        for (auto& v : resid.values) v -= cfg.l4_target;
        auto& m = rep.metrics;
        m.smoothing = smoothing_rate(orig, resid);
        m.smoothing_rms = smoothing_rate_rms(orig, resid);
        m.minute_reduction = minute_fluctuation_reduction(orig, resid);
        m.round_trip = round_trip_efficiency(rep.ledgers);
        m.benefit = economic_benefit(rep.original, rep.grid, cfg.tariff, rep.cost.total());
        const auto& eb = rep.energy.bess;
        if (eb.size() >= 2) {
            TimeSeries soc = eb, temp = eb;
            for (auto& v : soc.values) v /= cfg.bess.capacity;
            std::fill(temp.values.begin(), temp.values.end(), cfg.bess_temperature);
            m.bess_damage = battery_damage(soc, temp, cfg.battery).total;
            m.bess_soh = soh_clamped(m.bess_damage, cfg.battery);
        }
    }
};

}  // namespace detail

// Proposed controller, or the same layer stack altered by hooks.
inline SimulationReport run_engine(const EngineConfig& cfg, const Scenario& sc, const EngineHooks& hooks = {}) {
    detail::Clock clock(cfg, sc, hooks);
    auto rep = clock.run();
    rep.controller = ControllerKind::Proposed;
    return rep;
}

}  // namespace hess
