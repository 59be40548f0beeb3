#pragma once

// Scenario assembly from a config and the on-disk report: metrics.json,
// traces/*.csv, decisions.csv, events.csv and optional qp/*.json dumps.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>

#include "hess/baselines/baselines.hpp"
#include "hess/core/csv.hpp"
#include "hess/engine/engine.hpp"

namespace hess {

inline Scenario make_scenario(const EngineConfig& cfg) {
    if (cfg.scenario_csv.empty()) return build_scenario(cfg.scenario);
    Scenario s = build_scenario(ingest_csv(cfg.scenario_csv), cfg.scenario.forecast_accuracy, cfg.scenario.seed);
    s.name = std::filesystem::path(cfg.scenario_csv).stem().string();
    return s;
}

namespace detail {

inline json ratio_json(const Ratio& r) { return r.defined ? json(r.value) : json(nullptr); }

inline std::string fmt(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

// Block means over `step` seconds; a trailing partial block is dropped.
inline TimeSeries downsample(const TimeSeries& ts, std::int64_t step) {
    if (step <= ts.dt) return ts;
    const auto k = static_cast<std::size_t>(step / ts.dt);
    TimeSeries cut = ts;
    cut.values.resize(ts.size() / k * k);
    return resample(cut, step);
}

}  // namespace detail

inline json metrics_json(const SimulationReport& rep) {
    const auto& m = rep.metrics;
    const auto& c = rep.counters;
    json ledgers = json::array();
    for (const auto& l : rep.ledgers)
        ledgers.push_back({{"name", l.name},
                           {"absorbed_mwh", l.absorbed},
                           {"delivered_mwh", l.delivered},
                           {"stored_start_mwh", l.stored_start},
                           {"stored_end_mwh", l.stored_end},
                           {"eta_c", l.eta_c},
                           {"eta_d", l.eta_d}});
    json out{
        {"controller", to_string(rep.controller)},
        {"scenario", rep.scenario},
        {"duration_s", static_cast<std::int64_t>(rep.original.size()) * rep.original.dt},
        {"metrics",
         {{"smoothing_rate", detail::ratio_json(m.smoothing)},
          {"smoothing_rate_rms", detail::ratio_json(m.smoothing_rms)},
          {"minute_fluctuation_reduction", detail::ratio_json(m.minute_reduction)},
          {"round_trip_efficiency", detail::ratio_json(m.round_trip)},
          {"benefit",
           {{"tou", m.benefit.tou},
            {"capacity", m.benefit.capacity},
            {"operating_cost", m.benefit.operating_cost},
            {"total", m.benefit.total}}},
          {"bess_damage", m.bess_damage},
          {"bess_soh", m.bess_soh},
          {"closure_max_error_mw", m.closure_max_error}}},
        {"operating_cost",
         {{"hmes", rep.cost.hmes},
          {"caes", rep.cost.caes},
          {"bess", rep.cost.bess},
          {"fess", rep.cost.fess},
          {"total", rep.cost.total()}}},
        {"ledgers", ledgers},
        {"events",
         {{"band_clamped", c.band_clamped},
          {"band_crossed", c.band_crossed},
          {"band_dropped", c.band_dropped},
          {"saturated_solves", c.saturated_solves},
          {"dense_fallbacks", c.dense_fallbacks},
          {"efficiency_clamped", c.efficiency_clamped},
          {"fess_saturated_seconds", c.fess_saturated_seconds},
          {"envelope_violations", c.envelope_violations},
          {"forced_recharge", c.forced_recharge},
          {"slack_used", c.slack_events}}},
    };
    if (rep.has_qp_stats)
        out["solver"] = {{"solves", c.solves}, {"iterations", c.iterations}, {"max_kkt_residual", c.max_kkt}};
    else
        out["solver"] = nullptr;
    return out;
}

inline void write_report(const SimulationReport& rep, const std::filesystem::path& dir, std::int64_t trace_step) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "traces");
    {
        std::ofstream f(dir / "metrics.json", std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (dir / "metrics.json").string());
        f << metrics_json(rep).dump(2) << '\n';
    }
    const auto tr = dir / "traces";
    write_csv((tr / "original.csv").string(), detail::downsample(rep.original, trace_step));
    write_csv((tr / "grid.csv").string(), detail::downsample(rep.grid, trace_step));
    write_csv((tr / "fess_output.csv").string(), detail::downsample(rep.fess_output, trace_step));
    write_csv((tr / "l1_output.csv").string(), detail::downsample(rep.l1_output, trace_step));
    write_csv((tr / "l2_output.csv").string(), detail::downsample(rep.l2_output, trace_step));
    write_csv((tr / "l3_output.csv").string(), detail::downsample(rep.l3_output, trace_step));
    constexpr std::string_view eh = "epoch_s,energy_mwh";
    write_csv((tr / "hydrogen_energy.csv").string(), rep.energy.hydrogen, eh);
    write_csv((tr / "methanol_energy.csv").string(), rep.energy.methanol, eh);
    write_csv((tr / "caes_energy.csv").string(), rep.energy.caes, eh);
    write_csv((tr / "bess_energy.csv").string(), rep.energy.bess, eh);
    write_csv((tr / "fess_energy.csv").string(), rep.energy.fess, eh);

    {
        std::ofstream f(dir / "events.csv", std::ios::binary);
        f << "epoch_s,source,kind,value\n";
        for (const auto& e : rep.events)
            f << e.epoch << ',' << e.source << ',' << to_string(e.kind) << ',' << detail::fmt(e.value) << '\n';
    }
    {
        std::ofstream f(dir / "decisions.csv", std::ios::binary);
        f << "epoch_s,layer,forecast_mw,output_mw,u_mw,band_lower_mw,band_upper_mw,gamma_upper,gamma_lower,"
             "status,iterations,kkt_residual,flags\n";
        for (const auto& r : rep.records) {
            std::string u;
            for (std::size_t i = 0; i < r.u.size(); ++i) u += (i ? ";" : "") + detail::fmt(r.u[i]);
            std::string flags;
            auto flag = [&](bool on, const char* name) {
                if (on) flags += (flags.empty() ? "" : ";") + std::string(name);
            };
            flag(r.stats.band_clamped, "band_clamped");
            flag(r.stats.band_dropped, "band_dropped");
            flag(r.stats.saturated, "saturated");
            flag(r.stats.dense_fallback, "dense_fallback");
            flag(r.band.clamped, "band_crossed");
            f << r.epoch << ',' << to_string(r.layer) << ',' << detail::fmt(r.forecast0) << ','
              << detail::fmt(r.output) << ',' << u << ',' << detail::fmt(r.band.r_lower) << ','
              << detail::fmt(r.band.r_upper) << ',' << detail::fmt(r.band.gamma) << ','
              << detail::fmt(r.band.gamma_lower) << ',' << qp::to_string(r.stats.status) << ','
              << r.stats.iterations << ',' << detail::fmt(r.stats.kkt_residual) << ',' << flags << '\n';
        }
    }
    if (!rep.qp_dumps.empty()) {
        fs::create_directories(dir / "qp");
        for (std::size_t i = 0; i < rep.qp_dumps.size(); ++i) {
            const auto& d = rep.qp_dumps[i];
            const auto name = std::to_string(i) + "_" + d.at("layer").get<std::string>() + "_" +
                              std::to_string(d.at("epoch_s").get<std::int64_t>()) + ".json";
            std::ofstream f(dir / "qp" / name, std::ios::binary);
            f << d.dump() << '\n';
        }
    }
}

}  // namespace hess
