// Command-line front end: run, validate, compare, synth.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "hess/hess.hpp"

namespace fs = std::filesystem;
using namespace hess;

namespace {

constexpr int kOk = 0, kConfigInvalid = 2, kRuntimeAbort = 3, kSolverFailure = 4;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> controller;
    std::optional<double> accuracy;
    std::optional<int> days;
    std::optional<std::string> archetype;
    std::optional<std::int64_t> trace_step;
    bool qp_dump = false;
};

void add_common(CLI::App* app, Overrides& o) {
    app->add_option("--config", o.config, "JSON config file (defaults when omitted)")->check(CLI::ExistingFile);
    app->add_option("--seed", o.seed, "scenario seed");
    app->add_option("--out", o.out, "output directory");
    app->add_option("--accuracy", o.accuracy, "forecast accuracy for all three layers, in (0, 1]");
    app->add_option("--days", o.days, "simulated days");
    app->add_option("--archetype", o.archetype, "balanced, oversupply, deficit or extreme_calm");
}

void print_findings(const std::vector<Finding>& f) {
    for (const auto& x : f) std::cerr << to_string(x.severity) << ": " << x.path << ": " << x.message << '\n';
}

// Load, apply flags, validate. Returns nullopt after printing errors.
std::optional<EngineConfig> resolve(const Overrides& o) {
    EngineConfig cfg = default_config();
    std::vector<Finding> findings;
    if (!o.config.empty()) {
        auto loaded = load_config(o.config);
        cfg = loaded.config;
        findings = loaded.findings;
    }
    if (has_errors(findings)) {
        print_findings(findings);
        return std::nullopt;
    }
    if (o.seed) cfg.scenario.seed = *o.seed;
    if (o.out) cfg.out_dir = *o.out;
    if (o.controller) cfg.controller = parse_controller(*o.controller);
    if (o.accuracy) cfg.scenario.forecast_accuracy = {*o.accuracy, *o.accuracy, *o.accuracy};
    if (o.days) cfg.scenario.days = *o.days;
    if (o.archetype) cfg.scenario.archetype = parse_archetype(*o.archetype);
    if (o.trace_step) cfg.trace_step = *o.trace_step;
    if (o.qp_dump) cfg.qp_dump = true;
    findings = validate(cfg);
    print_findings(findings);
    if (has_errors(findings)) return std::nullopt;
    return cfg;
}

std::string cell(const Ratio& r) {
    if (!r.defined) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", r.value);
    return buf;
}

void summary(const SimulationReport& rep) {
    std::printf("%-22s smoothing %s  minute %s  rte %s  benefit %.0f  fess_sat_s %ld\n", to_string(rep.controller),
                cell(rep.metrics.smoothing).c_str(), cell(rep.metrics.minute_reduction).c_str(),
                cell(rep.metrics.round_trip).c_str(), rep.metrics.benefit.total, rep.counters.fess_saturated_seconds);
}

int cmd_run(const Overrides& o) {
    const auto cfg = resolve(o);
    if (!cfg) return kConfigInvalid;
    const auto sc = make_scenario(*cfg);
    const auto rep = run_controller(sc, *cfg, cfg->controller);
    write_report(rep, cfg->out_dir, cfg->trace_step);
    summary(rep);
    return kOk;
}

int cmd_validate(const Overrides& o) {
    const auto cfg = resolve(o);
    if (!cfg) return kConfigInvalid;
    std::puts("config ok");
    return kOk;
}

int cmd_compare(const Overrides& o) {
    const auto cfg = resolve(o);
    if (!cfg) return kConfigInvalid;
    const auto sc = make_scenario(*cfg);
    json table = json::array();
    std::printf("%-22s %10s %10s %10s %14s %10s %10s\n", "controller", "smoothing", "minute", "rte", "benefit",
                "recharge", "slack");
    for (auto kind : {ControllerKind::Proposed, ControllerKind::PeriodicSoc, ControllerKind::FilterDecomposition}) {
        const auto rep = run_controller(sc, *cfg, kind);
        write_report(rep, fs::path(cfg->out_dir) / to_string(kind), cfg->trace_step);
        std::printf("%-22s %10s %10s %10s %14.0f %10ld %10ld\n", to_string(kind), cell(rep.metrics.smoothing).c_str(),
                    cell(rep.metrics.minute_reduction).c_str(), cell(rep.metrics.round_trip).c_str(),
                    rep.metrics.benefit.total, rep.counters.forced_recharge, rep.counters.slack_events);
        table.push_back(metrics_json(rep));
    }
    std::ofstream f(fs::path(cfg->out_dir) / "compare.json", std::ios::binary);
    f << table.dump(2) << '\n';
    return kOk;
}

int cmd_synth(const Overrides& o) {
    const auto cfg = resolve(o);
    if (!cfg) return kConfigInvalid;
    const auto sc = make_scenario(*cfg);
    const fs::path dir = cfg->out_dir;
    fs::create_directories(dir);
    write_csv((dir / "net_load.csv").string(), sc.actual);
    const char* names[] = {"forecast_l1.csv", "forecast_l2.csv", "forecast_l3.csv"};
    for (std::size_t i = 0; i < 3; ++i) write_csv((dir / names[i]).string(), sc.forecasts[i]);
    std::printf("%s: %zu samples, %.1f MWh net\n", sc.name.c_str(), sc.actual.size(), sc.actual.energy_mwh());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical hybrid storage dispatch simulator"};
    app.require_subcommand(1);
    Overrides o;

    auto* run = app.add_subcommand("run", "simulate one controller and write a report");
    add_common(run, o);
    run->add_option("--controller", o.controller, "proposed, periodic_soc or filter_decomposition");
    run->add_option("--trace-step", o.trace_step, "trace sampling step in seconds");
    run->add_flag("--qp-dump", o.qp_dump, "write dense QP dumps of selected solves");

    auto* val = app.add_subcommand("validate", "check a config and list findings");
    add_common(val, o);

    auto* cmp = app.add_subcommand("compare", "run all controllers on one scenario");
    add_common(cmp, o);
    cmp->add_option("--trace-step", o.trace_step, "trace sampling step in seconds");

    auto* syn = app.add_subcommand("synth", "write the scenario and its forecasts as CSV");
    add_common(syn, o);

    CLI11_PARSE(app, argc, argv);
    try {
        if (run->parsed()) return cmd_run(o);
        if (val->parsed()) return cmd_validate(o);
        if (cmp->parsed()) return cmd_compare(o);
        if (syn->parsed()) return cmd_synth(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigInvalid;
    } catch (const LedgerFailure& e) {
        std::cerr << "aborted: " << e.what() << '\n';
        return kRuntimeAbort;
    } catch (const SolverFailure& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolverFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeAbort;
    }
    return kOk;
}
