#pragma once

// Engine configuration: defaults, JSON loading with includes, and
// cross-field validation.

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hess/core/errors.hpp"
#include "hess/devices/battery.hpp"
#include "hess/devices/ess.hpp"
#include "hess/devices/flywheel.hpp"
#include "hess/metrics/metrics.hpp"
#include "hess/mpc/layers.hpp"
#include "hess/mtip/mtip.hpp"
#include "hess/qp/staged.hpp"
#include "hess/scenario/scenario.hpp"
#include "hess/vic/vic.hpp"

namespace hess {

using json = nlohmann::json;

enum class ControllerKind { Proposed, PeriodicSoc, FilterDecomposition };

inline const char* to_string(ControllerKind k) {
    switch (k) {
        case ControllerKind::Proposed: return "proposed";
        case ControllerKind::PeriodicSoc: return "periodic_soc";
        case ControllerKind::FilterDecomposition: return "filter_decomposition";
    }
    return "?";
}

inline ControllerKind parse_controller(const std::string& s) {
    if (s == "proposed") return ControllerKind::Proposed;
    if (s == "periodic_soc") return ControllerKind::PeriodicSoc;
    if (s == "filter_decomposition") return ControllerKind::FilterDecomposition;
    throw ConfigError("unknown controller '" + s + "'");
}

struct MtipConfig {
    bool enabled = true;
    double kappa = 5.0;
    double chi_th = 1.0;
    double eps_db = 2.0;  // MW
    PhiConvention convention = PhiConvention::RoundTrip;
};

struct BaselineConfig {
    double soc_period_h = 24.0;
    std::array<double, 3> filter_cutoffs_s{60.0, 900.0, 14400.0};
    double slack_weight = 1e3;  // per MWh^2
};

// Layer forecasts are shifted by the last realized error of that layer,
// decaying geometrically along the horizon.
struct FeedbackConfig {
    bool enabled = true;
    double decay = 0.8;
};

struct CaesCostModel {
    double invest = 4.0e7;
    double om_per_cycle = 200.0;
    long cycles = 15000;
    double decay = 1.33e-5;
    double discount = 2e-4;
};

struct EngineConfig {
    ScenarioConfig scenario;
    std::string scenario_csv;  // when set, replaces the synthetic actuals

    HmesParams hmes;
    std::vector<double> l1_cost{6.0, 8.0, 3.0, 10.0};
    StorageParams caes, bess, fess;
    CaesCostModel caes_cost;
    FessParams fess_model;
    BatteryDegParams battery;
    double bess_temperature = 25.0;     // degC
    double bess_reference_damage = 0.05;

    int l1_horizon = 240, l2_horizon = 96, l3_horizon = 60;
    std::int64_t l1_dt = 3600, l2_dt = 900, l3_dt = 60;
    std::array<double, 3> tracking_weight{0.27, 0.15, 0.1};
    std::array<double, 3> cost_weight{1.0, 1.0, 1.0};
    double l3_norm_power = 2.0;

    VicParams vic;
    double l4_target = 0.0;  // MW
    MtipConfig mtip;
    FeedbackConfig feedback;
    TariffConfig tariff;
    BaselineConfig baseline;
    ControllerKind controller = ControllerKind::Proposed;
    qp::IpmSettings ipm{.tol = 1e-8};

    std::string out_dir = "out";
    std::int64_t trace_step = 60;
    bool qp_dump = false;

    double caes_cycle_cost() const {
        return lcoe(caes_cost.invest, caes_cost.om_per_cycle, caes_cost.cycles, caes.capacity, caes_cost.decay,
                    caes_cost.discount);
    }
    double bess_cycle_cost_value() const {
        return bess_cycle_cost(full_cycle_fade(bess_reference_damage, battery), battery);
    }
    double fess_cycle_cost() const { return fess_lcoe(fess_model); }

    LayerSpec l1_spec() const {
        auto s = default_l1_spec(hmes, l1_cost);
        s.horizon = l1_horizon;
        s.dt_s = l1_dt;
        s.tracking_weight = tracking_weight[0];
        s.cost_weight = cost_weight[0];
        return s;
    }
    LayerSpec l2_spec() const {
        auto p = caes;
        p.cycle_cost = caes_cycle_cost();
        auto s = default_storage_spec(LayerId::L2, p);
        s.horizon = l2_horizon;
        s.dt_s = l2_dt;
        s.tracking_weight = tracking_weight[1];
        s.cost_weight = cost_weight[1];
        return s;
    }
    LayerSpec l3_spec() const {
        auto p = bess;
        p.cycle_cost = bess_cycle_cost_value();
        auto s = default_storage_spec(LayerId::L3, p);
        s.horizon = l3_horizon;
        s.dt_s = l3_dt;
        s.tracking_weight = tracking_weight[2];
        s.cost_weight = cost_weight[2];
        s.norm_power = l3_norm_power;
        return s;
    }
};

inline EngineConfig default_config() {
    EngineConfig c;
    c.caes.capacity = 1000.0;
    c.caes.e_min = 100.0;
    c.caes.e_max = 1000.0;
    c.caes.power_cap = 100.0;
    c.caes.eta_c = c.caes.eta_d = 0.83;
    c.caes.initial_soc = 0.5;

    c.bess.capacity = 200.0;
    c.bess.e_min = 20.0;
    c.bess.e_max = 200.0;
    c.bess.power_cap = 100.0;
    c.bess.eta_c = c.bess.eta_d = 0.95;
    c.bess.self_discharge_per_hour = 3e-5;
    c.bess.initial_soc = 0.5;

    c.fess.capacity = c.fess_model.e_max;
    c.fess.e_min = c.fess_model.e_min;
    c.fess.e_max = c.fess_model.e_max;
    c.fess.power_cap = c.fess_model.power_cap;
    c.fess.eta_c = c.fess_model.eta_c;
    c.fess.eta_d = c.fess_model.eta_d;
    c.fess.standby_loss = fess_standby_loss(c.fess_model);
    c.fess.initial_soc = 0.5;
    return c;
}

struct Finding {
    enum class Severity { Error, Warning };
    Severity severity;
    std::string path;
    std::string message;
};

inline const char* to_string(Finding::Severity s) { return s == Finding::Severity::Error ? "error" : "warning"; }

inline bool has_errors(const std::vector<Finding>& f) {
    for (const auto& x : f)
        if (x.severity == Finding::Severity::Error) return true;
    return false;
}

namespace detail {

class Checker {
public:
    std::vector<Finding> out;
    void error(const std::string& path, const std::string& msg) { out.push_back({Finding::Severity::Error, path, msg}); }
    void warning(const std::string& path, const std::string& msg) {
        out.push_back({Finding::Severity::Warning, path, msg});
    }
    void positive(const std::string& path, double v) {
        if (!(v > 0.0) || !std::isfinite(v)) error(path, "must be positive and finite");
    }
    void nonnegative(const std::string& path, double v) {
        if (!(v >= 0.0) || !std::isfinite(v)) error(path, "must be nonnegative and finite");
    }
    void efficiency(const std::string& path, double v) {
        if (!(v > 0.0 && v <= 1.0)) error(path, "efficiency must lie in (0, 1]");
    }
    void storage(const std::string& path, const StorageParams& p) {
        positive(path + ".capacity_mwh", p.capacity);
        nonnegative(path + ".e_min_mwh", p.e_min);
        if (!(p.e_max > p.e_min)) error(path + ".e_max_mwh", "must exceed e_min_mwh");
        if (p.e_max > p.capacity + 1e-9) error(path + ".e_max_mwh", "exceeds the capacity");
        positive(path + ".power_cap_mw", p.power_cap);
        efficiency(path + ".eta_c", p.eta_c);
        efficiency(path + ".eta_d", p.eta_d);
        if (!(p.self_discharge_per_hour >= 0.0 && p.self_discharge_per_hour < 1.0))
            error(path + ".self_discharge_per_hour", "must lie in [0, 1)");
        nonnegative(path + ".standby_loss_mw", p.standby_loss);
        const double e0 = p.initial_soc * p.capacity;
        if (!(p.initial_soc >= 0.0 && p.initial_soc <= 1.0)) error(path + ".initial_soc", "must lie in [0, 1]");
        else if (e0 < p.e_min - 1e-9 || e0 > p.e_max + 1e-9)
            error(path + ".initial_soc", "initial energy lies outside [e_min, e_max]");
    }
};

}  // namespace detail

inline std::vector<Finding> validate(const EngineConfig& c) {
    detail::Checker k;
    const auto& s = c.scenario;
    if (s.days < 1) k.error("scenario.days", "must be at least 1");
    k.nonnegative("scenario.wind_capacity_mw", s.wind_capacity);
    k.nonnegative("scenario.pv_capacity_mw", s.pv_capacity);
    k.nonnegative("scenario.load_peak_mw", s.load_peak);
    for (std::size_t i = 0; i < 3; ++i)
        if (!(s.forecast_accuracy[i] > 0.0 && s.forecast_accuracy[i] <= 1.0))
            k.error("scenario.forecast_accuracy[" + std::to_string(i) + "]", "must lie in (0, 1]");
    if (!c.scenario_csv.empty() && !std::filesystem::exists(c.scenario_csv))
        k.error("scenario.csv", "file does not exist: " + c.scenario_csv);
    k.positive("scenario.weibull_shape", s.weibull_shape);
    k.positive("scenario.wind_tau_h", s.wind_tau_h);
    if (!(s.turbulence_intensity >= 0.0 && s.turbulence_intensity < 1.0))
        k.error("scenario.turbulence_intensity", "must lie in [0, 1)");

    const auto& h = c.hmes;
    k.positive("devices.hmes.awe_cap_mw", h.awe_cap);
    k.positive("devices.hmes.fc_cap_mw", h.fc_cap);
    k.positive("devices.hmes.synthesis_cap_mw", h.synth_cap);
    k.positive("devices.hmes.turbine_cap_mw", h.turbine_cap);
    k.positive("devices.hmes.hydrogen_capacity_mwh", h.e_h_max);
    if (!(h.e_h0 >= 0.0 && h.e_h0 <= h.e_h_max)) k.error("devices.hmes.hydrogen_initial_mwh", "must lie in [0, capacity]");
    k.nonnegative("devices.hmes.methanol_initial_mwh", h.e_m0);
    if (c.l1_cost.size() != 4) k.error("devices.hmes.cost", "needs four entries");
    for (std::size_t i = 0; i < c.l1_cost.size(); ++i) k.nonnegative("devices.hmes.cost[" + std::to_string(i) + "]", c.l1_cost[i]);
    if (!(h.pemfc.j_min > 0.0 && h.pemfc.j_min < h.pemfc.j_rated && h.pemfc.j_rated < h.pemfc.j_max))
        k.error("devices.hmes.pemfc.j_rated", "need 0 < j_min < j_rated < j_max");
    if (!(h.awe.j_min > 0.0 && h.awe.j_min < h.awe.j_rated)) k.error("devices.hmes.awe.j_rated", "need 0 < j_min < j_rated");
    if (!(h.meoh.rho_min > 0.0 && h.meoh.rho_min < 1.0)) k.error("devices.hmes.meoh.rho_min", "must lie in (0, 1)");
    if (!(h.turbine.x_star > 0.0 && h.turbine.x_star <= 1.0)) k.error("devices.hmes.turbine.x_star", "must lie in (0, 1]");
    k.storage("devices.caes", c.caes);
    k.storage("devices.bess", c.bess);
    k.storage("devices.fess", c.fess);
    if (c.caes_cost.cycles < 1) k.error("devices.caes.cost_model.cycles", "must be at least 1");
    if (!(c.bess_reference_damage >= 0.0)) k.error("devices.bess.reference_damage", "must be nonnegative");

    const std::array<std::int64_t, 3> dts{c.l1_dt, c.l2_dt, c.l3_dt};
    const std::array<int, 3> hs{c.l1_horizon, c.l2_horizon, c.l3_horizon};
    const char* names[] = {"l1", "l2", "l3"};
    for (std::size_t i = 0; i < 3; ++i) {
        const std::string p = std::string("layers.") + names[i];
        if (dts[i] <= 0) k.error(p + ".dt_s", "must be positive");
        if (hs[i] < 1) k.error(p + ".horizon", "must be at least 1");
        k.positive(p + ".tracking_weight", c.tracking_weight[i]);
        k.nonnegative(p + ".cost_weight", c.cost_weight[i]);
    }
    if (c.l3_dt > 0 && 60 % c.l3_dt != 0 && c.l3_dt % 60 != 0) k.error("layers.l3.dt_s", "must divide or be a multiple of 60 s");
    for (std::size_t i = 1; i < 3; ++i) {
        const std::string p = std::string("layers.") + names[i];
        if (dts[i] > 0 && dts[i - 1] % dts[i] != 0) {
            k.error(p + ".dt_s", "parent step is not an integer multiple of this step");
            continue;
        }
        if (dts[i] > 0 && static_cast<std::int64_t>(hs[i]) * dts[i] < dts[i - 1])
            k.warning(p + ".horizon", "horizon does not cover one parent step");
        // a child tick late in the parent step must still be covered by the parent plan
        if (static_cast<std::int64_t>(hs[i]) * dts[i] + dts[i - 1] - dts[i] >
            static_cast<std::int64_t>(hs[i - 1]) * dts[i - 1])
            k.error(p + ".horizon", "horizon reaches past the parent horizon");
    }
    if (c.l3_norm_power != 2.0) k.error("layers.l3.norm_power", "only the squared norm gives a quadratic program");

    k.positive("vic.k_pf", c.vic.k_pf);
    k.positive("vic.k_p", c.vic.k_p);
    k.positive("vic.k_d", c.vic.k_d);
    k.positive("vic.dt_s", c.vic.dt);
    if (c.vic.dt != 1.0) k.error("vic.dt_s", "the engine clock runs at 1 s");

    k.positive("mtip.kappa", c.mtip.kappa);
    k.nonnegative("mtip.chi_th", c.mtip.chi_th);
    k.nonnegative("mtip.eps_db_mw", c.mtip.eps_db);
    if (!(c.feedback.decay >= 0.0 && c.feedback.decay < 1.0)) k.error("forecast_feedback.decay", "must lie in [0, 1)");

    for (const auto& msg : c.tariff.problems()) k.error("tariff.tou", msg);
    for (std::size_t i = 0; i < c.tariff.tou.size(); ++i) {
        const auto& b = c.tariff.tou[i];
        if (b.start_hour < 0.0 || b.end_hour > 24.0)
            k.error("tariff.tou[" + std::to_string(i) + "]", "hours must lie in [0, 24]");
    }

    const auto& b = c.baseline;
    k.positive("baseline.soc_period_h", b.soc_period_h);
    if (b.soc_period_h > 0.0 && std::fmod(b.soc_period_h * 3600.0, static_cast<double>(c.l1_dt)) != 0.0)
        k.error("baseline.soc_period_h", "must be a whole number of L1 steps");
    if (b.soc_period_h > 0.0 && std::fmod(s.days * 24.0, b.soc_period_h) != 0.0)
        k.warning("baseline.soc_period_h", "does not divide the run length");
    if (!(b.filter_cutoffs_s[0] > 0.0 && b.filter_cutoffs_s[0] < b.filter_cutoffs_s[1] &&
          b.filter_cutoffs_s[1] < b.filter_cutoffs_s[2]))
        k.error("baseline.filter_cutoffs_s", "cutoffs must be positive and strictly increasing");
    for (double v : b.filter_cutoffs_s)
        if (v != std::floor(v)) k.error("baseline.filter_cutoffs_s", "cutoffs must be whole seconds");
    k.positive("baseline.slack_weight", b.slack_weight);

    if (c.trace_step <= 0 || 86400 % c.trace_step != 0) k.error("output.trace_step_s", "must divide one day");
    k.positive("solver.tol", c.ipm.tol);
    k.positive("solver.acceptable_tol", c.ipm.acceptable_tol);
    if (c.ipm.acceptable_tol < c.ipm.tol) k.error("solver.acceptable_tol", "must not be tighter than solver.tol");
    if (c.ipm.max_iter < 1) k.error("solver.max_iter", "must be at least 1");
    return k.out;
}

// JSON reading. Every key is optional; unknown keys are rejected so typos
// surface as findings.
namespace detail {

class Reader {
public:
    Reader(const json& j, std::string path, std::vector<Finding>& f) : j_(j), path_(std::move(path)), f_(f) {
        if (!j_.is_object()) fail("", "expected an object");
    }
    ~Reader() {
        if (!j_.is_object()) return;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
                f_.push_back({Finding::Severity::Error, at(it.key()), "unknown key"});
    }
    Reader(const Reader&) = delete;
    Reader& operator=(const Reader&) = delete;

    template <class T>
    void get(const std::string& key, T& v) {
        seen_.push_back(key);
        if (!j_.is_object() || !j_.contains(key)) return;
        try {
            v = j_.at(key).get<T>();
        } catch (const json::exception&) {
            fail(key, "wrong type");
        }
    }
    bool has(const std::string& key) {
        seen_.push_back(key);
        return j_.is_object() && j_.contains(key);
    }
    const json& node(const std::string& key) const { return j_.at(key); }
    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    void fail(const std::string& key, const std::string& msg) {
        f_.push_back({Finding::Severity::Error, key.empty() ? path_ : at(key), msg});
    }

private:
    const json& j_;
    std::string path_;
    std::vector<Finding>& f_;
    std::vector<std::string> seen_;
};

inline void read_storage(const json& j, const std::string& path, StorageParams& p, std::vector<Finding>& f,
                         const std::vector<std::string>& extra = {}) {
    Reader r(j, path, f);
    r.get("capacity_mwh", p.capacity);
    r.get("e_min_mwh", p.e_min);
    r.get("e_max_mwh", p.e_max);
    r.get("power_cap_mw", p.power_cap);
    r.get("eta_c", p.eta_c);
    r.get("eta_d", p.eta_d);
    r.get("self_discharge_per_hour", p.self_discharge_per_hour);
    r.get("standby_loss_mw", p.standby_loss);
    r.get("initial_soc", p.initial_soc);
    for (const auto& k : extra) r.has(k);
}

inline void read_layer(const json& j, const std::string& path, int& horizon, std::int64_t& dt, double& q, double& rw,
                       std::vector<Finding>& f, double* norm = nullptr) {
    Reader r(j, path, f);
    r.get("horizon", horizon);
    r.get("dt_s", dt);
    r.get("tracking_weight", q);
    r.get("cost_weight", rw);
    if (norm) r.get("norm_power", *norm);
}

}  // namespace detail

// Fill a config from a JSON document. Type and key errors are returned as
// findings; values are checked separately by validate().
inline std::vector<Finding> apply_json(EngineConfig& c, const json& root) {
    std::vector<Finding> f;
    detail::Reader top(root, "", f);
    top.has("include");
    if (top.has("scenario")) {
        detail::Reader r(root.at("scenario"), "scenario", f);
        auto& s = c.scenario;
        r.get("seed", s.seed);
        r.get("days", s.days);
        r.get("start_epoch", s.start_epoch);
        r.get("wind_capacity_mw", s.wind_capacity);
        r.get("pv_capacity_mw", s.pv_capacity);
        r.get("load_peak_mw", s.load_peak);
        r.get("forecast_accuracy", s.forecast_accuracy);
        r.get("calm_start_day", s.calm_start_day);
        r.get("calm_days", s.calm_days);
        r.get("turbulence_intensity", s.turbulence_intensity);
        r.get("weibull_shape", s.weibull_shape);
        r.get("wind_tau_h", s.wind_tau_h);
        r.get("csv", c.scenario_csv);
        std::string arch;
        r.get("archetype", arch);
        if (!arch.empty()) {
            try {
                s.archetype = parse_archetype(arch);
            } catch (const ConfigError& e) {
                r.fail("archetype", e.what());
            }
        }
    }
    if (top.has("devices")) {
        detail::Reader d(root.at("devices"), "devices", f);
        if (d.has("hmes")) {
            const json& j = root.at("devices").at("hmes");
            detail::Reader r(j, "devices.hmes", f);
            auto& h = c.hmes;
            r.get("awe_cap_mw", h.awe_cap);
            r.get("fc_cap_mw", h.fc_cap);
            r.get("synthesis_cap_mw", h.synth_cap);
            r.get("turbine_cap_mw", h.turbine_cap);
            r.get("hydrogen_capacity_mwh", h.e_h_max);
            r.get("hydrogen_initial_mwh", h.e_h0);
            r.get("methanol_initial_mwh", h.e_m0);
            r.get("cost", c.l1_cost);
            if (r.has("awe")) {
                detail::Reader a(j.at("awe"), "devices.hmes.awe", f);
                a.get("area_cm2", h.awe.area);
                a.get("n_cells", h.awe.n_cells);
                a.get("temperature_c", h.awe.temp);
                a.get("pressure_bar", h.awe.pressure);
                a.get("j_min", h.awe.j_min);
                a.get("j_rated", h.awe.j_rated);
            }
            if (r.has("pemfc")) {
                detail::Reader a(j.at("pemfc"), "devices.hmes.pemfc", f);
                a.get("area_cm2", h.pemfc.area);
                a.get("n_cells", h.pemfc.n_cells);
                a.get("temperature_k", h.pemfc.temp);
                a.get("p_h2_atm", h.pemfc.p_h2);
                a.get("p_o2_atm", h.pemfc.p_o2);
                a.get("j_min", h.pemfc.j_min);
                a.get("j_rated", h.pemfc.j_rated);
                a.get("j_max", h.pemfc.j_max);
            }
            if (r.has("meoh")) {
                detail::Reader a(j.at("meoh"), "devices.hmes.meoh", f);
                a.get("x_min", h.meoh.x_min);
                a.get("x_max", h.meoh.x_max);
                a.get("kappa_x", h.meoh.kappa_x);
                a.get("rho_min", h.meoh.rho_min);
                a.get("s_min", h.meoh.s_min);
                a.get("s_max", h.meoh.s_max);
                a.get("beta_s", h.meoh.beta_s);
                a.get("rho_star", h.meoh.rho_star);
            }
            if (r.has("turbine")) {
                detail::Reader a(j.at("turbine"), "devices.hmes.turbine", f);
                a.get("eta_max", h.turbine.eta_max);
                a.get("x_star", h.turbine.x_star);
                a.get("k", h.turbine.k);
                a.get("x_min", h.turbine.x_min);
            }
        }
        if (d.has("caes")) {
            const json& j = root.at("devices").at("caes");
            detail::read_storage(j, "devices.caes", c.caes, f, {"cost_model"});
            if (j.contains("cost_model")) {
                detail::Reader a(j.at("cost_model"), "devices.caes.cost_model", f);
                a.get("invest", c.caes_cost.invest);
                a.get("om_per_cycle", c.caes_cost.om_per_cycle);
                a.get("cycles", c.caes_cost.cycles);
                a.get("decay", c.caes_cost.decay);
                a.get("discount", c.caes_cost.discount);
            }
        }
        if (d.has("bess")) {
            const json& j = root.at("devices").at("bess");
            detail::read_storage(j, "devices.bess", c.bess, f, {"degradation", "temperature_c", "reference_damage"});
            if (j.contains("temperature_c")) {
                try {
                    c.bess_temperature = j.at("temperature_c").get<double>();
                } catch (const json::exception&) {
                    f.push_back({Finding::Severity::Error, "devices.bess.temperature_c", "wrong type"});
                }
            }
            if (j.contains("reference_damage")) {
                try {
                    c.bess_reference_damage = j.at("reference_damage").get<double>();
                } catch (const json::exception&) {
                    f.push_back({Finding::Severity::Error, "devices.bess.reference_damage", "wrong type"});
                }
            }
            if (j.contains("degradation")) {
                detail::Reader a(j.at("degradation"), "devices.bess.degradation", f);
                auto& b = c.battery;
                a.get("alpha_sei", b.alpha_sei);
                a.get("alpha_sds", b.alpha_sds);
                a.get("beta_sei", b.beta_sei);
                a.get("beta_cps", b.beta_cps);
                a.get("knee_kappa", b.knee_kappa);
                a.get("k_T", b.k_T);
                a.get("k_t", b.k_t);
                a.get("k_tau", b.k_tau);
                a.get("k_nu1", b.k_nu1);
                a.get("k_nu2", b.k_nu2);
                a.get("k_nu3", b.k_nu3);
                a.get("T_ref", b.T_ref);
                a.get("tau_ref", b.tau_ref);
                a.get("invest", b.invest);
                a.get("rated_energy_mwh", b.rated_energy);
                a.get("om_rate", b.om_rate);
            }
        }
        if (d.has("fess")) {
            const json& j = root.at("devices").at("fess");
            detail::Reader r(j, "devices.fess", f);
            auto& m = c.fess_model;
            r.get("power_cap_mw", m.power_cap);
            r.get("e_min_mwh", m.e_min);
            r.get("e_max_mwh", m.e_max);
            r.get("eta_c", m.eta_c);
            r.get("eta_d", m.eta_d);
            r.get("rotor_inertias", m.rotor_inertias);
            r.get("rated_speed", m.rated_speed);
            r.get("windage_coeff", m.windage_coeff);
            r.get("bearing_coeff", m.bearing_coeff);
            r.get("bop_power_w", m.bop_power);
            r.get("invest", m.invest);
            r.get("om_per_cycle", m.om_cost_per_cycle);
            r.get("lifetime_cycles", m.lifetime_cycles);
            r.get("decay", m.decay_factor);
            r.get("discount", m.discount_rate);
            r.get("initial_soc", c.fess.initial_soc);
            c.fess.capacity = m.e_max;
            c.fess.e_min = m.e_min;
            c.fess.e_max = m.e_max;
            c.fess.power_cap = m.power_cap;
            c.fess.eta_c = m.eta_c;
            c.fess.eta_d = m.eta_d;
            c.fess.standby_loss = fess_standby_loss(m);
        }
    }
    if (top.has("layers")) {
        const json& j = root.at("layers");
        detail::Reader r(j, "layers", f);
        if (r.has("l1"))
            detail::read_layer(j.at("l1"), "layers.l1", c.l1_horizon, c.l1_dt, c.tracking_weight[0], c.cost_weight[0], f);
        if (r.has("l2"))
            detail::read_layer(j.at("l2"), "layers.l2", c.l2_horizon, c.l2_dt, c.tracking_weight[1], c.cost_weight[1], f);
        if (r.has("l3"))
            detail::read_layer(j.at("l3"), "layers.l3", c.l3_horizon, c.l3_dt, c.tracking_weight[2], c.cost_weight[2], f,
                               &c.l3_norm_power);
    }
    if (top.has("vic")) {
        detail::Reader r(root.at("vic"), "vic", f);
        r.get("k_pf", c.vic.k_pf);
        r.get("k_p", c.vic.k_p);
        r.get("k_d", c.vic.k_d);
        r.get("dt_s", c.vic.dt);
        r.get("p0_mw", c.vic.p0);
        r.get("target_mw", c.l4_target);
    }
    if (top.has("mtip")) {
        detail::Reader r(root.at("mtip"), "mtip", f);
        r.get("enabled", c.mtip.enabled);
        r.get("kappa", c.mtip.kappa);
        r.get("chi_th", c.mtip.chi_th);
        r.get("eps_db_mw", c.mtip.eps_db);
        std::string conv;
        r.get("phi_convention", conv);
        if (conv == "round_trip") c.mtip.convention = PhiConvention::RoundTrip;
        else if (conv == "literal") c.mtip.convention = PhiConvention::Literal;
        else if (!conv.empty()) r.fail("phi_convention", "expected round_trip or literal");
    }
    if (top.has("forecast_feedback")) {
        detail::Reader r(root.at("forecast_feedback"), "forecast_feedback", f);
        r.get("enabled", c.feedback.enabled);
        r.get("decay", c.feedback.decay);
    }
    if (top.has("tariff")) {
        const json& j = root.at("tariff");
        detail::Reader r(j, "tariff", f);
        r.get("capacity_rate", c.tariff.capacity_rate);
        if (r.has("tou")) {
            const json& t = j.at("tou");
            if (!t.is_array()) r.fail("tou", "expected an array");
            else {
                c.tariff.tou.clear();
                for (std::size_t i = 0; i < t.size(); ++i) {
                    detail::Reader b(t[i], "tariff.tou[" + std::to_string(i) + "]", f);
                    TouBand band{0, 0, 0};
                    b.get("start_h", band.start_hour);
                    b.get("end_h", band.end_hour);
                    b.get("price", band.price);
                    c.tariff.tou.push_back(band);
                }
            }
        }
    }
    if (top.has("baseline")) {
        detail::Reader r(root.at("baseline"), "baseline", f);
        r.get("soc_period_h", c.baseline.soc_period_h);
        r.get("filter_cutoffs_s", c.baseline.filter_cutoffs_s);
        r.get("slack_weight", c.baseline.slack_weight);
    }
    std::string controller;
    top.get("controller", controller);
    if (!controller.empty()) {
        try {
            c.controller = parse_controller(controller);
        } catch (const ConfigError& e) {
            top.fail("controller", e.what());
        }
    }
    if (top.has("output")) {
        detail::Reader r(root.at("output"), "output", f);
        r.get("dir", c.out_dir);
        r.get("trace_step_s", c.trace_step);
        r.get("qp_dump", c.qp_dump);
    }
    if (top.has("solver")) {
        detail::Reader r(root.at("solver"), "solver", f);
        r.get("tol", c.ipm.tol);
        r.get("max_iter", c.ipm.max_iter);
        r.get("acceptable_tol", c.ipm.acceptable_tol);
    }
    return f;
}

// Deep merge: objects merge key by key, everything else is replaced.
inline void merge_json(json& base, const json& over) {
    if (!base.is_object() || !over.is_object()) {
        base = over;
        return;
    }
    for (auto it = over.begin(); it != over.end(); ++it) {
        if (base.contains(it.key())) merge_json(base[it.key()], it.value());
        else base[it.key()] = it.value();
    }
}

// Read a config file and expand its includes, which are resolved relative to
// the including file and applied before the file's own keys.
inline json load_json_with_includes(const std::filesystem::path& path, int depth = 0) {
    if (depth > 8) throw ConfigError("include nesting too deep at " + path.string());
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json doc;
    try {
        doc = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError(path.string() + ": top level must be an object");
    json merged = json::object();
    if (doc.contains("include")) {
        const json& inc = doc.at("include");
        if (!inc.is_array()) throw ConfigError(path.string() + ": include must be an array of paths");
        for (const auto& p : inc) {
            if (!p.is_string()) throw ConfigError(path.string() + ": include entries must be strings");
            merge_json(merged, load_json_with_includes(path.parent_path() / p.get<std::string>(), depth + 1));
        }
        doc.erase("include");
    }
    merge_json(merged, doc);
    return merged;
}

struct LoadedConfig {
    EngineConfig config;
    std::vector<Finding> findings;
};

inline LoadedConfig load_config(const std::filesystem::path& path) {
    LoadedConfig out{default_config(), {}};
    const json doc = load_json_with_includes(path);
    out.findings = apply_json(out.config, doc);
    if (!out.config.scenario_csv.empty() && std::filesystem::path(out.config.scenario_csv).is_relative())
        out.config.scenario_csv = (path.parent_path() / out.config.scenario_csv).string();
    auto more = validate(out.config);
    out.findings.insert(out.findings.end(), more.begin(), more.end());
    return out;
}

}  // namespace hess
