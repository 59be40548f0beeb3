#pragma once

// Receding-horizon layers L1 (hydrogen and methanol), L2 (CAES) and L3 (BESS),
// and the residual cascade between them.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "hess/core/errors.hpp"
#include "hess/core/time_series.hpp"
#include "hess/devices/ess.hpp"
#include "hess/devices/hydrogen.hpp"
#include "hess/devices/methanol.hpp"
#include "hess/mtip/mtip.hpp"
#include "hess/qp/dense_solver.hpp"
#include "hess/qp/staged.hpp"

namespace hess {

enum class LayerId { L1, L2, L3 };

inline const char* to_string(LayerId id) {
    switch (id) {
        case LayerId::L1: return "L1";
        case LayerId::L2: return "L2";
        case LayerId::L3: return "L3";
    }
    return "?";
}

struct LayerSpec {
    LayerId id = LayerId::L2;
    std::int64_t dt_s = 900;
    int horizon = 96;
    double tracking_weight = 0.15;  // Q
    double cost_weight = 1.0;       // R
    std::vector<double> cost;        // currency/MWh per actuator
    std::vector<double> output_row;  // C_y
    std::vector<double> u_lower, u_upper;
    double norm_power = 2.0;

    double dt_h() const { return static_cast<double>(dt_s) / 3600.0; }
    std::size_t actuators() const { return output_row.size(); }

    void validate() const {
        const std::size_t n = output_row.size();
        if (n == 0 || cost.size() != n || u_lower.size() != n || u_upper.size() != n)
            throw DimensionMismatch(std::string(to_string(id)) + ": actuator vectors differ in length");
        if (!(tracking_weight > 0.0)) throw DomainError("tracking weight must be positive");
        if (!(cost_weight >= 0.0)) throw DomainError("cost weight must be nonnegative");
        if (dt_s <= 0 || horizon < 1) throw DomainError("layer step and horizon must be positive");
        if (norm_power != 2.0) throw DomainError("only the squared tracking norm gives a quadratic program");
        for (std::size_t i = 0; i < n; ++i)
            if (!(u_lower[i] <= u_upper[i])) throw DomainError("actuator bounds out of order");
    }
};

// Hydrogen and methanol chain parameters shared by L1 and the metrics.
struct HmesParams {
    AweParams awe;
    PemfcParams pemfc;
    MeohParams meoh;
    TurbineParams turbine;
    double awe_cap = 200.0;  // MW
    double fc_cap = 200.0;
    double synth_cap = 200.0;
    double turbine_cap = 200.0;
    double e_h_max = 5000.0;  // MWh
    double e_h0 = 2500.0;
    double e_m0 = 0.0;
};

inline LayerSpec default_l1_spec(const HmesParams& h, std::vector<double> cost = {6.0, 8.0, 3.0, 10.0}) {
    LayerSpec s;
    s.id = LayerId::L1;
    s.dt_s = 3600;
    s.horizon = 240;
    s.tracking_weight = 0.27;
    s.cost = std::move(cost);
    s.output_row = {-1.0, 1.0, 0.0, 1.0};
    s.u_lower = {0.0, 0.0, 0.0, 0.0};
    s.u_upper = {h.awe_cap, h.fc_cap, h.synth_cap, h.turbine_cap};
    return s;
}

inline LayerSpec default_storage_spec(LayerId id, const StorageParams& p) {
    LayerSpec s;
    s.id = id;
    s.dt_s = id == LayerId::L2 ? 900 : 60;
    s.horizon = id == LayerId::L2 ? 96 : 60;
    s.tracking_weight = id == LayerId::L2 ? 0.15 : 0.1;
    s.cost = {p.cycle_cost, p.cycle_cost};
    s.output_row = {-1.0, 1.0};
    s.u_lower = {0.0, 0.0};
    s.u_upper = {p.power_cap, p.power_cap};
    return s;
}

struct L1State {
    double e_h = 0.0;  // MWh
    double e_m = 0.0;  // MWh
};

struct FrozenEfficiencies {
    double h_charge = 0.75;
    double h_discharge = 0.65;
    double m_charge = 0.75;
    double m_discharge = 0.52;
    bool clamped = false;
};

// Realized load ratios of the previous L1 step.
struct LoadRatios {
    double awe = 0.0, pemfc = 0.0, synthesis = 0.0, turbine = 0.0;
};

namespace detail {

template <class F>
double argmax_on_grid(F f, double lo, double hi, int n = 400) {
    double best = lo, best_v = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i) {
        const double x = lo + (hi - lo) * i / n;
        const double v = f(x);
        if (v > best_v) {
            best_v = v;
            best = x;
        }
    }
    return best;
}

}  // namespace detail

inline FrozenEfficiencies freeze_efficiencies(const HmesParams& h, const LoadRatios& prev) {
    FrozenEfficiencies e;
    bool clamped = false;

    if (prev.awe > 0.0) {
        const auto op = awe_operating_point(prev.awe, h.awe);
        e.h_charge = op.efficiency;
        clamped |= op.clamped;
    } else {
        const double J = detail::argmax_on_grid(
            [&](double j) { return awe_hydrogen(j * h.awe.area, h.awe).eta_charge; }, h.awe.j_min, h.awe.j_rated);
        e.h_charge = awe_hydrogen(J * h.awe.area, h.awe).eta_charge;
    }

    if (prev.pemfc > 0.0) {
        const auto op = pemfc_operating_point(prev.pemfc, h.pemfc);
        e.h_discharge = op.efficiency;
        clamped |= op.clamped;
    } else {
        const double J = detail::argmax_on_grid(
            [&](double j) { return pemfc_discharge_efficiency(j * h.pemfc.area, h.pemfc); }, h.pemfc.j_min,
            h.pemfc.j_rated);
        e.h_discharge = pemfc_discharge_efficiency(J * h.pemfc.area, h.pemfc);
    }

    if (prev.synthesis > 0.0) {
        const double rho = std::clamp(prev.synthesis, h.meoh.rho_min, 1.0);
        clamped |= rho != prev.synthesis;
        e.m_charge = meoh_conversion(rho, h.meoh).efficiency;
    } else {
        const double rho = detail::argmax_on_grid([&](double r) { return meoh_conversion(r, h.meoh).efficiency; },
                                                  h.meoh.rho_min, 1.0);
        e.m_charge = meoh_conversion(rho, h.meoh).efficiency;
    }

    if (prev.turbine > 0.0) {
        const double x = std::clamp(prev.turbine, h.turbine.x_min, 1.0);
        clamped |= x != prev.turbine;
        e.m_discharge = turbine_efficiency(x, h.turbine);
    } else {
        e.m_discharge = turbine_efficiency(h.turbine.x_star, h.turbine);
    }
    e.clamped = clamped;
    return e;
}

using L1Input = std::array<double, 4>;  // electrolysis, fuel cell, synthesis, turbine

inline L1State l1_dynamics(const L1State& x, const L1Input& u, double dt_h, const FrozenEfficiencies& eff,
                           double e_h_max = std::numeric_limits<double>::infinity()) {
    for (double v : u)
        if (v < 0.0) throw DomainError("L1 inputs must be nonnegative");
    L1State n;
    n.e_h = x.e_h + (eff.h_charge * u[0] - u[1] / eff.h_discharge - u[2]) * dt_h;
    n.e_m = x.e_m + (eff.m_charge * u[2] - u[3] / eff.m_discharge) * dt_h;
    if (n.e_h < -kEnvelopeTol || n.e_h > e_h_max + kEnvelopeTol)
        throw EnvelopeViolation("hydrogen store outside envelope", n.e_h, 0.0, e_h_max);
    if (n.e_m < -kEnvelopeTol) throw EnvelopeViolation("methanol store below zero", n.e_m, 0.0, qp::kInf);
    n.e_h = std::clamp(n.e_h, 0.0, e_h_max);
    n.e_m = std::max(n.e_m, 0.0);
    return n;
}

using L1Qp = qp::StagedQp<2, 4>;
using StorageQp = qp::StagedQp<1, 2>;

namespace detail {

template <int Nx, int Nu>
void fill_tracking(qp::StagedQp<Nx, Nu>& q, const LayerSpec& spec, const std::vector<double>& forecast,
                   const qp::Band& first_band) {
    using VecU = typename qp::StagedQp<Nx, Nu>::VecU;
    spec.validate();
    if (spec.actuators() != static_cast<std::size_t>(Nu)) throw DimensionMismatch("layer actuator count");
    if (forecast.size() != static_cast<std::size_t>(spec.horizon))
        throw DimensionMismatch("residual forecast length differs from the horizon");
    const double Q = spec.tracking_weight, dt = spec.dt_h();
    VecU c, cost;
    for (int i = 0; i < Nu; ++i) {
        c[i] = spec.output_row[static_cast<std::size_t>(i)];
        cost[i] = spec.cost[static_cast<std::size_t>(i)];
        q.u_lower[i] = spec.u_lower[static_cast<std::size_t>(i)];
        q.u_upper[i] = spec.u_upper[static_cast<std::size_t>(i)];
    }
    q.horizon = spec.horizon;
    q.row = c;
    const auto H = (2.0 * Q * c * c.transpose()).eval();
    q.hu.assign(forecast.size(), H);
    q.fu.resize(forecast.size());
    q.constant = 0.0;
    for (std::size_t k = 0; k < forecast.size(); ++k) {
        q.fu[k] = -2.0 * Q * forecast[k] * c + spec.cost_weight * dt * cost;
        q.constant += Q * forecast[k] * forecast[k];
    }
    q.row_bounds.clear();
    if (first_band.bounded()) {
        q.row_bounds.assign(forecast.size(), qp::Band{});
        // residual r = forecast - C u inside [lower, upper]
        q.row_bounds[0] = qp::Band{forecast[0] - first_band.upper, forecast[0] - first_band.lower};
    }
}

}  // namespace detail

inline L1Qp build_l1_problem(const LayerSpec& spec, const std::vector<double>& forecast, const L1State& x,
                             const FrozenEfficiencies& eff, const HmesParams& h, const qp::Band& band = {}) {
    L1Qp q;
    detail::fill_tracking(q, spec, forecast, band);
    const double dt = spec.dt_h();
    q.A.setIdentity();
    q.B << eff.h_charge, -1.0 / eff.h_discharge, -1.0, 0.0, 0.0, 0.0, eff.m_charge, -1.0 / eff.m_discharge;
    q.B *= dt;
    q.x0 << x.e_h, x.e_m;
    q.x_lower << 0.0, 0.0;
    q.x_upper << h.e_h_max, qp::kInf;
    return q;
}

inline StorageQp build_storage_problem(const LayerSpec& spec, const std::vector<double>& forecast, const EssState& s,
                                       const qp::Band& band = {}) {
    StorageQp q;
    detail::fill_tracking(q, spec, forecast, band);
    const double dt = spec.dt_h();
    q.A(0, 0) = 1.0 - s.self_discharge;
    q.B << s.eta_c * dt, -dt / s.eta_d;
    q.drift(0) = -s.standby_loss * dt;
    q.x0(0) = s.energy;
    q.x_lower(0) = s.e_min;
    q.x_upper(0) = s.e_max;
    return q;
}

// Child residual: own forecast minus the zero-order held parent plans.
inline std::vector<double> cascade_residual(const std::vector<const TimeSeries*>& parents, const TimeSeries& own) {
    std::vector<double> r(own.values);
    for (const TimeSeries* p : parents) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            const std::int64_t t = own.epoch_at(i);
            if (t < p->start_epoch || t >= p->end_epoch())
                throw AlignmentError("parent plan does not cover the child horizon");
            r[i] -= (*p)[static_cast<std::size_t>((t - p->start_epoch) / p->dt)];
        }
    }
    return r;
}

struct SolveStats {
    qp::QpStatus status = qp::QpStatus::MaxIter;
    int iterations = 0;
    double kkt_residual = qp::kInf;
    double objective = 0.0;  // includes the constant term
    bool band_clamped = false;
    bool band_dropped = false;
    bool dense_fallback = false;
    bool saturated = false;
};

template <int Nx, int Nu>
struct LayerSolve {
    std::vector<typename qp::StagedQp<Nx, Nu>::VecU> u;
    SolveStats stats;
};

// Range of row' u over the first stage alone. The feasible set is a small
// polytope, so both extremes sit on a vertex; every choice of Nu active
// constraints is tried. NaN when the first stage is infeasible.
template <int Nx, int Nu>
std::pair<double, double> achievable_output(const qp::StagedQp<Nx, Nu>& q) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    // rows a'u <= b
    std::vector<Eigen::Matrix<double, 1, Nu>> a;
    std::vector<double> b;
    for (int i = 0; i < Nu; ++i) {
        Eigen::Matrix<double, 1, Nu> e = Eigen::Matrix<double, 1, Nu>::Zero();
        e[i] = 1.0;
        if (std::isfinite(q.u_upper[i])) a.push_back(e), b.push_back(q.u_upper[i]);
        if (std::isfinite(q.u_lower[i])) a.push_back(-e), b.push_back(-q.u_lower[i]);
    }
    const auto free_x = (q.A * q.x0 + q.drift).eval();
    for (int i = 0; i < Nx; ++i) {
        if (std::isfinite(q.x_upper[i])) a.push_back(q.B.row(i)), b.push_back(q.x_upper[i] - free_x[i]);
        if (std::isfinite(q.x_lower[i])) a.push_back(-q.B.row(i)), b.push_back(free_x[i] - q.x_lower[i]);
    }
    const std::size_t m = a.size();
    if (m < static_cast<std::size_t>(Nu)) return {nan, nan};

    double lo = qp::kInf, hi = -qp::kInf;
    std::array<std::size_t, Nu> pick{};
    for (int i = 0; i < Nu; ++i) pick[static_cast<std::size_t>(i)] = static_cast<std::size_t>(i);
    for (;;) {
        Eigen::Matrix<double, Nu, Nu> M;
        Eigen::Matrix<double, Nu, 1> rhs;
        for (int r = 0; r < Nu; ++r) {
            M.row(r) = a[pick[static_cast<std::size_t>(r)]];
            rhs[r] = b[pick[static_cast<std::size_t>(r)]];
        }
        const Eigen::FullPivLU<Eigen::Matrix<double, Nu, Nu>> lu(M);
        if (lu.isInvertible()) {
            const Eigen::Matrix<double, Nu, 1> u = lu.solve(rhs);
            bool ok = true;
            for (std::size_t r = 0; r < m && ok; ++r) ok = a[r].dot(u) <= b[r] + 1e-9 * (1.0 + std::abs(b[r]));
            if (ok) {
                lo = std::min(lo, q.row.dot(u));
                hi = std::max(hi, q.row.dot(u));
            }
        }
        // next combination in lexicographic order
        int k = Nu - 1;
        while (k >= 0 && pick[static_cast<std::size_t>(k)] == m - Nu + static_cast<std::size_t>(k)) --k;
        if (k < 0) break;
        ++pick[static_cast<std::size_t>(k)];
        for (int r = k + 1; r < Nu; ++r) pick[static_cast<std::size_t>(r)] = pick[static_cast<std::size_t>(r - 1)] + 1;
    }
    if (lo > hi) return {nan, nan};
    return {lo, hi};
}

// Move a first-step output band inside what the first stage can reach.
// Returns true when the band had to change.
template <int Nx, int Nu>
bool clamp_first_band(qp::StagedQp<Nx, Nu>& q) {
    if (q.row_bounds.empty() || !q.row_bounds[0].bounded()) return false;
    const auto [a_lo, a_hi] = achievable_output(q);
    if (!std::isfinite(a_lo) || !std::isfinite(a_hi)) return false;
    qp::Band& b = q.row_bounds[0];
    const double margin = 1e-7 * (1.0 + std::max(std::abs(a_lo), std::abs(a_hi)));
    const double lo = a_lo + margin, hi = std::max(a_hi - margin, lo);
    if (b.lower >= lo && b.upper <= hi) return false;
    double nl = std::max(b.lower, lo), nu = std::min(b.upper, hi);
    if (nl > nu) {
        // no overlap: collapse onto the nearest reachable output
        nl = nu = b.upper < lo ? lo : hi;
    }
    if (nu - nl < 1e-6) {
        const double mid = 0.5 * (nl + nu);
        nl = std::max(lo, mid - 5e-7);
        nu = std::min(hi, mid + 5e-7);
    }
    b.lower = nl;
    b.upper = nu;
    return true;
}

namespace detail {

template <int Nx, int Nu>
bool try_solve(const qp::StagedQp<Nx, Nu>& q, const qp::IpmSettings& set, LayerSolve<Nx, Nu>& out) {
    auto s = qp::solve_staged(q, set);
    out.stats.iterations += s.iterations;
    if (s.status == qp::QpStatus::Optimal) {
        // interior iterates stop just off the active bounds
        for (auto& u : s.u)
            for (int i = 0; i < Nu; ++i) {
                if (std::abs(u[i] - q.u_lower[i]) <= 1e-7 * (1.0 + std::abs(q.u_lower[i]))) u[i] = q.u_lower[i];
                if (std::abs(u[i] - q.u_upper[i]) <= 1e-7 * (1.0 + std::abs(q.u_upper[i]))) u[i] = q.u_upper[i];
            }
        out.u = std::move(s.u);
        out.stats.status = s.status;
        out.stats.kkt_residual = s.kkt_residual;
        out.stats.objective = s.objective + q.constant;
        return true;
    }
    const auto dense = qp::to_dense(q);
    const auto d = qp::solve_qp(dense);
    out.stats.iterations += d.iterations;
    if (d.status != qp::QpStatus::Optimal) return false;
    out.stats.dense_fallback = true;
    out.stats.status = d.status;
    out.stats.kkt_residual = d.kkt_residual;
    out.stats.objective = d.objective + dense.constant;
    out.u.resize(static_cast<std::size_t>(q.horizon));
    for (int k = 0; k < q.horizon; ++k) out.u[static_cast<std::size_t>(k)] = d.u_star.segment(k * Nu, Nu);
    return true;
}

}  // namespace detail

// Solve a layer problem with the band clamp rule and the fallbacks:
// clamped band, then no band, then a one-step saturated move.
template <int Nx, int Nu>
LayerSolve<Nx, Nu> solve_layer(qp::StagedQp<Nx, Nu> q, const qp::IpmSettings& set = {}) {
    LayerSolve<Nx, Nu> out;
    out.stats.band_clamped = clamp_first_band(q);
    if (detail::try_solve(q, set, out)) return out;
    if (!q.row_bounds.empty()) {
        q.row_bounds.clear();
        out.stats.band_dropped = true;
        if (detail::try_solve(q, set, out)) return out;
    }
    // hold everything at the lower bounds after the first step, and take the
    // first-step move closest to pure tracking
    qp::StagedQp<Nx, Nu> one = q;
    one.horizon = 1;
    one.hu.resize(1);
    one.fu.resize(1);
    one.hx.clear();
    one.fx.clear();
    const auto d = qp::solve_qp(qp::to_dense(one));
    if (d.status != qp::QpStatus::Optimal) throw SolverFailure("no admissible first move for the layer");
    out.stats.saturated = true;
    out.stats.status = d.status;
    out.u.assign(static_cast<std::size_t>(q.horizon), q.u_lower.cwiseMax(0.0).cwiseMin(q.u_upper));
    out.u[0] = d.u_star;
    return out;
}

struct LayerDecision {
    std::vector<double> u_applied;    // first move after sanitizing
    double output = 0.0;              // C_y u_applied, MW toward the grid
    std::vector<double> plan_output;  // C_y u_k over the horizon, first entry applied
    std::vector<double> predicted_residual;
    SolveStats stats;
    MtipBounds band;
};

template <int Nx, int Nu>
void fill_plan(const qp::StagedQp<Nx, Nu>& q, const LayerSolve<Nx, Nu>& s, const std::vector<double>& forecast,
               LayerDecision& d) {
    d.plan_output.resize(s.u.size());
    d.predicted_residual.resize(s.u.size());
    for (std::size_t k = 0; k < s.u.size(); ++k) {
        d.plan_output[k] = q.row.dot(s.u[k]);
        d.predicted_residual[k] = forecast[k] - d.plan_output[k];
    }
    d.stats = s.stats;
}

using L1Hook = std::function<void(L1Qp&, std::int64_t start_epoch)>;
using StorageHook = std::function<void(StorageQp&, std::int64_t start_epoch)>;

// Keep the L1 move admissible: exclusive pairs, power caps, and stores that
// stay inside their envelopes over the step.
inline L1Input sanitize_l1(L1Input u, const LayerSpec& spec, const L1State& x, const FrozenEfficiencies& eff,
                           double e_h_max, double dt_h) {
    auto net_pair = [](double& a, double& b) {
        const double m = std::min(a, b);
        a -= m;
        b -= m;
    };
    for (std::size_t i = 0; i < 4; ++i) u[i] = std::clamp(u[i], spec.u_lower[i], spec.u_upper[i]);
    net_pair(u[0], u[1]);
    for (double& v : u)
        if (v < 1e-9) v = 0.0;
    const double gain = (eff.h_charge * u[0] - u[1] / eff.h_discharge - u[2]) * dt_h;
    if (x.e_h + gain > e_h_max) {
        u[0] = std::max(0.0, ((e_h_max - x.e_h) / dt_h + u[1] / eff.h_discharge + u[2]) / eff.h_charge);
        u[0] = std::min(u[0], spec.u_upper[0]);
    }
    const double draw = (u[1] / eff.h_discharge + u[2]) * dt_h;
    const double avail = x.e_h + eff.h_charge * u[0] * dt_h;
    if (draw > avail && draw > 0.0) {
        const double f = std::max(0.0, avail / draw);
        u[1] *= f;
        u[2] *= f;
    }
    const double m_avail = x.e_m + eff.m_charge * u[2] * dt_h;
    u[3] = std::min(u[3], std::max(0.0, m_avail * eff.m_discharge / dt_h));
    return u;
}

inline LayerDecision l1_receding_step(const LayerSpec& spec, const HmesParams& h, L1State& x,
                                      const FrozenEfficiencies& eff, const std::vector<double>& forecast,
                                      const MtipBounds& band = {}, const qp::IpmSettings& set = {},
                                      const L1Hook& hook = {}, std::int64_t start_epoch = 0) {
    auto q = build_l1_problem(spec, forecast, x, eff, h, qp::Band{band.r_lower, band.r_upper});
    if (hook) hook(q, start_epoch);
    const auto s = solve_layer(q, set);
    LayerDecision d;
    fill_plan(q, s, forecast, d);
    d.band = band;
    L1Input u{s.u[0][0], s.u[0][1], s.u[0][2], s.u[0][3]};
    u = sanitize_l1(u, spec, x, eff, h.e_h_max, spec.dt_h());
    x = l1_dynamics(x, u, spec.dt_h(), eff, h.e_h_max);
    d.u_applied.assign(u.begin(), u.end());
    d.output = -u[0] + u[1] + u[3];
    d.plan_output[0] = d.output;
    d.predicted_residual[0] = forecast[0] - d.output;
    return d;
}

inline LayerDecision storage_receding_step(const LayerSpec& spec, EssState& s, const std::vector<double>& forecast,
                                           const MtipBounds& band = {}, const qp::IpmSettings& set = {},
                                           const StorageHook& hook = {}, std::int64_t start_epoch = 0) {
    auto q = build_storage_problem(spec, forecast, s, qp::Band{band.r_lower, band.r_upper});
    if (hook) hook(q, start_epoch);
    const auto sol = solve_layer(q, set);
    LayerDecision d;
    fill_plan(q, sol, forecast, d);
    d.band = band;
    const double want = sol.u[0][1] - sol.u[0][0];
    double applied = 0.0;
    s = ess_exchange(s, want, spec.dt_h(), &applied);
    d.u_applied = {std::max(-applied, 0.0), std::max(applied, 0.0)};
    d.output = applied;
    d.plan_output[0] = applied;
    d.predicted_residual[0] = forecast[0] - applied;
    return d;
}

// Dense form of a layer problem, for inspection and cross-checks.
inline qp::QpProblem build_layer_problem(const LayerSpec& spec, const std::vector<double>& forecast,
                                         const EssState& s, const qp::Band& band = {}) {
    return qp::to_dense(build_storage_problem(spec, forecast, s, band));
}

}  // namespace hess
