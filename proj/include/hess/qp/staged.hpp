#pragma once

// Stage-wise QP for receding-horizon layers and a primal-dual interior point
// solver whose Newton systems are solved by a Riccati recursion, so the cost of
// one iteration grows linearly with the horizon.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "hess/qp/problem.hpp"

namespace hess::qp {

//   minimize  sum_k 1/2 u_k' Hu_k u_k + fu_k' u_k + 1/2 x_{k+1}' diag(hx_k) x_{k+1} + fx_k' x_{k+1}
//   s.t.      x_{k+1} = A x_k + B u_k + w,   x_0 given
//             u_lower <= u_k <= u_upper,  x_lower <= x_{k+1} <= x_upper
//             row_bounds[k].lower <= row' u_k <= row_bounds[k].upper
template <int Nx, int Nu>
struct StagedQp {
    using VecX = Eigen::Matrix<double, Nx, 1>;
    using VecU = Eigen::Matrix<double, Nu, 1>;
    using MatXX = Eigen::Matrix<double, Nx, Nx>;
    using MatXU = Eigen::Matrix<double, Nx, Nu>;
    using MatUU = Eigen::Matrix<double, Nu, Nu>;

    int horizon = 0;
    MatXX A = MatXX::Identity();
    MatXU B = MatXU::Zero();
    VecX drift = VecX::Zero();
    VecX x0 = VecX::Zero();
    std::vector<MatUU> hu;
    std::vector<VecU> fu;
    VecU u_lower = VecU::Constant(-kInf), u_upper = VecU::Constant(kInf);
    VecU row = VecU::Zero();
    std::vector<Band> row_bounds;  // empty, or one per stage
    std::vector<VecX> hx, fx;      // empty, or one per stage
    VecX x_lower = VecX::Constant(-kInf), x_upper = VecX::Constant(kInf);
    double constant = 0.0;

    std::vector<VecX> rollout(const std::vector<VecU>& u) const {
        std::vector<VecX> x(static_cast<std::size_t>(horizon));
        VecX cur = x0;
        for (int k = 0; k < horizon; ++k) {
            cur = A * cur + B * u[static_cast<std::size_t>(k)] + drift;
            x[static_cast<std::size_t>(k)] = cur;
        }
        return x;
    }

    double objective(const std::vector<VecU>& u) const {
        const auto x = rollout(u);
        double J = 0.0;
        for (std::size_t k = 0; k < static_cast<std::size_t>(horizon); ++k) {
            J += 0.5 * u[k].dot(hu[k] * u[k]) + fu[k].dot(u[k]);
            if (!hx.empty()) J += 0.5 * x[k].dot(hx[k].cwiseProduct(x[k])) + fx[k].dot(x[k]);
        }
        return J;
    }

    // Largest violation of any inequality for an input sequence.
    double max_violation(const std::vector<VecU>& u) const {
        const auto x = rollout(u);
        double v = 0.0;
        for (std::size_t k = 0; k < static_cast<std::size_t>(horizon); ++k) {
            v = std::max(v, (u_lower - u[k]).maxCoeff());
            v = std::max(v, (u[k] - u_upper).maxCoeff());
            v = std::max(v, (x_lower - x[k]).maxCoeff());
            v = std::max(v, (x[k] - x_upper).maxCoeff());
            if (!row_bounds.empty()) {
                const double y = row.dot(u[k]);
                v = std::max({v, row_bounds[k].lower - y, y - row_bounds[k].upper});
            }
        }
        return v;
    }
};

// Condense the stage-wise problem onto the stacked inputs.
template <int Nx, int Nu>
QpProblem to_dense(const StagedQp<Nx, Nu>& s) {
    using VecX = typename StagedQp<Nx, Nu>::VecX;
    const int N = s.horizon;
    const Eigen::Index n = static_cast<Eigen::Index>(N) * Nu;
    QpProblem p;
    p.hessian = Eigen::MatrixXd::Zero(n, n);
    p.linear = Eigen::VectorXd::Zero(n);
    p.var_lower.resize(n);
    p.var_upper.resize(n);
    for (int k = 0; k < N; ++k) {
        p.hessian.block(k * Nu, k * Nu, Nu, Nu) = s.hu[static_cast<std::size_t>(k)];
        p.linear.segment(k * Nu, Nu) = s.fu[static_cast<std::size_t>(k)];
        p.var_lower.segment(k * Nu, Nu) = s.u_lower;
        p.var_upper.segment(k * Nu, Nu) = s.u_upper;
    }
    p.constant = s.constant;

    // x_{k+1} = Phi_k u + c_k
    std::vector<Eigen::MatrixXd> phi(static_cast<std::size_t>(N));
    std::vector<VecX> off(static_cast<std::size_t>(N));
    Eigen::MatrixXd cur = Eigen::MatrixXd::Zero(Nx, n);
    VecX c = s.x0;
    for (int k = 0; k < N; ++k) {
        cur = s.A * cur;
        cur.block(0, k * Nu, Nx, Nu) += s.B;
        c = s.A * c + s.drift;
        phi[static_cast<std::size_t>(k)] = cur;
        off[static_cast<std::size_t>(k)] = c;
    }
    if (!s.hx.empty()) {
        for (int k = 0; k < N; ++k) {
            const auto& P = phi[static_cast<std::size_t>(k)];
            const VecX& h = s.hx[static_cast<std::size_t>(k)];
            const VecX& f = s.fx[static_cast<std::size_t>(k)];
            for (int i = 0; i < Nx; ++i) p.hessian.noalias() += h[i] * P.row(i).transpose() * P.row(i);
            p.linear += P.transpose() * (h.cwiseProduct(off[static_cast<std::size_t>(k)]) + f);
            p.constant += 0.5 * off[static_cast<std::size_t>(k)].dot(h.cwiseProduct(off[static_cast<std::size_t>(k)])) +
                          f.dot(off[static_cast<std::size_t>(k)]);
        }
        p.hessian = 0.5 * (p.hessian + p.hessian.transpose()).eval();
    }

    std::vector<Eigen::RowVectorXd> rows;
    std::vector<double> lo, hi;
    for (int k = 0; k < N; ++k) {
        if (!s.row_bounds.empty() && s.row_bounds[static_cast<std::size_t>(k)].bounded()) {
            Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
            r.segment(k * Nu, Nu) = s.row.transpose();
            rows.push_back(r);
            lo.push_back(s.row_bounds[static_cast<std::size_t>(k)].lower);
            hi.push_back(s.row_bounds[static_cast<std::size_t>(k)].upper);
        }
        for (int i = 0; i < Nx; ++i) {
            if (!std::isfinite(s.x_lower[i]) && !std::isfinite(s.x_upper[i])) continue;
            rows.push_back(phi[static_cast<std::size_t>(k)].row(i));
            lo.push_back(s.x_lower[i] - off[static_cast<std::size_t>(k)][i]);
            hi.push_back(s.x_upper[i] - off[static_cast<std::size_t>(k)][i]);
        }
    }
    p.ineq_matrix.resize(static_cast<Eigen::Index>(rows.size()), n);
    p.ineq_lower.resize(static_cast<Eigen::Index>(rows.size()));
    p.ineq_upper.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        p.ineq_matrix.row(static_cast<Eigen::Index>(r)) = rows[r];
        p.ineq_lower[static_cast<Eigen::Index>(r)] = lo[r];
        p.ineq_upper[static_cast<Eigen::Index>(r)] = hi[r];
    }
    return p;
}

template <int Nx, int Nu>
struct StagedSolution {
    std::vector<typename StagedQp<Nx, Nu>::VecU> u;
    std::vector<typename StagedQp<Nx, Nu>::VecX> x;
    QpStatus status = QpStatus::MaxIter;
    double objective = 0.0;  // without the constant term
    double kkt_residual = kInf;
    int iterations = 0;
};

struct IpmSettings {
    double tol = 1e-9;
    int max_iter = 80;
    // a stalled run is still accepted when its best iterate reached this
    double acceptable_tol = 1e-6;
};

namespace detail {

template <int Nx, int Nu>
class RiccatiIpm {
    using Q = StagedQp<Nx, Nu>;
    using VecX = typename Q::VecX;
    using VecU = typename Q::VecU;
    using MatXX = typename Q::MatXX;
    using MatXU = typename Q::MatXU;
    using MatUU = typename Q::MatUU;
    using MatUX = Eigen::Matrix<double, Nu, Nx>;
    using StackU = Eigen::Matrix<double, Nu, Eigen::Dynamic>;
    using StackX = Eigen::Matrix<double, Nx, Eigen::Dynamic>;

    // One side of a box on u_k or x_{k+1}, all stages at once: sign * v - b >= 0.
    // Infinite bounds stay in the arrays with mask 0, s 1 and lambda 0.
    template <int R>
    struct Box {
        using Arr = Eigen::Array<double, R, Eigen::Dynamic>;
        using Col = Eigen::Array<double, R, 1>;
        double sign = 1.0;
        Col b = Col::Zero(), mask = Col::Zero();
        Arr s, l, ds, dl, rc, dsa, dla, g, inv_s, inv_l;

        void setup(const Eigen::Matrix<double, R, 1>& bound, double sgn, Eigen::Index n) {
            sign = sgn;
            for (int i = 0; i < R; ++i)
                if (std::isfinite(bound[i])) {
                    mask[i] = 1.0;
                    b[i] = sgn * bound[i];
                }
            for (Arr* a : {&s, &l, &ds, &dl, &rc, &dsa, &dla, &g, &inv_s, &inv_l}) a->setZero(R, n);
        }
        double active() const { return mask.sum(); }
        template <class V>
        auto raw(const V& v) const {
            return ((sign * v.array()).colwise() - b).colwise() * mask;
        }
    };

    // sign * row' u_k - b >= 0 on the stages that carry a band
    struct Rows {
        std::vector<int> k;
        std::vector<double> sign, b;
        Eigen::ArrayXd s, l, ds, dl, rc, dsa, dla, g, inv_s, inv_l;
        void resize() {
            const auto m = static_cast<Eigen::Index>(k.size());
            for (Eigen::ArrayXd* a : {&s, &l, &ds, &dl, &rc, &dsa, &dla, &g, &inv_s, &inv_l}) a->setZero(m);
        }
    };

public:
    RiccatiIpm(const Q& q, const IpmSettings& s) : q_(q), set_(s), N_(q.horizon) {
        const auto n = static_cast<std::size_t>(N_);
        ul_.setup(q.u_lower, 1.0, N_);
        uu_.setup(q.u_upper, -1.0, N_);
        xl_.setup(q.x_lower, 1.0, N_);
        xu_.setup(q.x_upper, -1.0, N_);
        if (!q.row_bounds.empty())
            for (int k = 0; k < N_; ++k) {
                const Band& b = q.row_bounds[static_cast<std::size_t>(k)];
                if (std::isfinite(b.lower)) rows_.k.push_back(k), rows_.sign.push_back(1.0), rows_.b.push_back(b.lower);
                if (std::isfinite(b.upper)) rows_.k.push_back(k), rows_.sign.push_back(-1.0), rows_.b.push_back(-b.upper);
            }
        rows_.resize();
        y_.setZero(static_cast<Eigen::Index>(rows_.k.size()));
        row_pull_.setZero(N_);
        m_ = (ul_.active() + uu_.active() + xl_.active() + xu_.active()) * N_ + static_cast<double>(rows_.k.size());
        u_.setZero(Nu, N_);
        x_.setZero(Nx, N_);
        nu_.setZero(Nx, N_);
        du_.setZero(Nu, N_);
        dx_.setZero(Nx, N_);
        nup_.setZero(Nx, N_);
        be_.setZero(Nx, N_);
        M_.resize(n);
        K_.resize(n);
        L_.resize(n);
        P_.resize(n + 1);
        Rt_.resize(n);
        Qt_.resize(n);
        rho_.resize(n);
        qv_.resize(n);
        kff_.resize(n);
    }

    StagedSolution<Nx, Nu> solve() {
        StagedSolution<Nx, Nu> out;
        initialize();
        double qn = 1.0;
        for (std::size_t k = 0; k < static_cast<std::size_t>(N_); ++k) {
            qn = std::max(qn, 1.0 + q_.fu[k].template lpNorm<Eigen::Infinity>());
        }
        // state costs are pulls toward a target; their size is the completed
        // square, not the raw linear term
        double pull0 = 0.0;
        for (std::size_t k = 0; k < q_.hx.size(); ++k)
            for (int i = 0; i < Nx; ++i)
                if (q_.hx[k][i] > 0.0) pull0 += 0.5 * q_.fx[k][i] * q_.fx[k][i] / q_.hx[k][i];
        double bn = 1.0 + q_.x0.template lpNorm<Eigen::Infinity>();
        for (const double v : {ul_.b.abs().maxCoeff(), uu_.b.abs().maxCoeff(), xl_.b.abs().maxCoeff(),
                               xu_.b.abs().maxCoeff()})
            bn = std::max(bn, 1.0 + v);
        for (const double v : rows_.b) bn = std::max(bn, 1.0 + std::abs(v));

        double best = kInf;
        StackU best_u;
        int since_best = 0;
        int it = 0;
        for (; it <= set_.max_iter; ++it) {
            residuals();
            const double mu = m_ > 0 ? gap_ / m_ : 0.0;
            const double obj = objective();
            // stationarity is judged against the size of its own terms
            const double dq = std::max(qn, 1.0 + dn_);
            const double osc = 1.0 + std::abs(obj + pull0);
            kkt_ = std::max({rd_ / dq, re_ / bn, ri_ / bn, gap_ / osc / qn});
            if (!std::isfinite(kkt_) || !std::isfinite(rd_ + re_ + ri_ + gap_ + obj)) {
                kkt_ = kInf;
                break;
            }
            if (rd_ <= set_.tol * dq && re_ <= set_.tol * bn && ri_ <= set_.tol * bn &&
                gap_ <= set_.tol * osc) {
                out.status = QpStatus::Optimal;
                break;
            }
            if (kkt_ < best) {
                best = kkt_;
                best_u = u_;
                since_best = 0;
            } else if (++since_best >= 5 && best <= set_.acceptable_tol) {
                break;
            }
            if (it == set_.max_iter) break;
            if (!factor()) break;

            // predictor
            direction(0.0, false);
            const double a_aff = std::min(1.0, step_length());
            double sigma = 0.0;
            if (m_ > 0) {
                const double mu_aff = (complementarity(ul_, a_aff) + complementarity(uu_, a_aff) +
                                       complementarity(xl_, a_aff) + complementarity(xu_, a_aff) +
                                       complementarity(rows_, a_aff)) /
                                      m_;
                sigma = std::pow(std::max(mu_aff, 0.0) / std::max(mu, 1e-300), 3.0);
                sigma = std::clamp(sigma, 0.0, 1.0);
            }
            // corrector
            keep_affine(ul_);
            keep_affine(uu_);
            keep_affine(xl_);
            keep_affine(xu_);
            keep_affine(rows_);
            direction(sigma * mu, true);
            const double alpha = std::min(1.0, 0.995 * step_length());
            take_step(alpha);
        }
        out.iterations = it;
        out.kkt_residual = kkt_;
        if (out.status != QpStatus::Optimal && best <= set_.acceptable_tol) {
            u_ = best_u;
            out.status = QpStatus::Optimal;
            out.kkt_residual = best;
        }
        out.u.resize(static_cast<std::size_t>(N_));
        for (int k = 0; k < N_; ++k) out.u[static_cast<std::size_t>(k)] = u_.col(k);
        out.x = q_.rollout(out.u);
        out.objective = q_.objective(out.u);
        return out;
    }

private:
    void initialize() {
        VecU u0;
        for (int i = 0; i < Nu; ++i) {
            const double lo = q_.u_lower[i], hi = q_.u_upper[i];
            if (std::isfinite(lo) && std::isfinite(hi))
                u0[i] = 0.5 * (lo + hi);
            else
                u0[i] = std::clamp(0.0, lo, hi);
        }
        u_.colwise() = u0;
        VecX cur = q_.x0;
        for (int k = 0; k < N_; ++k) {
            cur = q_.A * cur + q_.B * u0 + q_.drift;
            x_.col(k) = cur;
        }
        start_box(ul_, u_);
        start_box(uu_, u_);
        start_box(xl_, x_);
        start_box(xu_, x_);
        const auto& y = row_values(u_);
        for (Eigen::Index j = 0; j < rows_.s.size(); ++j) {
            rows_.s[j] = std::max(rows_.sign[static_cast<std::size_t>(j)] * y[j] - rows_.b[static_cast<std::size_t>(j)], 1.0);
            rows_.l[j] = 1.0;
        }
    }

    template <class B, class V>
    static void start_box(B& box, const V& v) {
        box.s = box.raw(v).max(1.0);
        box.l.colwise() = box.mask;
    }

    // row' u_k for every banded stage
    const Eigen::ArrayXd& row_values(const StackU& u) {
        for (std::size_t j = 0; j < rows_.k.size(); ++j) y_[static_cast<Eigen::Index>(j)] = q_.row.dot(u.col(rows_.k[j]));
        return y_;
    }

    double objective() const {
        double J = 0.0;
        for (std::size_t k = 0; k < static_cast<std::size_t>(N_); ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            const VecU u = u_.col(kk);
            J += 0.5 * u.dot(q_.hu[k] * u) + q_.fu[k].dot(u);
            if (!q_.hx.empty()) {
                const VecX x = x_.col(kk);
                J += 0.5 * x.dot(q_.hx[k].cwiseProduct(x)) + q_.fx[k].dot(x);
            }
        }
        return J;
    }

    template <class B, class V>
    void box_residual(B& box, const V& v) {
        box.inv_s = box.s.inverse();
        box.inv_l = box.mask.replicate(1, N_) / (box.l + (1.0 - box.mask).replicate(1, N_));
        box.g = box.raw(v) - box.s * box.mask.replicate(1, N_);
        if (N_ > 0) {
            ri_ = std::max(ri_, box.g.abs().maxCoeff());
            gap_ += (box.s * box.l).sum();
            dn_ = std::max(dn_, box.l.maxCoeff());
        }
    }

    void residuals() {
        rd_ = re_ = ri_ = gap_ = dn_ = 0.0;
        box_residual(ul_, u_);
        box_residual(uu_, u_);
        box_residual(xl_, x_);
        box_residual(xu_, x_);
        // multiplier pull on u and x from the boxes
        lam_u_ = (ul_.l - uu_.l).matrix();
        lam_x_ = (xl_.l - xu_.l).matrix();
        const auto& y = row_values(u_);
        rows_.inv_s = rows_.s.inverse();
        rows_.inv_l = rows_.l.inverse();
        row_pull_.setZero();
        for (std::size_t j = 0; j < rows_.k.size(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            rows_.g[jj] = rows_.sign[j] * y[jj] - rows_.b[j] - rows_.s[jj];
            ri_ = std::max(ri_, std::abs(rows_.g[jj]));
            gap_ += rows_.s[jj] * rows_.l[jj];
            dn_ = std::max(dn_, rows_.l[jj]);
            row_pull_[rows_.k[j]] += rows_.sign[j] * rows_.l[jj];
        }
        for (std::size_t k = 0; k < static_cast<std::size_t>(N_); ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            const VecX xprev = k == 0 ? q_.x0 : VecX(x_.col(kk - 1));
            const VecU u = u_.col(kk);
            const VecX x = x_.col(kk);
            const VecX re = x - q_.A * xprev - q_.B * u - q_.drift;
            be_.col(kk) = -re;
            re_ = std::max(re_, re.template lpNorm<Eigen::Infinity>());
            const VecX nu = nu_.col(kk);
            const VecU hu = q_.hu[k] * u;
            const VecU bnu = q_.B.transpose() * nu;
            dn_ = std::max({dn_, hu.template lpNorm<Eigen::Infinity>(), bnu.template lpNorm<Eigen::Infinity>()});
            VecU gu = hu + q_.fu[k] - bnu - lam_u_.col(kk) - row_pull_[kk] * q_.row;
            VecX gx = nu - lam_x_.col(kk);
            if (!q_.hx.empty()) {
                const VecX gs = q_.hx[k].cwiseProduct(x) + q_.fx[k];
                dn_ = std::max(dn_, gs.template lpNorm<Eigen::Infinity>());
                gx += gs;
            }
            if (k + 1 < static_cast<std::size_t>(N_)) gx -= q_.A.transpose() * VecX(nu_.col(kk + 1));
            rd_ = std::max({rd_, gu.template lpNorm<Eigen::Infinity>(), gx.template lpNorm<Eigen::Infinity>()});
        }
    }

    bool factor() {
        const auto n = static_cast<std::size_t>(N_);
        wu_ = (ul_.l * ul_.inv_s + uu_.l * uu_.inv_s).matrix();
        wx_ = (xl_.l * xl_.inv_s + xu_.l * xu_.inv_s).matrix();
        for (std::size_t k = 0; k < n; ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            MatUU R = q_.hu[k];
            R.diagonal() += wu_.col(kk);
            R.diagonal().array() += 1e-12;
            Rt_[k] = R;
            MatXX Qm = MatXX::Zero();
            Qm.diagonal() = wx_.col(kk);
            if (!q_.hx.empty()) Qm.diagonal() += q_.hx[k];
            Qt_[k] = Qm;
        }
        for (std::size_t j = 0; j < rows_.k.size(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            Rt_[static_cast<std::size_t>(rows_.k[j])].noalias() += (rows_.l[jj] * rows_.inv_s[jj]) * q_.row * q_.row.transpose();
        }
        P_[n] = Qt_[n - 1];
        for (std::size_t kk = n; kk-- > 0;) {
            const MatXX& Pn = P_[kk + 1];
            const MatXU PB = (Pn * q_.B).eval();
            MatUU M = Rt_[kk];
            M.noalias() += q_.B.transpose() * PB;
            M = 0.5 * (M + M.transpose()).eval();
            M_[kk].compute(M);
            // cancellation in P can cost definiteness once duals blow up
            double reg = 1e-10 * (1.0 + M.diagonal().cwiseAbs().maxCoeff());
            for (int tries = 0; M_[kk].info() != Eigen::Success; ++tries, reg *= 100.0) {
                if (tries == 6) return false;
                M.diagonal().array() += reg;
                M_[kk].compute(M);
            }
            L_[kk].noalias() = PB.transpose() * q_.A;
            for (int c = 0; c < Nx; ++c) K_[kk].col(c) = -M_[kk].solve(L_[kk].col(c));
            if (kk >= 1) {
                MatXX P = Qt_[kk - 1];
                P.noalias() += q_.A.transpose() * (Pn * q_.A);
                P.noalias() += L_[kk].transpose() * K_[kk];
                P_[kk] = 0.5 * (P + P.transpose());
            }
        }
        return true;
    }

    // complementarity target and the matching gradient weight of one box
    template <class B, class S>
    static void box_coef(B& box, double target_mu, bool corrector, S& coef) {
        box.rc = (box.s * box.l).colwise() - target_mu * box.mask;
        if (corrector) box.rc += box.dsa * box.dla;
        coef = (box.sign * (-box.l + (box.rc + box.l * box.g) * box.inv_s)).matrix();
    }

    template <class B, class V>
    static void box_step(B& box, const V& dv) {
        box.ds = (box.sign * dv.array()).colwise() * box.mask + box.g;
        box.dl = -(box.rc + box.l * box.ds) * box.inv_s;
    }

    // Newton direction for centering target `target_mu`; with `corrector` the
    // Mehrotra second-order term from the stored affine step is included.
    void direction(double target_mu, bool corrector) {
        const auto n = static_cast<std::size_t>(N_);
        box_coef(ul_, target_mu, corrector, cu_);
        box_coef(uu_, target_mu, corrector, cu2_);
        box_coef(xl_, target_mu, corrector, cx_);
        box_coef(xu_, target_mu, corrector, cx2_);
        cu_ += cu2_;
        cx_ += cx2_;
        rows_.rc = rows_.s * rows_.l - target_mu;
        if (corrector) rows_.rc += rows_.dsa * rows_.dla;
        for (std::size_t j = 0; j < rows_.k.size(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            const double coef = -rows_.l[jj] + (rows_.rc[jj] + rows_.l[jj] * rows_.g[jj]) * rows_.inv_s[jj];
            cu_.col(rows_.k[j]) += (rows_.sign[j] * coef) * q_.row;
        }
        for (std::size_t k = 0; k < n; ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            rho_[k] = q_.hu[k] * VecU(u_.col(kk)) + q_.fu[k] + cu_.col(kk);
            VecX qv = cx_.col(kk);
            if (!q_.hx.empty()) qv += q_.hx[k].cwiseProduct(VecX(x_.col(kk))) + q_.fx[k];
            qv_[k] = qv;
        }
        // backward linear pass
        VecX p = qv_[n - 1];
        for (std::size_t kk = n; kk-- > 0;) {
            const auto c = static_cast<Eigen::Index>(kk);
            const MatXX& Pn = P_[kk + 1];
            const VecX be = be_.col(c);
            const VecX Pb_p = Pn * be + p;
            const VecU g = rho_[kk] + q_.B.transpose() * Pb_p;
            kff_[kk] = -M_[kk].solve(g);
            if (kk >= 1) p = qv_[kk - 1] + q_.A.transpose() * (Pn * (q_.B * kff_[kk] + be) + p);
        }
        // forward pass
        VecX dxk = VecX::Zero();
        for (std::size_t k = 0; k < n; ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            const VecU du = K_[k] * dxk + kff_[k];
            du_.col(kk) = du;
            dxk = q_.A * dxk + q_.B * du + VecX(be_.col(kk));
            dx_.col(kk) = dxk;
        }
        // costates
        VecX next = VecX::Zero();
        for (std::size_t kk = n; kk-- > 0;) {
            const auto c = static_cast<Eigen::Index>(kk);
            const VecX dx = dx_.col(c);
            VecX v = -Qt_[kk] * dx - qv_[kk];
            if (kk + 1 < n) v += q_.A.transpose() * next;
            nup_.col(c) = v;
            next = v;
        }
        // slacks and multipliers
        box_step(ul_, du_);
        box_step(uu_, du_);
        box_step(xl_, dx_);
        box_step(xu_, dx_);
        const auto& dy = row_values(du_);
        for (std::size_t j = 0; j < rows_.k.size(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            rows_.ds[jj] = rows_.sign[j] * dy[jj] + rows_.g[jj];
            rows_.dl[jj] = -(rows_.rc[jj] + rows_.l[jj] * rows_.ds[jj]) * rows_.inv_s[jj];
        }
    }

    // largest relative decrease -ds/s or -dl/l in one box
    template <class B>
    static double shrink_rate(const B& box) {
        if (box.s.size() == 0) return 0.0;
        return std::max((-box.ds * box.inv_s).maxCoeff(), (-box.dl * box.inv_l).maxCoeff());
    }

    double step_length() const {
        const double r = std::max({shrink_rate(ul_), shrink_rate(uu_), shrink_rate(xl_), shrink_rate(xu_),
                                   shrink_rate(rows_)});
        return r > 0.0 ? 1.0 / r : 1e300;
    }

    template <class B>
    static double complementarity(const B& box, double a) {
        return ((box.s + a * box.ds) * (box.l + a * box.dl)).sum();
    }

    template <class B>
    static void keep_affine(B& box) {
        box.dsa.swap(box.ds);
        box.dla.swap(box.dl);
    }

    template <class B>
    static void advance(B& box, double a) {
        box.s += a * box.ds;
        box.l += a * box.dl;
    }

    void take_step(double a) {
        u_ += a * du_;
        x_ += a * dx_;
        nu_ += a * (nup_ - nu_);
        advance(ul_, a);
        advance(uu_, a);
        advance(xl_, a);
        advance(xu_, a);
        advance(rows_, a);
    }

    const Q& q_;
    IpmSettings set_;
    int N_;
    double m_ = 0.0;  // number of finite inequalities
    Box<Nu> ul_, uu_;
    Box<Nx> xl_, xu_;
    Rows rows_;
    Eigen::ArrayXd y_, row_pull_;
    StackU u_, du_, lam_u_, cu_, cu2_, wu_;  // one column per stage
    StackX x_, nu_, dx_, nup_, be_, lam_x_, cx_, cx2_, wx_;
    std::vector<VecU> rho_, kff_;
    std::vector<VecX> qv_;
    std::vector<Eigen::LLT<MatUU>> M_;
    std::vector<MatUX> K_, L_;
    std::vector<MatXX> P_, Qt_;
    std::vector<MatUU> Rt_;
    double rd_ = 0, re_ = 0, ri_ = 0, gap_ = 0, dn_ = 0, kkt_ = kInf;
};

}  // namespace detail

template <int Nx, int Nu>
StagedSolution<Nx, Nu> solve_staged(const StagedQp<Nx, Nu>& q, const IpmSettings& s = {}) {
    if (q.horizon < 1) throw DimensionMismatch("horizon must be at least one step");
    const auto n = static_cast<std::size_t>(q.horizon);
    if (q.hu.size() != n || q.fu.size() != n) throw DimensionMismatch("stage cost count");
    if (!q.row_bounds.empty() && q.row_bounds.size() != n) throw DimensionMismatch("row bound count");
    if (!q.hx.empty() && (q.hx.size() != n || q.fx.size() != n)) throw DimensionMismatch("state cost count");
    detail::RiccatiIpm<Nx, Nu> ipm(q, s);
    return ipm.solve();
}

}  // namespace hess::qp
