#pragma once

// Dense dual active-set solver (Goldfarb-Idnani) for strictly convex QPs.
// Singular Hessians are shifted by a small multiple of the identity first,
// which also selects the minimum-norm minimizer among ties.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "hess/qp/problem.hpp"

namespace hess::qp {

namespace detail {

struct Constraint {
    bool is_row;         // general row of G, otherwise a variable bound
    Eigen::Index index;  // variable or row index
    double sign;         // +1 for a lower bound, -1 for an upper bound
    double rhs;          // constraint reads sign * a'u >= rhs
    double norm;
};

class ActiveSetSolver {
public:
    ActiveSetSolver(const QpProblem& p, double tol, int max_iter) : p_(p), tol_(tol), max_iter_(max_iter) {
        n_ = p.num_vars();
        for (Eigen::Index j = 0; j < n_; ++j) {
            if (std::isfinite(p.var_lower[j])) cons_.push_back({false, j, 1.0, p.var_lower[j], 1.0});
            if (std::isfinite(p.var_upper[j])) cons_.push_back({false, j, -1.0, -p.var_upper[j], 1.0});
        }
        for (Eigen::Index r = 0; r < p.num_rows(); ++r) {
            const double nr = p.ineq_matrix.row(r).norm();
            if (nr == 0.0) {
                // empty row: feasible iff 0 lies inside its bounds
                if (p.ineq_lower[r] > tol_ || p.ineq_upper[r] < -tol_) trivially_infeasible_ = true;
                continue;
            }
            if (std::isfinite(p.ineq_lower[r])) cons_.push_back({true, r, 1.0, p.ineq_lower[r], nr});
            if (std::isfinite(p.ineq_upper[r])) cons_.push_back({true, r, -1.0, -p.ineq_upper[r], nr});
        }
    }

    QpSolution solve() {
        QpSolution sol;
        factorize(sol);
        x_ = -chol_.solve(p_.linear);
        if (trivially_infeasible_) return finish(sol, QpStatus::Infeasible);
        R_ = Eigen::MatrixXd::Zero(n_, n_);
        active_.clear();
        mult_.clear();
        is_active_.assign(cons_.size(), false);
        q_ = 0;
        int iter = 0;

        for (;;) {
            // most violated constraint, measured in scaled distance
            std::ptrdiff_t pick = -1;
            double worst = 0.0;
            for (std::size_t c = 0; c < cons_.size(); ++c) {
                if (is_active_[c]) continue;
                const double s = slack(cons_[c]);
                if (s < -tol_ * (1.0 + std::abs(cons_[c].rhs)) && s / cons_[c].norm < worst) {
                    worst = s / cons_[c].norm;
                    pick = static_cast<std::ptrdiff_t>(c);
                }
            }
            if (pick < 0) break;
            const Constraint& cp = cons_[static_cast<std::size_t>(pick)];
            double sp = slack(cp);
            double u_new = 0.0;

            for (;;) {
                if (++iter > max_iter_) {
                    sol.iterations = iter - 1;
                    return finish(sol, QpStatus::MaxIter);
                }
                const Eigen::VectorXd d = jt_normal(cp);
                const Eigen::Index nf = n_ - q_;
                Eigen::VectorXd z = J_.rightCols(nf) * d.tail(nf);
                Eigen::VectorXd r(q_);
                if (q_ > 0) r = R_.topLeftCorner(q_, q_).triangularView<Eigen::Upper>().solve(d.head(q_));

                double t1 = kInf;
                Eigen::Index drop_at = -1;
                for (Eigen::Index j = 0; j < q_; ++j) {
                    if (r[j] > 1e-14 * (1.0 + std::abs(mult_[static_cast<std::size_t>(j)]))) {
                        const double ratio = mult_[static_cast<std::size_t>(j)] / r[j];
                        if (ratio < t1) {
                            t1 = ratio;
                            drop_at = j;
                        }
                    }
                }
                const double dz = d.tail(nf).squaredNorm();
                const double t2 = dz > 1e-14 * std::max(d.squaredNorm(), 1e-300) ? -sp / dz : kInf;
                const double t = std::min(t1, t2);
                if (!std::isfinite(t)) {
                    sol.iterations = iter;
                    return finish(sol, QpStatus::Infeasible);
                }
                for (Eigen::Index j = 0; j < q_; ++j) mult_[static_cast<std::size_t>(j)] -= t * r[j];
                u_new += t;
                if (!std::isfinite(t2)) {
                    drop(drop_at);
                    continue;
                }
                x_ += t * z;
                if (t2 <= t1) {
                    add(static_cast<std::size_t>(pick), d);
                    mult_.push_back(u_new);
                    break;
                }
                drop(drop_at);
                sp = slack(cp);
            }
        }
        sol.iterations = iter;
        return finish(sol, QpStatus::Optimal);
    }

private:
    void factorize(QpSolution& sol) {
        Eigen::MatrixXd H = p_.hessian;
        double reg = 0.0;
        if (n_ > 0) {
            Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
            const double dmin = ldlt.vectorD().minCoeff();
            if (dmin < 1e-10 || ldlt.info() != Eigen::Success) {
                const double tr = H.trace();
                reg = 1e-9 * (tr > 0.0 ? tr / static_cast<double>(n_) : 1.0);
            }
        }
        for (int attempt = 0; attempt < 8; ++attempt) {
            Eigen::MatrixXd Hr = H;
            Hr.diagonal().array() += reg;
            chol_.compute(Hr);
            if (chol_.info() == Eigen::Success) break;
            reg = reg > 0.0 ? reg * 100.0 : 1e-9;
        }
        sol.regularization = reg;
        reg_ = reg;
        J_ = chol_.matrixL().solve(Eigen::MatrixXd::Identity(n_, n_)).transpose();
    }

    double dot(const Constraint& c, const Eigen::VectorXd& v) const {
        return c.sign * (c.is_row ? p_.ineq_matrix.row(c.index).dot(v) : v[c.index]);
    }
    double slack(const Constraint& c) const { return dot(c, x_) - c.rhs; }

    Eigen::VectorXd jt_normal(const Constraint& c) const {
        if (c.is_row) return c.sign * (J_.transpose() * p_.ineq_matrix.row(c.index).transpose());
        return c.sign * J_.row(c.index).transpose();
    }

    void add(std::size_t c, Eigen::VectorXd d) {
        for (Eigen::Index j = n_ - 1; j > q_; --j) {
            const double a = d[j - 1], b = d[j];
            if (b == 0.0) continue;
            const double h = std::hypot(a, b), cs = a / h, sn = b / h;
            d[j - 1] = h;
            d[j] = 0.0;
            for (Eigen::Index k = 0; k < n_; ++k) {
                const double x = J_(k, j - 1), y = J_(k, j);
                J_(k, j - 1) = cs * x + sn * y;
                J_(k, j) = -sn * x + cs * y;
            }
        }
        R_.col(q_).head(q_ + 1) = d.head(q_ + 1);
        ++q_;
        active_.push_back(c);
        is_active_[c] = true;
    }

    void drop(Eigen::Index l) {
        is_active_[active_[static_cast<std::size_t>(l)]] = false;
        active_.erase(active_.begin() + l);
        mult_.erase(mult_.begin() + l);
        for (Eigen::Index j = l; j < q_ - 1; ++j) R_.col(j) = R_.col(j + 1);
        R_.col(q_ - 1).setZero();
        for (Eigen::Index j = l; j < q_ - 1; ++j) {
            const double a = R_(j, j), b = R_(j + 1, j);
            if (b == 0.0) continue;
            const double h = std::hypot(a, b), cs = a / h, sn = b / h;
            for (Eigen::Index k = j; k < q_ - 1; ++k) {
                const double x = R_(j, k), y = R_(j + 1, k);
                R_(j, k) = cs * x + sn * y;
                R_(j + 1, k) = -sn * x + cs * y;
            }
            for (Eigen::Index k = 0; k < n_; ++k) {
                const double x = J_(k, j), y = J_(k, j + 1);
                J_(k, j) = cs * x + sn * y;
                J_(k, j + 1) = -sn * x + cs * y;
            }
        }
        --q_;
    }

    // Re-solve the equality problem on the final active set to remove drift
    // accumulated over the updates. Kept only if it does not make things worse.
    void polish() {
        if (n_ == 0) return;
        const Eigen::Index q = q_;
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n_ + q, n_ + q);
        K.topLeftCorner(n_, n_) = p_.hessian;
        K.topLeftCorner(n_, n_).diagonal().array() += reg_;
        Eigen::VectorXd rhs(n_ + q);
        rhs.head(n_) = -p_.linear;
        for (Eigen::Index a = 0; a < q; ++a) {
            const Constraint& c = cons_[active_[static_cast<std::size_t>(a)]];
            Eigen::VectorXd col = Eigen::VectorXd::Zero(n_);
            if (c.is_row)
                col = c.sign * p_.ineq_matrix.row(c.index).transpose();
            else
                col[c.index] = c.sign;
            K.block(0, n_ + a, n_, 1) = -col;
            K.block(n_ + a, 0, 1, n_) = col.transpose();
            rhs[n_ + a] = c.rhs;
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
        Eigen::VectorXd z = lu.solve(rhs);
        if (!z.allFinite()) return;
        const Eigen::VectorXd keep_x = x_;
        const std::vector<double> keep_m = mult_;
        const double before = residual();
        x_ = z.head(n_);
        for (Eigen::Index a = 0; a < q; ++a) mult_[static_cast<std::size_t>(a)] = z[n_ + a];
        if (!(residual() < before)) {
            x_ = keep_x;
            mult_ = keep_m;
        }
    }

    double residual() const {
        Eigen::VectorXd g = p_.hessian * x_ + p_.linear + reg_ * x_;
        double comp = 0.0;
        for (std::size_t a = 0; a < active_.size(); ++a) {
            const Constraint& c = cons_[active_[a]];
            const double m = mult_[a];
            if (c.is_row)
                g -= m * c.sign * p_.ineq_matrix.row(c.index).transpose();
            else
                g[c.index] -= m * c.sign;
            comp = std::max(comp, std::abs(m * slack(c)) / (1.0 + std::abs(c.rhs)));
            comp = std::max(comp, -m);
        }
        double primal = 0.0;
        for (const auto& c : cons_) primal = std::max(primal, -slack(c) / (1.0 + std::abs(c.rhs)));
        // relative to the size of the terms that cancel in the gradient
        double scale = 1.0;
        if (n_ > 0) {
            scale += std::max(p_.linear.cwiseAbs().maxCoeff(),
                              p_.hessian.cwiseAbs().rowwise().sum().maxCoeff() * x_.cwiseAbs().maxCoeff());
        }
        return std::max({g.size() ? g.cwiseAbs().maxCoeff() / scale : 0.0, primal, comp});
    }

    QpSolution& finish(QpSolution& sol, QpStatus status) {
        if (status == QpStatus::Optimal && residual() > tol_) polish();
        sol.u_star = x_;
        sol.objective = p_.objective(x_);
        sol.status = status;
        sol.kkt_residual = residual();
        if (status == QpStatus::Optimal && sol.kkt_residual > 1e3 * tol_) sol.status = QpStatus::MaxIter;
        return sol;
    }

    const QpProblem& p_;
    double tol_;
    int max_iter_;
    Eigen::Index n_ = 0, q_ = 0;
    double reg_ = 0.0;
    bool trivially_infeasible_ = false;
    std::vector<Constraint> cons_;
    std::vector<std::size_t> active_;
    std::vector<double> mult_;
    std::vector<bool> is_active_;
    Eigen::LLT<Eigen::MatrixXd> chol_;
    Eigen::MatrixXd J_, R_;
    Eigen::VectorXd x_;
};

}  // namespace detail

inline QpSolution solve_qp(const QpProblem& p, double tol = 1e-9, int max_iter = 20000) {
    p.validate();
    detail::ActiveSetSolver s(p, tol, max_iter);
    return s.solve();
}

}  // namespace hess::qp
