#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "hess/core/errors.hpp"

namespace hess::qp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// minimize 1/2 u'Hu + f'u  s.t.  var_lower <= u <= var_upper,
//                                 ineq_lower <= G u <= ineq_upper
struct QpProblem {
    Eigen::MatrixXd hessian;
    Eigen::VectorXd linear;
    Eigen::VectorXd var_lower, var_upper;
    Eigen::MatrixXd ineq_matrix;
    Eigen::VectorXd ineq_lower, ineq_upper;
    double constant = 0.0;  // dropped from the solve, added back to reported objectives

    Eigen::Index num_vars() const { return linear.size(); }
    Eigen::Index num_rows() const { return ineq_matrix.rows(); }

    static QpProblem unconstrained(Eigen::MatrixXd h, Eigen::VectorXd f) {
        QpProblem p;
        const auto n = f.size();
        p.hessian = std::move(h);
        p.linear = std::move(f);
        p.var_lower = Eigen::VectorXd::Constant(n, -kInf);
        p.var_upper = Eigen::VectorXd::Constant(n, kInf);
        p.ineq_matrix.resize(0, n);
        p.ineq_lower.resize(0);
        p.ineq_upper.resize(0);
        return p;
    }

    void validate() const {
        const auto n = linear.size();
        if (hessian.rows() != n || hessian.cols() != n) throw DimensionMismatch("hessian size");
        if (var_lower.size() != n || var_upper.size() != n) throw DimensionMismatch("bound size");
        if (ineq_matrix.cols() != n && ineq_matrix.rows() > 0) throw DimensionMismatch("row width");
        if (ineq_lower.size() != ineq_matrix.rows() || ineq_upper.size() != ineq_matrix.rows())
            throw DimensionMismatch("row bound size");
        const double scale = std::max(1.0, hessian.cwiseAbs().maxCoeff());
        if ((hessian - hessian.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
            throw DomainError("hessian is not symmetric");
        for (Eigen::Index i = 0; i < n; ++i)
            if (var_lower[i] > var_upper[i]) throw DomainError("variable bounds are inverted");
    }

    double objective(const Eigen::VectorXd& u) const { return 0.5 * u.dot(hessian * u) + linear.dot(u); }
};

enum class QpStatus { Optimal, MaxIter, Infeasible };

inline const char* to_string(QpStatus s) {
    switch (s) {
        case QpStatus::Optimal: return "optimal";
        case QpStatus::MaxIter: return "max_iter";
        case QpStatus::Infeasible: return "infeasible";
    }
    return "unknown";
}

struct QpSolution {
    Eigen::VectorXd u_star;
    double objective = 0.0;  // without the constant term
    QpStatus status = QpStatus::MaxIter;
    double kkt_residual = kInf;
    int iterations = 0;
    double regularization = 0.0;  // diagonal shift applied to H, 0 if none
};

struct Band {
    double lower = -kInf;
    double upper = kInf;
    bool bounded() const { return std::isfinite(lower) || std::isfinite(upper); }
};

// Stacked tracking QP over N steps of k actuators:
//   sum_i Q (r_i - C_y u_i)^2 + R c'u_i dt
// with optional per-step residual bands r_lo <= r_i - C_y u_i <= r_hi.
inline QpProblem assemble_tracking_qp(double q, const Eigen::VectorXd& output_row, const Eigen::VectorXd& cost,
                                      double cost_weight, const Eigen::VectorXd& forecast, double dt_h,
                                      const Eigen::VectorXd& u_lower, const Eigen::VectorXd& u_upper,
                                      const std::vector<Band>& bands = {}) {
    const auto k = output_row.size();
    const auto N = forecast.size();
    if (N < 1) throw DimensionMismatch("tracking horizon must be at least one step");
    if (!(q > 0.0)) throw DomainError("tracking weight must be positive");
    if (cost.size() != k) throw DimensionMismatch("cost vector length differs from output row");
    const bool stacked_bounds = u_lower.size() == k * N;
    if (!(u_lower.size() == k || stacked_bounds) || u_upper.size() != u_lower.size())
        throw DimensionMismatch("actuator bound length");
    if (!bands.empty() && static_cast<Eigen::Index>(bands.size()) != N) throw DimensionMismatch("band count");

    QpProblem p;
    const Eigen::MatrixXd block = 2.0 * q * output_row * output_row.transpose();
    p.hessian = Eigen::MatrixXd::Zero(k * N, k * N);
    p.linear.resize(k * N);
    p.var_lower.resize(k * N);
    p.var_upper.resize(k * N);
    for (Eigen::Index i = 0; i < N; ++i) {
        p.hessian.block(i * k, i * k, k, k) = block;
        p.linear.segment(i * k, k) = -2.0 * q * forecast[i] * output_row + cost_weight * cost * dt_h;
        p.var_lower.segment(i * k, k) = stacked_bounds ? u_lower.segment(i * k, k) : u_lower;
        p.var_upper.segment(i * k, k) = stacked_bounds ? u_upper.segment(i * k, k) : u_upper;
    }
    p.constant = q * forecast.squaredNorm();

    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(bands.size()); ++i)
        if (bands[static_cast<std::size_t>(i)].bounded()) rows.push_back(i);
    p.ineq_matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), k * N);
    p.ineq_lower.resize(static_cast<Eigen::Index>(rows.size()));
    p.ineq_upper.resize(static_cast<Eigen::Index>(rows.size()));
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(rows.size()); ++r) {
        const auto i = rows[static_cast<std::size_t>(r)];
        const Band& b = bands[static_cast<std::size_t>(i)];
        p.ineq_matrix.block(r, i * k, 1, k) = output_row.transpose();
        p.ineq_lower[r] = forecast[i] - b.upper;
        p.ineq_upper[r] = forecast[i] - b.lower;
    }
    return p;
}

// Text dump: one labelled block per matrix, rows on lines, space separated.
inline void dump(std::ostream& out, const QpProblem& p) {
    auto mat = [&](const char* name, const Eigen::MatrixXd& m) {
        out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
            out << '\n';
        }
    };
    auto vec = [&](const char* name, const Eigen::VectorXd& v) { mat(name, v.transpose()); };
    const auto prec = out.precision(17);
    mat("H", p.hessian);
    vec("f", p.linear);
    vec("lb", p.var_lower);
    vec("ub", p.var_upper);
    mat("G", p.ineq_matrix);
    vec("gl", p.ineq_lower);
    vec("gu", p.ineq_upper);
    out << "c 1 1\n" << p.constant << '\n';
    out.precision(prec);
}

}  // namespace hess::qp
