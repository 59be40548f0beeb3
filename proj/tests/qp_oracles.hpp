#pragma once

// Independent reference computations for QP tests.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "hess/qp/problem.hpp"

namespace oracle {

// Accelerated projected gradient for box-constrained convex QPs.
inline Eigen::VectorXd projected_gradient(const Eigen::MatrixXd& H, const Eigen::VectorXd& f,
                                          const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                          double tol = 1e-13, int max_iter = 2000000, bool* converged = nullptr) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const double L = std::max(es.eigenvalues().maxCoeff(), 1e-12);
    auto proj = [&](Eigen::VectorXd v) { return v.cwiseMax(lo).cwiseMin(hi); };
    Eigen::VectorXd x = proj(Eigen::VectorXd::Zero(f.size())), y = x, xprev = x;
    double t = 1.0;
    bool ok = false;
    for (int k = 0; k < max_iter; ++k) {
        xprev = x;
        x = proj(y - (H * y + f) / L);
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = x + ((t - 1.0) / tn) * (x - xprev);
        t = tn;
        // restart when the objective goes up
        if ((x - xprev).dot(H * x + f) > 0.0) {
            t = 1.0;
            y = x;
        }
        if ((x - xprev).lpNorm<Eigen::Infinity>() < tol) {
            // confirm with a plain projected step
            Eigen::VectorXd z = proj(x - (H * x + f) / L);
            if ((z - x).lpNorm<Eigen::Infinity>() < 10 * tol) {
                ok = true;
                break;
            }
        }
    }
    if (converged) *converged = ok;
    return x;
}

// Random PSD problem with box constraints of dimension n.
struct BoxProblem {
    Eigen::MatrixXd H;
    Eigen::VectorXd f, lo, hi;
};

inline BoxProblem random_box_problem(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    BoxProblem p;
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = g(rng);
    // mix of well conditioned and nearly singular Hessians
    const int rank = 1 + static_cast<int>(u(rng) * n);
    Eigen::MatrixXd B = A.leftCols(rank);
    p.H = B * B.transpose() + (0.05 + u(rng)) * Eigen::MatrixXd::Identity(n, n);
    p.f.resize(n);
    p.lo.resize(n);
    p.hi.resize(n);
    for (int i = 0; i < n; ++i) {
        p.f[i] = 3.0 * g(rng);
        const double a = -2.0 * u(rng), b = 2.0 * u(rng);
        p.lo[i] = a;
        p.hi[i] = b;
    }
    return p;
}

}  // namespace oracle
