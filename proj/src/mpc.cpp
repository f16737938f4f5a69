#include "drekf/mpc.hpp"

#include <algorithm>

#include "drekf/qp.hpp"
#include "drekf/systems.hpp"

namespace drekf {
namespace {

struct Rollout {
    Mat states;
    double cost = 0.0;
    double violation = 0.0;  // worst shortfall
    double penalty = 0.0;    // summed shortfall
};

Rollout evaluate(const Vec& x0, const Mat& U, double margin, const MpcConfig& cfg) {
    Rollout r;
    r.states = simulate_controls(x0, U, cfg.dt);
    const int N = cfg.horizon;
    for (int k = 0; k <= N; ++k) {
        const Eigen::Vector2d p = r.states.row(k).head<2>().transpose();
        const double w = k < N ? cfg.q : cfg.q_f;
        r.cost += w * (p - cfg.goal).squaredNorm();
        if (k < N) r.cost += cfg.r_s * U(k, 0) * U(k, 0) + cfg.r_omega * U(k, 1) * U(k, 1);
        if (k == 0) continue;
        for (const auto& obs : cfg.obstacles) {
            const double short_by = obs.radius + cfg.d_min_base + margin - (p - obs.center).norm();
            if (short_by > 0.0) {
                r.penalty += short_by;
                r.violation = std::max(r.violation, short_by);
            }
        }
    }
    return r;
}

Mat clamp_controls(const Mat& U, const MpcConfig& cfg) {
    Mat out = U;
    out.col(0) = out.col(0).cwiseMax(0.0).cwiseMin(cfg.s_max);
    out.col(1) = out.col(1).cwiseMax(-cfg.omega_max).cwiseMin(cfg.omega_max);
    return out;
}

}  // namespace

void MpcConfig::validate() const {
    if (horizon < 1) throw ConfigError("mpc.horizon", "must be at least 1");
    if (!(dt > 0.0)) throw ConfigError("mpc.dt", "must be positive");
    if (!(s_max > 0.0)) throw ConfigError("mpc.s_max", "must be positive");
    if (!(omega_max > 0.0)) throw ConfigError("mpc.omega_max", "must be positive");
    if (q < 0.0 || r_s < 0.0 || r_omega < 0.0 || q_f < 0.0) throw ConfigError("mpc.weights", "must be nonnegative");
    for (const auto& o : obstacles) {
        if (!(o.radius >= 0.0)) throw ConfigError("mpc.obstacles", "radius must be nonnegative");
    }
    if (max_outer_iters < 1) throw ConfigError("mpc.max_outer_iters", "must be at least 1");
}

std::string to_string(MpcStatus status) {
    switch (status) {
        case MpcStatus::optimal: return "optimal";
        case MpcStatus::max_iter: return "max_iter";
        case MpcStatus::infeasible_relaxed: return "infeasible_relaxed";
    }
    return "unknown";
}

double safety_margin(const Mat& posterior_cov, double kappa_sigma) {
    if (posterior_cov.rows() < 2 || posterior_cov.cols() < 2) {
        throw DimensionError("safety_margin: covariance has no 2x2 position block");
    }
    return kappa_sigma * std::sqrt(std::max(0.0, posterior_cov.topLeftCorner(2, 2).trace()));
}

Mat simulate_controls(const Vec& x0, const Mat& controls, double dt) {
    Mat states(controls.rows() + 1, 3);
    states.row(0) = x0.transpose();
    Vec x = x0;
    for (Eigen::Index k = 0; k < controls.rows(); ++k) {
        x = unicycle_dynamics(x, controls.row(k).transpose(), dt);
        states.row(k + 1) = x.transpose();
    }
    return states;
}

MpcSolution solve_mpc(const Vec& estimate, double margin, const MpcConfig& cfg, const std::optional<Mat>& warm_start) {
    cfg.validate();
    if (estimate.size() != 3) throw DimensionError("solve_mpc: estimate must be a unicycle state");
    require_finite(estimate, "MPC estimate");
    if (!(margin >= 0.0)) throw ConfigError("margin", "must be nonnegative");

    const int N = cfg.horizon;
    const int nobs = int(cfg.obstacles.size());
    const int nu = 2 * N, nvar = nu + N * nobs;

    Mat U = Mat::Zero(N, 2);
    if (warm_start && warm_start->rows() == N && warm_start->cols() == 2) U = clamp_controls(*warm_start, cfg);
    Rollout current = evaluate(estimate, U, margin, cfg);
    double merit = current.cost + cfg.slack_weight * current.penalty;

    double trust = 1e-2;
    bool converged = false;
    int it = 0;
    for (; it < cfg.max_outer_iters; ++it) {
        // Sensitivities d x_k / d U around the current rollout.
        std::vector<Mat> S(N + 1, Mat::Zero(3, nu));
        for (int k = 0; k < N; ++k) {
            const Vec xk = current.states.row(k).transpose();
            const Vec uk = U.row(k).transpose();
            const Mat A = unicycle_dynamics_jacobian(xk, uk, cfg.dt);
            Mat B = Mat::Zero(3, 2);
            B(0, 0) = std::cos(xk(2)) * cfg.dt;
            B(1, 0) = std::sin(xk(2)) * cfg.dt;
            B(2, 1) = cfg.dt;
            S[k + 1] = A * S[k];
            S[k + 1].middleCols(2 * k, 2) += B;
        }

        QpProblem qp;
        qp.H = Mat::Zero(nvar, nvar);
        qp.c = Vec::Zero(nvar);
        for (int k = 1; k <= N; ++k) {
            const double w = k < N ? cfg.q : cfg.q_f;
            const Mat P = S[k].topRows(2);
            const Eigen::Vector2d e = current.states.row(k).head<2>().transpose() - cfg.goal;
            qp.H.topLeftCorner(nu, nu) += 2.0 * w * P.transpose() * P;
            qp.c.head(nu) += 2.0 * w * P.transpose() * e;
        }
        for (int k = 0; k < N; ++k) {
            qp.H(2 * k, 2 * k) += 2.0 * cfg.r_s + 2.0 * trust;
            qp.H(2 * k + 1, 2 * k + 1) += 2.0 * cfg.r_omega + 2.0 * trust;
            qp.c(2 * k) += 2.0 * cfg.r_s * U(k, 0);
            qp.c(2 * k + 1) += 2.0 * cfg.r_omega * U(k, 1);
        }
        qp.c.tail(N * nobs).setConstant(cfg.slack_weight);

        const int nrows = 2 * nu + 2 * N * nobs;
        qp.G = Mat::Zero(nrows, nvar);
        qp.h = Vec::Zero(nrows);
        int row = 0;
        for (int k = 0; k < N; ++k) {
            qp.G(row, 2 * k) = 1.0;
            qp.h(row++) = cfg.s_max - U(k, 0);
            qp.G(row, 2 * k) = -1.0;
            qp.h(row++) = U(k, 0);
            qp.G(row, 2 * k + 1) = 1.0;
            qp.h(row++) = cfg.omega_max - U(k, 1);
            qp.G(row, 2 * k + 1) = -1.0;
            qp.h(row++) = cfg.omega_max + U(k, 1);
        }
        for (int k = 1; k <= N; ++k) {
            const Eigen::Vector2d p = current.states.row(k).head<2>().transpose();
            for (int j = 0; j < nobs; ++j) {
                const auto& obs = cfg.obstacles[j];
                Eigen::Vector2d d = p - obs.center;
                const double dist = d.norm();
                const Eigen::Vector2d n = dist > 1e-9 ? Eigen::Vector2d(d / dist) : Eigen::Vector2d(1.0, 0.0);
                const int slack = nu + (k - 1) * nobs + j;
                qp.G.row(row).head(nu) = -(n.transpose() * S[k].topRows(2));
                qp.G(row, slack) = -1.0;
                qp.h(row++) = n.dot(d) - (obs.radius + cfg.d_min_base + margin);
                qp.G(row, slack) = -1.0;
                qp.h(row++) = 0.0;
            }
        }

        const QpResult sub = solve_qp(qp);
        Mat dU(N, 2);
        for (int k = 0; k < N; ++k) dU.row(k) << sub.x(2 * k), sub.x(2 * k + 1);
        const Mat U_new = clamp_controls(U + dU, cfg);
        const double step = (U_new - U).cwiseAbs().maxCoeff();
        const Rollout trial = evaluate(estimate, U_new, margin, cfg);
        const double trial_merit = trial.cost + cfg.slack_weight * trial.penalty;

        if (trial_merit <= merit + 1e-12 * (1.0 + std::abs(merit))) {
            U = U_new;
            current = trial;
            merit = trial_merit;
            trust = std::max(trust * 0.5, 1e-6);
            if (step < cfg.control_tol) {
                converged = true;
                ++it;
                break;
            }
        } else {
            if (step < cfg.control_tol) {
                converged = true;
                ++it;
                break;
            }
            trust *= 10.0;
        }
    }

    MpcSolution sol;
    sol.controls = U;
    sol.states = current.states;
    sol.cost = current.cost;
    sol.iterations = it;
    sol.max_violation = current.violation;
    if (current.violation > 1e-6) {
        sol.status = MpcStatus::infeasible_relaxed;
    } else {
        sol.status = converged ? MpcStatus::optimal : MpcStatus::max_iter;
    }
    return sol;
}

MpcController::MpcController(MpcConfig config) : config_(std::move(config)) { config_.validate(); }

MpcSolution MpcController::solve(const Vec& estimate, double margin) {
    std::optional<Mat> seed;
    if (warm_) {
        Mat shifted = *warm_;
        const Eigen::Index N = shifted.rows();
        if (N > 1) shifted.topRows(N - 1) = warm_->bottomRows(N - 1).eval();
        seed = shifted;
    }
    MpcSolution sol = solve_mpc(estimate, margin, config_, seed);
    warm_ = sol.controls;
    return sol;
}

}  // namespace drekf
