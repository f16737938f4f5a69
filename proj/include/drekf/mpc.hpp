#pragma once

// Receding-horizon unicycle controller with disc obstacles inflated by a
// covariance-driven safety margin. Solved by sequential convexification:
// dynamics and obstacle distances are linearized around the current
// iterate, and each convex subproblem is a dense QP.

#include <optional>
#include <string>
#include <vector>

#include "drekf/psd.hpp"

namespace drekf {

struct Obstacle {
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    double radius = 0.0;
};

struct MpcConfig {
    int horizon = 10;
    double dt = 0.2;
    double q = 5.0;
    double r_s = 0.5;
    double r_omega = 0.5;
    double q_f = 20.0;
    double s_max = 1.5;
    double omega_max = 2.0;
    Eigen::Vector2d goal = Eigen::Vector2d::Zero();
    std::vector<Obstacle> obstacles;
    double kappa_sigma = 1.645;
    double d_min_base = 0.0;

    int max_outer_iters = 30;
    double control_tol = 1e-4;
    double slack_weight = 1e4;

    void validate() const;
};

enum class MpcStatus { optimal, max_iter, infeasible_relaxed };
std::string to_string(MpcStatus status);

struct MpcSolution {
    Mat controls;  ///< N x 2, rows (s, omega)
    Mat states;    ///< (N + 1) x 3, row 0 is the current estimate
    MpcStatus status = MpcStatus::optimal;
    double cost = 0.0;
    int iterations = 0;
    double max_violation = 0.0;  ///< worst inflated-clearance shortfall over k = 1..N

    Vec first_control() const { return controls.row(0).transpose(); }
};

/// kappa * sqrt(trace of the leading 2x2 block).
double safety_margin(const Mat& posterior_cov, double kappa_sigma);

/// Rolls controls through the unicycle model.
Mat simulate_controls(const Vec& x0, const Mat& controls, double dt);

/// `warm_start` (N x 2) seeds the first linearization; defaults to zero input.
MpcSolution solve_mpc(const Vec& estimate, double margin, const MpcConfig& config,
                      const std::optional<Mat>& warm_start = std::nullopt);

/// Holds the warm start between receding-horizon calls.
class MpcController {
public:
    explicit MpcController(MpcConfig config);

    MpcSolution solve(const Vec& estimate, double margin);
    const MpcConfig& config() const { return config_; }

private:
    MpcConfig config_;
    std::optional<Mat> warm_;
};

}  // namespace drekf
