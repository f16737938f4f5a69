#pragma once

// Stage-wise minimax MSE problem over the Wasserstein ball of the stacked
// noise. For t >= 1 the prior is propagated, Sigma^- = A Sigma_{t-1} A^T +
// Sigma_w; at t = 0 the prior covariance is the first block of Sigma_eps
// itself. Both cases share the representation
//
//     Sigma^- = P0 + Sigma_eps[0:nx, 0:nx],   P0 = A Sigma_{t-1} A^T or 0,
//
// and the worst-case posterior MSE Tr(Sigma^- - T S^{-1} T^T) is a concave
// function of Sigma_eps.

#include <optional>
#include <string>
#include <vector>

#include "drekf/ambiguity.hpp"
#include "drekf/psd.hpp"

namespace drekf {

struct StageSdpProblem {
    bool is_initial = false;
    Mat A;                  ///< n_x x n_x, empty for t = 0
    Mat C;                  ///< n_y x n_x
    Mat carried_posterior;  ///< Sigma_{x,t-1}, empty for t = 0
    NominalStackedNoise nominal;
    double radius = 0.0;
    double lambda_floor = 0.0;

    Eigen::Index nx() const { return nominal.nx(); }
    Eigen::Index ny() const { return nominal.ny(); }
    /// A Sigma_{t-1} A^T, or zero at t = 0.
    Mat prior_offset() const;
};

StageSdpProblem build_stage_problem(const std::optional<Mat>& A, const Mat& C,
                                    const std::optional<PsdMatrixd>& carried_posterior,
                                    const NominalStackedNoise& nominal, double radius, bool is_initial);

struct SolverOptions {
    double tol_obj = 1e-7;
    int max_iters = 5000;
    double feas_tol = 1e-8;
    /// Consecutive iterations of small relative change required to stop.
    int stall_window = 5;
};

struct SolverDiagnostics {
    std::string method;
    int iterations = 0;
    double feasibility_residual = 0.0;
    double objective_gap = 0.0;  ///< certified upper bound on (optimum - objective)
};

struct StageSdpSolution {
    Mat prior_cov;      ///< Sigma^-_{x,t}
    Mat posterior_cov;  ///< Sigma*_{x,t}
    Mat first_cov;      ///< Sigma*_{w,t-1}, or Sigma*^-_{x,0}
    Mat meas_cov;       ///< Sigma*_{v,t}
    Mat cross_cov;      ///< Sigma*_{wv,t-1}, or Sigma*_{xv,0}
    Mat coupling;       ///< Z_t of the Bures LMI
    Mat T;
    Mat S;
    Mat gain;           ///< K* = T S^{-1}
    double objective = 0.0;
    SolverDiagnostics diagnostics;

    /// Stacked least-favorable covariance [[first, cross], [cross^T, meas]].
    Mat stacked_cov() const;
};

/// Raised when a stage solver exhausts its budget; carries the best iterate.
class SdpConvergenceError : public ConvergenceError {
public:
    SdpConvergenceError(const std::string& what, StageSdpSolution best)
        : ConvergenceError(what), best_(std::move(best)) {}
    const StageSdpSolution& best() const { return best_; }

private:
    StageSdpSolution best_;
};

/// Evaluated blocks of the reduced objective at a stacked covariance.
struct StageEvaluation {
    Mat prior_cov, T, S, gain, posterior_cov;
    double objective = 0.0;
    Mat gradient;  ///< d objective / d Sigma_eps = G^T G with G = [I - K C, -K]
};

StageEvaluation evaluate_stage(const StageSdpProblem& problem, const Mat& stacked_cov);

/// argmax <D, Sigma> over { Sigma : Bures(Sigma, center) <= radius } for D PSD.
/// The maximizer is gamma^2 (gamma I - D)^{-1} center (gamma I - D)^{-1}.
Mat bures_linear_oracle(const Mat& center, const Mat& direction, double radius);

/// Transport-form coupling Z = C^{1/2} (C^{1/2} S C^{1/2})^{1/2} C^{-1/2} for
/// nominal C and candidate S; Tr Z equals the Bures fidelity.
Mat bures_coupling(const Mat& nominal, const Mat& candidate);

/// Frank-Wolfe (conditional gradient) solve. Zero radius short-circuits to the
/// Kalman solution. Throws ConvergenceError when max_iters is exhausted.
StageSdpSolution solve_stage_sdp(const StageSdpProblem& problem, const SolverOptions& options = {});

/// Log-barrier path-following solve of the full LMI form. Used as an
/// independent cross-check of the first-order solver; requires radius > 0.
StageSdpSolution solve_stage_sdp_interior_point(const StageSdpProblem& problem, double gap_tol = 1e-9);

/// Closed-form Kalman update for the nominal covariance (the radius-0 optimum).
StageSdpSolution kalman_solution(const StageSdpProblem& problem);

struct ConstraintResidual {
    std::string name;
    double residual = 0.0;  ///< > 0 means violated by that amount
    bool violated = false;
};

struct VerificationReport {
    std::vector<ConstraintResidual> constraints;
    double objective = 0.0;
    bool ok() const;
    /// Names of violated constraints, comma separated.
    std::string violations() const;
};

VerificationReport verify_solution(const StageSdpProblem& problem, const StageSdpSolution& solution, double tol);

}  // namespace drekf
