#pragma once

// Dense convex QP
//
//     minimize 0.5 x^T H x + c^T x   s.t.   G x <= h
//
// by a Mehrotra predictor-corrector primal-dual interior-point method.
// Sized for MPC subproblems with a few dozen variables.

#include "drekf/psd.hpp"

namespace drekf {

struct QpProblem {
    Mat H;  ///< PSD
    Vec c;
    Mat G;
    Vec h;
};

struct QpOptions {
    double tol = 1e-9;
    int max_iters = 100;
};

struct QpResult {
    Vec x;
    Vec z;  ///< inequality multipliers
    int iterations = 0;
    bool converged = false;
    double objective = 0.0;
};

QpResult solve_qp(const QpProblem& problem, const QpOptions& options = {});

}  // namespace drekf
