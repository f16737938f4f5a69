#pragma once

// Small dense log-barrier solver for linear objectives under linear matrix
// inequalities:
//
//     minimize c^T z   s.t.   F_k(z) = F_k0 + sum_i z_i F_ki  >= 0  (PSD), all k.
//
// Scalar inequalities are 1x1 blocks. Intended for problems with at most a few
// hundred variables and block sizes up to ~30.

#include <utility>
#include <vector>

#include "drekf/psd.hpp"

namespace drekf {

struct LmiBlock {
    Mat constant;
    /// Sparse list of (variable index, coefficient matrix).
    std::vector<std::pair<int, Mat>> terms;

    Mat evaluate(const Vec& z) const;
};

struct LmiProgram {
    Vec cost;
    std::vector<LmiBlock> blocks;
};

struct BarrierOptions {
    double gap_tol = 1e-9;   ///< stop when (sum of block sizes) / t < gap_tol
    double t_initial = 1.0;
    double t_growth = 20.0;
    int max_newton = 200;    ///< per centering step
};

struct BarrierResult {
    Vec z;
    double objective = 0.0;
    double gap_bound = 0.0;
    int newton_steps = 0;
    bool converged = false;
};

/// `z0` must be strictly feasible (every block positive definite).
BarrierResult solve_lmi_barrier(const LmiProgram& program, const Vec& z0, const BarrierOptions& options = {});

}  // namespace drekf
