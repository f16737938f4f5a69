#include "drekf/lmi_barrier.hpp"

#include <cmath>
#include <limits>

namespace drekf {
namespace {

// Returns false when some block is not positive definite at z.
bool barrier_value(const LmiProgram& program, const Vec& z, double t, double& value) {
    value = t * program.cost.dot(z);
    for (const auto& block : program.blocks) {
        Eigen::LLT<Mat> llt(block.evaluate(z));
        if (llt.info() != Eigen::Success) return false;
        const Vec diag = llt.matrixLLT().diagonal();
        if ((diag.array() <= 0.0).any()) return false;
        value -= 2.0 * diag.array().log().sum();
    }
    return std::isfinite(value);
}

}  // namespace

Mat LmiBlock::evaluate(const Vec& z) const {
    Mat f = constant;
    for (const auto& [index, coeff] : terms) f.noalias() += z(index) * coeff;
    return f;
}

BarrierResult solve_lmi_barrier(const LmiProgram& program, const Vec& z0, const BarrierOptions& options) {
    const Eigen::Index n = program.cost.size();
    if (z0.size() != n) throw DimensionError("solve_lmi_barrier: start point has wrong size");

    double total_size = 0.0;
    for (const auto& block : program.blocks) total_size += double(block.constant.rows());

    BarrierResult result;
    result.z = z0;
    double t = options.t_initial;
    double phi = 0.0;
    if (!barrier_value(program, result.z, t, phi)) {
        throw Error("solve_lmi_barrier: start point is not strictly feasible");
    }

    std::vector<Mat> weighted;
    while (true) {
        barrier_value(program, result.z, t, phi);
        for (int it = 0; it < options.max_newton; ++it) {
            Vec grad = t * program.cost;
            Mat hess = Mat::Zero(n, n);
            for (const auto& block : program.blocks) {
                const Eigen::Index s = block.constant.rows();
                Eigen::LLT<Mat> llt(block.evaluate(result.z));
                const Mat inv = llt.solve(Mat::Identity(s, s));
                weighted.resize(block.terms.size());
                for (std::size_t a = 0; a < block.terms.size(); ++a) {
                    weighted[a].noalias() = inv * block.terms[a].second;
                    grad(block.terms[a].first) -= weighted[a].trace();
                }
                for (std::size_t a = 0; a < block.terms.size(); ++a) {
                    const int ia = block.terms[a].first;
                    for (std::size_t b = a; b < block.terms.size(); ++b) {
                        const int ib = block.terms[b].first;
                        const double v = (weighted[a].array() * weighted[b].transpose().array()).sum();
                        hess(ia, ib) += v;
                        if (ia != ib) hess(ib, ia) += v;
                    }
                }
            }
            const Vec step = -hess.ldlt().solve(grad);
            const double decrement = -grad.dot(step);
            ++result.newton_steps;
            if (!(decrement > 1e-12)) break;

            double s = 1.0, trial = 0.0;
            while (s > 1e-16) {
                const Vec z_next = result.z + s * step;
                if (barrier_value(program, z_next, t, trial) && trial <= phi - 0.25 * s * decrement) break;
                s *= 0.5;
            }
            if (s <= 1e-16) break;
            result.z += s * step;
            phi = trial;
        }
        result.gap_bound = total_size / t;
        if (result.gap_bound < options.gap_tol) {
            result.converged = true;
            break;
        }
        if (t > 1e14) break;
        t *= options.t_growth;
    }
    result.objective = program.cost.dot(result.z);
    return result;
}

}  // namespace drekf
