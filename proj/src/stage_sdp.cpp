#include "drekf/stage_sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "drekf/lmi_barrier.hpp"

namespace drekf {
namespace {

double frob_inner(const Mat& a, const Mat& b) { return (a.array() * b.array()).sum(); }

// Raises eigenvalues below `floor` up to it.
Mat clip_spectrum_below(const Mat& a, double floor) {
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a));
    if (es.eigenvalues()(0) >= floor) return symmetrize(a);
    const Vec lam = es.eigenvalues().cwiseMax(floor);
    return symmetrize(es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose());
}

struct StageObjective {
    const StageSdpProblem& problem;
    Mat offset;

    StageEvaluation operator()(const Mat& stacked) const {
        const Eigen::Index nx = problem.nx(), ny = problem.ny();
        const Mat& C = problem.C;
        StageEvaluation ev;
        const auto first = stacked.topLeftCorner(nx, nx);
        const auto cross = stacked.topRightCorner(nx, ny);
        const auto meas = stacked.bottomRightCorner(ny, ny);

        ev.prior_cov = symmetrize(offset + first);
        ev.T = ev.prior_cov * C.transpose() + cross;
        Mat cw = C * cross;
        ev.S = symmetrize(C * ev.prior_cov * C.transpose() + meas + cw + cw.transpose());
        Eigen::LLT<Mat> llt(ev.S);
        if (llt.info() != Eigen::Success) throw Error("stage SDP: innovation covariance is not positive definite");
        ev.gain = llt.solve(ev.T.transpose()).transpose();
        ev.posterior_cov = symmetrize(ev.prior_cov - ev.gain * ev.T.transpose());
        ev.objective = ev.posterior_cov.trace();

        Mat g(nx, nx + ny);
        g.leftCols(nx) = Mat::Identity(nx, nx) - ev.gain * C;
        g.rightCols(ny) = -ev.gain;
        ev.gradient = symmetrize(g.transpose() * g);
        return ev;
    }
};

StageSdpSolution assemble(const StageSdpProblem& problem, const Mat& stacked, const StageEvaluation& ev) {
    const Eigen::Index nx = problem.nx(), ny = problem.ny();
    StageSdpSolution sol;
    sol.prior_cov = ev.prior_cov;
    sol.posterior_cov = ev.posterior_cov;
    sol.first_cov = stacked.topLeftCorner(nx, nx);
    sol.meas_cov = stacked.bottomRightCorner(ny, ny);
    sol.cross_cov = stacked.topRightCorner(nx, ny);
    sol.coupling = bures_coupling(problem.nominal.cov(), stacked);
    sol.T = ev.T;
    sol.S = ev.S;
    sol.gain = ev.gain;
    sol.objective = ev.objective;
    return sol;
}

double feasibility_residual(const StageSdpProblem& problem, const Mat& stacked) {
    const double bures = bures_distance(stacked, problem.nominal.cov());
    const double floor_gap = problem.lambda_floor - min_eigenvalue(stacked);
    return std::max({0.0, bures - problem.radius, floor_gap});
}

// Largest eta in [0, 1] maximizing the concave objective along `dir`,
// located by bisection on the directional derivative.
double line_search(const StageObjective& objective, const Mat& point, const Mat& dir, double slope0) {
    if (!(slope0 > 0.0)) return 0.0;
    const StageEvaluation at_one = objective(point + dir);
    if (frob_inner(at_one.gradient, dir) >= 0.0) return 1.0;
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 60 && hi - lo > 1e-14; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double slope = frob_inner(objective(point + mid * dir).gradient, dir);
        (slope > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

Mat StageSdpProblem::prior_offset() const {
    if (is_initial) return Mat::Zero(nx(), nx());
    return symmetrize(A * carried_posterior * A.transpose());
}

Mat StageSdpSolution::stacked_cov() const {
    const Eigen::Index nx = first_cov.rows(), ny = meas_cov.rows();
    Mat out(nx + ny, nx + ny);
    out << first_cov, cross_cov, cross_cov.transpose(), meas_cov;
    return out;
}

StageSdpProblem build_stage_problem(const std::optional<Mat>& A, const Mat& C,
                                    const std::optional<PsdMatrixd>& carried_posterior,
                                    const NominalStackedNoise& nominal, double radius, bool is_initial) {
    const Eigen::Index nx = nominal.nx(), ny = nominal.ny();
    if (C.rows() != ny || C.cols() != nx) {
        throw DimensionError("build_stage_problem: C must be " + std::to_string(ny) + "x" + std::to_string(nx));
    }
    require_finite(C, "C");
    if (!std::isfinite(radius) || radius < 0.0) throw ConfigError("radius", "must be finite and nonnegative");

    StageSdpProblem p{is_initial, Mat(), C, Mat(), nominal, radius, nominal.lambda_min()};
    if (!is_initial) {
        if (!A || !carried_posterior) {
            throw DimensionError("build_stage_problem: stages t >= 1 need A and the carried posterior");
        }
        if (A->rows() != nx || A->cols() != nx || carried_posterior->dim() != nx) {
            throw DimensionError("build_stage_problem: A or carried posterior has the wrong size");
        }
        require_finite(*A, "A");
        p.A = *A;
        p.carried_posterior = carried_posterior->matrix();
    }
    return p;
}

StageEvaluation evaluate_stage(const StageSdpProblem& problem, const Mat& stacked_cov) {
    return StageObjective{problem, problem.prior_offset()}(stacked_cov);
}

Mat bures_linear_oracle(const Mat& center, const Mat& direction, double radius) {
    if (radius <= 0.0) return center;
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(direction));
    const Vec lam = es.eigenvalues().cwiseMax(0.0);
    const Eigen::Index n = lam.size();
    const double top = lam(n - 1);
    if (!(top > 0.0)) return center;

    const Mat& U = es.eigenvectors();
    const Vec weights = (U.transpose() * center * U).diagonal();
    // Squared Bures distance of the maximizer, written in the offset
    // s = gamma - top; strictly decreasing in s.
    auto excess = [&](double s) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double r = lam(i) / (s + top - lam(i));
            sum += r * r * weights(i);
        }
        return sum - radius * radius;
    };
    double lo = top * std::sqrt(std::max(weights(n - 1), 0.0)) / radius;
    double hi = top * std::sqrt(center.trace()) / radius;
    if (!(lo > 0.0)) lo = hi * 1e-12;
    for (int i = 0; i < 200 && hi > lo * (1.0 + 1e-15); ++i) {
        const double mid = std::sqrt(lo * hi);
        (excess(mid) > 0.0 ? lo : hi) = mid;
    }
    const double gamma = top + std::sqrt(lo * hi);
    const Vec scale = (gamma / (gamma - lam.array())).matrix();
    const Mat transport = U * scale.asDiagonal() * U.transpose();
    return symmetrize(transport * center * transport);
}

Mat bures_coupling(const Mat& nominal, const Mat& candidate) {
    const Mat root = sqrtm_psd(nominal);
    const Mat root_inv = root.llt().solve(Mat::Identity(root.rows(), root.cols()));
    const Mat middle = sqrtm_psd((root * candidate * root).eval());
    return root * middle * root_inv;
}

StageSdpSolution kalman_solution(const StageSdpProblem& problem) {
    const Mat stacked = problem.nominal.cov();
    const StageEvaluation ev = evaluate_stage(problem, stacked);
    StageSdpSolution sol = assemble(problem, stacked, ev);
    sol.coupling = stacked;
    sol.diagnostics.method = "kalman";
    return sol;
}

StageSdpSolution solve_stage_sdp(const StageSdpProblem& problem, const SolverOptions& options) {
    if (problem.radius == 0.0) return kalman_solution(problem);

    const StageObjective objective{problem, problem.prior_offset()};
    const Mat& center = problem.nominal.cov();
    Mat point = center;
    StageEvaluation ev = objective(point);

    int stall = 0, it = 0;
    double gap = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (; it < options.max_iters; ++it) {
        const Mat vertex = bures_linear_oracle(center, ev.gradient, problem.radius);
        const Mat dir = vertex - point;
        gap = std::max(0.0, frob_inner(ev.gradient, dir));
        const double scale = std::max(std::abs(ev.objective), 1e-12);
        if (gap <= options.tol_obj * scale) {
            converged = true;
            break;
        }
        const double eta = line_search(objective, point, dir, gap);
        if (eta <= 0.0) {
            converged = gap <= std::sqrt(options.tol_obj) * scale;
            break;
        }
        point = symmetrize(point + eta * dir);
        const double previous = ev.objective;
        ev = objective(point);
        const double change = std::abs(ev.objective - previous) / scale;
        stall = change < options.tol_obj ? stall + 1 : 0;
        if (stall >= options.stall_window && gap <= std::sqrt(options.tol_obj) * scale) {
            converged = true;
            ++it;
            break;
        }
    }

    point = clip_spectrum_below(point, problem.lambda_floor);
    ev = objective(point);
    StageSdpSolution sol = assemble(problem, point, ev);
    sol.diagnostics.method = "frank-wolfe";
    sol.diagnostics.iterations = it;
    sol.diagnostics.objective_gap = gap;
    sol.diagnostics.feasibility_residual = feasibility_residual(problem, point);
    if (!converged) {
        std::ostringstream msg;
        msg << "stage SDP: Frank-Wolfe did not reach tol_obj " << options.tol_obj << " in " << options.max_iters
            << " iterations (gap " << gap << ")";
        throw SdpConvergenceError(msg.str(), std::move(sol));
    }
    return sol;
}

StageSdpSolution solve_stage_sdp_interior_point(const StageSdpProblem& problem, double gap_tol) {
    if (!(problem.radius > 0.0)) {
        throw Error("interior-point stage solve needs a positive radius (no strictly feasible point otherwise)");
    }
    const Eigen::Index nx = problem.nx(), ny = problem.ny(), n = nx + ny;
    const Mat& C = problem.C;
    const Mat& center = problem.nominal.cov();
    const Mat offset = problem.prior_offset();

    // Variable layout: Sigma_x (symmetric), Sigma_eps (symmetric), Z (full).
    struct Entry {
        int index;
        Eigen::Index i, j;
    };
    std::vector<Entry> sx, se, zz;
    int next = 0;
    for (Eigen::Index j = 0; j < nx; ++j)
        for (Eigen::Index i = 0; i <= j; ++i) sx.push_back({next++, i, j});
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i <= j; ++i) se.push_back({next++, i, j});
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) zz.push_back({next++, i, j});

    auto sym_basis = [](Eigen::Index dim, Eigen::Index i, Eigen::Index j) {
        Mat e = Mat::Zero(dim, dim);
        e(i, j) = 1.0;
        e(j, i) = 1.0;
        return e;
    };

    LmiProgram prog;
    prog.cost = Vec::Zero(next);
    for (const auto& e : sx)
        if (e.i == e.j) prog.cost(e.index) = -1.0;

    // [[Sigma^- - Sigma_x, T], [T^T, S]] = J (P0 (+) 0 + Sigma_eps) J^T - (Sigma_x (+) 0).
    Mat J = Mat::Identity(n, n);
    J.bottomLeftCorner(ny, nx) = C;
    LmiBlock schur;
    schur.constant = J * block_diag(offset, Mat::Zero(ny, ny)) * J.transpose();
    for (const auto& e : sx) {
        Mat m = Mat::Zero(n, n);
        m.topLeftCorner(nx, nx) = -sym_basis(nx, e.i, e.j);
        schur.terms.emplace_back(e.index, m);
    }
    for (const auto& e : se) schur.terms.emplace_back(e.index, J * sym_basis(n, e.i, e.j) * J.transpose());

    // [[Sigma_hat, Z], [Z^T, Sigma_eps]] >= 0.
    LmiBlock coupling;
    coupling.constant = block_diag(center, Mat::Zero(n, n));
    for (const auto& e : zz) {
        Mat m = Mat::Zero(2 * n, 2 * n);
        m(e.i, n + e.j) = 1.0;
        m(n + e.j, e.i) = 1.0;
        coupling.terms.emplace_back(e.index, m);
    }
    for (const auto& e : se) {
        Mat m = Mat::Zero(2 * n, 2 * n);
        m.bottomRightCorner(n, n) = sym_basis(n, e.i, e.j);
        coupling.terms.emplace_back(e.index, m);
    }

    // theta^2 - Tr(Sigma_eps + Sigma_hat - 2 Z) >= 0.
    LmiBlock trace_budget;
    trace_budget.constant = Mat::Constant(1, 1, problem.radius * problem.radius - center.trace());
    for (const auto& e : se)
        if (e.i == e.j) trace_budget.terms.emplace_back(e.index, Mat::Constant(1, 1, -1.0));
    for (const auto& e : zz)
        if (e.i == e.j) trace_budget.terms.emplace_back(e.index, Mat::Constant(1, 1, 2.0));

    // Sigma_eps >= lambda_floor I.
    LmiBlock floor;
    floor.constant = -problem.lambda_floor * Mat::Identity(n, n);
    for (const auto& e : se) floor.terms.emplace_back(e.index, sym_basis(n, e.i, e.j));

    // Sigma_x >= 0.
    LmiBlock post_psd;
    post_psd.constant = Mat::Zero(nx, nx);
    for (const auto& e : sx) post_psd.terms.emplace_back(e.index, sym_basis(nx, e.i, e.j));

    prog.blocks = {std::move(schur), std::move(coupling), std::move(trace_budget), std::move(floor),
                   std::move(post_psd)};

    // Strictly feasible start around the nominal covariance.
    const double theta2 = problem.radius * problem.radius;
    const double tau = theta2 / (8.0 * double(n));
    const double shrink = std::max(0.0, 1.0 - theta2 / (8.0 * center.trace()));
    const Mat stacked0 = center + tau * Mat::Identity(n, n);
    const Mat z_coupling0 = shrink * center;
    const Mat post0 = 0.5 * evaluate_stage(problem, stacked0).posterior_cov;
    Vec z0(next);
    for (const auto& e : sx) z0(e.index) = post0(e.i, e.j);
    for (const auto& e : se) z0(e.index) = stacked0(e.i, e.j);
    for (const auto& e : zz) z0(e.index) = z_coupling0(e.i, e.j);

    BarrierOptions opts;
    opts.gap_tol = gap_tol;
    const BarrierResult res = solve_lmi_barrier(prog, z0, opts);

    Mat post(nx, nx), stacked(n, n), z(n, n);
    for (const auto& e : sx) post(e.i, e.j) = post(e.j, e.i) = res.z(e.index);
    for (const auto& e : se) stacked(e.i, e.j) = stacked(e.j, e.i) = res.z(e.index);
    for (const auto& e : zz) z(e.i, e.j) = res.z(e.index);

    const StageEvaluation ev = evaluate_stage(problem, stacked);
    StageSdpSolution sol = assemble(problem, stacked, ev);
    sol.posterior_cov = post;
    sol.coupling = z;
    sol.objective = post.trace();
    sol.diagnostics.method = "interior-point";
    sol.diagnostics.iterations = res.newton_steps;
    sol.diagnostics.objective_gap = res.gap_bound;
    sol.diagnostics.feasibility_residual = feasibility_residual(problem, stacked);
    if (!res.converged) throw SdpConvergenceError("stage SDP: interior-point solve did not converge", std::move(sol));
    return sol;
}

bool VerificationReport::ok() const {
    return std::none_of(constraints.begin(), constraints.end(), [](const auto& c) { return c.violated; });
}

std::string VerificationReport::violations() const {
    std::string out;
    for (const auto& c : constraints) {
        if (!c.violated) continue;
        if (!out.empty()) out += ", ";
        out += c.name;
    }
    return out;
}

VerificationReport verify_solution(const StageSdpProblem& problem, const StageSdpSolution& sol, double tol) {
    const Eigen::Index nx = problem.nx(), ny = problem.ny(), n = nx + ny;
    VerificationReport report;
    auto add = [&](std::string name, double residual) {
        if (!std::isfinite(residual)) residual = std::numeric_limits<double>::infinity();
        report.constraints.push_back({std::move(name), residual, residual > tol});
    };
    auto shape_ok = [&](const Mat& m, Eigen::Index r, Eigen::Index c) { return m.rows() == r && m.cols() == c; };
    if (!shape_ok(sol.prior_cov, nx, nx) || !shape_ok(sol.posterior_cov, nx, nx) || !shape_ok(sol.first_cov, nx, nx) ||
        !shape_ok(sol.meas_cov, ny, ny) || !shape_ok(sol.cross_cov, nx, ny) || !shape_ok(sol.coupling, n, n) ||
        !shape_ok(sol.T, nx, ny) || !shape_ok(sol.S, ny, ny) || !shape_ok(sol.gain, nx, ny)) {
        add("dimensions", std::numeric_limits<double>::infinity());
        return report;
    }

    const Mat& C = problem.C;
    const Mat stacked = sol.stacked_cov();
    const Mat& center = problem.nominal.cov();

    const Mat expected_prior = problem.prior_offset() + sol.first_cov;
    add(problem.is_initial ? "prior_is_first_block" : "propagation", (sol.prior_cov - expected_prior).norm());

    Mat cw = C * sol.cross_cov;
    add("T_definition", (sol.T - (sol.prior_cov * C.transpose() + sol.cross_cov)).norm());
    add("S_definition", (sol.S - (C * sol.prior_cov * C.transpose() + sol.meas_cov + cw + cw.transpose())).norm());

    Mat schur(n, n);
    schur << sol.prior_cov - sol.posterior_cov, sol.T, sol.T.transpose(), sol.S;
    add("schur_lmi", -min_eigenvalue(schur));

    Mat coupling(2 * n, 2 * n);
    coupling << center, sol.coupling, sol.coupling.transpose(), stacked;
    add("bures_lmi", -min_eigenvalue(coupling));
    add("bures_trace", (stacked + center - 2.0 * sol.coupling).trace() - problem.radius * problem.radius);
    add("eigen_floor", problem.lambda_floor - min_eigenvalue(stacked));
    add("stacked_psd", -min_eigenvalue(stacked));
    add("posterior_psd", -min_eigenvalue(sol.posterior_cov));
    add("S_positive_definite", -min_eigenvalue(sol.S));
    add("gain_identity", (sol.gain * sol.S - sol.T).norm());
    add("objective_trace", std::abs(sol.objective - sol.posterior_cov.trace()));
    report.objective = sol.posterior_cov.trace();
    return report;
}

}  // namespace drekf
