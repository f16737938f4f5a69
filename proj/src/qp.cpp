#include "drekf/qp.hpp"

#include <algorithm>
#include <limits>

namespace drekf {
namespace {

// Largest step in (0, 1] keeping v + a dv > 0.
double max_step(const Vec& v, const Vec& dv) {
    double a = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
    }
    return a;
}

}  // namespace

QpResult solve_qp(const QpProblem& p, const QpOptions& options) {
    const Eigen::Index n = p.c.size(), m = p.h.size();
    if (p.H.rows() != n || p.H.cols() != n || p.G.rows() != m || (m > 0 && p.G.cols() != n)) {
        throw DimensionError("solve_qp: inconsistent problem dimensions");
    }
    QpResult res;
    res.x = Vec::Zero(n);
    if (m == 0) {
        res.x = p.H.ldlt().solve(-p.c);
        res.converged = true;
        res.objective = 0.5 * res.x.dot(p.H * res.x) + p.c.dot(res.x);
        return res;
    }

    Vec s = (p.h - p.G * res.x).cwiseMax(1.0);
    Vec z = Vec::Ones(m);
    const double scale = 1.0 + std::max(p.c.lpNorm<Eigen::Infinity>(), p.h.lpNorm<Eigen::Infinity>());

    for (int it = 0; it < options.max_iters; ++it) {
        res.iterations = it + 1;
        const Vec r_d = p.H * res.x + p.c + p.G.transpose() * z;
        const Vec r_p = p.G * res.x + s - p.h;
        const double mu = s.dot(z) / double(m);
        if (r_d.lpNorm<Eigen::Infinity>() < options.tol * scale && r_p.lpNorm<Eigen::Infinity>() < options.tol * scale &&
            mu < options.tol) {
            res.converged = true;
            break;
        }

        const Vec w = z.cwiseQuotient(s);
        const Mat M = p.H + p.G.transpose() * w.asDiagonal() * p.G;
        Eigen::LDLT<Mat> kkt(M);

        auto direction = [&](const Vec& r_c, Vec& dx, Vec& ds, Vec& dz) {
            const Vec rhs = -r_d - p.G.transpose() * ((z.cwiseProduct(r_p) - r_c).cwiseQuotient(s));
            dx = kkt.solve(rhs);
            ds = -r_p - p.G * dx;
            dz = (-r_c - z.cwiseProduct(ds)).cwiseQuotient(s);
        };

        Vec dx, ds, dz;
        direction(s.cwiseProduct(z), dx, ds, dz);
        const double a_aff = std::min(max_step(s, ds), max_step(z, dz));
        const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / double(m);
        const double sigma = std::pow(mu_aff / mu, 3);

        const Vec r_c = s.cwiseProduct(z) + ds.cwiseProduct(dz) - Vec::Constant(m, sigma * mu);
        direction(r_c, dx, ds, dz);
        const double a = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(z, dz)));
        res.x += a * dx;
        s += a * ds;
        z += a * dz;
        s = s.cwiseMax(std::numeric_limits<double>::min());
        z = z.cwiseMax(std::numeric_limits<double>::min());
    }
    res.z = z;
    res.objective = 0.5 * res.x.dot(p.H * res.x) + p.c.dot(res.x);
    return res;
}

}  // namespace drekf
