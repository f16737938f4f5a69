#pragma once

// Reference computations that do not go through the library's solvers.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Mat = Eigen::MatrixXd;

struct KalmanUpdate {
    Mat prior, posterior, gain;
};

/// Textbook covariance update: P- = A P A^T + Q, K = P- C^T (C P- C^T + R)^{-1}.
inline KalmanUpdate kalman(const Mat& A, const Mat& C, const Mat& P, const Mat& Q, const Mat& R) {
    KalmanUpdate k;
    k.prior = A * P * A.transpose() + Q;
    const Mat S = C * k.prior * C.transpose() + R;
    k.gain = k.prior * C.transpose() * S.inverse();
    k.posterior = k.prior - k.gain * S * k.gain.transpose();
    return k;
}

/// Tr of the square root of a 2x2 PSD matrix: sqrt(tr M + 2 sqrt(det M)).
inline double trace_sqrt_2x2(double m11, double m12, double m22) {
    const double det = std::max(0.0, m11 * m22 - m12 * m12);
    return std::sqrt(std::max(0.0, m11 + m22 + 2.0 * std::sqrt(det)));
}

/// Squared Bures distance between [[w, c], [c, v]] and diag(nw, nv).
inline double bures_sq_2x2(double w, double c, double v, double nw, double nv) {
    const double rw = std::sqrt(nw), rv = std::sqrt(nv);
    const double fid = trace_sqrt_2x2(rw * w * rw, rw * c * rv, rv * v * rv);
    return w + v + nw + nv - 2.0 * fid;
}

/// Scalar stage: x = a x + w, y = c x + v, carried posterior p, nominal
/// diag(q, r). Posterior variance at the stacked covariance [[w, s], [s, v]].
struct ScalarStage {
    double a = 1.0, c = 1.0, p = 1.0, q = 1.0, r = 1.0, theta = 0.0;

    double objective(double w, double s, double v) const {
        const double prior = a * a * p + w;
        const double t = prior * c + s;
        const double S = c * c * prior + v + 2.0 * c * s;
        return prior - t * t / S;
    }

    bool feasible(double w, double s, double v) const {
        const double floor = std::min(q, r);
        // [[w, s], [s, v]] >= floor I
        if (w < floor || v < floor || (w - floor) * (v - floor) < s * s) return false;
        return bures_sq_2x2(w, s, v, q, r) <= theta * theta;
    }
};

/// Dense 3-D grid search over (w, s, v) for the largest feasible posterior
/// variance. The box is re-centred on the incumbent and shrunk each level.
inline double scalar_grid_max(const ScalarStage& st, int points = 41, int levels = 14) {
    const double reach = (std::sqrt(std::max(st.q, st.r)) + st.theta);
    const double hi = reach * reach;
    std::array<double, 3> lo_box{std::min(st.q, st.r), -hi, std::min(st.q, st.r)};
    std::array<double, 3> hi_box{hi, hi, hi};
    double best = st.objective(st.q, 0.0, st.r);
    std::array<double, 3> arg{st.q, 0.0, st.r};
    for (int level = 0; level < levels; ++level) {
        std::array<double, 3> step;
        for (int d = 0; d < 3; ++d) step[d] = (hi_box[d] - lo_box[d]) / (points - 1);
        for (int i = 0; i < points; ++i) {
            const double w = lo_box[0] + i * step[0];
            for (int j = 0; j < points; ++j) {
                const double s = lo_box[1] + j * step[1];
                for (int k = 0; k < points; ++k) {
                    const double v = lo_box[2] + k * step[2];
                    if (!st.feasible(w, s, v)) continue;
                    const double f = st.objective(w, s, v);
                    if (f > best) {
                        best = f;
                        arg = {w, s, v};
                    }
                }
            }
        }
        for (int d = 0; d < 3; ++d) {
            const double half = 4.0 * step[d];
            lo_box[d] = arg[d] - half;
            hi_box[d] = arg[d] + half;
        }
    }
    return best;
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = 0.5 * double(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const std::vector<double> rx = ranks(x), ry = ranks(y);
    const double n = double(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace oracle
