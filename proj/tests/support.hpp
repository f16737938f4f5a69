#pragma once

#include <random>

#include "drekf/psd.hpp"

namespace testing {

using drekf::Mat;
using drekf::Vec;

inline Mat random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> n(0.0, 1.0);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
    return m;
}

inline Vec random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
    return scale * random_matrix(rng, n, 1);
}

/// G G^T / n + shift I.
inline Mat random_spd(std::mt19937_64& rng, Eigen::Index n, double shift = 0.1) {
    Mat g = random_matrix(rng, n, n);
    return drekf::symmetrize((g * g.transpose() / double(n) + shift * Mat::Identity(n, n)).eval());
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace testing

#include "drekf/stage_sdp.hpp"

namespace testing {

inline drekf::NominalStackedNoise zero_mean_noise(const Mat& first, const Mat& meas) {
    using drekf::PsdMatrixd;
    return drekf::NominalStackedNoise(Vec::Zero(first.rows()), PsdMatrixd(first), Vec::Zero(meas.rows()),
                                      PsdMatrixd(meas));
}

/// Random stage problem with well-conditioned nominal blocks.
inline drekf::StageSdpProblem random_stage_problem(std::mt19937_64& rng, int nx, int ny, double radius,
                                                   bool initial = false) {
    const Mat C = random_matrix(rng, ny, nx);
    auto noise = zero_mean_noise(random_spd(rng, nx, 0.2), random_spd(rng, ny, 0.2));
    if (initial) return drekf::build_stage_problem(std::nullopt, C, std::nullopt, noise, radius, true);
    const Mat A = random_matrix(rng, nx, nx) / std::sqrt(double(nx));
    return drekf::build_stage_problem(A, C, drekf::PsdMatrixd(random_spd(rng, nx)), noise, radius, false);
}

}  // namespace testing
