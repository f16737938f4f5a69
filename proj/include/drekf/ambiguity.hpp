#pragma once

// Stage-wise Wasserstein ambiguity sets over the stacked noise
// eps_t = [w_{t-1}; v_t] (or [x_0; v_0] at t = 0) and the computable radius
// enlargement that absorbs linearization residuals.
//
// The oracle residual radii eta^f, eta^h and the oracle effective radius are
// functions of the unknown true error moments. They are never computed here;
// only their computable upper bounds (bar-eta, bar-theta) are.

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "drekf/psd.hpp"

namespace drekf {

inline const double kSqrt3 = std::sqrt(3.0);

/// Local curvature (Lipschitz constants of the Jacobians) and fourth-moment
/// constants.
struct CurvatureConstants {
    double L_f = 0.0;
    double L_h = 0.0;
    double alpha_f = kSqrt3;
    double alpha_h = kSqrt3;

    /// Throws ConfigError on negative or non-finite entries.
    void validate() const;
};

/// Nominal Gaussian law of the stacked noise. Block-diagonal covariance with
/// blocks (first, measurement); the first block is the process noise for
/// t >= 1 and the initial-state prior for t = 0.
class NominalStackedNoise {
public:
    NominalStackedNoise(const Vec& first_mean, const PsdMatrixd& first_cov, const Vec& meas_mean,
                        const PsdMatrixd& meas_cov);

    Eigen::Index nx() const { return nx_; }
    Eigen::Index ny() const { return law_.dim() - nx_; }
    Eigen::Index dim() const { return law_.dim(); }

    const GaussianLawd& law() const { return law_; }
    const Mat& cov() const { return law_.cov().matrix(); }
    const Vec& mean() const { return law_.mean(); }

    auto first_cov() const { return cov().topLeftCorner(nx_, nx_); }
    auto meas_cov() const { return cov().bottomRightCorner(ny(), ny()); }
    auto first_mean() const { return mean().head(nx_); }
    auto meas_mean() const { return mean().tail(ny()); }

    /// lambda_min of the stacked covariance (> 0).
    double lambda_min() const { return lambda_min_; }

private:
    Eigen::Index nx_;
    GaussianLawd law_;
    double lambda_min_;
};

/// Nominal radius, its residual enlargements and the effective radius
/// theta + sqrt(eta_f^2 + eta_h^2).
struct AmbiguityRadius {
    double nominal = 0.0;
    double residual_f = 0.0;
    double residual_h = 0.0;
    double effective = 0.0;
};

struct PriorMomentBound {
    double gamma = 0.0;  ///< bound on sqrt(E||e_t^-||^2)
    double eta_f = 0.0;  ///< process-side residual bound carried from t-1
};

/// gamma_t and bar-eta^f_{t-1}. With `is_initial` the posterior bound and the
/// envelope are ignored and gamma_0 = sqrt(Tr Sigma_x0) + theta.
PriorMomentBound prior_moment_bound(double prev_posterior_bound, double envelope_a_prev,
                                    const NominalStackedNoise& nominal, double theta,
                                    const CurvatureConstants& curvature, bool is_initial);

/// Effective radius with bar-eta^h_t = (L_h / 2) alpha_h gamma_t^2.
AmbiguityRadius effective_radius(double gamma, double eta_f, double theta, const CurvatureConstants& curvature);

/// Exact membership of a Gaussian candidate in the ball of the given radius.
bool wasserstein_feasibility_check(const GaussianLawd& candidate, const NominalStackedNoise& nominal,
                                   double radius, double tol);

struct RadiusSelection {
    double theta = 0.0;
    double score = 0.0;
    std::vector<double> scores;  ///< one per grid value, in grid order
};

/// Picks the radius with the smallest validation score (time-averaged MSE over
/// seeds) from a caller-supplied grid. Ties resolve to the earliest entry.
RadiusSelection select_radius(std::span<const double> grid, const std::function<double(double)>& score);

}  // namespace drekf
