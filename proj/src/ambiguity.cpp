#include "drekf/ambiguity.hpp"

#include <limits>
#include <string>

namespace drekf {
namespace {

void require_nonnegative(double value, const char* name) {
    if (!std::isfinite(value) || value < 0.0) {
        throw ConfigError(name, "must be finite and nonnegative, got " + std::to_string(value));
    }
}

}  // namespace

void CurvatureConstants::validate() const {
    require_nonnegative(L_f, "L_f");
    require_nonnegative(L_h, "L_h");
    require_nonnegative(alpha_f, "alpha_f");
    require_nonnegative(alpha_h, "alpha_h");
}

NominalStackedNoise::NominalStackedNoise(const Vec& first_mean, const PsdMatrixd& first_cov, const Vec& meas_mean,
                                         const PsdMatrixd& meas_cov)
    : nx_(first_cov.dim()),
      law_([&] {
          if (first_mean.size() != first_cov.dim() || meas_mean.size() != meas_cov.dim()) {
              throw DimensionError("nominal stacked noise: mean and covariance sizes differ");
          }
          Vec mean(first_mean.size() + meas_mean.size());
          mean << first_mean, meas_mean;
          return GaussianLawd(mean, PsdMatrixd(block_diag(first_cov.matrix(), meas_cov.matrix())));
      }()),
      lambda_min_(min_eigenvalue(law_.cov().matrix())) {
    if (!(lambda_min_ > 0.0)) {
        throw NotPsdError("nominal stacked covariance must be positive definite");
    }
}

PriorMomentBound prior_moment_bound(double prev_posterior_bound, double envelope_a_prev,
                                    const NominalStackedNoise& nominal, double theta,
                                    const CurvatureConstants& curvature, bool is_initial) {
    require_nonnegative(theta, "theta");
    curvature.validate();
    const double root_trace = std::sqrt(nominal.first_cov().trace());
    if (is_initial) return {root_trace + theta, 0.0};

    require_nonnegative(prev_posterior_bound, "posterior bound");
    require_nonnegative(envelope_a_prev, "envelope a");
    const double eta_f = 0.5 * curvature.L_f * curvature.alpha_f * prev_posterior_bound * prev_posterior_bound;
    return {envelope_a_prev * prev_posterior_bound + root_trace + theta + eta_f, eta_f};
}

AmbiguityRadius effective_radius(double gamma, double eta_f, double theta, const CurvatureConstants& curvature) {
    require_nonnegative(gamma, "gamma");
    require_nonnegative(eta_f, "eta_f");
    require_nonnegative(theta, "theta");
    curvature.validate();
    AmbiguityRadius r;
    r.nominal = theta;
    r.residual_f = eta_f;
    r.residual_h = 0.5 * curvature.L_h * curvature.alpha_h * gamma * gamma;
    r.effective = theta + std::hypot(r.residual_f, r.residual_h);
    return r;
}

bool wasserstein_feasibility_check(const GaussianLawd& candidate, const NominalStackedNoise& nominal,
                                   double radius, double tol) {
    if (candidate.dim() != nominal.dim()) {
        throw DimensionError("wasserstein_feasibility_check: candidate has dimension " +
                             std::to_string(candidate.dim()) + ", nominal has " + std::to_string(nominal.dim()));
    }
    return gelbrich_distance(candidate, nominal.law()) <= radius + tol;
}

RadiusSelection select_radius(std::span<const double> grid, const std::function<double(double)>& score) {
    if (grid.empty()) throw ConfigError("theta grid", "validation grid is empty");
    RadiusSelection out;
    out.score = std::numeric_limits<double>::infinity();
    for (double theta : grid) {
        require_nonnegative(theta, "theta grid entry");
        const double s = score(theta);
        out.scores.push_back(s);
        if (s < out.score) {
            out.score = s;
            out.theta = theta;
        }
    }
    return out;
}

}  // namespace drekf
