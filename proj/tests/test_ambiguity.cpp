#include "doctest.h"

#include "drekf/ambiguity.hpp"
#include "support.hpp"

using namespace drekf;

namespace {

NominalStackedNoise diagonal_noise(const Vec& first, const Vec& meas) {
    return NominalStackedNoise(Vec::Zero(first.size()), PsdMatrixd::diagonal(first), Vec::Zero(meas.size()),
                               PsdMatrixd::diagonal(meas));
}

NominalStackedNoise safe_nav_stage0() {
    return diagonal_noise(Eigen::Vector3d(0.01, 0.01, 0.001), Eigen::Vector4d(0.005, 0.005, 0.005, 0.0075));
}

}  // namespace

TEST_CASE("nominal stacked noise layout") {
    auto n = safe_nav_stage0();
    CHECK(n.nx() == 3);
    CHECK(n.ny() == 4);
    CHECK(n.cov().topRightCorner(3, 4).isZero(0.0));
    CHECK(n.lambda_min() == doctest::Approx(0.001));
    CHECK_THROWS_AS(diagonal_noise(Eigen::Vector2d(1.0, 0.0), Vec::Ones(1)), NotPsdError);
}

TEST_CASE("prior_moment_bound at the initial stage") {
    auto pmb = prior_moment_bound(0.0, 0.0, safe_nav_stage0(), 0.25, CurvatureConstants{0.3, 0.5}, true);
    CHECK(pmb.gamma == doctest::Approx(std::sqrt(0.021) + 0.25).epsilon(1e-12));
    CHECK(pmb.gamma == doctest::Approx(0.394914).epsilon(1e-6));
    CHECK(pmb.eta_f == 0.0);
}

TEST_CASE("prior_moment_bound for later stages") {
    CurvatureConstants flat{0.0, 0.0};
    auto zero_w = diagonal_noise(Vec::Constant(1, 1e-300), Vec::Ones(1));
    auto pmb = prior_moment_bound(5.0, 1.0, zero_w, 0.0, flat, false);
    CHECK(pmb.gamma == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(pmb.eta_f == 0.0);

    auto unit_w = diagonal_noise(Vec::Ones(1), Vec::Ones(1));
    CurvatureConstants curved{0.3, 0.0};
    pmb = prior_moment_bound(1.0, 1.0, unit_w, 0.1, curved, false);
    CHECK(pmb.eta_f == doctest::Approx(0.15 * std::sqrt(3.0)).epsilon(1e-12));
    CHECK(pmb.gamma == doctest::Approx(2.1 + 0.15 * std::sqrt(3.0)).epsilon(1e-12));
    CHECK(pmb.gamma == doctest::Approx(2.359808).epsilon(1e-6));

    CHECK_THROWS_AS(prior_moment_bound(-1.0, 1.0, unit_w, 0.1, curved, false), ConfigError);
    CHECK_THROWS_AS(prior_moment_bound(1.0, 1.0, unit_w, -0.1, curved, false), ConfigError);
}

TEST_CASE("effective_radius examples") {
    CHECK(effective_radius(3.0, 0.0, 0.4, CurvatureConstants{0.0, 0.0}).effective == 0.4);
    CHECK(effective_radius(0.0, 0.0, 0.0, CurvatureConstants{0.3, 0.5}).effective == 0.0);

    const double gamma0 = std::sqrt(0.021) + 0.25;
    auto r = effective_radius(gamma0, 0.0, 0.25, CurvatureConstants{0.3, 0.5});
    CHECK(r.residual_h == doctest::Approx(0.25 * std::sqrt(3.0) * gamma0 * gamma0).epsilon(1e-12));
    CHECK(r.residual_h == doctest::Approx(0.067529).epsilon(1e-5));
    CHECK(std::abs(r.effective - 0.3175) <= 1e-4);
    CHECK(r.effective == doctest::Approx(0.25 + 0.25 * std::sqrt(3.0) * gamma0 * gamma0).epsilon(1e-12));
    CHECK(r.effective == doctest::Approx(r.nominal + std::hypot(r.residual_f, r.residual_h)));

    CHECK_THROWS_AS(effective_radius(-1.0, 0.0, 0.1, {}), ConfigError);
    CHECK_THROWS_AS(effective_radius(1.0, 0.0, 0.1, CurvatureConstants{-0.1, 0.0}), ConfigError);
}

TEST_CASE("effective_radius is monotone in every input") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const double g = testing::uniform(rng, 0, 3), e = testing::uniform(rng, 0, 2), th = testing::uniform(rng, 0, 1);
        CurvatureConstants c{testing::uniform(rng, 0, 1), testing::uniform(rng, 0, 1)};
        const double base = effective_radius(g, e, th, c).effective;
        CHECK(base >= th);
        const double bump = testing::uniform(rng, 0.0, 0.5);
        CHECK(effective_radius(g + bump, e, th, c).effective >= base);
        CHECK(effective_radius(g, e + bump, th, c).effective >= base);
        CHECK(effective_radius(g, e, th + bump, c).effective >= base);
        CHECK(effective_radius(g, e, th, CurvatureConstants{c.L_f + bump, c.L_h}).effective >= base);
        CHECK(effective_radius(g, e, th, CurvatureConstants{c.L_f, c.L_h + bump}).effective >= base);
    }
}

TEST_CASE("zero curvature keeps the nominal radius at every stage") {
    CurvatureConstants flat{0.0, 0.0};
    auto noise = diagonal_noise(Vec::Ones(2), Vec::Ones(1));
    double v = 0.0;
    for (int t = 0; t < 10; ++t) {
        auto pmb = prior_moment_bound(v, 1.3, noise, 0.2, flat, t == 0);
        auto r = effective_radius(pmb.gamma, pmb.eta_f, 0.2, flat);
        CHECK(r.effective == 0.2);
        v = pmb.gamma;
    }
}

TEST_CASE("wasserstein_feasibility_check") {
    auto nominal = diagonal_noise(Vec::Ones(1), Vec::Ones(1));
    CHECK(wasserstein_feasibility_check(nominal.law(), nominal, 0.0, 1e-9));

    // Only the first coordinate moves: B(diag(4, 1), diag(1, 1)) = |2 - 1|.
    GaussianLawd candidate(Vec::Zero(2), PsdMatrixd::diagonal(Eigen::Vector2d(4.0, 1.0)));
    CHECK(wasserstein_feasibility_check(candidate, nominal, 1.0, 1e-9));
    CHECK_FALSE(wasserstein_feasibility_check(candidate, nominal, 0.5, 1e-9));

    Mat bumped = nominal.cov();
    for (double delta : {1e-3, 1e-1, 1.0}) {
        GaussianLawd c(Vec::Zero(2), PsdMatrixd(bumped + delta * Mat::Identity(2, 2)));
        CHECK_FALSE(wasserstein_feasibility_check(c, nominal, 0.0, 1e-9));
    }
    GaussianLawd wrong(Vec::Zero(3), PsdMatrixd::identity(3));
    CHECK_THROWS_AS(wasserstein_feasibility_check(wrong, nominal, 1.0, 1e-9), DimensionError);
}

TEST_CASE("select_radius picks the smallest score and the earliest tie") {
    std::vector<double> grid{0.0, 0.1, 0.2, 0.3};
    auto sel = select_radius(grid, [](double th) { return (th - 0.2) * (th - 0.2); });
    CHECK(sel.theta == 0.2);
    CHECK(sel.scores.size() == 4);
    sel = select_radius(grid, [](double) { return 1.0; });
    CHECK(sel.theta == 0.0);
    CHECK_THROWS_AS(select_radius(std::vector<double>{}, [](double) { return 0.0; }), ConfigError);
}
