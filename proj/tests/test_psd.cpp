#include "doctest.h"

#include "drekf/psd.hpp"
#include "support.hpp"

using namespace drekf;
using testing::random_spd;

TEST_CASE("matrix_sqrt on trivial inputs") {
    CHECK(matrix_sqrt(PsdMatrixd::identity(3)).matrix().isApprox(Mat::Identity(3, 3), 1e-14));
    Vec d(2);
    d << 4.0, 9.0;
    Mat expected = Eigen::Vector2d(2.0, 3.0).asDiagonal();
    CHECK((matrix_sqrt(PsdMatrixd::diagonal(d)).matrix() - expected).norm() < 1e-14);
}

TEST_CASE("matrix_sqrt round trip on random SPD matrices") {
    std::mt19937_64 rng(7);
    for (int n = 1; n <= 12; ++n) {
        Mat a = random_spd(rng, n);
        Mat r = matrix_sqrt(PsdMatrixd(a)).matrix();
        CHECK((r - r.transpose()).norm() == 0.0);
        CHECK(min_eigenvalue(r) >= 0.0);
        CHECK((r * r - a).norm() / a.norm() <= 1e-10);
    }
}

TEST_CASE("matrix_sqrt rejects non-finite entries") {
    Mat a = Mat::Identity(2, 2);
    a(0, 1) = a(1, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(sqrtm_psd(a), NumericInputError);
}

TEST_CASE("PsdMatrix clamps rounding noise and rejects indefinite input") {
    Mat a = Mat::Identity(2, 2);
    a(1, 1) = -1e-12;
    PsdMatrixd p(a);
    CHECK(min_eigenvalue(p.matrix()) >= 0.0);

    a(1, 1) = -1e-3;
    CHECK_THROWS_AS(PsdMatrixd{a}, NotPsdError);

    Mat asym = Mat::Identity(2, 2);
    asym(0, 1) = 0.5;
    CHECK_THROWS_AS(PsdMatrixd{asym}, NotPsdError);
}

TEST_CASE("bures_distance examples") {
    std::mt19937_64 rng(11);
    Mat s = random_spd(rng, 4);
    CHECK(bures_distance(s, s) <= 1e-7);

    Mat four = Mat::Constant(1, 1, 4.0), one = Mat::Constant(1, 1, 1.0);
    CHECK(bures_distance(four, one) == doctest::Approx(1.0).epsilon(1e-14));

    for (int trial = 0; trial < 20; ++trial) {
        Vec a = testing::random_vector(rng, 5).cwiseAbs(), b = testing::random_vector(rng, 5).cwiseAbs();
        const double oracle = (a.cwiseSqrt() - b.cwiseSqrt()).norm();
        CHECK(bures_distance(Mat(a.asDiagonal()), Mat(b.asDiagonal())) == doctest::Approx(oracle).epsilon(1e-10));
    }
}

TEST_CASE("bures_distance is symmetric and matches the trace formula") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + trial % 6;
        Mat a = random_spd(rng, n), b = random_spd(rng, n);
        const double ab = bures_distance(a, b), ba = bures_distance(b, a);
        CHECK(std::abs(ab - ba) <= 1e-12);
        const double trace_form = std::sqrt(std::max(0.0, a.trace() + b.trace() - 2.0 * bures_fidelity(a, b)));
        CHECK(ab == doctest::Approx(trace_form).epsilon(1e-8));
    }
    CHECK_THROWS_AS(bures_distance(Mat::Identity(2, 2), Mat::Identity(3, 3)), DimensionError);
}

TEST_CASE("gelbrich_distance examples") {
    std::mt19937_64 rng(17);
    Mat s = random_spd(rng, 3);
    Vec m1 = testing::random_vector(rng, 3), m2 = testing::random_vector(rng, 3);
    CHECK(gelbrich_distance(GaussianLawd(m1, PsdMatrixd(s)), GaussianLawd(m1, PsdMatrixd(s))) < 1e-7);
    CHECK(gelbrich_distance(GaussianLawd(m1, PsdMatrixd(s)), GaussianLawd(m2, PsdMatrixd(s))) ==
          doctest::Approx((m1 - m2).norm()).epsilon(1e-7));

    GaussianLawd p(Vec::Zero(1), PsdMatrixd(Mat::Constant(1, 1, 4.0)));
    GaussianLawd q(Vec::Constant(1, 3.0), PsdMatrixd(Mat::Constant(1, 1, 1.0)));
    CHECK(gelbrich_distance(p, q) == doctest::Approx(std::sqrt(10.0)).epsilon(1e-14));

    GaussianLawd r(Vec::Zero(2), PsdMatrixd::identity(2));
    CHECK_THROWS_AS(gelbrich_distance(p, r), DimensionError);
}

TEST_CASE("gelbrich_distance satisfies the triangle inequality") {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + trial % 5;
        auto law = [&] { return GaussianLawd(testing::random_vector(rng, n), PsdMatrixd(random_spd(rng, n, 0.01))); };
        GaussianLawd a = law(), b = law(), c = law();
        CHECK(gelbrich_distance(a, c) <= gelbrich_distance(a, b) + gelbrich_distance(b, c) + 1e-9);
    }
}

TEST_CASE("schur_psd_check examples") {
    Mat i2 = Mat::Identity(2, 2);
    CHECK(schur_psd_check(i2, Mat::Zero(2, 2), i2, 1e-9));
    CHECK_FALSE(schur_psd_check(Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 2.0), Mat::Constant(1, 1, 1.0), 1e-9));
    CHECK_THROWS_AS(schur_psd_check(i2, Mat::Zero(3, 2), i2, 1e-9), DimensionError);

    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        Mat m = testing::random_matrix(rng, 5, 5);
        Mat full = m.transpose() * m;
        CHECK(schur_psd_check(full.topLeftCorner(2, 2), full.topRightCorner(2, 3), full.bottomRightCorner(3, 3), 1e-9));
    }
}

TEST_CASE("schur_psd_check agrees with the assembled eigenvalue test") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 100; ++trial) {
        Mat full = testing::random_spd(rng, 4, 0.0) - testing::uniform(rng, 0.0, 0.5) * Mat::Identity(4, 4);
        const bool direct = min_eigenvalue(full) >= -1e-9;
        CHECK(schur_psd_check(full.topLeftCorner(1, 1), full.topRightCorner(1, 3), full.bottomRightCorner(3, 3), 1e-9) ==
              direct);
    }
}

TEST_CASE("sample_gaussian") {
    std::mt19937_64 rng(31);
    Vec mean(2);
    mean << 1.5, -2.0;
    GaussianLawd degenerate(mean, PsdMatrixd(Mat::Zero(2, 2)));
    CHECK(sample_gaussian(degenerate, rng) == mean);

    GaussianLawd law(Vec::Zero(2), PsdMatrixd::diagonal(Eigen::Vector2d(2.0, 3.0)));
    const Mat root = sqrtm_psd(law.cov().matrix());
    const int n = 100000;
    Mat acc = Mat::Zero(2, 2);
    for (int i = 0; i < n; ++i) {
        Vec x = sample_with_root(law.mean(), root, rng);
        acc += x * x.transpose();
    }
    acc /= n;
    CHECK(acc(0, 0) == doctest::Approx(2.0).epsilon(0.05));
    CHECK(acc(1, 1) == doctest::Approx(3.0).epsilon(0.05));
    CHECK(std::abs(acc(0, 1)) < 0.05 * 2.0);

    std::mt19937_64 r1(5), r2(5);
    CHECK(sample_gaussian(law, r1) == sample_gaussian(law, r2));
}
