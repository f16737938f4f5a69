#include "doctest.h"

#include <sstream>

#include "drekf/filter.hpp"
#include "drekf/scenario.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace drekf;

namespace {

struct AffineCase {
    Mat A, B, C;
    NoiseModel noise;
};

AffineCase random_affine(std::mt19937_64& rng, int nx, int ny) {
    AffineCase c;
    c.A = testing::random_matrix(rng, nx, nx) / std::sqrt(double(nx));
    c.B = Mat::Zero(nx, 1);
    c.C = testing::random_matrix(rng, ny, nx);
    c.noise = NoiseModel::zero_mean(testing::random_vector(rng, nx), PsdMatrixd(testing::random_spd(rng, nx)),
                                    PsdMatrixd(testing::random_spd(rng, nx, 0.2)),
                                    PsdMatrixd(testing::random_spd(rng, ny, 0.2)));
    return c;
}

std::vector<Vec> measurements(std::mt19937_64& rng, int ny, int T) {
    std::vector<Vec> ys;
    for (int t = 0; t < T; ++t) ys.push_back(testing::random_vector(rng, ny));
    return ys;
}

double oracle_norm(const Mat& m) { return Eigen::JacobiSVD<Mat>(m).singularValues()(0); }

ScenarioConfig repo_config(const std::string& name) {
    return parse_config(load_config_file(std::string(DREKF_SOURCE_DIR) + "/configs/" + name));
}

}  // namespace

TEST_CASE("DR-EKF initial state") {
    std::mt19937_64 rng(1);
    auto c = random_affine(rng, 2, 1);
    LinearSystem sys(c.A, c.B, c.C);
    DrEkf f(sys, c.noise, {0.1});
    CHECK(f.stage() == 0);
    CHECK(f.rho_prior() == 0.0);
    CHECK(f.eta_f_prev() == 0.0);
    CHECK(f.prior_mean() == c.noise.x0_mean);

    DrEkfOptions strict;
    strict.mode = EnvelopeMode::strict;
    CHECK_THROWS_AS(DrEkf(sys, c.noise, {0.1}, strict), ConfigError);
    CHECK_THROWS_AS(DrEkf(sys, c.noise, {}), ConfigError);
    CHECK_THROWS_AS(DrEkf(sys, c.noise, {-0.1}), ConfigError);
}

TEST_CASE("affine system with zero radius reduces to the Kalman filter") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        const int nx = 1 + trial % 4, ny = 1 + trial % 3;
        auto c = random_affine(rng, nx, ny);
        LinearSystem sys(c.A, c.B, c.C);
        DrEkf dr(sys, c.noise, {0.0});
        Ekf ekf(sys, c.noise);

        Vec mean = c.noise.x0_mean;
        Mat P = c.noise.x0_cov.matrix();
        const Vec u = Vec::Zero(1);
        for (const Vec& y : measurements(rng, ny, 15)) {
            const auto& rd = dr.step(y, u);
            const auto& re = ekf.step(y, u);
            // textbook update, then propagate
            const Mat S = c.C * P * c.C.transpose() + c.noise.v_cov.matrix();
            const Mat K = P * c.C.transpose() * S.inverse();
            const Vec post = mean + K * (y - c.C * mean);
            const Mat Ppost = P - K * S * K.transpose();
            CHECK((rd.state.posterior_mean - post).norm() <= 1e-8);
            CHECK((rd.state.posterior_cov - Ppost).norm() <= 1e-8);
            CHECK((re.state.posterior_mean - post).norm() <= 1e-10 * std::max(1.0, post.norm()));
            CHECK((re.state.posterior_cov - Ppost).norm() <= 1e-10 * std::max(1.0, Ppost.norm()));
            CHECK((rd.state.posterior_mean - re.state.posterior_mean).norm() <= 1e-8);
            CHECK((rd.state.posterior_cov - re.state.posterior_cov).norm() <= 1e-8);
            CHECK(rd.state.posterior_cov.trace() <= rd.state.prior_cov.trace() + 1e-12);
            mean = c.A * post;
            P = c.A * Ppost * c.A.transpose() + c.noise.w_cov.matrix();
        }
    }
}

TEST_CASE("zero curvature keeps rho at zero") {
    std::mt19937_64 rng(3);
    auto c = random_affine(rng, 3, 2);
    LinearSystem sys(c.A, c.B, c.C);
    DrEkf dr(sys, c.noise, {0.2});
    for (const Vec& y : measurements(rng, 2, 10)) {
        const auto& rec = dr.step(y, Vec::Zero(1));
        CHECK(rec.certificate.rho == 0.0);
        CHECK(rec.certificate.v_bar == rec.certificate.s_bar);
        CHECK(rec.certificate.theta_eff == 0.2);
    }
}

TEST_CASE("surrogate envelope recursion term by term") {
    std::mt19937_64 rng(4);
    auto c = random_affine(rng, 3, 2);
    LinearSystem sys(c.A, c.B, c.C);
    CurvatureConstants curved{0.05, 0.05};
    sys.set_curvature(curved);
    const double theta = 0.15;
    DrEkf dr(sys, c.noise, {theta});
    const double rw = std::sqrt(c.noise.w_cov.trace()), rv = std::sqrt(c.noise.v_cov.trace());
    double s_prev = 0.0, a_prev = 0.0, rho_prior = 0.0;
    for (const Vec& y : measurements(rng, 2, 8)) {
        const int t = dr.stage();
        const auto& rec = dr.step(y, Vec::Zero(1));
        const auto& cs = rec.certificate;
        const Mat I = Mat::Identity(3, 3);
        CHECK(cs.m == doctest::Approx(oracle_norm(I - rec.gain * c.C)));
        CHECK(cs.k == doctest::Approx(oracle_norm(rec.gain)));
        const double carried = t == 0 ? std::sqrt(c.noise.x0_cov.trace()) : a_prev * s_prev + rw;
        const double expected = cs.m * carried + cs.k * rv + (cs.m + cs.k) * theta;
        CHECK(cs.s_bar == doctest::Approx(expected).epsilon(1e-12));
        CHECK(cs.rho_prior == doctest::Approx(rho_prior).epsilon(1e-12));
        CHECK(cs.rho == doctest::Approx(cs.m * rho_prior + cs.k * cs.eta_h).epsilon(1e-12));
        CHECK(cs.v_bar == cs.s_bar + cs.rho);
        CHECK(cs.a == doctest::Approx(oracle_norm(c.A)));
        rho_prior = cs.a * cs.rho + cs.eta_f;
        s_prev = cs.s_bar;
        a_prev = cs.a;
    }
}

TEST_CASE("strict envelopes are used verbatim and hold their last value") {
    std::mt19937_64 rng(5);
    auto c = random_affine(rng, 2, 1);
    LinearSystem sys(c.A, c.B, c.C);
    DrEkfOptions opts;
    opts.mode = EnvelopeMode::strict;
    opts.envelopes = {{1.5, 1.2}, {0.9}, {0.7, 0.6, 0.5}};
    DrEkf dr(sys, c.noise, {0.1}, opts);
    std::vector<double> a, m, k;
    for (const Vec& y : measurements(rng, 1, 5)) {
        const auto& cs = dr.step(y, Vec::Zero(1)).certificate;
        a.push_back(cs.a);
        m.push_back(cs.m);
        k.push_back(cs.k);
        CHECK(cs.v_radius == cs.v_bar);
    }
    CHECK(a == std::vector<double>{1.5, 1.2, 1.2, 1.2, 1.2});
    CHECK(m == std::vector<double>(5, 0.9));
    CHECK(k == std::vector<double>{0.7, 0.6, 0.5, 0.5, 0.5});
}

TEST_CASE("CT stage-0 effective radius") {
    auto cfg = repo_config("ct_tracking.json");
    auto sys = cfg.make_system();
    DrEkf dr(*sys, cfg.nominal, cfg.theta);
    Vec y(2);
    y << 1.0, 0.0;
    const auto& cs = dr.update(y).certificate;
    const double tr = 0.1 * (0.04 * 2 + 0.25 * 2 + 0.0025);
    const double gamma0 = std::sqrt(tr) + 0.001;
    CHECK(cs.gamma == doctest::Approx(gamma0).epsilon(1e-12));
    CHECK(cs.gamma == doctest::Approx(0.242354).epsilon(1e-5));
    CHECK(cs.theta_eff == doctest::Approx(0.001 + 0.1 * std::sqrt(3.0) * gamma0 * gamma0).epsilon(1e-12));
    CHECK(std::abs(cs.theta_eff - 0.011172) <= 1e-4);
}

TEST_CASE("safe-nav stage-0 effective radius") {
    auto cfg = repo_config("safe_nav.json");
    auto sys = cfg.make_system();
    DrEkf dr(*sys, cfg.nominal, cfg.theta);
    const auto& cs = dr.update(sys->h(cfg.truth.x0_mean)).certificate;
    const double g = std::sqrt(0.021) + 0.25;
    CHECK(cs.theta_eff == doctest::Approx(0.25 + 0.25 * std::sqrt(3.0) * g * g).epsilon(1e-12));
    CHECK(std::abs(cs.theta_eff - 0.3175) <= 1e-4);
}

TEST_CASE("DR-EKF traces are bit-identical across reruns") {
    auto cfg = repo_config("ct_tracking.json");
    auto sys = cfg.make_system();
    std::mt19937_64 rng(6);
    const auto ys = measurements(rng, 2, 6);
    auto run = [&] {
        DrEkf dr(*sys, cfg.nominal, cfg.theta);
        for (Vec y : ys) {
            y(0) += 10.0;
            dr.step(y, Vec(0));
        }
        std::ostringstream os;
        dr.trace().write_jsonl(os);
        return os.str();
    };
    const std::string first = run();
    CHECK(first == run());
    CHECK(std::count(first.begin(), first.end(), '\n') == 6);
}

TEST_CASE("EKF without noise tracks an exact model") {
    Mat A(2, 2);
    A << 1.0, 0.1, 0.0, 1.0;
    LinearSystem sys(A, Mat::Zero(2, 1), Mat::Identity(2, 2));
    Vec x(2);
    x << 1.0, -0.5;
    auto zero = PsdMatrixd(Mat::Zero(2, 2));
    Ekf ekf(sys, NoiseModel::zero_mean(x, zero, zero, zero));
    for (int t = 0; t < 20; ++t) {
        const auto& rec = ekf.step(sys.h(x), Vec::Zero(1));
        CHECK((rec.state.posterior_mean - x).norm() <= 1e-12);
        x = sys.f(x, Vec::Zero(1));
    }
}

TEST_CASE("filters enforce update/predict order") {
    std::mt19937_64 rng(7);
    auto c = random_affine(rng, 2, 1);
    LinearSystem sys(c.A, c.B, c.C);
    DrEkf dr(sys, c.noise, {0.1});
    CHECK_THROWS_AS(dr.predict(Vec::Zero(1)), Error);
    CHECK_THROWS_AS(dr.posterior_mean(), Error);
    dr.update(Vec::Zero(1));
    CHECK_THROWS_AS(dr.update(Vec::Zero(1)), Error);
    CHECK_THROWS_AS(dr.update(Vec::Zero(2)), Error);
    Ekf ekf(sys, c.noise);
    CHECK_THROWS_AS(ekf.predict(Vec::Zero(1)), Error);
}

TEST_CASE("operating region leaves are flagged, not fatal") {
    std::mt19937_64 rng(8);
    auto c = random_affine(rng, 2, 1);
    LinearSystem sys(c.A, c.B, c.C);
    sys.set_operating_region(Box{Vec::Constant(2, -1e-3), Vec::Constant(2, 1e-3)});
    DrEkf dr(sys, c.noise, {0.1});
    Vec y = Vec::Constant(1, 50.0);
    dr.step(y, Vec::Zero(1));
    CHECK(dr.trace().left_region());
}

TEST_CASE("certificate_audit") {
    CHECK(certificate_audit({}, {}, {}).stages.empty());

    CertificateState cs;
    cs.mode = EnvelopeMode::strict;
    cs.v_bar = 1.0;
    cs.gamma = 2.0;
    std::vector<std::vector<Vec>> post{{Vec::Constant(1, 0.5), Vec::Constant(1, 1.5)}};
    std::vector<std::vector<Vec>> prior{{Vec::Constant(1, 1.0), Vec::Constant(1, 2.5)}};
    auto audit = certificate_audit({cs, cs}, post, prior);
    REQUIRE(audit.stages.size() == 2);
    CHECK_FALSE(audit.stages[0].posterior_violated);
    CHECK(audit.stages[1].posterior_violated);
    CHECK(audit.stages[1].prior_violated);
    CHECK(audit.violations() == 2);
    CHECK(audit.label() == "strict envelopes");

    std::vector<std::vector<Vec>> short_run{{Vec::Constant(1, 0.5)}};
    CHECK_THROWS_AS(certificate_audit({cs, cs}, short_run, short_run), DimensionError);
}
