#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "drekf/engine.hpp"
#include "drekf/persist.hpp"

using namespace drekf;
namespace fs = std::filesystem;

namespace {

ScenarioConfig small(const std::string& id, int runs, int horizon) {
    Json doc = config_template(id);
    doc["runs"] = runs;
    doc["horizon"] = horizon;
    doc["seed"] = 77;
    return parse_config(doc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("drekf_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("noise draws depend only on seed and run index") {
    auto a = NoiseDraws::sample(5, 3, 2, 1, 10);
    auto b = NoiseDraws::sample(5, 3, 2, 1, 10);
    auto c = NoiseDraws::sample(5, 4, 2, 1, 10);
    CHECK(a.x0 == b.x0);
    CHECK(a.w.back() == b.w.back());
    CHECK(a.x0 != c.x0);
    REQUIRE(a.w.size() == 11);
    REQUIRE(a.v.size() == 11);

    // a longer horizon extends the stream without changing its prefix
    auto longer = NoiseDraws::sample(5, 3, 2, 1, 20);
    CHECK(longer.x0 == a.x0);
    CHECK(longer.v[0] == a.v[0]);
}

TEST_CASE("results do not depend on the job count or on later runs") {
    auto cfg = small("linear", 6, 15);
    EngineOptions one, many;
    one.jobs = 1;
    many.jobs = 4;
    auto r1 = run_scenario(cfg, one);
    auto r4 = run_scenario(cfg, many);
    CHECK(same_summary(r1.summary, r4.summary));

    auto more = cfg;
    more.runs = 9;
    auto r9 = run_scenario(more, one);
    for (int run = 0; run < 6; ++run) {
        for (std::size_t e = 0; e < r1.records[run].estimators.size(); ++e) {
            CHECK(r1.records[run].estimators[e].sq_error == r9.records[run].estimators[e].sq_error);
        }
    }
}

TEST_CASE("open-loop estimators share one truth trajectory") {
    auto cfg = small("ct", 2, 10);
    auto res = run_scenario(cfg);
    for (const auto& rec : res.records) {
        REQUIRE(rec.estimators.size() == 3);
        CHECK(rec.estimators[0].truth == rec.estimators[1].truth);
        CHECK(rec.estimators[0].truth == rec.estimators[2].truth);
        CHECK(rec.estimators[0].truth.size() == 11);
    }
}

TEST_CASE("zero radius and zero curvature make the DR-EKF an EKF") {
    Json doc = load_config_file(std::string(DREKF_SOURCE_DIR) + "/configs/ct_tracking.json");
    apply_override(doc, "runs=3");
    apply_override(doc, "horizon=20");
    apply_override(doc, "theta=0");
    apply_override(doc, "curvature.L_f=0");
    apply_override(doc, "curvature.L_h=0");
    auto res = run_scenario(parse_config(doc));
    const auto& dr = res.summary.at("drekf");
    const auto& ekf = res.summary.at("ekf_nominal");
    CHECK(dr.failures == 0);
    CHECK(std::abs(dr.mse_mean - ekf.mse_mean) <= 1e-6);
    CHECK(std::abs(dr.mse_std - ekf.mse_std) <= 1e-6);
}

TEST_CASE("noise-free linear stand-in has zero error") {
    Json doc = config_template("linear");
    for (const char* side : {"truth", "nominal"}) {
        doc[side]["x0_cov"] = Json::array({1e-30, 1e-30});
        doc[side]["w_cov"] = Json::array({1e-30, 1e-30});
        doc[side]["v_cov"] = Json::array({1e-30});
    }
    doc["theta"] = 0.0;
    doc["runs"] = 2;
    doc["horizon"] = 10;
    auto res = run_scenario(parse_config(doc));
    for (const auto& e : res.summary.estimators) CHECK(e.mse_mean <= 1e-20);
}

TEST_CASE("summary statistics") {
    auto cfg = small("linear", 5, 8);
    auto res = run_scenario(cfg);
    const auto& s = res.summary.at("ekf_true");
    CHECK(s.runs == 5);
    CHECK(s.failures == 0);
    CHECK(s.stages.size() == 9);
    std::vector<double> mse;
    for (const auto& rec : res.records) mse.push_back(rec.estimators[1].time_averaged_mse());
    double mean = 0.0;
    for (double m : mse) mean += m / 5.0;
    CHECK(s.mse_mean == doctest::Approx(mean).epsilon(1e-14));
    std::vector<double> sorted = mse;
    std::sort(sorted.begin(), sorted.end());
    CHECK(mse[std::size_t(s.median_run)] == sorted[2]);
    CHECK(std::isnan(s.stages[0].vbar_sq));
    CHECK_FALSE(std::isnan(res.summary.at("drekf").stages[0].vbar_sq));
    CHECK_THROWS(res.summary.at("ukf"));
}

TEST_CASE("safe navigation without obstacles never collides") {
    Json doc = config_template("safe_nav");
    doc["runs"] = 2;
    doc["horizon"] = 6;
    doc["mpc"]["obstacles"] = Json::array();
    auto res = run_scenario(parse_config(doc));
    for (const auto& e : res.summary.estimators) {
        CHECK(e.collision_rate == 0.0);
        CHECK(e.stages.size() == 7);
        CHECK(e.stages[0].delta_mean > 0.0);
    }
}

TEST_CASE("persist round-trips and is byte-stable") {
    auto cfg = small("linear", 3, 6);
    auto res = run_scenario(cfg);
    const fs::path a = scratch("a"), b = scratch("b");
    persist(res, cfg, a.string());
    persist(run_scenario(cfg), cfg, b.string());
    for (const char* f : {"summary.csv", "metrics.csv", "records.jsonl", "config.json"}) {
        CAPTURE(f);
        REQUIRE(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(slurp(a / "summary.csv").rfind(std::string(kSummaryHeader) + "\n", 0) == 0);
    CHECK(same_summary(load_summary(a.string()), res.summary));
    CHECK(to_json(parse_config(Json::parse(slurp(a / "config.json")))) == to_json(cfg));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("persist reports the path on failure") {
    auto cfg = small("linear", 1, 2);
    auto res = run_scenario(cfg);
    const fs::path blocker = scratch("blocker");
    { std::ofstream(blocker) << "x"; }
    try {
        persist(res, cfg, (blocker / "out").string());
        FAIL("expected an I/O error");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find(blocker.string()) != std::string::npos);
    }
    CHECK_THROWS_AS(load_summary("/nonexistent/dir"), IoError);
    fs::remove(blocker);
}

TEST_CASE("sweep artifacts carry the sweep column") {
    auto cfg = small("linear", 2, 4);
    auto r1 = run_scenario(cfg);
    auto r2 = run_scenario(cfg);
    const fs::path dir = scratch("sweep");
    persist({{"theta", 0.1, &r1}, {"theta", 0.2, &r2}}, cfg, dir.string());
    const std::string summary = slurp(dir / "summary.csv");
    CHECK(summary.rfind("theta," + std::string(kSummaryHeader), 0) == 0);
    CHECK(slurp(dir / "metrics.csv").rfind("theta,estimator", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("stage dumps round-trip") {
    std::mt19937_64 rng(3);
    auto noise = NominalStackedNoise(Vec::Zero(2), PsdMatrixd(Mat::Identity(2, 2)), Vec::Zero(1),
                                     PsdMatrixd(Mat::Constant(1, 1, 0.5)));
    Mat A(2, 2);
    A << 1.0, 0.2, 0.0, 0.9;
    auto p = build_stage_problem(A, Mat::Ones(1, 2), PsdMatrixd(Mat::Identity(2, 2)), noise, 0.3, false);
    StageDump dump{p, solve_stage_sdp(p)};
    const fs::path f = scratch("dump.json");
    write_stage_dump(dump, f.string());
    auto back = read_stage_dump(f.string());
    CHECK(back.problem.A == p.A);
    CHECK(back.problem.radius == p.radius);
    REQUIRE(back.solution);
    CHECK(back.solution->posterior_cov == dump.solution->posterior_cov);
    CHECK(verify_solution(back.problem, *back.solution, 1e-6).ok());
    fs::remove(f);
}

TEST_CASE("certificate audit over engine records") {
    auto cfg = small("linear", 4, 5);
    auto res = run_scenario(cfg);
    auto audit = audit_certificates(res.records);
    CHECK(audit.stages.size() == 6);
    CHECK(audit.label() == "pathwise surrogate; Theorem 1 guarantee not formally claimed");
    CHECK(audit_certificates({}).stages.empty());
}

TEST_CASE("format_real") {
    CHECK(format_real(0.1) == "0.10000000000000001");
    CHECK(format_real(std::nan("")) == "nan");
    CHECK(std::stod(format_real(1.0 / 3.0)) == 1.0 / 3.0);
}
