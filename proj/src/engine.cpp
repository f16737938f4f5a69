#include "drekf/engine.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

namespace drekf {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename Filter>
class FilterAdapter final : public Estimator {
public:
    template <typename... Args>
    explicit FilterAdapter(Args&&... args) : f_(std::forward<Args>(args)...) {}

    const StageRecord& update(const Vec& y) override { return f_.update(y); }
    void predict(const Vec& u) override { f_.predict(u); }
    const Vec& posterior_mean() const override { return f_.posterior_mean(); }
    const Mat& posterior_cov() const override { return f_.posterior_cov(); }
    const FilterTrace& trace() const override { return f_.trace(); }

private:
    Filter f_;
};

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return kNaN;
    return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

// Sample standard deviation; zero for fewer than two values.
double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return v.empty() ? kNaN : 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / double(v.size() - 1));
}

bool inside_obstacle(const Vec& x, const MpcConfig& mpc) {
    const Eigen::Vector2d p = x.head<2>();
    return std::any_of(mpc.obstacles.begin(), mpc.obstacles.end(),
                       [&](const Obstacle& o) { return (p - o.center).norm() < o.radius; });
}

void fail(EstimatorRun& out, int t, const std::exception& e) {
    out.failed = true;
    out.failed_stage = t;
    out.failure = e.what();
}

void collect_certificates(EstimatorRun& out, const Estimator& est) {
    if (out.estimator != "drekf") return;
    for (const auto& s : est.trace().stages) {
        out.certificates.push_back(s.certificate);
        if (s.problem && s.solution) {
            out.problems.push_back(*s.problem);
            out.solutions.push_back(*s.solution);
        }
    }
}

RunRecord open_loop_run(const ScenarioConfig& cfg, const NonlinearSystem& sys, const NoiseShaper& shaper, int run,
                        bool keep) {
    const int T = cfg.horizon;
    const NoiseDraws d = NoiseDraws::sample(cfg.seed, run, sys.nx(), sys.ny(), T);
    const Vec u = Vec::Zero(sys.nu());

    std::vector<Vec> xs, ys;
    Vec x = cfg.truth.x0_mean + shaper.x0_root * d.x0;
    for (int t = 0; t <= T; ++t) {
        xs.push_back(x);
        ys.push_back(sys.h(x) + cfg.truth.v_mean + shaper.v_root * d.v[t]);
        x = sys.normalize_state(sys.f(x, u) + cfg.truth.w_mean + shaper.w_root * d.w[t]);
    }

    RunRecord rec;
    rec.run = run;
    rec.seed = cfg.seed;
    for (const auto& name : cfg.estimators) {
        EstimatorRun out;
        out.estimator = name;
        auto est = make_estimator(name, sys, cfg, keep);
        for (int t = 0; t <= T; ++t) {
            try {
                const StageRecord& s = est->update(ys[t]);
                out.truth.push_back(xs[t]);
                out.prior_estimates.push_back(s.state.prior_mean);
                out.estimates.push_back(s.state.posterior_mean);
                out.error.push_back(sys.state_difference(xs[t], s.state.posterior_mean));
                out.prior_error.push_back(sys.state_difference(xs[t], s.state.prior_mean));
                out.sq_error.push_back(out.error.back().squaredNorm());
                est->predict(u);
            } catch (const ConfigError&) {
                throw;
            } catch (const Error& e) {
                fail(out, t, e);
                break;
            }
        }
        collect_certificates(out, *est);
        rec.estimators.push_back(std::move(out));
    }
    return rec;
}

RunRecord closed_loop_run(const ScenarioConfig& cfg, const NonlinearSystem& sys, const NoiseShaper& shaper, int run,
                          bool keep) {
    const int T = cfg.horizon;
    const NoiseDraws d = NoiseDraws::sample(cfg.seed, run, sys.nx(), sys.ny(), T);

    RunRecord rec;
    rec.run = run;
    rec.seed = cfg.seed;
    for (const auto& name : cfg.estimators) {
        EstimatorRun out;
        out.estimator = name;
        auto est = make_estimator(name, sys, cfg, keep);
        MpcController controller(*cfg.mpc);
        Vec x = sys.normalize_state(cfg.truth.x0_mean + shaper.x0_root * d.x0);
        for (int t = 0; t <= T; ++t) {
            try {
                const ClosedLoopStep step =
                    mpc_rollout_step(sys, x, *est, controller, cfg.truth, shaper, d.w[t], d.v[t]);
                const StageRecord& s = est->trace().stages.back();
                out.truth.push_back(x);
                out.prior_estimates.push_back(s.state.prior_mean);
                out.estimates.push_back(s.state.posterior_mean);
                out.error.push_back(sys.state_difference(x, s.state.posterior_mean));
                out.prior_error.push_back(sys.state_difference(x, s.state.prior_mean));
                out.sq_error.push_back(out.error.back().squaredNorm());
                out.margin.push_back(step.margin);
                out.mpc_status.push_back(step.status);
                if (step.collision && !out.collision) {
                    out.collision = true;
                    out.first_collision = t;
                }
                x = step.next_state;
            } catch (const ConfigError&) {
                throw;
            } catch (const Error& e) {
                fail(out, t, e);
                break;
            }
        }
        collect_certificates(out, *est);
        rec.estimators.push_back(std::move(out));
    }
    return rec;
}

}  // namespace

std::unique_ptr<Estimator> make_estimator(const std::string& name, const NonlinearSystem& system,
                                          const ScenarioConfig& config, bool keep_stage_problems) {
    if (name == "ekf_nominal") return std::make_unique<FilterAdapter<Ekf>>(system, config.nominal);
    if (name == "ekf_true") return std::make_unique<FilterAdapter<Ekf>>(system, config.truth);
    if (name == "drekf") {
        DrEkfOptions opts;
        opts.mode = config.envelope_mode;
        opts.envelopes = config.envelopes;
        opts.solver = config.solver;
        opts.keep_stage_problems = keep_stage_problems;
        return std::make_unique<FilterAdapter<DrEkf>>(system, config.nominal, config.theta, opts);
    }
    throw ConfigError("estimators", "unknown estimator '" + name + "'");
}

NoiseDraws NoiseDraws::sample(std::uint64_t master_seed, int run, Eigen::Index nx, Eigen::Index ny, int horizon) {
    std::seed_seq seq{std::uint32_t(master_seed & 0xffffffffu), std::uint32_t(master_seed >> 32), std::uint32_t(run)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    auto draw = [&](Eigen::Index n) {
        Vec z(n);
        for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
        return z;
    };
    NoiseDraws d;
    d.x0 = draw(nx);
    for (int t = 0; t <= horizon; ++t) {
        d.v.push_back(draw(ny));
        d.w.push_back(draw(nx));
    }
    return d;
}

NoiseShaper::NoiseShaper(const NoiseModel& truth)
    : x0_root(sqrtm_psd(truth.x0_cov.matrix())),
      w_root(sqrtm_psd(truth.w_cov.matrix())),
      v_root(sqrtm_psd(truth.v_cov.matrix())) {}

ClosedLoopStep mpc_rollout_step(const NonlinearSystem& plant, const Vec& x, Estimator& filter,
                                MpcController& controller, const NoiseModel& truth, const NoiseShaper& shaper,
                                const Vec& w_std, const Vec& v_std) {
    if (x.size() != plant.nx()) throw DimensionError("rollout: plant state has wrong size");
    ClosedLoopStep out;
    out.collision = inside_obstacle(x, controller.config());

    const Vec y = plant.h(x) + truth.v_mean + shaper.v_root * v_std;
    filter.update(y);
    out.margin = safety_margin(filter.posterior_cov(), controller.config().kappa_sigma);
    const MpcSolution sol = controller.solve(filter.posterior_mean(), out.margin);
    out.control = sol.first_control();
    out.status = sol.status;

    out.next_state = plant.normalize_state(plant.f(x, out.control) + truth.w_mean + shaper.w_root * w_std);
    filter.predict(out.control);
    return out;
}

double EstimatorRun::time_averaged_mse() const { return mean_of(sq_error); }

const EstimatorSummary& MetricsSummary::at(const std::string& estimator) const {
    for (const auto& e : estimators) {
        if (e.estimator == estimator) return e;
    }
    throw Error("summary has no estimator '" + estimator + "'");
}

int BenchmarkResult::failures() const {
    int n = 0;
    for (const auto& e : summary.estimators) n += e.failures;
    return n;
}

MetricsSummary summarize(const ScenarioConfig& cfg, const std::vector<RunRecord>& records) {
    MetricsSummary out;
    out.scenario = cfg.name;
    out.horizon = cfg.horizon;
    out.runs = int(records.size());
    const std::size_t stages = std::size_t(cfg.horizon) + 1;

    for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
        EstimatorSummary s;
        s.estimator = cfg.estimators[e];
        std::vector<const EstimatorRun*> done;
        int collisions = 0, reached = 0;
        std::vector<double> goal_dist;
        for (const auto& r : records) {
            const EstimatorRun& run = r.estimators.at(e);
            if (run.collision) ++collisions;
            for (auto st : run.mpc_status) s.relaxed_solves += int(st == MpcStatus::infeasible_relaxed);
            if (run.failed) {
                ++s.failures;
                continue;
            }
            done.push_back(&run);
            if (cfg.mpc) {
                const double dist = (run.truth.back().head<2>() - cfg.mpc->goal).norm();
                goal_dist.push_back(dist);
                reached += int(dist < kGoalTolerance);
            }
        }
        s.runs = int(done.size());
        const double total = records.empty() ? 1.0 : double(records.size());
        s.collision_rate = cfg.mpc ? collisions / total : 0.0;
        s.goal_rate = cfg.mpc ? reached / total : kNaN;
        s.final_goal_distance = cfg.mpc ? mean_of(goal_dist) : kNaN;

        std::vector<double> avg;
        for (const auto* run : done) avg.push_back(run->time_averaged_mse());
        s.mse_mean = mean_of(avg);
        s.mse_std = std_of(avg);
        if (!done.empty()) {
            std::vector<std::size_t> order(done.size());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return avg[a] < avg[b]; });
            const std::size_t mid = order[(order.size() - 1) / 2];
            for (const auto& r : records) {
                if (&r.estimators.at(e) == done[mid]) s.median_run = r.run;
            }
        }

        for (std::size_t t = 0; t < stages; ++t) {
            StageStats st;
            std::vector<double> err, margin;
            double vbar = kNaN, gamma = kNaN;
            for (const auto* run : done) {
                err.push_back(run->sq_error.at(t));
                if (!run->margin.empty()) margin.push_back(run->margin.at(t));
                if (!run->certificates.empty()) {
                    const auto& c = run->certificates.at(t);
                    vbar = std::isnan(vbar) ? c.v_bar * c.v_bar : std::max(vbar, c.v_bar * c.v_bar);
                    gamma = std::isnan(gamma) ? c.gamma * c.gamma : std::max(gamma, c.gamma * c.gamma);
                }
            }
            st.mse_mean = mean_of(err);
            st.mse_std = std_of(err);
            st.vbar_sq = vbar;
            st.gamma_sq = gamma;
            st.delta_mean = margin.empty() ? kNaN : mean_of(margin);
            st.delta_std = margin.empty() ? kNaN : std_of(margin);
            s.stages.push_back(st);
        }
        out.estimators.push_back(std::move(s));
    }
    return out;
}

BenchmarkResult run_scenario(const ScenarioConfig& cfg, const EngineOptions& options) {
    const auto sys = cfg.make_system();
    const NoiseShaper shaper(cfg.truth);
    const int total = cfg.runs;

    std::vector<RunRecord> records(static_cast<std::size_t>(total));
    std::atomic<int> next{0};
    std::mutex mu;
    int done = 0;
    std::exception_ptr error;

    auto worker = [&] {
        for (int run = next++; run < total; run = next++) {
            try {
                const bool keep = run == options.dump_run;
                records[std::size_t(run)] = cfg.closed_loop() ? closed_loop_run(cfg, *sys, shaper, run, keep)
                                                               : open_loop_run(cfg, *sys, shaper, run, keep);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!error) error = std::current_exception();
                next = total;
                return;
            }
            std::lock_guard<std::mutex> lock(mu);
            ++done;
            if (options.progress) options.progress(done, total);
        }
    };

    int jobs = options.jobs > 0 ? options.jobs : int(std::max(1u, std::thread::hardware_concurrency()));
    jobs = std::min(jobs, total);
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);

    BenchmarkResult result;
    result.summary = summarize(cfg, records);
    result.records = std::move(records);
    return result;
}

std::vector<BenchmarkResult> run_ct_benchmark(const ScenarioConfig& config, const std::vector<double>& omega0_grid,
                                              const EngineOptions& options) {
    if (config.system.id != "ct") throw ConfigError("system.id", "turn-rate sweep needs the ct system");
    std::vector<BenchmarkResult> out;
    for (double w : omega0_grid) {
        ScenarioConfig c = config;
        c.omega0 = w;
        c.truth.x0_mean(4) = w;
        c.nominal.x0_mean(4) = w;
        out.push_back(run_scenario(c, options));
    }
    return out;
}

BenchmarkResult run_safe_nav_benchmark(const ScenarioConfig& config, const EngineOptions& options) {
    if (!config.mpc) throw ConfigError("mpc", "safe-navigation benchmark needs an mpc section");
    return run_scenario(config, options);
}

CertificateAudit audit_certificates(const std::vector<RunRecord>& records) {
    std::vector<CertificateState> bound;
    std::vector<std::vector<Vec>> errors, prior_errors;
    for (const auto& r : records) {
        for (const auto& run : r.estimators) {
            if (run.estimator != "drekf" || run.failed || run.certificates.empty()) continue;
            if (bound.empty()) {
                bound = run.certificates;
            } else {
                for (std::size_t t = 0; t < bound.size() && t < run.certificates.size(); ++t) {
                    bound[t].v_bar = std::max(bound[t].v_bar, run.certificates[t].v_bar);
                    bound[t].gamma = std::max(bound[t].gamma, run.certificates[t].gamma);
                }
            }
            errors.push_back(run.error);
            prior_errors.push_back(run.prior_error);
        }
    }
    return certificate_audit(bound, errors, prior_errors);
}

}  // namespace drekf
