#pragma once

// Monte Carlo engine. Every run draws one block of standard normals from a
// stream seeded by (master seed, run index); all estimators of that run
// consume the same block. Runs execute on a worker pool and are reduced in
// run order, so results do not depend on the job count.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "drekf/filter.hpp"
#include "drekf/mpc.hpp"
#include "drekf/scenario.hpp"

namespace drekf {

/// Uniform handle over DR-EKF and EKF.
class Estimator {
public:
    virtual ~Estimator() = default;
    virtual const StageRecord& update(const Vec& y) = 0;
    virtual void predict(const Vec& u) = 0;
    virtual const Vec& posterior_mean() const = 0;
    virtual const Mat& posterior_cov() const = 0;
    virtual const FilterTrace& trace() const = 0;
};

/// `name` is one of kEstimatorNames.
std::unique_ptr<Estimator> make_estimator(const std::string& name, const NonlinearSystem& system,
                                          const ScenarioConfig& config, bool keep_stage_problems = false);

/// Standard normal draws for one run, shared by all estimators.
struct NoiseDraws {
    Vec x0;               ///< n_x
    std::vector<Vec> w;   ///< per stage, n_x
    std::vector<Vec> v;   ///< per stage, n_y

    static NoiseDraws sample(std::uint64_t master_seed, int run, Eigen::Index nx, Eigen::Index ny, int horizon);
};

/// Symmetric square roots of the true covariances.
struct NoiseShaper {
    Mat x0_root, w_root, v_root;
    explicit NoiseShaper(const NoiseModel& truth);
};

struct ClosedLoopStep {
    Vec next_state;
    Vec control;
    double margin = 0.0;
    bool collision = false;  ///< plant position inside an obstacle disc (no margin)
    MpcStatus status = MpcStatus::optimal;
};

/// One closed-loop stage: measure x, update the filter, plan from its
/// posterior with the covariance margin, apply the first control to the
/// plant, and predict. `w_std`/`v_std` are standard normal draws.
ClosedLoopStep mpc_rollout_step(const NonlinearSystem& plant, const Vec& x, Estimator& filter,
                                MpcController& controller, const NoiseModel& truth, const NoiseShaper& shaper,
                                const Vec& w_std, const Vec& v_std);

struct EstimatorRun {
    std::string estimator;
    std::vector<Vec> truth;          ///< x_t, t = 0..T
    std::vector<Vec> estimates;      ///< posterior means
    std::vector<Vec> prior_estimates;
    std::vector<Vec> error;          ///< x_t - xbar_t, angles wrapped
    std::vector<Vec> prior_error;    ///< x_t - xbar^-_t, angles wrapped
    std::vector<double> sq_error;    ///< ||x_t - xbar_t||^2
    std::vector<double> margin;      ///< delta_t (closed loop)
    std::vector<CertificateState> certificates;  ///< drekf only
    std::vector<MpcStatus> mpc_status;
    std::vector<StageSdpProblem> problems;  ///< drekf, only for EngineOptions::dump_run
    std::vector<StageSdpSolution> solutions;
    bool collision = false;
    int first_collision = -1;
    bool failed = false;
    int failed_stage = -1;
    std::string failure;

    double time_averaged_mse() const;
};

struct RunRecord {
    int run = 0;
    std::uint64_t seed = 0;
    std::vector<EstimatorRun> estimators;
};

struct StageStats {
    double mse_mean = 0.0;
    double mse_std = 0.0;
    double vbar_sq = 0.0;   ///< NaN when not available
    double gamma_sq = 0.0;  ///< NaN when not available
    double delta_mean = 0.0;
    double delta_std = 0.0;
};

struct EstimatorSummary {
    std::string estimator;
    int runs = 0;        ///< completed runs
    int failures = 0;
    double mse_mean = 0.0;  ///< time-averaged MSE, mean over completed runs
    double mse_std = 0.0;
    double collision_rate = 0.0;
    double goal_rate = 0.0;
    double final_goal_distance = 0.0;
    int relaxed_solves = 0;
    int median_run = -1;  ///< run whose time-averaged MSE is the lower median
    std::vector<StageStats> stages;
};

struct MetricsSummary {
    std::string scenario;
    int horizon = 0;
    int runs = 0;
    std::vector<EstimatorSummary> estimators;

    const EstimatorSummary& at(const std::string& estimator) const;
};

struct BenchmarkResult {
    MetricsSummary summary;
    std::vector<RunRecord> records;
    int failures() const;
};

struct EngineOptions {
    int jobs = 0;  ///< 0 means hardware concurrency
    int dump_run = -1;  ///< run whose drekf stage problems are kept
    /// Called after each completed run (from worker threads, serialized).
    std::function<void(int done, int total)> progress;
};

/// Distance below which the final position counts as having reached the goal.
inline constexpr double kGoalTolerance = 0.5;

/// Runs the scenario: open loop for ct/linear, closed loop when mpc is set.
BenchmarkResult run_scenario(const ScenarioConfig& config, const EngineOptions& options = {});

/// One scenario per initial turn rate.
std::vector<BenchmarkResult> run_ct_benchmark(const ScenarioConfig& config, const std::vector<double>& omega0_grid,
                                              const EngineOptions& options = {});
BenchmarkResult run_safe_nav_benchmark(const ScenarioConfig& config, const EngineOptions& options = {});

MetricsSummary summarize(const ScenarioConfig& config, const std::vector<RunRecord>& records);

/// Posterior and prior errors of the completed drekf runs against the
/// per-stage largest certificate.
CertificateAudit audit_certificates(const std::vector<RunRecord>& records);

}  // namespace drekf
