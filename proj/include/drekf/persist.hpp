#pragma once

// Output artifacts of a scenario run:
//
//   summary.csv    per-stage statistics, one row per (stage, estimator)
//   metrics.csv    per-estimator scalar metrics
//   records.jsonl  one line per (run, estimator, stage)
//   config.json    canonical echo of the effective configuration
//
// Reals are written with 17 significant digits so files reload exactly.

#include <optional>
#include <string>
#include <vector>

#include "drekf/engine.hpp"
#include "drekf/scenario.hpp"
#include "drekf/stage_sdp.hpp"

namespace drekf {

inline const char* const kSummaryHeader = "stage,estimator,mse_mean,mse_std,vbar_sq,gamma_sq,delta_mean,delta_std";

/// A labelled scenario result; `sweep_key` is empty for a plain run.
struct SweepPoint {
    std::string sweep_key;
    double sweep_value = 0.0;
    const BenchmarkResult* result = nullptr;
};

/// Writes all four artifacts into `dir` (created if missing). With a sweep
/// key, a leading column named after it is added to both CSV files and a
/// "sweep" field to every record. Throws Error with the path on I/O failure.
void persist(const std::vector<SweepPoint>& points, const ScenarioConfig& config, const std::string& dir);
void persist(const BenchmarkResult& result, const ScenarioConfig& config, const std::string& dir);

/// Reads summary.csv and metrics.csv of a plain (non-sweep) run.
MetricsSummary load_summary(const std::string& dir);

/// Exact equality, with NaN equal to NaN.
bool same_summary(const MetricsSummary& a, const MetricsSummary& b);

/// A stage problem with an optional candidate solution, as exchanged with
/// `verify-sdp`.
struct StageDump {
    StageSdpProblem problem;
    std::optional<StageSdpSolution> solution;
};

void write_stage_dump(const StageDump& dump, const std::string& path);
/// Throws ConfigError naming the missing or malformed field.
StageDump read_stage_dump(const std::string& path);

/// `%.17g`
std::string format_real(double v);

}  // namespace drekf
