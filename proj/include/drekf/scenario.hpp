#pragma once

// Scenario configuration: parsing, dotted-key overrides, validation and the
// canonical echo. Configs are JSON documents; see configs/ for the bundled
// coordinated-turn and safe-navigation scenarios.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "drekf/filter.hpp"
#include "drekf/mpc.hpp"
#include "drekf/systems.hpp"

namespace drekf {

using Json = nlohmann::ordered_json;

inline const std::vector<std::string> kEstimatorNames = {"ekf_nominal", "ekf_true", "drekf"};

struct SystemSpec {
    std::string id = "ct";  ///< "ct", "safe_nav" or "linear"
    double dt = 0.2;
    Beacons beacons{};      ///< safe_nav only
    Mat A, B, C;            ///< linear only
};

struct ScenarioConfig {
    std::string name = "scenario";
    SystemSpec system;
    int horizon = 50;  ///< stages 0..horizon
    int runs = 100;
    std::uint64_t seed = 1;
    std::optional<double> omega0;  ///< CT only; sets the initial turn rate of both means

    NoiseModel truth;
    NoiseModel nominal;
    std::vector<double> theta{0.0};
    CurvatureConstants curvature;
    EnvelopeMode envelope_mode = EnvelopeMode::pathwise;
    Envelopes envelopes;
    SolverOptions solver;
    std::vector<std::string> estimators = kEstimatorNames;

    std::optional<MpcConfig> mpc;
    /// Free-form provenance tags keyed by config path, echoed verbatim.
    std::map<std::string, std::string> provenance;

    bool closed_loop() const { return mpc.has_value(); }
    /// Instantiates the plant/filter model with the configured curvature.
    std::unique_ptr<NonlinearSystem> make_system() const;
};

/// Throws ConfigError naming the offending key.
ScenarioConfig parse_config(const Json& doc);
Json to_json(const ScenarioConfig& config);

/// Reads a config file. Throws ConfigError on I/O or parse failures.
Json load_config_file(const std::string& path);

/// Applies "a.b.c=value" to a document. The value is parsed as JSON when
/// possible and taken as a string otherwise. Intermediate objects are created.
void apply_override(Json& doc, const std::string& assignment);
void apply_override(Json& doc, const std::string& key, const Json& value);

/// Template document for `echo-config --template`.
Json config_template(const std::string& system_id);

}  // namespace drekf
