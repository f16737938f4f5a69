#include "drekf/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "drekf/engine.hpp"
#include "drekf/persist.hpp"
#include "drekf/scenario.hpp"

namespace drekf {
namespace {

struct Common {
    std::string config;
    std::string out = "out";
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    int jobs = 0;
    int verbosity = 0;
};

void add_common(CLI::App* cmd, Common& c, bool with_out) {
    cmd->add_option("--config", c.config, "Scenario config (JSON)");
    if (with_out) cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
    cmd->add_option("--override", c.overrides, "Dotted-key override KEY=VALUE (repeatable)");
    cmd->add_option("--seed", c.seed, "Master seed override");
    cmd->add_option("--jobs", c.jobs, "Worker threads (0: all available)")->capture_default_str();
    cmd->add_flag("-v", c.verbosity, "Progress on stderr (-vv for per-run detail)");
}

bool resolves(const Json& doc, const std::string& key) {
    const Json* node = &doc;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (!node->is_object() || !node->contains(part)) return false;
        node = &(*node)[part];
    }
    return true;
}

// Overrides may only touch keys present in the file or in the canonical echo.
void check_key(const Json& doc, const std::string& key) {
    if (resolves(doc, key)) return;
    const ScenarioConfig cfg = parse_config(doc);
    if (resolves(to_json(cfg), key)) return;
    if (key == "omega0" && cfg.system.id == "ct") return;
    throw ConfigError(key, "unknown config key");
}

Json effective_document(const Common& c) {
    if (c.config.empty()) throw ConfigError("--config", "required");
    Json doc = load_config_file(c.config);
    for (const auto& o : c.overrides) {
        const auto eq = o.find('=');
        if (eq != std::string::npos) check_key(doc, o.substr(0, eq));
        apply_override(doc, o);
    }
    if (c.seed) doc["seed"] = *c.seed;
    return doc;
}

EngineOptions engine_options(const Common& c, std::ostream& err, int dump_run = -1) {
    EngineOptions opts;
    opts.jobs = c.jobs;
    opts.dump_run = dump_run;
    if (c.verbosity > 0) {
        opts.progress = [&err, v = c.verbosity](int done, int total) {
            if (v > 1 || done == total || done % std::max(1, total / 10) == 0) {
                err << "  run " << done << "/" << total << '\n';
            }
        };
    }
    return opts;
}

void print_summary(std::ostream& out, const MetricsSummary& s, bool closed_loop, const std::string& prefix = "") {
    for (const auto& e : s.estimators) {
        out << prefix << e.estimator << " mse_mean=" << format_real(e.mse_mean) << " mse_std=" << format_real(e.mse_std)
            << " runs=" << e.runs << " failures=" << e.failures;
        if (closed_loop) {
            out << " collision_rate=" << format_real(e.collision_rate) << " goal_rate=" << format_real(e.goal_rate)
                << " relaxed_solves=" << e.relaxed_solves;
        }
        out << '\n';
    }
}

void report_failures(std::ostream& err, const BenchmarkResult& r) {
    for (const auto& rec : r.records) {
        for (const auto& e : rec.estimators) {
            if (e.failed) err << "run " << rec.run << " " << e.estimator << ": " << e.failure << '\n';
        }
    }
}

int cmd_run(const Common& c, const std::string& dump_dir, std::ostream& out, std::ostream& err) {
    const ScenarioConfig cfg = parse_config(effective_document(c));
    if (c.verbosity > 0) err << "running " << cfg.name << ": " << cfg.runs << " runs, T=" << cfg.horizon << '\n';
    const BenchmarkResult result = run_scenario(cfg, engine_options(c, err, dump_dir.empty() ? -1 : 0));
    persist(result, cfg, c.out);
    if (!dump_dir.empty()) {
        for (const auto& rec : result.records) {
            for (const auto& e : rec.estimators) {
                for (std::size_t t = 0; t < e.problems.size(); ++t) {
                    char name[32];
                    std::snprintf(name, sizeof name, "stage_%03zu.json", t);
                    write_stage_dump({e.problems[t], e.solutions[t]}, (std::filesystem::path(dump_dir) / name).string());
                }
            }
        }
    }
    print_summary(out, result.summary, cfg.closed_loop());
    if (result.failures() > 0) {
        report_failures(err, result);
        return kExitNumerical;
    }
    return kExitOk;
}

std::vector<Json> parse_values(const std::string& text) {
    std::vector<Json> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            values.push_back(Json::parse(item));
        } catch (const Json::parse_error&) {
            values.push_back(item);
        }
    }
    if (values.empty()) throw ConfigError("--values", "no values given");
    return values;
}

int cmd_sweep(const Common& c, const std::string& key, const std::string& value_text, std::ostream& out,
              std::ostream& err) {
    if (key.empty()) throw ConfigError("--key", "required");
    const Json base = effective_document(c);
    check_key(base, key);
    const auto values = parse_values(value_text);

    std::vector<ScenarioConfig> configs;
    for (const auto& v : values) {
        if (!v.is_number()) throw ConfigError(key, "sweep values must be numbers");
        Json doc = base;
        apply_override(doc, key, v);
        configs.push_back(parse_config(doc));
    }
    std::vector<BenchmarkResult> results;
    results.reserve(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
        if (c.verbosity > 0) err << "sweep " << key << "=" << values[i].dump() << '\n';
        results.push_back(run_scenario(configs[i], engine_options(c, err)));
    }
    std::vector<SweepPoint> points;
    int failures = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        points.push_back({key, values[i].get<double>(), &results[i]});
        print_summary(out, results[i].summary, configs[i].closed_loop(), key + "=" + format_real(values[i].get<double>()) + " ");
        failures += results[i].failures();
        if (results[i].failures() > 0) report_failures(err, results[i]);
    }
    persist(points, parse_config(base), c.out);
    return failures > 0 ? kExitNumerical : kExitOk;
}

int cmd_audit(const Common& c, bool write_outputs, std::ostream& out, std::ostream& err) {
    const ScenarioConfig cfg = parse_config(effective_document(c));
    if (std::find(cfg.estimators.begin(), cfg.estimators.end(), "drekf") == cfg.estimators.end()) {
        throw ConfigError("estimators", "audit needs drekf");
    }
    const BenchmarkResult result = run_scenario(cfg, engine_options(c, err));
    if (write_outputs) persist(result, cfg, c.out);
    const CertificateAudit audit = audit_certificates(result.records);
    out << "t,mse,vbar_sq,prior_mse,gamma_sq,posterior_violated,prior_violated\n";
    for (const auto& s : audit.stages) {
        out << s.t << ',' << format_real(s.mse) << ',' << format_real(s.v_bar_sq) << ',' << format_real(s.prior_mse) << ','
            << format_real(s.gamma_sq) << ',' << int(s.posterior_violated) << ',' << int(s.prior_violated) << '\n';
    }
    out << "# mode: " << audit.label() << "; violations: " << audit.violations() << '\n';
    if (result.failures() > 0) {
        report_failures(err, result);
        return kExitNumerical;
    }
    return kExitOk;
}

int cmd_verify_sdp(const std::string& path, double tol, double gap_tol, std::ostream& out) {
    if (path.empty()) throw ConfigError("--problem", "required");
    const StageDump dump = read_stage_dump(path);
    StageSdpSolution sol = dump.solution ? *dump.solution : solve_stage_sdp(dump.problem);

    const VerificationReport rep = verify_solution(dump.problem, sol, tol);
    out << "constraint,residual,violated\n";
    for (const auto& r : rep.constraints) out << r.name << ',' << format_real(r.residual) << ',' << int(r.violated) << '\n';
    bool ok = rep.ok();
    if (!ok) out << "# violated: " << rep.violations() << '\n';

    if (dump.problem.radius > 0.0) {
        const StageSdpSolution ipm = solve_stage_sdp_interior_point(dump.problem);
        const double gap = std::abs(ipm.objective - sol.objective);
        out << "# objective " << format_real(sol.objective) << " interior-point " << format_real(ipm.objective)
            << " gap " << format_real(gap) << '\n';
        if (!(gap <= gap_tol)) {
            out << "# violated: objective_cross_check\n";
            ok = false;
        }
    } else {
        const StageSdpSolution kf = kalman_solution(dump.problem);
        const double gap = std::abs(kf.objective - sol.objective);
        out << "# objective " << format_real(sol.objective) << " kalman " << format_real(kf.objective) << " gap "
            << format_real(gap) << '\n';
        if (!(gap <= gap_tol)) {
            out << "# violated: objective_cross_check\n";
            ok = false;
        }
    }
    return ok ? kExitOk : kExitNumerical;
}

int cmd_echo(const Common& c, const std::string& template_id, std::ostream& out) {
    Json doc;
    if (!template_id.empty()) {
        doc = config_template(template_id);
        for (const auto& o : c.overrides) apply_override(doc, o);
        if (c.seed) doc["seed"] = *c.seed;
    } else {
        doc = effective_document(c);
    }
    out << to_json(parse_config(doc)).dump(2) << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Residual-aware distributionally robust EKF: benchmarks and solver checks", "drekf"};
    app.require_subcommand(1);

    Common run_opts, sweep_opts, audit_opts, echo_opts;
    std::string dump_dir, sweep_key, sweep_values, problem, template_id;
    bool audit_write = false;
    double verify_tol = 1e-6, verify_gap = 1e-4;

    auto* run = app.add_subcommand("run", "Run a scenario and write summary.csv, metrics.csv, records.jsonl, config.json");
    add_common(run, run_opts, true);
    run->add_option("--dump-sdp", dump_dir, "Write the DR-EKF stage problems of run 0 to this directory");

    auto* sweep = app.add_subcommand("sweep", "Run a scenario once per value of one config key");
    add_common(sweep, sweep_opts, true);
    sweep->add_option("--key", sweep_key, "Dotted config key, e.g. omega0 or theta");
    sweep->add_option("--values", sweep_values, "Comma-separated values (use --values=-0.6,-0.3 for negatives)");

    auto* audit = app.add_subcommand("audit", "Compare Monte Carlo errors with the DR-EKF certificate");
    add_common(audit, audit_opts, true);
    audit->add_flag("--write", audit_write, "Also write the run artifacts to --out");

    auto* verify = app.add_subcommand("verify-sdp", "Check a dumped stage problem and cross-check the solvers");
    verify->add_option("--problem", problem, "Stage dump (JSON)");
    verify->add_option("--tol", verify_tol, "Constraint tolerance")->capture_default_str();
    verify->add_option("--gap-tol", verify_gap, "Objective cross-check tolerance")->capture_default_str();

    auto* echo = app.add_subcommand("echo-config", "Print the effective config in canonical form");
    add_common(echo, echo_opts, false);
    echo->add_option("--template", template_id, "Emit a template for ct, safe_nav or linear instead of reading --config");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        if (app.get_subcommands().size() == 1) {
            err << "error: " << e.what() << '\n' << app.get_subcommands().front()->help();
        } else {
            err << "error: " << e.what() << '\n' << app.help();
        }
        return kExitConfig;
    }

    try {
        if (*run) return cmd_run(run_opts, dump_dir, out, err);
        if (*sweep) return cmd_sweep(sweep_opts, sweep_key, sweep_values, out, err);
        if (*audit) return cmd_audit(audit_opts, audit_write, out, err);
        if (*verify) return cmd_verify_sdp(problem, verify_tol, verify_gap, out);
        if (*echo) return cmd_echo(echo_opts, template_id, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitConfig;
}

}  // namespace drekf
