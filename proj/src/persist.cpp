#include "drekf/persist.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace drekf {
namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

void close_checked(std::ofstream& out, const fs::path& path) {
    out.close();
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Json vec_json(const Vec& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Json certificate_json(const CertificateState& c) {
    return Json{{"gamma", c.gamma}, {"s_bar", c.s_bar}, {"rho", c.rho},       {"v_bar", c.v_bar},
                {"eta_f", c.eta_f}, {"eta_h", c.eta_h}, {"theta_eff", c.theta_eff}, {"a", c.a},
                {"m", c.m},         {"k", c.k}};
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_real(const std::string& s, const std::string& where) {
    if (s == "nan") return std::nan("");
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError(where + ": cannot parse '" + s + "' as a number");
    }
}

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

Json mat_json(const Mat& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

const Json& field(const Json& obj, const std::string& key, const std::string& prefix) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (!obj.is_object() || !obj.contains(key)) throw ConfigError(name, "missing from stage dump");
    return obj.at(key);
}

Mat read_mat(const Json& j, const std::string& key) {
    if (!j.is_array()) throw ConfigError(key, "expected a nested array");
    if (j.empty()) return Mat();
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Mat m(Eigen::Index(j.size()), Eigen::Index(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != cols) throw ConfigError(key, "ragged rows");
        for (std::size_t c = 0; c < cols; ++c) {
            if (!j[i][c].is_number()) throw ConfigError(key, "non-numeric entry");
            m(Eigen::Index(i), Eigen::Index(c)) = j[i][c].get<double>();
        }
    }
    return m;
}

Vec read_vec(const Json& j, const std::string& key) {
    if (!j.is_array()) throw ConfigError(key, "expected an array");
    Vec v(Eigen::Index(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ConfigError(key, "non-numeric entry");
        v(Eigen::Index(i)) = j[i].get<double>();
    }
    return v;
}

const char* const kMetricsHeader =
    "estimator,scenario,horizon,total_runs,runs,failures,mse_mean,mse_std,collision_rate,goal_rate,"
    "final_goal_distance,relaxed_solves,median_run";

}  // namespace

std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void persist(const std::vector<SweepPoint>& points, const ScenarioConfig& config, const std::string& dir) {
    const fs::path root(dir);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    const bool sweep = !points.empty() && !points.front().sweep_key.empty();
    const std::string lead = sweep ? points.front().sweep_key + "," : "";

    const fs::path summary_path = root / "summary.csv";
    auto summary = open_out(summary_path);
    summary << lead << kSummaryHeader << '\n';
    const fs::path metrics_path = root / "metrics.csv";
    auto metrics = open_out(metrics_path);
    metrics << lead << kMetricsHeader << '\n';
    const fs::path records_path = root / "records.jsonl";
    auto records = open_out(records_path);

    for (const auto& p : points) {
        const std::string prefix = sweep ? format_real(p.sweep_value) + "," : "";
        const MetricsSummary& s = p.result->summary;
        for (std::size_t t = 0; t < std::size_t(s.horizon) + 1; ++t) {
            for (const auto& e : s.estimators) {
                const StageStats& st = e.stages.at(t);
                summary << prefix << t << ',' << e.estimator << ',' << format_real(st.mse_mean) << ','
                        << format_real(st.mse_std) << ',' << format_real(st.vbar_sq) << ',' << format_real(st.gamma_sq)
                        << ',' << format_real(st.delta_mean) << ',' << format_real(st.delta_std) << '\n';
            }
        }
        for (const auto& e : s.estimators) {
            metrics << prefix << e.estimator << ',' << s.scenario << ',' << s.horizon << ',' << s.runs << ',' << e.runs
                    << ',' << e.failures << ',' << format_real(e.mse_mean) << ',' << format_real(e.mse_std) << ','
                    << format_real(e.collision_rate) << ',' << format_real(e.goal_rate) << ','
                    << format_real(e.final_goal_distance) << ',' << e.relaxed_solves << ',' << e.median_run << '\n';
        }
        for (const auto& r : p.result->records) {
            for (const auto& e : r.estimators) {
                for (std::size_t t = 0; t < e.truth.size(); ++t) {
                    Json line;
                    if (sweep) line[p.sweep_key] = p.sweep_value;
                    line["run"] = r.run;
                    line["estimator"] = e.estimator;
                    line["t"] = t;
                    line["truth"] = vec_json(e.truth[t]);
                    line["estimate"] = vec_json(e.estimates[t]);
                    line["sq_error"] = e.sq_error[t];
                    if (!e.margin.empty()) {
                        line["delta"] = e.margin[t];
                        line["mpc_status"] = to_string(e.mpc_status[t]);
                        line["collision"] = e.collision && int(t) >= e.first_collision;
                    }
                    if (t < e.certificates.size()) line["certificate"] = certificate_json(e.certificates[t]);
                    records << line.dump() << '\n';
                }
                if (e.failed) {
                    Json line;
                    if (sweep) line[p.sweep_key] = p.sweep_value;
                    line["run"] = r.run;
                    line["estimator"] = e.estimator;
                    line["failed_stage"] = e.failed_stage;
                    line["failure"] = e.failure;
                    records << line.dump() << '\n';
                }
            }
        }
    }
    close_checked(summary, summary_path);
    close_checked(metrics, metrics_path);
    close_checked(records, records_path);

    const fs::path config_path = root / "config.json";
    auto cfg = open_out(config_path);
    Json doc = to_json(config);
    if (sweep) {
        Json values = Json::array();
        for (const auto& p : points) values.push_back(p.sweep_value);
        doc["sweep"] = {{"key", points.front().sweep_key}, {"values", values}};
    }
    cfg << doc.dump(2) << '\n';
    close_checked(cfg, config_path);
}

void persist(const BenchmarkResult& result, const ScenarioConfig& config, const std::string& dir) {
    persist(std::vector<SweepPoint>{{"", 0.0, &result}}, config, dir);
}

MetricsSummary load_summary(const std::string& dir) {
    const fs::path root(dir);
    MetricsSummary out;

    const fs::path metrics_path = root / "metrics.csv";
    std::ifstream metrics(metrics_path);
    if (!metrics) throw IoError("cannot read '" + metrics_path.string() + "'");
    std::string line;
    std::getline(metrics, line);
    if (line != kMetricsHeader) throw IoError(metrics_path.string() + ": unexpected header");
    while (std::getline(metrics, line)) {
        const auto c = split_csv(line);
        if (c.size() != 13) throw IoError(metrics_path.string() + ": malformed row '" + line + "'");
        const std::string where = metrics_path.string();
        EstimatorSummary e;
        e.estimator = c[0];
        out.scenario = c[1];
        out.horizon = std::stoi(c[2]);
        out.runs = std::stoi(c[3]);
        e.runs = std::stoi(c[4]);
        e.failures = std::stoi(c[5]);
        e.mse_mean = parse_real(c[6], where);
        e.mse_std = parse_real(c[7], where);
        e.collision_rate = parse_real(c[8], where);
        e.goal_rate = parse_real(c[9], where);
        e.final_goal_distance = parse_real(c[10], where);
        e.relaxed_solves = std::stoi(c[11]);
        e.median_run = std::stoi(c[12]);
        out.estimators.push_back(e);
    }

    const fs::path summary_path = root / "summary.csv";
    std::ifstream summary(summary_path);
    if (!summary) throw IoError("cannot read '" + summary_path.string() + "'");
    std::getline(summary, line);
    if (line != kSummaryHeader) throw IoError(summary_path.string() + ": unexpected header");
    while (std::getline(summary, line)) {
        const auto c = split_csv(line);
        if (c.size() != 8) throw IoError(summary_path.string() + ": malformed row '" + line + "'");
        const std::string where = summary_path.string();
        StageStats st;
        st.mse_mean = parse_real(c[2], where);
        st.mse_std = parse_real(c[3], where);
        st.vbar_sq = parse_real(c[4], where);
        st.gamma_sq = parse_real(c[5], where);
        st.delta_mean = parse_real(c[6], where);
        st.delta_std = parse_real(c[7], where);
        bool found = false;
        for (auto& e : out.estimators) {
            if (e.estimator == c[1]) {
                if (std::size_t(std::stoul(c[0])) != e.stages.size()) throw IoError(where + ": stages out of order");
                e.stages.push_back(st);
                found = true;
            }
        }
        if (!found) throw IoError(where + ": estimator '" + c[1] + "' missing from metrics.csv");
    }
    return out;
}

void write_stage_dump(const StageDump& dump, const std::string& path) {
    const StageSdpProblem& p = dump.problem;
    Json doc{{"is_initial", p.is_initial},
             {"A", mat_json(p.A)},
             {"C", mat_json(p.C)},
             {"carried_posterior", mat_json(p.carried_posterior)},
             {"nominal",
              {{"first_mean", vec_json(p.nominal.first_mean())},
               {"first_cov", mat_json(p.nominal.first_cov())},
               {"meas_mean", vec_json(p.nominal.meas_mean())},
               {"meas_cov", mat_json(p.nominal.meas_cov())}}},
             {"radius", p.radius}};
    if (dump.solution) {
        const StageSdpSolution& s = *dump.solution;
        doc["solution"] = {{"prior_cov", mat_json(s.prior_cov)}, {"posterior_cov", mat_json(s.posterior_cov)},
                           {"first_cov", mat_json(s.first_cov)}, {"meas_cov", mat_json(s.meas_cov)},
                           {"cross_cov", mat_json(s.cross_cov)}, {"coupling", mat_json(s.coupling)},
                           {"T", mat_json(s.T)},                 {"S", mat_json(s.S)},
                           {"gain", mat_json(s.gain)},           {"objective", s.objective},
                           {"method", s.diagnostics.method}};
    }
    const fs::path fp(path);
    if (fp.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(fp.parent_path(), ec);
        if (ec) throw IoError("cannot create directory for '" + path + "': " + ec.message());
    }
    auto out = open_out(fp);
    out << doc.dump(1) << '\n';
    close_checked(out, fp);
}

StageDump read_stage_dump(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--problem", "cannot open '" + path + "'");
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("--problem", "'" + path + "' is not valid JSON: " + e.what());
    }
    const Json& nom = field(doc, "nominal", "");
    const NominalStackedNoise noise(read_vec(field(nom, "first_mean", "nominal"), "nominal.first_mean"),
                                    PsdMatrixd(read_mat(field(nom, "first_cov", "nominal"), "nominal.first_cov")),
                                    read_vec(field(nom, "meas_mean", "nominal"), "nominal.meas_mean"),
                                    PsdMatrixd(read_mat(field(nom, "meas_cov", "nominal"), "nominal.meas_cov")));
    const Json& init = field(doc, "is_initial", "");
    if (!init.is_boolean()) throw ConfigError("is_initial", "expected a boolean");
    const bool initial = init.get<bool>();
    const Json& radius = field(doc, "radius", "");
    if (!radius.is_number()) throw ConfigError("radius", "expected a number");

    std::optional<Mat> A;
    std::optional<PsdMatrixd> carried;
    if (!initial) {
        A = read_mat(field(doc, "A", ""), "A");
        carried = PsdMatrixd(read_mat(field(doc, "carried_posterior", ""), "carried_posterior"));
    }
    StageDump dump{build_stage_problem(A, read_mat(field(doc, "C", ""), "C"), carried, noise, radius.get<double>(), initial),
                   std::nullopt};
    if (doc.contains("solution")) {
        const Json& s = doc["solution"];
        StageSdpSolution sol;
        sol.prior_cov = read_mat(field(s, "prior_cov", "solution"), "solution.prior_cov");
        sol.posterior_cov = read_mat(field(s, "posterior_cov", "solution"), "solution.posterior_cov");
        sol.first_cov = read_mat(field(s, "first_cov", "solution"), "solution.first_cov");
        sol.meas_cov = read_mat(field(s, "meas_cov", "solution"), "solution.meas_cov");
        sol.cross_cov = read_mat(field(s, "cross_cov", "solution"), "solution.cross_cov");
        sol.coupling = read_mat(field(s, "coupling", "solution"), "solution.coupling");
        sol.T = read_mat(field(s, "T", "solution"), "solution.T");
        sol.S = read_mat(field(s, "S", "solution"), "solution.S");
        sol.gain = read_mat(field(s, "gain", "solution"), "solution.gain");
        const Json& obj = field(s, "objective", "solution");
        if (!obj.is_number()) throw ConfigError("solution.objective", "expected a number");
        sol.objective = obj.get<double>();
        if (s.contains("method") && s["method"].is_string()) sol.diagnostics.method = s["method"].get<std::string>();
        dump.solution = sol;
    }
    return dump;
}

bool same_summary(const MetricsSummary& a, const MetricsSummary& b) {
    if (a.scenario != b.scenario || a.horizon != b.horizon || a.runs != b.runs) return false;
    if (a.estimators.size() != b.estimators.size()) return false;
    for (std::size_t i = 0; i < a.estimators.size(); ++i) {
        const auto& x = a.estimators[i];
        const auto& y = b.estimators[i];
        if (x.estimator != y.estimator || x.runs != y.runs || x.failures != y.failures ||
            x.relaxed_solves != y.relaxed_solves || x.median_run != y.median_run) {
            return false;
        }
        if (!same(x.mse_mean, y.mse_mean) || !same(x.mse_std, y.mse_std) || !same(x.collision_rate, y.collision_rate) ||
            !same(x.goal_rate, y.goal_rate) || !same(x.final_goal_distance, y.final_goal_distance)) {
            return false;
        }
        if (x.stages.size() != y.stages.size()) return false;
        for (std::size_t t = 0; t < x.stages.size(); ++t) {
            const auto& p = x.stages[t];
            const auto& q = y.stages[t];
            if (!same(p.mse_mean, q.mse_mean) || !same(p.mse_std, q.mse_std) || !same(p.vbar_sq, q.vbar_sq) ||
                !same(p.gamma_sq, q.gamma_sq) || !same(p.delta_mean, q.delta_mean) || !same(p.delta_std, q.delta_std)) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace drekf
