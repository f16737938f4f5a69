#include "drekf/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace drekf {
namespace {

std::string join(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

const Json* find(const Json& obj, const std::string& key) {
    if (!obj.is_object()) return nullptr;
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double as_number(const Json& j, const std::string& key) {
    if (!j.is_number()) throw ConfigError(key, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(key, "must be finite");
    return v;
}

double number_or(const Json& obj, const std::string& prefix, const std::string& key, double fallback) {
    const Json* j = find(obj, key);
    return j ? as_number(*j, join(prefix, key)) : fallback;
}

int int_or(const Json& obj, const std::string& prefix, const std::string& key, int fallback) {
    const Json* j = find(obj, key);
    if (!j) return fallback;
    if (!j->is_number_integer()) throw ConfigError(join(prefix, key), "expected an integer");
    return j->get<int>();
}

std::string string_or(const Json& obj, const std::string& prefix, const std::string& key, const std::string& fallback) {
    const Json* j = find(obj, key);
    if (!j) return fallback;
    if (!j->is_string()) throw ConfigError(join(prefix, key), "expected a string");
    return j->get<std::string>();
}

Vec as_vector(const Json& j, const std::string& key) {
    if (!j.is_array()) throw ConfigError(key, "expected an array of numbers");
    Vec v(Eigen::Index(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(Eigen::Index(i)) = as_number(j[i], key + "[" + std::to_string(i) + "]");
    return v;
}

std::vector<double> as_list(const Json& j, const std::string& key) {
    if (j.is_number()) return {as_number(j, key)};
    const Vec v = as_vector(j, key);
    return {v.data(), v.data() + v.size()};
}

Mat as_matrix(const Json& j, const std::string& key) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) throw ConfigError(key, "expected a nested array (rows)");
    const std::size_t cols = j[0].size();
    Mat m(Eigen::Index(j.size()), Eigen::Index(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != cols) throw ConfigError(key, "rows must have equal length");
        for (std::size_t c = 0; c < cols; ++c) {
            m(Eigen::Index(i), Eigen::Index(c)) = as_number(j[i][c], key);
        }
    }
    return m;
}

// A flat array is a diagonal; a nested array is a full matrix.
PsdMatrixd as_covariance(const Json& j, const std::string& key) {
    Mat m;
    if (j.is_array() && !j.empty() && j[0].is_array()) {
        m = as_matrix(j, key);
        if (m.rows() != m.cols()) throw ConfigError(key, "covariance must be square");
        if ((m - m.transpose()).lpNorm<Eigen::Infinity>() > 1e-12 * (1.0 + m.lpNorm<Eigen::Infinity>())) {
            throw ConfigError(key, "covariance must be symmetric");
        }
    } else {
        m = as_vector(j, key).asDiagonal();
    }
    try {
        return PsdMatrixd(m);
    } catch (const NotPsdError& e) {
        throw ConfigError(key, std::string("covariance is not positive semidefinite (") + e.what() + ")");
    }
}

Json vector_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Json matrix_json(const Mat& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
        rows.push_back(row);
    }
    return rows;
}

Json covariance_json(const Mat& m) {
    const Mat off = m - Mat(m.diagonal().asDiagonal());
    if (off.isZero(0.0)) return vector_json(m.diagonal());
    return matrix_json(m);
}

NoiseModel parse_noise(const Json& obj, const std::string& prefix, const std::optional<Vec>& default_mean) {
    if (!obj.is_object()) throw ConfigError(prefix, "expected an object");
    auto need = [&](const std::string& k) -> const Json& {
        const Json* j = find(obj, k);
        if (!j) throw ConfigError(join(prefix, k), "missing");
        return *j;
    };
    NoiseModel n;
    if (const Json* m = find(obj, "x0_mean")) {
        n.x0_mean = as_vector(*m, join(prefix, "x0_mean"));
    } else if (default_mean) {
        n.x0_mean = *default_mean;
    } else {
        throw ConfigError(join(prefix, "x0_mean"), "missing");
    }
    n.x0_cov = as_covariance(need("x0_cov"), join(prefix, "x0_cov"));
    n.w_cov = as_covariance(need("w_cov"), join(prefix, "w_cov"));
    n.v_cov = as_covariance(need("v_cov"), join(prefix, "v_cov"));
    const Json* wm = find(obj, "w_mean");
    n.w_mean = wm ? as_vector(*wm, join(prefix, "w_mean")) : Vec::Zero(n.w_cov.dim());
    const Json* vm = find(obj, "v_mean");
    n.v_mean = vm ? as_vector(*vm, join(prefix, "v_mean")) : Vec::Zero(n.v_cov.dim());
    return n;
}

void check_noise(const NoiseModel& n, const std::string& prefix, Eigen::Index nx, Eigen::Index ny, bool nominal) {
    auto dim = [&](Eigen::Index got, Eigen::Index want, const std::string& k) {
        if (got != want) {
            throw ConfigError(join(prefix, k), "has size " + std::to_string(got) + ", expected " + std::to_string(want));
        }
    };
    dim(n.x0_mean.size(), nx, "x0_mean");
    dim(n.x0_cov.dim(), nx, "x0_cov");
    dim(n.w_mean.size(), nx, "w_mean");
    dim(n.w_cov.dim(), nx, "w_cov");
    dim(n.v_mean.size(), ny, "v_mean");
    dim(n.v_cov.dim(), ny, "v_cov");
    if (nominal) {
        // The stage problem needs a positive definite nominal.
        for (const auto& [k, c] : {std::pair<std::string, const PsdMatrixd*>{"x0_cov", &n.x0_cov},
                                   {"w_cov", &n.w_cov},
                                   {"v_cov", &n.v_cov}}) {
            if (!(min_eigenvalue(c->matrix()) > 0.0)) throw ConfigError(join(prefix, k), "nominal covariance must be positive definite");
        }
    }
}

Json noise_json(const NoiseModel& n) {
    return Json{{"x0_mean", vector_json(n.x0_mean)}, {"x0_cov", covariance_json(n.x0_cov.matrix())},
                {"w_mean", vector_json(n.w_mean)},   {"w_cov", covariance_json(n.w_cov.matrix())},
                {"v_mean", vector_json(n.v_mean)},   {"v_cov", covariance_json(n.v_cov.matrix())}};
}

MpcConfig parse_mpc(const Json& obj, double dt) {
    if (!obj.is_object()) throw ConfigError("mpc", "expected an object");
    MpcConfig m;
    m.dt = dt;
    m.horizon = int_or(obj, "mpc", "horizon", m.horizon);
    m.q = number_or(obj, "mpc", "q", m.q);
    m.r_s = number_or(obj, "mpc", "r_s", m.r_s);
    m.r_omega = number_or(obj, "mpc", "r_omega", m.r_omega);
    m.q_f = number_or(obj, "mpc", "q_f", m.q_f);
    m.s_max = number_or(obj, "mpc", "s_max", m.s_max);
    m.omega_max = number_or(obj, "mpc", "omega_max", m.omega_max);
    m.kappa_sigma = number_or(obj, "mpc", "kappa_sigma", m.kappa_sigma);
    m.d_min_base = number_or(obj, "mpc", "d_min_base", m.d_min_base);
    m.max_outer_iters = int_or(obj, "mpc", "max_outer_iters", m.max_outer_iters);
    m.control_tol = number_or(obj, "mpc", "control_tol", m.control_tol);
    m.slack_weight = number_or(obj, "mpc", "slack_weight", m.slack_weight);
    const Json* goal = find(obj, "goal");
    if (!goal) throw ConfigError("mpc.goal", "missing");
    const Vec g = as_vector(*goal, "mpc.goal");
    if (g.size() != 2) throw ConfigError("mpc.goal", "expected [x, y]");
    m.goal = g;
    if (const Json* obs = find(obj, "obstacles")) {
        if (!obs->is_array()) throw ConfigError("mpc.obstacles", "expected an array");
        for (std::size_t i = 0; i < obs->size(); ++i) {
            const std::string key = "mpc.obstacles[" + std::to_string(i) + "]";
            const Json& o = (*obs)[i];
            const Json* c = find(o, "center");
            if (!c) throw ConfigError(key + ".center", "missing");
            const Vec cv = as_vector(*c, key + ".center");
            if (cv.size() != 2) throw ConfigError(key + ".center", "expected [x, y]");
            Obstacle ob;
            ob.center = cv;
            ob.radius = number_or(o, key, "radius", -1.0);
            if (ob.radius < 0.0) throw ConfigError(key + ".radius", "missing or negative");
            m.obstacles.push_back(ob);
        }
    }
    if (m.kappa_sigma < 0.0) throw ConfigError("mpc.kappa_sigma", "must be nonnegative");
    if (m.d_min_base < 0.0) throw ConfigError("mpc.d_min_base", "must be nonnegative");
    m.validate();
    return m;
}

Json mpc_json(const MpcConfig& m) {
    Json obstacles = Json::array();
    for (const auto& o : m.obstacles) obstacles.push_back({{"center", {o.center.x(), o.center.y()}}, {"radius", o.radius}});
    return Json{{"horizon", m.horizon},
                {"q", m.q},
                {"r_s", m.r_s},
                {"r_omega", m.r_omega},
                {"q_f", m.q_f},
                {"s_max", m.s_max},
                {"omega_max", m.omega_max},
                {"kappa_sigma", m.kappa_sigma},
                {"d_min_base", m.d_min_base},
                {"goal", {m.goal.x(), m.goal.y()}},
                {"obstacles", obstacles},
                {"max_outer_iters", m.max_outer_iters},
                {"control_tol", m.control_tol},
                {"slack_weight", m.slack_weight}};
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

}  // namespace

std::unique_ptr<NonlinearSystem> ScenarioConfig::make_system() const {
    std::unique_ptr<NonlinearSystem> sys;
    if (system.id == "ct") {
        sys = std::make_unique<CtSystem>(system.dt);
    } else if (system.id == "safe_nav") {
        sys = std::make_unique<UnicycleSystem>(system.dt, system.beacons);
    } else if (system.id == "linear") {
        sys = std::make_unique<LinearSystem>(system.A, system.B, system.C);
    } else {
        throw ConfigError("system.id", "unknown system '" + system.id + "'");
    }
    sys->set_curvature(curvature);
    return sys;
}

ScenarioConfig parse_config(const Json& doc) {
    if (!doc.is_object()) throw ConfigError("<root>", "config must be an object");
    ScenarioConfig cfg;
    cfg.name = string_or(doc, "", "name", cfg.name);

    const Json* sys = find(doc, "system");
    if (!sys || !sys->is_object()) throw ConfigError("system", "missing or not an object");
    cfg.system.id = string_or(*sys, "system", "id", "");
    cfg.system.dt = number_or(*sys, "system", "dt", cfg.system.dt);
    if (!(cfg.system.dt > 0.0)) throw ConfigError("system.dt", "must be positive");

    Eigen::Index nx = 0, ny = 0;
    if (cfg.system.id == "ct") {
        nx = 5;
        ny = 2;
    } else if (cfg.system.id == "safe_nav") {
        nx = 3;
        ny = 4;
        const Json* b = find(*sys, "beacons");
        if (!b || !b->is_array() || b->size() != 3) throw ConfigError("system.beacons", "expected three [x, y] pairs");
        for (std::size_t i = 0; i < 3; ++i) {
            const std::string key = "system.beacons[" + std::to_string(i) + "]";
            const Vec p = as_vector((*b)[i], key);
            if (p.size() != 2) throw ConfigError(key, "expected [x, y]");
            cfg.system.beacons[i] = p;
        }
    } else if (cfg.system.id == "linear") {
        auto need = [&](const char* k) -> Mat {
            const Json* j = find(*sys, k);
            if (!j) throw ConfigError(join("system", k), "missing");
            return as_matrix(*j, join("system", k));
        };
        cfg.system.A = need("A");
        cfg.system.C = need("C");
        nx = cfg.system.A.rows();
        ny = cfg.system.C.rows();
        if (cfg.system.A.cols() != nx) throw ConfigError("system.A", "must be square");
        if (cfg.system.C.cols() != nx) throw ConfigError("system.C", "column count must match A");
        const Json* B = find(*sys, "B");
        cfg.system.B = B ? as_matrix(*B, "system.B") : Mat::Zero(nx, 1);
        if (cfg.system.B.rows() != nx) throw ConfigError("system.B", "row count must match A");
    } else {
        throw ConfigError("system.id", "unknown system '" + cfg.system.id + "' (expected ct, safe_nav or linear)");
    }

    cfg.horizon = int_or(doc, "", "horizon", cfg.horizon);
    if (cfg.horizon < 1) throw ConfigError("horizon", "must be at least 1");
    cfg.runs = int_or(doc, "", "runs", cfg.runs);
    if (cfg.runs < 1) throw ConfigError("runs", "must be at least 1");
    if (const Json* s = find(doc, "seed")) {
        if (!s->is_number_integer() || s->get<long long>() < 0) throw ConfigError("seed", "expected a nonnegative integer");
        cfg.seed = s->get<std::uint64_t>();
    }

    const Json* truth = find(doc, "truth");
    if (!truth) throw ConfigError("truth", "missing");
    cfg.truth = parse_noise(*truth, "truth", std::nullopt);
    const Json* nominal = find(doc, "nominal");
    if (!nominal) throw ConfigError("nominal", "missing");
    cfg.nominal = parse_noise(*nominal, "nominal", cfg.truth.x0_mean);

    if (const Json* w = find(doc, "omega0")) {
        if (cfg.system.id != "ct") throw ConfigError("omega0", "only valid for the ct system");
        cfg.omega0 = as_number(*w, "omega0");
        if (cfg.truth.x0_mean.size() == 5) cfg.truth.x0_mean(4) = *cfg.omega0;
        if (cfg.nominal.x0_mean.size() == 5) cfg.nominal.x0_mean(4) = *cfg.omega0;
    }
    check_noise(cfg.truth, "truth", nx, ny, false);
    check_noise(cfg.nominal, "nominal", nx, ny, true);

    if (const Json* th = find(doc, "theta")) cfg.theta = as_list(*th, "theta");
    if (cfg.theta.empty()) throw ConfigError("theta", "must not be empty");
    for (double t : cfg.theta) {
        if (t < 0.0) throw ConfigError("theta", "must be nonnegative");
    }

    cfg.curvature = curvature_constants(cfg.system.id);
    if (const Json* c = find(doc, "curvature")) {
        if (!c->is_object()) throw ConfigError("curvature", "expected an object");
        cfg.curvature.L_f = number_or(*c, "curvature", "L_f", cfg.curvature.L_f);
        cfg.curvature.L_h = number_or(*c, "curvature", "L_h", cfg.curvature.L_h);
        cfg.curvature.alpha_f = number_or(*c, "curvature", "alpha_f", cfg.curvature.alpha_f);
        cfg.curvature.alpha_h = number_or(*c, "curvature", "alpha_h", cfg.curvature.alpha_h);
        cfg.curvature.validate();
    }

    if (const Json* e = find(doc, "envelope")) {
        if (!e->is_object()) throw ConfigError("envelope", "expected an object");
        cfg.envelope_mode = envelope_mode_from_string(string_or(*e, "envelope", "mode", "pathwise"));
        if (const Json* a = find(*e, "a")) cfg.envelopes.a = as_list(*a, "envelope.a");
        if (const Json* m = find(*e, "m")) cfg.envelopes.m = as_list(*m, "envelope.m");
        if (const Json* k = find(*e, "k")) cfg.envelopes.k = as_list(*k, "envelope.k");
        if (cfg.envelope_mode == EnvelopeMode::strict && cfg.envelopes.empty()) {
            throw ConfigError("envelope", "strict mode needs a, m and k sequences");
        }
    }

    if (const Json* s = find(doc, "solver")) {
        cfg.solver.tol_obj = number_or(*s, "solver", "tol_obj", cfg.solver.tol_obj);
        cfg.solver.max_iters = int_or(*s, "solver", "max_iters", cfg.solver.max_iters);
        if (!(cfg.solver.tol_obj > 0.0)) throw ConfigError("solver.tol_obj", "must be positive");
        if (cfg.solver.max_iters < 1) throw ConfigError("solver.max_iters", "must be at least 1");
    }

    if (const Json* e = find(doc, "estimators")) {
        if (!e->is_array() || e->empty()) throw ConfigError("estimators", "expected a nonempty array of names");
        cfg.estimators.clear();
        for (const auto& n : *e) {
            if (!n.is_string()) throw ConfigError("estimators", "expected strings");
            const auto name = n.get<std::string>();
            if (std::find(kEstimatorNames.begin(), kEstimatorNames.end(), name) == kEstimatorNames.end()) {
                throw ConfigError("estimators", "unknown estimator '" + name + "'");
            }
            if (std::find(cfg.estimators.begin(), cfg.estimators.end(), name) != cfg.estimators.end()) {
                throw ConfigError("estimators", "duplicate estimator '" + name + "'");
            }
            cfg.estimators.push_back(name);
        }
    }

    if (const Json* m = find(doc, "mpc"); m && !m->is_null()) {
        if (cfg.system.id != "safe_nav") throw ConfigError("mpc", "closed loop requires the safe_nav system");
        cfg.mpc = parse_mpc(*m, cfg.system.dt);
    }

    if (const Json* p = find(doc, "provenance")) {
        if (!p->is_object()) throw ConfigError("provenance", "expected an object of strings");
        for (auto it = p->begin(); it != p->end(); ++it) {
            if (!it.value().is_string()) throw ConfigError("provenance." + it.key(), "expected a string");
            cfg.provenance[it.key()] = it.value().get<std::string>();
        }
    }
    return cfg;
}

Json to_json(const ScenarioConfig& cfg) {
    Json sys{{"id", cfg.system.id}, {"dt", cfg.system.dt}};
    if (cfg.system.id == "safe_nav") {
        Json b = Json::array();
        for (const auto& p : cfg.system.beacons) b.push_back({p.x(), p.y()});
        sys["beacons"] = b;
    } else if (cfg.system.id == "linear") {
        sys["A"] = matrix_json(cfg.system.A);
        sys["B"] = matrix_json(cfg.system.B);
        sys["C"] = matrix_json(cfg.system.C);
    }
    Json doc{{"name", cfg.name}, {"system", sys}, {"horizon", cfg.horizon}, {"runs", cfg.runs}, {"seed", cfg.seed}};
    if (cfg.omega0) doc["omega0"] = *cfg.omega0;
    doc["truth"] = noise_json(cfg.truth);
    doc["nominal"] = noise_json(cfg.nominal);
    doc["theta"] = cfg.theta.size() == 1 ? Json(cfg.theta.front()) : Json(cfg.theta);
    doc["curvature"] = {{"L_f", cfg.curvature.L_f},
                        {"L_h", cfg.curvature.L_h},
                        {"alpha_f", cfg.curvature.alpha_f},
                        {"alpha_h", cfg.curvature.alpha_h}};
    Json env{{"mode", to_string(cfg.envelope_mode)}};
    if (!cfg.envelopes.a.empty()) env["a"] = cfg.envelopes.a;
    if (!cfg.envelopes.m.empty()) env["m"] = cfg.envelopes.m;
    if (!cfg.envelopes.k.empty()) env["k"] = cfg.envelopes.k;
    doc["envelope"] = env;
    doc["solver"] = {{"tol_obj", cfg.solver.tol_obj}, {"max_iters", cfg.solver.max_iters}};
    doc["estimators"] = cfg.estimators;
    if (cfg.mpc) doc["mpc"] = mpc_json(*cfg.mpc);
    if (!cfg.provenance.empty()) {
        Json p = Json::object();
        for (const auto& [k, v] : cfg.provenance) p[k] = v;
        doc["provenance"] = p;
    }
    return doc;
}

Json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
    try {
        return Json::parse(in, nullptr, true, true);
    } catch (const Json::parse_error& e) {
        throw ConfigError("--config", "'" + path + "' is not valid JSON: " + e.what());
    }
}

void apply_override(Json& doc, const std::string& key, const Json& value) {
    const auto parts = split(key, '.');
    if (parts.empty() || key.empty()) throw ConfigError(key, "empty override key");
    Json* node = &doc;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (parts[i].empty()) throw ConfigError(key, "empty path component");
        if (!node->is_object()) throw ConfigError(key, "'" + parts[i] + "' is not inside an object");
        node = &(*node)[parts[i]];
        if (node->is_null()) *node = Json::object();
    }
    if (!node->is_object()) throw ConfigError(key, "parent is not an object");
    (*node)[parts.back()] = value;
}

void apply_override(Json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must look like key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    Json value;
    try {
        value = Json::parse(text);
    } catch (const Json::parse_error&) {
        value = text;
    }
    apply_override(doc, key, value);
}

Json config_template(const std::string& system_id) {
    ScenarioConfig cfg;
    cfg.system.id = system_id;
    if (system_id == "ct") {
        cfg.name = "ct_template";
        Vec mu(5);
        mu << 0, 0, 2, 0, 0.3;
        Vec p0(5), w(5), v(2);
        p0 << 0.04, 0.04, 0.25, 0.25, 0.0025;
        w << 1e-4, 1e-4, 0.0025, 0.0025, 4e-4;
        v << 1e-4, 0.25;
        cfg.truth = NoiseModel::zero_mean(mu, PsdMatrixd::diagonal(p0), PsdMatrixd::diagonal(w), PsdMatrixd::diagonal(v));
        cfg.nominal = NoiseModel::zero_mean(mu, PsdMatrixd::diagonal(0.1 * p0), PsdMatrixd::diagonal(0.1 * w),
                                            PsdMatrixd::diagonal(0.1 * v));
        cfg.theta = {0.001};
    } else if (system_id == "safe_nav") {
        cfg.name = "safe_nav_template";
        cfg.horizon = 11;
        cfg.system.beacons = {Eigen::Vector2d(0, 6), Eigen::Vector2d(6, -4), Eigen::Vector2d(12, 6)};
        const Vec mu = Vec::Zero(3);
        cfg.truth = NoiseModel::zero_mean(mu, PsdMatrixd::diagonal(Eigen::Vector3d(0.01, 0.01, 0.001)),
                                          PsdMatrixd::diagonal(Eigen::Vector3d(0.008, 0.008, 0.002)),
                                          PsdMatrixd::diagonal(Eigen::Vector4d(0.04, 0.04, 0.04, 0.03)));
        cfg.nominal = NoiseModel::zero_mean(mu, PsdMatrixd::diagonal(Eigen::Vector3d(0.01, 0.01, 0.001)),
                                            PsdMatrixd::diagonal(Eigen::Vector3d(0.002, 0.002, 0.0005)),
                                            PsdMatrixd::diagonal(Eigen::Vector4d(0.005, 0.005, 0.005, 0.0075)));
        cfg.theta = {0.25};
        MpcConfig m;
        m.goal = Eigen::Vector2d(3.6, 0);
        m.obstacles.push_back({Eigen::Vector2d(2.0, 0.1), 1.0});
        cfg.mpc = m;
    } else if (system_id == "linear") {
        cfg.name = "linear_template";
        cfg.system.A = Mat::Identity(2, 2);
        cfg.system.A(0, 1) = 0.1;
        cfg.system.B = Mat::Zero(2, 1);
        cfg.system.C = Mat::Identity(1, 2);
        const Vec mu = Vec::Zero(2);
        cfg.truth = NoiseModel::zero_mean(mu, PsdMatrixd::identity(2), PsdMatrixd::diagonal(Eigen::Vector2d(0.01, 0.01)),
                                          PsdMatrixd::diagonal(Vec::Constant(1, 0.1)));
        cfg.nominal = cfg.truth;
        cfg.theta = {0.1};
    } else {
        throw ConfigError("--template", "unknown system '" + system_id + "'");
    }
    cfg.curvature = curvature_constants(system_id);
    return to_json(cfg);
}

}  // namespace drekf
