#include "drekf/filter.hpp"

#include <algorithm>
#include <ostream>

#include "json.hpp"

namespace drekf {
namespace {

constexpr double kEkfRegularization = 1e-12;

double hold_last(const std::vector<double>& seq, int t, const char* name) {
    if (seq.empty()) throw ConfigError(name, "envelope sequence is empty");
    const auto i = std::min<std::size_t>(std::size_t(std::max(t, 0)), seq.size() - 1);
    return seq[i];
}

nlohmann::json to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json to_json(const Mat& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row(m.cols());
        for (Eigen::Index j = 0; j < m.cols(); ++j) row[j] = m(i, j);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

NoiseModel NoiseModel::zero_mean(const Vec& x0_mean, const PsdMatrixd& x0_cov, const PsdMatrixd& w_cov,
                                 const PsdMatrixd& v_cov) {
    return {x0_mean, x0_cov, Vec::Zero(w_cov.dim()), w_cov, Vec::Zero(v_cov.dim()), v_cov};
}

void NoiseModel::validate(Eigen::Index nx, Eigen::Index ny) const {
    if (x0_mean.size() != nx || x0_cov.dim() != nx) throw DimensionError("noise model: initial state has wrong size");
    if (w_mean.size() != nx || w_cov.dim() != nx) throw DimensionError("noise model: process noise has wrong size");
    if (v_mean.size() != ny || v_cov.dim() != ny) throw DimensionError("noise model: measurement noise has wrong size");
}

std::string to_string(EnvelopeMode mode) { return mode == EnvelopeMode::strict ? "strict" : "pathwise"; }

EnvelopeMode envelope_mode_from_string(const std::string& s) {
    if (s == "strict") return EnvelopeMode::strict;
    if (s == "pathwise") return EnvelopeMode::pathwise;
    throw ConfigError("envelope.mode", "expected 'strict' or 'pathwise', got '" + s + "'");
}

double Envelopes::a_at(int t) const { return hold_last(a, t, "envelope.a"); }
double Envelopes::m_at(int t) const { return hold_last(m, t, "envelope.m"); }
double Envelopes::k_at(int t) const { return hold_last(k, t, "envelope.k"); }

void FilterTrace::write_jsonl(std::ostream& os) const {
    for (const auto& s : stages) {
        const auto& c = s.certificate;
        nlohmann::json j = {
            {"t", s.state.t},
            {"prior_mean", to_json(s.state.prior_mean)},
            {"posterior_mean", to_json(s.state.posterior_mean)},
            {"posterior_cov", to_json(s.state.posterior_cov)},
            {"innovation", to_json(s.innovation)},
            {"gain", to_json(s.gain)},
            {"in_region", s.in_region},
            {"certificate",
             {{"mode", to_string(c.mode)}, {"gamma", c.gamma}, {"s_bar", c.s_bar}, {"rho_prior", c.rho_prior},
              {"rho", c.rho}, {"v_bar", c.v_bar}, {"v_radius", c.v_radius}, {"eta_f_prev", c.eta_f_prev}, {"eta_f", c.eta_f},
              {"eta_h", c.eta_h}, {"theta", c.theta}, {"theta_eff", c.theta_eff}, {"a", c.a}, {"m", c.m},
              {"k", c.k}}},
            {"solver",
             {{"method", s.diagnostics.method}, {"iterations", s.diagnostics.iterations},
              {"feasibility_residual", s.diagnostics.feasibility_residual},
              {"objective_gap", s.diagnostics.objective_gap}}},
        };
        os << j.dump() << '\n';
    }
}

bool FilterTrace::left_region() const {
    return std::any_of(stages.begin(), stages.end(), [](const auto& s) { return !s.in_region; });
}

DrEkf::DrEkf(const NonlinearSystem& system, NoiseModel nominal, std::vector<double> theta, DrEkfOptions options)
    : sys_(system),
      nominal_(std::move(nominal)),
      theta_(std::move(theta)),
      opts_(std::move(options)),
      stage0_noise_((nominal_.validate(system.nx(), system.ny()), nominal_.x0_mean), nominal_.x0_cov,
                    nominal_.v_mean, nominal_.v_cov),
      stage_noise_(nominal_.w_mean, nominal_.w_cov, nominal_.v_mean, nominal_.v_cov),
      prior_mean_(nominal_.x0_mean) {
    if (theta_.empty()) throw ConfigError("theta", "radius sequence is empty");
    for (double th : theta_) {
        if (!std::isfinite(th) || th < 0.0) throw ConfigError("theta", "radius must be finite and nonnegative");
    }
    if (opts_.mode == EnvelopeMode::strict && opts_.envelopes.empty()) {
        throw ConfigError("envelope", "strict mode needs nonempty a, m and k sequences");
    }
    sys_.curvature().validate();
}

double DrEkf::theta_at(int t) const { return theta_[std::min<std::size_t>(std::size_t(t), theta_.size() - 1)]; }

const Vec& DrEkf::posterior_mean() const {
    if (trace_.stages.empty()) throw Error("DR-EKF: no posterior before the first update");
    return trace_.stages.back().state.posterior_mean;
}

const Mat& DrEkf::posterior_cov() const {
    if (trace_.stages.empty()) throw Error("DR-EKF: no posterior before the first update");
    return trace_.stages.back().state.posterior_cov;
}

const StageRecord& DrEkf::update(const Vec& y) {
    if (updated_) throw Error("DR-EKF: update called twice without predict");
    if (y.size() != sys_.ny()) throw DimensionError("DR-EKF: measurement has wrong size");
    require_finite(y, "measurement");

    const bool initial = t_ == 0;
    const auto& curv = sys_.curvature();
    const double theta = theta_at(t_);
    const NominalStackedNoise& noise = initial ? stage0_noise_ : stage_noise_;

    const Mat C = sys_.jac_h(prior_mean_);
    if (!std::isfinite(v_bar_prev_) || !std::isfinite(eta_f_prev_)) {
        throw ConvergenceError("DR-EKF: certificate is no longer finite", t_);
    }
    const PriorMomentBound pmb = prior_moment_bound(v_bar_prev_, a_prev_, noise, theta, curv, initial);
    const AmbiguityRadius radius = effective_radius(pmb.gamma, eta_f_prev_, theta, curv);
    if (!std::isfinite(radius.effective)) {
        throw ConvergenceError("DR-EKF: effective radius overflowed (certificate diverged)", t_);
    }

    std::optional<Mat> A;
    std::optional<PsdMatrixd> carried;
    if (!initial) {
        A = A_prev_;
        carried = PsdMatrixd(trace_.stages.back().state.posterior_cov);
    }
    const StageSdpProblem problem = build_stage_problem(A, C, carried, noise, radius.effective, initial);
    StageSdpSolution sol;
    try {
        sol = solve_stage_sdp(problem, opts_.solver);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConvergenceError(e.what(), t_);
    }

    if (!sol.posterior_cov.allFinite() || !sol.gain.allFinite()) {
        throw ConvergenceError("DR-EKF: stage solution is not finite", t_);
    }

    StageRecord rec;
    rec.state.t = t_;
    rec.state.prior_mean = prior_mean_;
    rec.state.prior_cov = sol.prior_cov;
    rec.innovation = sys_.measurement_residual(y - nominal_.v_mean, sys_.h(prior_mean_));
    rec.gain = sol.gain;
    rec.state.posterior_mean = sys_.normalize_state(prior_mean_ + sol.gain * rec.innovation);
    rec.state.posterior_cov = sol.posterior_cov;
    rec.diagnostics = sol.diagnostics;
    if (const auto& box = sys_.operating_region()) rec.in_region = box->contains(rec.state.posterior_mean);
    if (opts_.keep_stage_problems) {
        rec.problem = problem;
        rec.solution = sol;
    }

    CertificateState& c = rec.certificate;
    c.mode = opts_.mode;
    c.theta = theta;
    c.gamma = pmb.gamma;
    c.eta_f_prev = eta_f_prev_;
    c.eta_h = radius.residual_h;
    c.theta_eff = radius.effective;
    if (opts_.mode == EnvelopeMode::pathwise) {
        const Eigen::Index nx = sys_.nx();
        c.m = spectral_norm((Mat::Identity(nx, nx) - sol.gain * C).eval());
        c.k = spectral_norm(sol.gain);
    } else {
        c.m = opts_.envelopes.m_at(t_);
        c.k = opts_.envelopes.k_at(t_);
    }
    c.rho_prior = rho_prior_;
    c.rho = c.m * rho_prior_ + c.k * c.eta_h;
    const double root_v = std::sqrt(nominal_.v_cov.trace());
    const double carried_s = initial ? std::sqrt(nominal_.x0_cov.trace())
                                     : a_prev_ * s_bar_prev_ + std::sqrt(nominal_.w_cov.trace());
    c.s_bar = c.m * carried_s + c.k * root_v + (c.m + c.k) * theta;
    c.v_bar = c.s_bar + c.rho;

    trace_.stages.push_back(std::move(rec));
    updated_ = true;
    return trace_.stages.back();
}

void DrEkf::predict(const Vec& u) {
    if (!updated_) throw Error("DR-EKF: predict called before update");
    StageRecord& rec = trace_.stages.back();
    CertificateState& c = rec.certificate;
    const auto& curv = sys_.curvature();
    const Vec& post = rec.state.posterior_mean;

    A_prev_ = sys_.jac_f(post, u);
    c.a = opts_.mode == EnvelopeMode::pathwise ? spectral_norm(A_prev_) : opts_.envelopes.a_at(t_);
    // Pathwise mode feeds the realized posterior spread into the next radius;
    // the literal recursion has no fixed point once a_t m_t >= 1.
    c.v_radius = opts_.mode == EnvelopeMode::pathwise ? std::sqrt(rec.state.posterior_cov.trace()) : c.v_bar;
    c.eta_f = 0.5 * curv.L_f * curv.alpha_f * c.v_radius * c.v_radius;

    prior_mean_ = sys_.normalize_state(sys_.f(post, u) + nominal_.w_mean);
    rho_prior_ = c.a * c.rho + c.eta_f;
    a_prev_ = c.a;
    eta_f_prev_ = c.eta_f;
    v_bar_prev_ = c.v_radius;
    s_bar_prev_ = c.s_bar;
    ++t_;
    updated_ = false;
}

const StageRecord& DrEkf::step(const Vec& y, const Vec& u) {
    update(y);
    predict(u);
    return trace_.stages.back();
}

Ekf::Ekf(const NonlinearSystem& system, NoiseModel stats)
    : sys_(system), stats_(std::move(stats)), prior_mean_(stats_.x0_mean), prior_cov_(stats_.x0_cov.matrix()) {
    stats_.validate(system.nx(), system.ny());
}

const Vec& Ekf::posterior_mean() const {
    if (trace_.stages.empty()) throw Error("EKF: no posterior before the first update");
    return trace_.stages.back().state.posterior_mean;
}

const Mat& Ekf::posterior_cov() const {
    if (trace_.stages.empty()) throw Error("EKF: no posterior before the first update");
    return trace_.stages.back().state.posterior_cov;
}

const StageRecord& Ekf::update(const Vec& y) {
    if (updated_) throw Error("EKF: update called twice without predict");
    if (y.size() != sys_.ny()) throw DimensionError("EKF: measurement has wrong size");
    require_finite(y, "measurement");

    const Mat C = sys_.jac_h(prior_mean_);
    const Eigen::Index ny = sys_.ny();
    const Mat S = symmetrize(C * prior_cov_ * C.transpose() + stats_.v_cov.matrix()) +
                  kEkfRegularization * Mat::Identity(ny, ny);
    const Mat PCt = prior_cov_ * C.transpose();
    const Mat K = S.llt().solve(PCt.transpose()).transpose();

    StageRecord rec;
    rec.state.t = t_;
    rec.state.prior_mean = prior_mean_;
    rec.state.prior_cov = prior_cov_;
    rec.innovation = sys_.measurement_residual(y - stats_.v_mean, sys_.h(prior_mean_));
    rec.gain = K;
    rec.state.posterior_mean = sys_.normalize_state(prior_mean_ + K * rec.innovation);
    rec.state.posterior_cov = symmetrize(prior_cov_ - K * PCt.transpose());
    rec.diagnostics.method = "ekf";
    if (const auto& box = sys_.operating_region()) rec.in_region = box->contains(rec.state.posterior_mean);

    trace_.stages.push_back(std::move(rec));
    updated_ = true;
    return trace_.stages.back();
}

void Ekf::predict(const Vec& u) {
    if (!updated_) throw Error("EKF: predict called before update");
    const auto& st = trace_.stages.back().state;
    const Mat A = sys_.jac_f(st.posterior_mean, u);
    prior_mean_ = sys_.normalize_state(sys_.f(st.posterior_mean, u) + stats_.w_mean);
    prior_cov_ = symmetrize(A * st.posterior_cov * A.transpose() + stats_.w_cov.matrix());
    ++t_;
    updated_ = false;
}

const StageRecord& Ekf::step(const Vec& y, const Vec& u) {
    update(y);
    predict(u);
    return trace_.stages.back();
}

int CertificateAudit::violations() const {
    int n = 0;
    for (const auto& s : stages) n += int(s.posterior_violated) + int(s.prior_violated);
    return n;
}

std::string CertificateAudit::label() const {
    return mode == EnvelopeMode::strict ? "strict envelopes"
                                        : "pathwise surrogate; Theorem 1 guarantee not formally claimed";
}

CertificateAudit certificate_audit(const std::vector<CertificateState>& certificates,
                                   const std::vector<std::vector<Vec>>& errors,
                                   const std::vector<std::vector<Vec>>& prior_errors) {
    CertificateAudit report;
    if (!certificates.empty()) report.mode = certificates.front().mode;
    if (errors.empty()) return report;
    if (prior_errors.size() != errors.size()) throw DimensionError("certificate audit: run counts differ");
    const std::size_t T = certificates.size();
    for (std::size_t r = 0; r < errors.size(); ++r) {
        if (errors[r].size() != T || prior_errors[r].size() != T) {
            throw DimensionError("certificate audit: run " + std::to_string(r) + " is not aligned with the trace");
        }
    }
    const double runs = double(errors.size());
    for (std::size_t t = 0; t < T; ++t) {
        AuditStage s;
        s.t = int(t);
        for (std::size_t r = 0; r < errors.size(); ++r) {
            s.mse += errors[r][t].squaredNorm() / runs;
            s.prior_mse += prior_errors[r][t].squaredNorm() / runs;
        }
        s.v_bar_sq = certificates[t].v_bar * certificates[t].v_bar;
        s.gamma_sq = certificates[t].gamma * certificates[t].gamma;
        s.posterior_violated = s.mse > s.v_bar_sq;
        s.prior_violated = s.prior_mse > s.gamma_sq;
        report.stages.push_back(s);
    }
    return report;
}

}  // namespace drekf
