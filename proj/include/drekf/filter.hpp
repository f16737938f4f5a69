#pragma once

// Residual-aware DR-EKF with its recursive MSE certificate, and a baseline EKF.
// Both split a stage into update(y_t) followed by predict(u_t) so that a
// controller can act on the posterior in between.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "drekf/ambiguity.hpp"
#include "drekf/stage_sdp.hpp"
#include "drekf/systems.hpp"

namespace drekf {

/// Nominal (or true) noise statistics for a whole run; time-invariant.
struct NoiseModel {
    Vec x0_mean;
    PsdMatrixd x0_cov;
    Vec w_mean;
    PsdMatrixd w_cov;
    Vec v_mean;
    PsdMatrixd v_cov;

    /// Zero means, given covariances.
    static NoiseModel zero_mean(const Vec& x0_mean, const PsdMatrixd& x0_cov, const PsdMatrixd& w_cov,
                                const PsdMatrixd& v_cov);
    void validate(Eigen::Index nx, Eigen::Index ny) const;
};

enum class EnvelopeMode { strict, pathwise };

std::string to_string(EnvelopeMode mode);
EnvelopeMode envelope_mode_from_string(const std::string& s);

/// Envelope sequences {a_t, m_t, k_t}. Shorter sequences hold their last value.
struct Envelopes {
    std::vector<double> a, m, k;

    bool empty() const { return a.empty() || m.empty() || k.empty(); }
    double a_at(int t) const;
    double m_at(int t) const;
    double k_at(int t) const;
};

struct FilterState {
    int t = 0;
    Vec prior_mean;
    Mat prior_cov;
    Vec posterior_mean;
    Mat posterior_cov;
};

struct CertificateState {
    EnvelopeMode mode = EnvelopeMode::pathwise;
    double gamma = 0.0;
    double s_bar = 0.0;
    double rho_prior = 0.0;
    double rho = 0.0;
    double v_bar = 0.0;
    /// Posterior RMS bound fed into gamma_{t+1} and eta^f_t: v_bar in strict
    /// mode, sqrt(Tr Sigma*_x,t) in pathwise mode.
    double v_radius = 0.0;
    double eta_f_prev = 0.0;  ///< bar-eta^f_{t-1} entering this stage's radius
    double eta_f = 0.0;       ///< bar-eta^f_t produced at the end of this stage
    double eta_h = 0.0;
    double theta = 0.0;
    double theta_eff = 0.0;
    double a = 0.0;  ///< envelope used for A_t (after predict)
    double m = 0.0;
    double k = 0.0;
};

struct StageRecord {
    FilterState state;
    CertificateState certificate;
    SolverDiagnostics diagnostics;
    Vec innovation;
    Mat gain;
    bool in_region = true;
    /// Kept only with DrEkfOptions::keep_stage_problems.
    std::optional<StageSdpProblem> problem;
    std::optional<StageSdpSolution> solution;
};

struct FilterTrace {
    std::vector<StageRecord> stages;

    /// One JSON object per line, one line per stage.
    void write_jsonl(std::ostream& os) const;
    bool left_region() const;
};

struct DrEkfOptions {
    EnvelopeMode mode = EnvelopeMode::pathwise;
    Envelopes envelopes;
    SolverOptions solver;
    bool keep_stage_problems = false;
};

class DrEkf {
public:
    /// `theta` is indexed by stage and holds its last value.
    DrEkf(const NonlinearSystem& system, NoiseModel nominal, std::vector<double> theta, DrEkfOptions options = {});

    /// Consumes y_t: solves the stage problem, updates the posterior and the
    /// certificate up to V_t.
    const StageRecord& update(const Vec& y);
    /// Linearizes at the posterior, propagates the mean and rho^-_{t+1}.
    void predict(const Vec& u);
    const StageRecord& step(const Vec& y, const Vec& u);

    int stage() const { return t_; }
    const Vec& prior_mean() const { return prior_mean_; }
    const Vec& posterior_mean() const;
    const Mat& posterior_cov() const;
    double rho_prior() const { return rho_prior_; }
    double eta_f_prev() const { return eta_f_prev_; }
    const FilterTrace& trace() const { return trace_; }

private:
    double theta_at(int t) const;

    const NonlinearSystem& sys_;
    NoiseModel nominal_;
    std::vector<double> theta_;
    DrEkfOptions opts_;
    NominalStackedNoise stage0_noise_, stage_noise_;

    int t_ = 0;
    bool updated_ = false;
    Vec prior_mean_;
    Mat A_prev_;
    double a_prev_ = 0.0;
    double rho_prior_ = 0.0;
    double eta_f_prev_ = 0.0;
    double v_bar_prev_ = 0.0;
    double s_bar_prev_ = 0.0;
    FilterTrace trace_;
};

class Ekf {
public:
    Ekf(const NonlinearSystem& system, NoiseModel stats);

    const StageRecord& update(const Vec& y);
    void predict(const Vec& u);
    const StageRecord& step(const Vec& y, const Vec& u);

    int stage() const { return t_; }
    const Vec& prior_mean() const { return prior_mean_; }
    const Mat& prior_cov() const { return prior_cov_; }
    const Vec& posterior_mean() const;
    const Mat& posterior_cov() const;
    const FilterTrace& trace() const { return trace_; }

private:
    const NonlinearSystem& sys_;
    NoiseModel stats_;
    int t_ = 0;
    bool updated_ = false;
    Vec prior_mean_;
    Mat prior_cov_;
    FilterTrace trace_;
};

struct AuditStage {
    int t = 0;
    double mse = 0.0;        ///< empirical E||e_t||^2
    double prior_mse = 0.0;  ///< empirical E||e_t^-||^2
    double v_bar_sq = 0.0;
    double gamma_sq = 0.0;
    bool posterior_violated = false;
    bool prior_violated = false;
};

struct CertificateAudit {
    EnvelopeMode mode = EnvelopeMode::pathwise;
    std::vector<AuditStage> stages;
    int violations() const;
    std::string label() const;
};

/// Compares Monte Carlo errors with the certificate. `errors[r][t]` and
/// `prior_errors[r][t]` are the run-r, stage-t posterior and prior errors;
/// `certificates[t]` holds the bound used at stage t (from one trace, or the
/// per-stage maximum over runs when the bound is data dependent).
CertificateAudit certificate_audit(const std::vector<CertificateState>& certificates,
                                   const std::vector<std::vector<Vec>>& errors,
                                   const std::vector<std::vector<Vec>>& prior_errors);

}  // namespace drekf
