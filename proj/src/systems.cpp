#include "drekf/systems.hpp"

#include <numbers>

namespace drekf {
namespace {

constexpr double kSmallTurn = 1e-6;

void require_size(const Vec& v, Eigen::Index n, const char* what) {
    if (v.size() != n) {
        throw DimensionError(std::string(what) + " must have length " + std::to_string(n) + ", got " +
                             std::to_string(v.size()));
    }
}

// sin(w dt)/w, (1 - cos(w dt))/w and their derivatives in w.
struct TurnTerms {
    double a, b, da, db;
};

TurnTerms turn_terms(double w, double dt) {
    const double wt = w * dt;
    if (std::abs(wt) < kSmallTurn) {
        const double dt2 = dt * dt, dt3 = dt2 * dt;
        return {dt - w * w * dt3 / 6.0, w * dt2 / 2.0 - w * w * w * dt3 * dt / 24.0, -w * dt3 / 3.0,
                dt2 / 2.0 - w * w * dt2 * dt2 / 8.0};
    }
    const double s = std::sin(wt), c = std::cos(wt);
    return {s / w, (1.0 - c) / w, (dt * c * w - s) / (w * w), (dt * s * w - (1.0 - c)) / (w * w)};
}

}  // namespace

double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::remainder(a, two_pi);
    if (r <= -std::numbers::pi) r += two_pi;
    return r;
}

bool Box::contains(const Vec& x) const {
    if (x.size() != lower.size() || x.size() != upper.size()) return false;
    return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

Vec ct_dynamics(const Vec& x, double dt) {
    require_size(x, 5, "CT state");
    const double vx = x(2), vy = x(3), w = x(4);
    const TurnTerms t = turn_terms(w, dt);
    const double s = std::sin(w * dt), c = std::cos(w * dt);
    Vec out(5);
    out << x(0) + t.a * vx - t.b * vy, x(1) + t.b * vx + t.a * vy, c * vx - s * vy, s * vx + c * vy, w;
    return out;
}

Mat ct_dynamics_jacobian(const Vec& x, double dt) {
    require_size(x, 5, "CT state");
    const double vx = x(2), vy = x(3), w = x(4);
    const TurnTerms t = turn_terms(w, dt);
    const double s = std::sin(w * dt), c = std::cos(w * dt);
    Mat J(5, 5);
    J << 1, 0, t.a, -t.b, t.da * vx - t.db * vy,
         0, 1, t.b, t.a, t.db * vx + t.da * vy,
         0, 0, c, -s, -dt * (s * vx + c * vy),
         0, 0, s, c, dt * (c * vx - s * vy),
         0, 0, 0, 0, 1;
    return J;
}

Vec ct_measurement(const Vec& x) {
    require_size(x, 5, "CT state");
    const double r = std::hypot(x(0), x(1));
    if (r < kRangeFloor) throw SingularMeasurementError("CT measurement: target at the sensor (range below floor)");
    Vec y(2);
    y << r, std::atan2(x(1), x(0));
    return y;
}

Mat ct_measurement_jacobian(const Vec& x) {
    require_size(x, 5, "CT state");
    const double px = x(0), py = x(1);
    const double r = std::max(std::hypot(px, py), kRangeFloor);
    const double r2 = std::max(px * px + py * py, kRangeFloor * kRangeFloor);
    Mat H = Mat::Zero(2, 5);
    H(0, 0) = px / r;
    H(0, 1) = py / r;
    H(1, 0) = -py / r2;
    H(1, 1) = px / r2;
    return H;
}

CtSystem::CtSystem(double dt) : dt_(dt) {
    if (!(dt > 0.0)) throw ConfigError("dt", "must be positive");
    curvature_ = curvature_constants("ct");
}

Vec CtSystem::f(const Vec& x, const Vec&) const { return ct_dynamics(x, dt_); }

Vec CtSystem::h(const Vec& x) const {
    require_size(x, 5, "CT state");
    Vec y(2);
    y << std::hypot(x(0), x(1)), std::atan2(x(1), x(0));
    return y;
}

Mat CtSystem::jac_f(const Vec& x, const Vec&) const { return ct_dynamics_jacobian(x, dt_); }
Mat CtSystem::jac_h(const Vec& x) const { return ct_measurement_jacobian(x); }

Vec CtSystem::measurement_residual(const Vec& y, const Vec& yhat) const {
    Vec r = y - yhat;
    r(1) = wrap_angle(r(1));
    return r;
}

Vec unicycle_dynamics(const Vec& x, const Vec& u, double dt) {
    require_size(x, 3, "unicycle state");
    require_size(u, 2, "unicycle input");
    Vec out(3);
    out << x(0) + u(0) * std::cos(x(2)) * dt, x(1) + u(0) * std::sin(x(2)) * dt, wrap_angle(x(2) + u(1) * dt);
    return out;
}

Mat unicycle_dynamics_jacobian(const Vec& x, const Vec& u, double dt) {
    require_size(x, 3, "unicycle state");
    require_size(u, 2, "unicycle input");
    Mat J = Mat::Identity(3, 3);
    J(0, 2) = -u(0) * std::sin(x(2)) * dt;
    J(1, 2) = u(0) * std::cos(x(2)) * dt;
    return J;
}

Vec beacon_measurement(const Vec& x, const Beacons& beacons) {
    require_size(x, 3, "unicycle state");
    Vec y(4);
    for (int i = 0; i < 3; ++i) {
        const double r = (x.head<2>() - beacons[i]).norm();
        if (r < kRangeFloor) {
            throw SingularMeasurementError("beacon measurement: robot on top of beacon " + std::to_string(i + 1));
        }
        y(i) = r;
    }
    y(3) = x(2);
    return y;
}

Mat beacon_measurement_jacobian(const Vec& x, const Beacons& beacons) {
    require_size(x, 3, "unicycle state");
    Mat H = Mat::Zero(4, 3);
    for (int i = 0; i < 3; ++i) {
        const Eigen::Vector2d d = x.head<2>() - beacons[i];
        const double r = std::max(d.norm(), kRangeFloor);
        H(i, 0) = d.x() / r;
        H(i, 1) = d.y() / r;
    }
    H(3, 2) = 1.0;
    return H;
}

UnicycleSystem::UnicycleSystem(double dt, const Beacons& beacons) : dt_(dt), beacons_(beacons) {
    if (!(dt > 0.0)) throw ConfigError("dt", "must be positive");
    curvature_ = curvature_constants("unicycle");
}

Vec UnicycleSystem::f(const Vec& x, const Vec& u) const { return unicycle_dynamics(x, u, dt_); }
Vec UnicycleSystem::h(const Vec& x) const { return beacon_measurement(x, beacons_); }
Mat UnicycleSystem::jac_f(const Vec& x, const Vec& u) const { return unicycle_dynamics_jacobian(x, u, dt_); }
Mat UnicycleSystem::jac_h(const Vec& x) const { return beacon_measurement_jacobian(x, beacons_); }

Vec UnicycleSystem::measurement_residual(const Vec& y, const Vec& yhat) const {
    Vec r = y - yhat;
    r(3) = wrap_angle(r(3));
    return r;
}

Vec UnicycleSystem::state_difference(const Vec& a, const Vec& b) const {
    Vec d = a - b;
    d(2) = wrap_angle(d(2));
    return d;
}

Vec UnicycleSystem::normalize_state(const Vec& x) const {
    Vec out = x;
    out(2) = wrap_angle(out(2));
    return out;
}

LinearSystem::LinearSystem(Mat A, Mat B, Mat C) : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)) {
    require_square(A_, "A");
    if (C_.cols() != A_.rows()) throw DimensionError("linear system: C must have as many columns as A");
    if (B_.size() == 0) B_ = Mat::Zero(A_.rows(), 0);
    if (B_.rows() != A_.rows()) throw DimensionError("linear system: B must have as many rows as A");
    curvature_ = CurvatureConstants{0.0, 0.0};
}

Vec LinearSystem::f(const Vec& x, const Vec& u) const {
    Vec out = A_ * x;
    if (B_.cols() > 0) out += B_ * u;
    return out;
}

CurvatureConstants curvature_constants(const std::string& system_id) {
    if (system_id == "ct") return {0.3, 0.2};
    if (system_id == "safe_nav" || system_id == "unicycle") return {0.3, 0.5};
    if (system_id == "linear") return {0.0, 0.0};
    throw ConfigError("system.id", "unknown system '" + system_id + "'");
}

}  // namespace drekf
