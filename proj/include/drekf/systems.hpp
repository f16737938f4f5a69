#pragma once

// Nonlinear system models x_{t+1} = f(x_t, u_t) + w_t, y_t = h(x_t) + v_t
// with analytic Jacobians, plus the coordinated-turn and unicycle benchmarks.

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "drekf/ambiguity.hpp"
#include "drekf/psd.hpp"

namespace drekf {

inline constexpr double kRangeFloor = 1e-6;

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// Axis-aligned box used as the declared operating region.
struct Box {
    Vec lower, upper;
    bool contains(const Vec& x) const;
};

class NonlinearSystem {
public:
    virtual ~NonlinearSystem() = default;

    virtual std::string id() const = 0;
    virtual Eigen::Index nx() const = 0;
    virtual Eigen::Index nu() const = 0;
    virtual Eigen::Index ny() const = 0;

    virtual Vec f(const Vec& x, const Vec& u) const = 0;
    virtual Vec h(const Vec& x) const = 0;
    virtual Mat jac_f(const Vec& x, const Vec& u) const = 0;
    virtual Mat jac_h(const Vec& x) const = 0;

    /// y - yhat with angular components wrapped.
    virtual Vec measurement_residual(const Vec& y, const Vec& yhat) const { return y - yhat; }
    /// a - b with angular state components wrapped.
    virtual Vec state_difference(const Vec& a, const Vec& b) const { return a - b; }
    /// Brings a state back to its canonical representation (angle wrap).
    virtual Vec normalize_state(const Vec& x) const { return x; }

    const CurvatureConstants& curvature() const { return curvature_; }
    void set_curvature(const CurvatureConstants& c) {
        c.validate();
        curvature_ = c;
    }
    const std::optional<Box>& operating_region() const { return region_; }
    void set_operating_region(std::optional<Box> box) { region_ = std::move(box); }

protected:
    CurvatureConstants curvature_;
    std::optional<Box> region_;
};

// Coordinated turn, state [px, py, vx, vy, omega], measurement [range, bearing].

Vec ct_dynamics(const Vec& x, double dt);
Mat ct_dynamics_jacobian(const Vec& x, double dt);
/// Throws SingularMeasurementError when ||p|| < kRangeFloor.
Vec ct_measurement(const Vec& x);
Mat ct_measurement_jacobian(const Vec& x);

class CtSystem final : public NonlinearSystem {
public:
    explicit CtSystem(double dt);

    std::string id() const override { return "ct"; }
    Eigen::Index nx() const override { return 5; }
    Eigen::Index nu() const override { return 0; }
    Eigen::Index ny() const override { return 2; }
    double dt() const { return dt_; }

    Vec f(const Vec& x, const Vec& u) const override;
    /// Unlike ct_measurement, evaluates at the origin (bearing 0) so a filter
    /// linearized at a zero prior mean keeps running.
    Vec h(const Vec& x) const override;
    Mat jac_f(const Vec& x, const Vec& u) const override;
    /// Range denominators are floored at kRangeFloor.
    Mat jac_h(const Vec& x) const override;
    Vec measurement_residual(const Vec& y, const Vec& yhat) const override;

private:
    double dt_;
};

// Unicycle, state [px, py, psi], input [s, omega], measurement
// [|p - b1|, |p - b2|, |p - b3|, psi].

using Beacons = std::array<Eigen::Vector2d, 3>;

Vec unicycle_dynamics(const Vec& x, const Vec& u, double dt);
Mat unicycle_dynamics_jacobian(const Vec& x, const Vec& u, double dt);
/// Throws SingularMeasurementError when p is within kRangeFloor of a beacon.
Vec beacon_measurement(const Vec& x, const Beacons& beacons);
Mat beacon_measurement_jacobian(const Vec& x, const Beacons& beacons);

class UnicycleSystem final : public NonlinearSystem {
public:
    UnicycleSystem(double dt, const Beacons& beacons);

    std::string id() const override { return "unicycle"; }
    Eigen::Index nx() const override { return 3; }
    Eigen::Index nu() const override { return 2; }
    Eigen::Index ny() const override { return 4; }
    double dt() const { return dt_; }
    const Beacons& beacons() const { return beacons_; }

    Vec f(const Vec& x, const Vec& u) const override;
    Vec h(const Vec& x) const override;
    Mat jac_f(const Vec& x, const Vec& u) const override;
    Mat jac_h(const Vec& x) const override;
    Vec measurement_residual(const Vec& y, const Vec& yhat) const override;
    Vec state_difference(const Vec& a, const Vec& b) const override;
    Vec normalize_state(const Vec& x) const override;

private:
    double dt_;
    Beacons beacons_;
};

/// x_{t+1} = A x + B u, y = C x. Curvature is zero.
class LinearSystem final : public NonlinearSystem {
public:
    LinearSystem(Mat A, Mat B, Mat C);

    std::string id() const override { return "linear"; }
    Eigen::Index nx() const override { return A_.rows(); }
    Eigen::Index nu() const override { return B_.cols(); }
    Eigen::Index ny() const override { return C_.rows(); }

    Vec f(const Vec& x, const Vec& u) const override;
    Vec h(const Vec& x) const override { return C_ * x; }
    Mat jac_f(const Vec&, const Vec&) const override { return A_; }
    Mat jac_h(const Vec&) const override { return C_; }

private:
    Mat A_, B_, C_;
};

/// "ct" -> (0.3, 0.2), "safe_nav" or "unicycle" -> (0.3, 0.5), "linear" -> (0, 0).
CurvatureConstants curvature_constants(const std::string& system_id);

}  // namespace drekf
