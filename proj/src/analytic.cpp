#include "snapdyn/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "snapdyn/errors.hpp"
#include "snapdyn/specfun.hpp"

namespace snapdyn::analytic {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInvSqrt2 = 0.70710678118654752440;
// Literal delay prefactor for the undamped ramp law (see the reconstruction
// helper for the value this approximates).
constexpr double kRampUndampedCoef = 3.22;

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        std::ostringstream msg;
        msg << name << " must be positive and finite, got " << v;
        throw ValidationError(msg.str());
    }
}

// Ai'(x)/Ai(x) for x >= 0, usable far beyond where Ai itself underflows.
double airy_log_derivative(double x) {
    if (x <= 25.0) {
        const specfun::AiryPair p = specfun::airy(x);
        return p.Aip / p.Ai;
    }
    // Asymptotic solution of the Riccati equation r' = x - r^2.
    const double sx = std::sqrt(x);
    const double x52 = x * x * sx;
    return -sx - 0.25 / x + (5.0 / 32.0) / x52 - (45.0 / 128.0) / (x52 * x52 / x);
}

double ramp_ratio(double z) {
    if (z <= 0.0) return airy_log_derivative(-z);
    const specfun::AiryPair p = specfun::airy(-z);
    return p.Aip / p.Ai;
}

} // namespace

double static_undamped_coefficient() {
    return kInvSqrt2 * std::pow(3.0, 0.25) *
           specfun::elliptic_F(kPi, kInvSqrt2);
}

double ramp_undamped_coefficient_reconstructed() {
    return std::pow(1.25 * static_undamped_coefficient(), 0.8);
}

double switch_time_static_damped(double K, double eps, double c) {
    require_positive(K, "curvature K");
    require_positive(eps, "perturbation eps");
    require_positive(c, "damping c");
    return 0.5 * kPi * c / std::sqrt(K * eps);
}

double switch_time_static_undamped(double K, double eps) {
    require_positive(K, "curvature K");
    require_positive(eps, "perturbation eps");
    return static_undamped_coefficient() * std::pow(K * eps, -0.25);
}

SwitchingPrediction switch_time_ramp_damped(double K, double nu, double c,
                                            double tau_c) {
    require_positive(K, "curvature K");
    require_positive(nu, "load rate nu");
    require_positive(c, "damping c");
    SwitchingPrediction p;
    p.regime = Regime::ramp_damped;
    p.delay = specfun::airy_first_negative_zero() *
              std::pow(K * nu / (c * c), -1.0 / 3.0);
    p.tau_inf = tau_c + p.delay;
    p.F_switch = nu * p.tau_inf;
    p.trajectory = [K, nu, c](double tau_bar) {
        return trajectory_ramp_damped(tau_bar, K, nu, c);
    };
    return p;
}

SwitchingPrediction switch_time_ramp_undamped(double K, double nu,
                                              double tau_c) {
    require_positive(K, "curvature K");
    require_positive(nu, "load rate nu");
    SwitchingPrediction p;
    p.regime = Regime::ramp_undamped;
    p.delay = kRampUndampedCoef * std::pow(K * nu, -0.2);
    p.tau_inf = tau_c + p.delay;
    p.F_switch = nu * p.tau_inf;
    return p;
}

SwitchingPrediction predict_static_damped(double K, double eps, double c) {
    SwitchingPrediction p;
    p.regime = Regime::static_damped;
    p.tau_inf = switch_time_static_damped(K, eps, c);
    p.trajectory = [K, eps, c](double tau) {
        return trajectory_static_damped(tau, K, eps, c);
    };
    return p;
}

SwitchingPrediction predict_static_undamped(double K, double eps) {
    SwitchingPrediction p;
    p.regime = Regime::static_undamped;
    p.tau_inf = switch_time_static_undamped(K, eps);
    return p;
}

double trajectory_static_damped(double tau, double K, double eps, double c) {
    require_positive(K, "curvature K");
    require_positive(eps, "perturbation eps");
    require_positive(c, "damping c");
    const double tau_inf = 0.5 * kPi * c / std::sqrt(K * eps);
    if (tau < 0.0 || tau >= tau_inf) {
        std::ostringstream msg;
        msg << "time " << tau << " outside [0, " << tau_inf
            << "): excursion has blown up";
        throw ValidationError(msg.str());
    }
    return std::sqrt(eps / K) * std::tan(std::sqrt(K * eps) * tau / c);
}

double trajectory_static_undamped_time_of(double delta_bar, double K,
                                          double eps) {
    require_positive(K, "curvature K");
    require_positive(eps, "perturbation eps");
    if (delta_bar < 0.0)
        throw ValidationError("excursion must be nonnegative");
    const double u = delta_bar * std::sqrt(K / (3.0 * eps));
    const double arg = std::clamp((1.0 - u) / (1.0 + u), -1.0, 1.0);
    const double phi = std::acos(arg);
    return kInvSqrt2 * std::pow(3.0 / (K * eps), 0.25) *
           specfun::elliptic_F(phi, kInvSqrt2);
}

double trajectory_ramp_damped(double tau_bar, double K, double nu, double c) {
    require_positive(K, "curvature K");
    require_positive(nu, "load rate nu");
    require_positive(c, "damping c");
    const double rate = std::pow(K * nu / (c * c), 1.0 / 3.0);
    const double z = rate * tau_bar;
    const double z_star = specfun::airy_first_negative_zero();
    if (z >= z_star) {
        std::ostringstream msg;
        msg << "shifted time " << tau_bar << " is at or past the switching "
            << "pole at " << z_star / rate;
        throw ValidationError(msg.str());
    }
    return std::pow(K, -2.0 / 3.0) * std::cbrt(c * nu) * ramp_ratio(z);
}

double time_to_threshold_static_damped(double K, double eps, double c,
                                       double theta) {
    require_positive(K, "curvature K");
    require_positive(eps, "perturbation eps");
    require_positive(c, "damping c");
    require_positive(theta, "threshold theta");
    return c / std::sqrt(K * eps) * std::atan(theta * std::sqrt(K / eps));
}

double time_to_threshold_ramp_damped(double K, double nu, double c,
                                     double theta) {
    require_positive(K, "curvature K");
    require_positive(nu, "load rate nu");
    require_positive(c, "damping c");
    require_positive(theta, "threshold theta");
    const double rate = std::pow(K * nu / (c * c), 1.0 / 3.0);
    const double scale = std::pow(K, -2.0 / 3.0) * std::cbrt(c * nu);
    const double z_star = specfun::airy_first_negative_zero();
    // The excursion is monotone between its zero crossing and the pole;
    // bracket the crossing of `theta` there and bisect.
    double lo = 0.0, hi = z_star * (1.0 - 1e-14);
    if (scale * ramp_ratio(hi) <= theta)
        return hi / rate;  // threshold effectively at the pole
    for (int it = 0; it < 200 && hi - lo > 4e-16 * z_star; ++it) {
        const double mid = 0.5 * (lo + hi);
        (scale * ramp_ratio(mid) < theta ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi) / rate;
}

} // namespace snapdyn::analytic
