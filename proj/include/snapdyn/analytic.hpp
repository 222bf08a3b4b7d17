#pragma once
// Closed-form switching-time laws and analytic trajectories for a shallow
// arch held at (static perturbation) or driven through (linear ramp) its
// fold, in both the overdamped and the inertia-dominated limits.
//
// All functions work in the reduced scalar picture: K is the fold curvature
// produced by the statics module, eps/nu are the (already load-projected)
// perturbation and ramp rate, c is the damping, and tau_c is the time at
// which a ramp reaches the critical force.  Excursion delta_bar is measured
// from the fold state, positive toward switching.
//
// The four switching laws:
//   static, damped:   tau_inf = (pi/2) c / sqrt(K eps)
//   static, undamped: tau_inf = (1/sqrt2) (3/(K eps))^{1/4} F(pi, 1/sqrt2)
//                              = 3.4508 (K eps)^{-1/4}
//   ramp, damped:     delay   = z* (K nu / c^2)^{-1/3},  Ai(-z*) = 0
//   ramp, undamped:   delay   = 3.22 (K nu)^{-1/5}
// with tau_inf = tau_c + delay for ramps.  Predictions depend only on the
// products K*eps (or K*nu), so any consistent scaling of the reduction
// leaves them unchanged.

#include <functional>

namespace snapdyn::analytic {

enum class Regime {
    static_damped,
    static_undamped,
    ramp_damped,
    ramp_undamped,
};

struct SwitchingPrediction {
    Regime regime;
    double tau_inf = 0.0;   // absolute switching time
    double delay = 0.0;     // tau_inf - tau_c (ramp regimes; 0 for static)
    // Force at switching for a ramp that starts from zero load, nu * tau_inf.
    // Callers with a nonzero ramp origin add their F0.  0 for static regimes.
    double F_switch = 0.0;
    // Excursion as a function of time (absolute tau for static regimes,
    // shifted tau_bar for ramps).  Empty when no closed form exists
    // (ramp_undamped) or the closed form is a time-of-displacement map
    // (static_undamped).
    std::function<double(double)> trajectory;
};

// --- switching times -------------------------------------------------------

double switch_time_static_damped(double K, double eps, double c);
double switch_time_static_undamped(double K, double eps);
SwitchingPrediction switch_time_ramp_damped(double K, double nu, double c,
                                            double tau_c);
SwitchingPrediction switch_time_ramp_undamped(double K, double nu,
                                              double tau_c);

// Prediction objects for the static regimes, for callers that want the
// uniform struct (trajectory handles included where they exist).
SwitchingPrediction predict_static_damped(double K, double eps, double c);
SwitchingPrediction predict_static_undamped(double K, double eps);

// --- trajectories ----------------------------------------------------------

// delta_bar(tau) = sqrt(eps/K) tan(sqrt(K eps) tau / c), valid 0 <= tau <
// tau_inf; throws ValidationError outside that window.
double trajectory_static_damped(double tau, double K, double eps, double c);

// Time at which the undamped static excursion first reaches delta_bar >= 0:
//   tau = (1/sqrt2) (3/(K eps))^{1/4} F(acos((1-u)/(1+u)), 1/sqrt2),
//   u = delta_bar sqrt(K/(3 eps)).
double trajectory_static_undamped_time_of(double delta_bar, double K,
                                          double eps);

// delta_bar(tau_bar) = K^{-2/3} (c nu)^{1/3} Ai'(-z)/Ai(-z) with
// z = (K nu / c^2)^{1/3} tau_bar, on the pullback-attractor branch; valid
// for tau_bar < delay (before the Airy pole), arbitrarily far into the past.
double trajectory_ramp_damped(double tau_bar, double K, double nu, double c);

// --- finite-threshold times ------------------------------------------------
// Time for the excursion to first reach a finite threshold theta > 0; the
// tail beyond any large theta is O(c/(K theta)), which is what makes the
// blow-up times above threshold-insensitive.

double time_to_threshold_static_damped(double K, double eps, double c,
                                       double theta);
// Returns the shifted time tau_bar(theta); absolute time is tau_c + result.
double time_to_threshold_ramp_damped(double K, double nu, double c,
                                     double theta);

// --- coefficient reconstructions ------------------------------------------

// (1/sqrt2) 3^{1/4} F(pi, 1/sqrt2): the undamped static prefactor, computed
// live from the elliptic integral (~3.450822).
double static_undamped_coefficient();

// (5/4 * static_undamped_coefficient())^{4/5}: the undamped ramp prefactor
// recovered from the slow-scaling reduction of the inertial ramp equation
// (~3.2201, vs the stored literal 3.22).
double ramp_undamped_coefficient_reconstructed();

} // namespace snapdyn::analytic
