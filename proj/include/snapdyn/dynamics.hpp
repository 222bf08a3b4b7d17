#pragma once
// Direct numerical integration of the arch equations of motion
//
//   full:        Adot_i' = 2 v_i(A) - 1/2 F(tau) load_mask_i - c Adot_i
//   overdamped:  c A_i'  = 2 v_i(A) - 1/2 F(tau) load_mask_i
//
// with adaptive embedded Runge-Kutta stepping (Dormand-Prince 5(4), FSAL,
// PI step-size control) and switching-event detection.
//
// Event detection monitors the excursion along the fold null direction,
//   u(tau) = -V1 . (A(tau) - A_c),
// which is positive toward switching and equals (delta - delta_c) /
// (2 * load_coefficient) while the motion stays on the reduced branch.  The
// detection threshold is expressed in midpoint-excursion units: the
// configured cutoff Lambda (default 1e3 |delta_c|), capped by a fixed
// fraction of the fold-to-far-branch distance because the governing
// potential is globally bounded and the midpoint excursion saturates at the
// far branch instead of growing without limit.  The cap fractions are chosen
// so the detected time reproduces the analytic blow-up time of the reduced
// cubic: mid-transit (0.5) for monotone damped passages, and just below the
// undamped turning point for inertial runs, where the time lost to the
// slowdown near the threshold cancels the analytic tail beyond it.

#include <cstddef>
#include <string>
#include <vector>

#include "snapdyn/arch_model.hpp"
#include "snapdyn/statics.hpp"

namespace snapdyn::dynamics {

enum class RegimeForm { full, overdamped };

enum class InitialState {
    critical_state,  // A = A_c, at rest (static-perturbation protocol)
    as_fabricated,   // A = a, at rest (ramp-from-zero protocol)
    custom,          // taken from SimulationConfig::A0 / Adot0
};

struct SimulationConfig {
    RegimeForm form = RegimeForm::full;
    double rtol = 1e-12;
    double atol = 1e-12;
    double tau_max = 1e6;
    // Switching cutoff on |delta - delta_c|; <= 0 selects 1e3 * |delta_c|.
    double lambda = 0.0;
    InitialState init = InitialState::critical_state;
    std::vector<double> A0;     // custom initial weights
    std::vector<double> Adot0;  // custom initial velocities (full form)
    // Stop integrating at the first step past the detection threshold
    // instead of running to tau_max.
    bool stop_at_switching = true;
    // Raise MaxTimeExceeded if tau_max is reached without hitting the
    // switching threshold.
    bool expect_switching = false;
    // Minimum spacing between stored samples; 0 stores every accepted step.
    // Steps adjacent to the switching threshold are always stored densely.
    double sample_dt = 0.0;

    void validate() const;  // tolerances in (0, 1e-3], positive horizons
};

struct SamplePoint {
    double tau = 0.0;
    std::vector<double> A;
    std::vector<double> Adot;  // slaved velocities 2v - F/2 - ... for full;
                               // c A' = ... first-order rates for overdamped
    double F = 0.0;
    double delta = 0.0;
    EnergyBreakdown energy;    // kinetic term omitted for overdamped samples
};

struct TimeSeries {
    RegimeForm form = RegimeForm::full;
    std::vector<SamplePoint> samples;  // tau strictly increasing
    std::vector<std::string> warnings;
    LoadProgram load;
    double damping = 0.0;          // arch damping c
    double excursion_scale = 0.0;  // fold-to-far-branch distance; 0 if none
    bool hit_stop_threshold = false;
    std::size_t steps_accepted = 0;
    std::size_t steps_rejected = 0;
};

struct SwitchingEvent {
    double tau_switch = 0.0;
    double F_switch = 0.0;
    std::vector<double> A_tip;
    double threshold_delta = 0.0;  // detection threshold, midpoint units
    double threshold_u = 0.0;      // same threshold along the null direction
};

// Integrate the second-order equations; honors cfg tolerances, stores
// accepted steps (thinned per sample_dt), stops past the switching threshold
// when one is resolvable.  Throws StepSizeUnderflow, MaxTimeExceeded (only
// when cfg.expect_switching), and NotBistable when the critical-state
// initial condition is requested for a non-bistable arch.
TimeSeries integrate_full(const NondimArch& arch, const LoadProgram& load,
                          const SimulationConfig& cfg);

// First-order overdamped form; requires arch.c > 0.  Adds a warning to the
// series when c^2 is not large against the reduced-dynamics force scale
// (inertia not negligible).
TimeSeries integrate_overdamped(const NondimArch& arch,
                                const LoadProgram& load,
                                const SimulationConfig& cfg);

// Locate the first crossing of the detection threshold in a recorded series
// by cubic Hermite interpolation between stored steps.  Throws NoSwitching
// if the series never reaches the threshold.
SwitchingEvent detect_switching(const TimeSeries& ts, const CriticalPoint& cp,
                                const SimulationConfig& cfg);

// Detection threshold in midpoint-excursion units actually in force for a
// given series/config: min(resolved Lambda, cap fraction * excursion scale).
double effective_threshold_delta(const TimeSeries& ts, const CriticalPoint& cp,
                                 const SimulationConfig& cfg);

// Cap fractions of the fold-to-far-branch distance (see file header).
double damped_transit_fraction();    // monotone passages
double undamped_transit_fraction();  // inertial passages, below 4/3

} // namespace snapdyn::dynamics
