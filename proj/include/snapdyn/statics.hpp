#pragma once

#include "snapdyn/arch_model.hpp"

#include <Eigen/Dense>

#include <vector>

namespace snapdyn {

// ============================================================================
// Static switching (saddle-node) analysis.
//
// The equilibrium path is traced under displacement control: the midpoint
// displacement delta is the driver, every non-primary mode is relaxed to zero
// internal force, and the conjugate load is read from the primary mode,
// F = 4 * v_1. Force control would lose the solution branch at the fold; with
// delta as driver the fold is simply the interior peak of F(delta), and the
// mode-space stiffness matrix G = d(-v)/dA becomes singular exactly there.
//
// At the fold the dynamics collapse onto the null direction V1 of G, giving
// the scalar normal form  c dδ̄/dτ = ε̄ + K̄ δ̄², with
//   K̄   = |V1ᵀ h|,  h_i = ½ V1ᵀ H_i V1   (H_i = Hessian of force component i),
//   ε̄   = ε · (V1ᵀ 1_load)               (1_load = midpoint-coupled rows),
// both oriented jointly so K̄ > 0 and ε̄ > 0 when the load pushes toward
// switching. Every delay law depends only on the products K̄ε̄ (or K̄ν̄), which
// are invariant under V1 → -V1.
// ============================================================================

// A located fold of the force-displacement curve.
struct CriticalPoint {
    std::vector<double> A_c;  // mode weights at the fold
    double delta_c = 0.0;     // midpoint displacement at the fold
    double F_c = 0.0;         // static switching force
    double K = 0.0;           // normal-form curvature (magnitude, oriented > 0)
    std::vector<double> V1;   // unit null eigenvector; {1} for N = 1. Stored
                              // with V1ᵀ 1_load >= 0; the switching direction
                              // in state space is -V1 (A_1 decreases).
    double load_coefficient = 1.0;  // |V1ᵀ 1_load|, the ε -> ε̄ map
    double tau_c = 0.0;       // (F_c - F0)/nu, filled in by ramp predictions
    double lambda_min = 0.0;  // smallest-|.| eigenvalue of G at A_c
    double lambda_max = 0.0;  // largest-|.| eigenvalue of G at A_c
};

// One displacement-controlled equilibrium sample.
struct PathSample {
    double delta = 0.0;
    double F = 0.0;
    std::vector<double> A;
    bool stable = false;  // G positive definite
};

struct EquilibriumPath {
    std::vector<PathSample> samples;
};

// Result of the fold reduction.
struct NormalForm {
    double K_bar = 0.0;
    double load_coefficient = 0.0;
    std::vector<double> V1;
};

// First and second derivatives of the internal force components
// r_i(A) = -v_i(A) (the gradient of the elastic energy). G is symmetric and
// positive definite at stable equilibria; the Hessians H[i] are exact affine
// functions of A (the forces are cubic polynomials).
struct ForceDerivatives {
    Eigen::MatrixXd G;               // G(j,k) = d r_j / d A_k
    std::vector<Eigen::MatrixXd> H;  // H[j](k,l) = d² r_j / (d A_k d A_l)
};

ForceDerivatives gradient_and_hessians(const std::vector<double>& A,
                                       const NondimArch& arch);

// Closed-form one-mode fold:
//   delta_c = 2 a1 - 2 sqrt(a1²/3 - 1/(9 Q²)),  F_c = X(delta_c),
//   K = (9/2) Q² M1⁴ sqrt(a1²/3 - 1/(9 Q²)) = -½ X''(delta_c).
// Throws NotBistable when the radicand is <= 0 (monostable arch; the boundary
// case K = 0 is reported the same way).
CriticalPoint critical_point_one_mode(const NondimArch& arch);

// Trace the displacement-controlled path over a monotone delta grid inside
// [0, 4 a1]. Damped Newton per point, warm-started from the previous sample.
EquilibriumPath trace_equilibrium_path(const NondimArch& arch,
                                       const std::vector<double>& delta_grid);

// Fold of a multi-mode arch (N >= 2): brackets the sign change of dF/ddelta
// along the traced path (analytic slope from the constrained Jacobian), then
// bisects to machine resolution. The slope tolerance 1e-10 is applied relative
// to the natural scale F_c/delta_c; an absolute 1e-10 on a ~1e5-magnitude
// derivative would sit below double-precision evaluation noise.
CriticalPoint critical_point_multi_mode(const NondimArch& arch);

// Dispatch on N.
CriticalPoint critical_point(const NondimArch& arch);

// Fold reduction at a located critical point (see header comment).
// Throws DegenerateReduction when the load pattern is orthogonal to the null
// direction or the curvature does not drive the fold toward switching.
NormalForm reduce_to_normal_form(const CriticalPoint& cp,
                                 const NondimArch& arch);

// Distance (in midpoint-displacement units) from the fold to the conjugate
// branch of the primary-mode cubic at F = F_c:
//   Delta_far = 6 sqrt(a1²/3 - 1/(9 Q²)).
// This bounds the reachable post-switching excursion and anchors detection
// thresholds. Exact for N = 1, a primary-mode estimate otherwise.
double fold_excursion_scale(const NondimArch& arch);

} // namespace snapdyn
