#pragma once

#include <utility>
#include <vector>

namespace snapdyn {

// ============================================================================
// Data model of a shallow clamped-clamped arch expanded in the buckling-mode
// basis of the straight clamped column, plus the nondimensional energies and
// internal forces that drive statics and dynamics.
//
// Shape convention: the as-fabricated rise is h(x) = h_mid * sum_i a_i phi_i(x)
// and the deformed shape uses weights A_i in the same basis. Mode numbers are
// the physical buckling indices: odd i are the symmetric cosine modes with
// eigenvalue (i+1)*pi; even i in {2, 4, 6} are the antisymmetric modes with
// tabulated eigenvalues 2.86*pi, 4.92*pi, 6.94*pi (no closed form is available
// beyond those, so larger even indices are rejected).
//
// Only modes with i = 1 mod 4 deflect at midspan (phi_i(L/2) = 2); they carry
// the midpoint point load and define the midpoint displacement
//   delta = 2 * sum_{i = 1 mod 4} (a_i - A_i),
// measured from the as-fabricated shape, positive toward snap-through.
// ============================================================================

// Dimensional description; used only to produce scales and Q.
struct ArchGeometry {
    double L = 0.0;      // span
    double w = 0.0;      // in-plane thickness
    double d = 0.0;      // out-of-plane width
    double E = 0.0;      // Young's modulus
    double rho = 0.0;    // density
    double h_mid = 0.0;  // mid-span rise

    double I() const { return d * w * w * w / 12.0; }
    double area() const { return d * w; }
    // Shallow-arch assumption is advisory: callers should warn (not reject)
    // when this returns false.
    bool shallow() const { return h_mid / L <= 0.2; }
    void validate() const;  // throws ValidationError on nonpositive fields
};

// Conversion factors between dimensional and nondimensional quantities.
struct ScaleSet {
    double force = 0.0;         // E I h_mid / L^3
    double time = 0.0;          // sqrt(rho A L^4 / (E I))
    double rate = 0.0;          // force / time
    double damping = 0.0;       // sqrt(E I rho A / L^2)
    double displacement = 0.0;  // h_mid
};

// Nondimensional arch: everything statics/analytic/dynamics consume.
struct NondimArch {
    double Q = 0.0;          // rise-to-thickness ratio h_mid / w
    std::vector<double> a;   // as-fabricated mode weights
    double c = 0.0;          // damping coefficient (0 = undamped)
    std::vector<int> modes;  // physical mode numbers; defaults to {1, 5, 9, ...}

    // Cached per-mode data derived from `modes`.
    std::vector<double> M;          // eigenvalues M_i
    std::vector<double> M2, M4;     // M_i^2, M_i^4
    std::vector<double> load_mask;  // 1.0 for midpoint-coupled modes, else 0.0

    NondimArch() = default;
    NondimArch(double Q_, std::vector<double> a_, double c_,
               std::vector<int> modes_ = {});

    int N() const { return static_cast<int>(a.size()); }
    void validate() const;
};

// External midpoint load history. Exactly one of the two kinds is active per
// experiment: a constant load F0 + eps (static perturbation), or a linear ramp
// F0 + nu * tau.
struct LoadProgram {
    enum class Kind { static_perturbation, ramp };

    Kind kind = Kind::static_perturbation;
    double F0 = 0.0;   // initial load
    double nu = 0.0;   // ramp rate (ramp only)
    double eps = 0.0;  // perturbation beyond F0 (static only)

    static LoadProgram static_load(double F0, double eps);
    static LoadProgram ramp_load(double F0, double nu);

    double force_at(double tau) const {
        return kind == Kind::ramp ? F0 + nu * tau : F0 + eps;
    }
    void validate() const;
};

// Instantaneous dynamic state. Adot may be empty for first-order (overdamped)
// trajectories.
struct StateVector {
    std::vector<double> A;
    std::vector<double> Adot;
    double tau = 0.0;
};

// Nondimensional energy split. internal_force_vector is exactly
// -d(bending + compression)/dA, and the load enters through
// work_potential = -F * delta / 8, so for the undamped system at constant F
// the total is a conserved quantity.
struct EnergyBreakdown {
    double bending = 0.0;
    double compression = 0.0;
    double work_potential = 0.0;
    double kinetic = 0.0;
    double total = 0.0;
};

// Buckling-mode eigenvalue M_i. Odd i: (i+1)*pi. Even i: tabulated values for
// i in {2, 4, 6}; throws UnsupportedMode for even i > 6, ValidationError for
// i < 1.
double mode_eigenvalue(int i);

// Mode shape phi_i(x) on [0, L]; clamped at both ends (phi = phi' = 0).
double mode_shape(int i, double x, double L);

// Build the nondimensional arch and the conversion scales from a dimensional
// description. c_dim is the dimensional viscous damping coefficient.
std::pair<NondimArch, ScaleSet> nondimensionalize(const ArchGeometry& g,
                                                  double c_dim,
                                                  std::vector<double> a);

// Midpoint displacement delta(A), positive toward the inverted state.
double midpoint_displacement(const NondimArch& arch,
                             const std::vector<double>& A);

// Elastic restoring force per mode, v_i(A) = -d(bending + compression)/dA_i:
//   v_i = 1/2 (a_i - A_i) M_i^4 + (3 Q^2 / 2) S A_i M_i^2,
//   S   = sum_j (a_j^2 - A_j^2) M_j^2.
// Zero at A = a; for N = 1, 4 * v_1 evaluated at A_1 = a_1 - delta/2 equals
// the scalar force curve X(delta). Static equilibrium under midpoint load F is
// v_i = F/4 * load_mask_i.
std::vector<double> internal_force_vector(const std::vector<double>& A,
                                          const NondimArch& arch);

// Allocation-free variant for integrator hot loops; A and out must each hold
// arch.N() entries (they may not alias).
void internal_force_vector_into(const double* A, const NondimArch& arch,
                                double* out);

// One-mode static force-displacement curve
//   X(delta) = 3 Q^2 M1^4 [delta^3/4 - (3 a1/2) delta^2
//              + (2 a1^2 + 1/(3 Q^2)) delta].
// Requires N = 1 with a midpoint-coupled mode.
double internal_force_scalar(double delta, const NondimArch& arch);

// Energy audit at load F; see EnergyBreakdown for the conservation convention.
EnergyBreakdown total_energy(const StateVector& state, const NondimArch& arch,
                             double F);

} // namespace snapdyn
