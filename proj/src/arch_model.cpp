#include "snapdyn/arch_model.hpp"
#include "snapdyn/errors.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <string>

namespace snapdyn {

namespace {
constexpr double kPi = std::numbers::pi;

void require_finite_positive(double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0)
        throw ValidationError(std::string(name) + " must be finite and > 0, got " +
                              std::to_string(v));
}
} // namespace

void ArchGeometry::validate() const {
    require_finite_positive(L, "span L");
    require_finite_positive(w, "thickness w");
    require_finite_positive(d, "width d");
    require_finite_positive(E, "Young's modulus E");
    require_finite_positive(rho, "density rho");
    require_finite_positive(h_mid, "rise h_mid");
}

double mode_eigenvalue(int i) {
    if (i < 1)
        throw ValidationError("mode index must be >= 1, got " + std::to_string(i));
    if (i % 2 == 1) return (i + 1) * kPi;
    switch (i) {
        case 2: return 2.86 * kPi;
        case 4: return 4.92 * kPi;
        case 6: return 6.94 * kPi;
        default:
            throw UnsupportedMode(
                "no eigenvalue is tabulated for even mode " + std::to_string(i) +
                "; even modes are supported only up to 6");
    }
}

double mode_shape(int i, double x, double L) {
    if (!(L > 0.0)) throw ValidationError("span must be positive");
    if (x < 0.0 || x > L)
        throw ValidationError("mode_shape position outside [0, L]");
    const double M = mode_eigenvalue(i);
    const double s = x / L;
    if (i % 2 == 1) return 1.0 - std::cos(M * s);
    return 1.0 - 2.0 * s - std::cos(M * s) + 2.0 * std::sin(M * s) / M;
}

NondimArch::NondimArch(double Q_, std::vector<double> a_, double c_,
                       std::vector<int> modes_)
    : Q(Q_), a(std::move(a_)), c(c_), modes(std::move(modes_)) {
    if (modes.empty()) {
        modes.resize(a.size());
        for (size_t j = 0; j < a.size(); ++j)
            modes[j] = static_cast<int>(4 * j + 1);  // 1, 5, 9, ...
    }
    validate();
    M.resize(a.size());
    M2.resize(a.size());
    M4.resize(a.size());
    load_mask.resize(a.size());
    for (size_t j = 0; j < a.size(); ++j) {
        M[j] = mode_eigenvalue(modes[j]);
        M2[j] = M[j] * M[j];
        M4[j] = M2[j] * M2[j];
        load_mask[j] = (modes[j] % 4 == 1) ? 1.0 : 0.0;
    }
}

void NondimArch::validate() const {
    require_finite_positive(Q, "Q");
    if (a.empty()) throw ValidationError("arch needs at least one mode weight");
    if (modes.size() != a.size())
        throw ValidationError("modes and weights must have equal length");
    std::set<int> seen;
    for (size_t j = 0; j < a.size(); ++j) {
        if (!std::isfinite(a[j]))
            throw ValidationError("mode weight " + std::to_string(j) +
                                  " is not finite");
        if (!seen.insert(modes[j]).second)
            throw ValidationError("duplicate mode number " +
                                  std::to_string(modes[j]));
        mode_eigenvalue(modes[j]);  // validates the index range
    }
    if (!std::isfinite(c) || c < 0.0)
        throw ValidationError("damping c must be finite and >= 0");
}

LoadProgram LoadProgram::static_load(double F0, double eps) {
    LoadProgram p;
    p.kind = Kind::static_perturbation;
    p.F0 = F0;
    p.eps = eps;
    p.validate();
    return p;
}

LoadProgram LoadProgram::ramp_load(double F0, double nu) {
    LoadProgram p;
    p.kind = Kind::ramp;
    p.F0 = F0;
    p.nu = nu;
    p.validate();
    return p;
}

void LoadProgram::validate() const {
    if (!std::isfinite(F0) || !std::isfinite(nu) || !std::isfinite(eps))
        throw ValidationError("load program fields must be finite");
    if (nu < 0.0) throw ValidationError("ramp rate nu must be >= 0");
    if (eps < 0.0) throw ValidationError("perturbation eps must be >= 0");
    if (kind == Kind::ramp && eps != 0.0)
        throw ValidationError("ramp program must not carry a static perturbation");
    if (kind == Kind::static_perturbation && nu != 0.0)
        throw ValidationError("static program must have nu = 0");
}

std::pair<NondimArch, ScaleSet> nondimensionalize(const ArchGeometry& g,
                                                  double c_dim,
                                                  std::vector<double> a) {
    g.validate();
    if (!std::isfinite(c_dim) || c_dim < 0.0)
        throw ValidationError("dimensional damping must be finite and >= 0");
    const double EI = g.E * g.I();
    const double rhoA = g.rho * g.area();

    ScaleSet s;
    s.force = EI * g.h_mid / (g.L * g.L * g.L);
    s.time = std::sqrt(rhoA * std::pow(g.L, 4) / EI);
    s.rate = s.force / s.time;
    s.damping = std::sqrt(EI * rhoA / (g.L * g.L));
    s.displacement = g.h_mid;

    NondimArch arch(g.h_mid / g.w, std::move(a), c_dim / s.damping);
    return {std::move(arch), s};
}

double midpoint_displacement(const NondimArch& arch,
                             const std::vector<double>& A) {
    if (A.size() != arch.a.size())
        throw ValidationError("state length does not match arch mode count");
    double delta = 0.0;
    for (size_t j = 0; j < A.size(); ++j)
        delta += arch.load_mask[j] * (arch.a[j] - A[j]);
    return 2.0 * delta;
}

void internal_force_vector_into(const double* A, const NondimArch& arch,
                                double* out) {
    const size_t n = arch.a.size();
    double S = 0.0;  // net axial-compression measure
    for (size_t j = 0; j < n; ++j)
        S += (arch.a[j] * arch.a[j] - A[j] * A[j]) * arch.M2[j];
    const double k = 1.5 * arch.Q * arch.Q;
    for (size_t j = 0; j < n; ++j)
        out[j] =
            0.5 * (arch.a[j] - A[j]) * arch.M4[j] + k * S * A[j] * arch.M2[j];
}

std::vector<double> internal_force_vector(const std::vector<double>& A,
                                          const NondimArch& arch) {
    if (A.size() != arch.a.size())
        throw ValidationError("state length does not match arch mode count");
    std::vector<double> v(A.size());
    internal_force_vector_into(A.data(), arch, v.data());
    return v;
}

double internal_force_scalar(double delta, const NondimArch& arch) {
    if (arch.N() != 1)
        throw ValidationError("internal_force_scalar requires a one-mode arch");
    if (arch.load_mask[0] == 0.0)
        throw ValidationError(
            "internal_force_scalar requires a midpoint-coupled mode");
    const double a1 = arch.a[0];
    const double Q2 = arch.Q * arch.Q;
    return 3.0 * Q2 * arch.M4[0] *
           (0.25 * delta * delta * delta - 1.5 * a1 * delta * delta +
            (2.0 * a1 * a1 + 1.0 / (3.0 * Q2)) * delta);
}

EnergyBreakdown total_energy(const StateVector& state, const NondimArch& arch,
                             double F) {
    const auto& A = state.A;
    if (A.size() != arch.a.size())
        throw ValidationError("state length does not match arch mode count");
    if (!state.Adot.empty() && state.Adot.size() != A.size())
        throw ValidationError("velocity length does not match arch mode count");

    EnergyBreakdown e;
    double S = 0.0;
    for (size_t j = 0; j < A.size(); ++j) {
        const double dA = A[j] - arch.a[j];
        e.bending += 0.25 * dA * dA * arch.M4[j];
        S += (arch.a[j] * arch.a[j] - A[j] * A[j]) * arch.M2[j];
        if (!state.Adot.empty()) e.kinetic += 0.25 * state.Adot[j] * state.Adot[j];
    }
    e.compression = 0.375 * arch.Q * arch.Q * S * S;
    e.work_potential = -F * midpoint_displacement(arch, A) / 8.0;
    e.total = e.bending + e.compression + e.work_potential + e.kinetic;
    return e;
}

} // namespace snapdyn
