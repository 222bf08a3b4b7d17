#include "snapdyn/statics.hpp"
#include "snapdyn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace snapdyn {

namespace {

double primary_radicand(const NondimArch& arch) {
    const double a1 = arch.a[0];
    return a1 * a1 / 3.0 - 1.0 / (9.0 * arch.Q * arch.Q);
}

void require_primary_loaded(const NondimArch& arch) {
    if (arch.a.empty() || arch.load_mask[0] == 0.0)
        throw ValidationError(
            "statics requires the primary mode to be midpoint-coupled");
    if (!(arch.a[0] > 0.0))
        throw ValidationError(
            "statics requires a positive primary mode weight a_1");
}

// ---------------------------------------------------------------------------
// Displacement-controlled constrained solver.
//
// Unknowns: all N mode weights. Equations: v_j(A) = 0 for the non-primary
// modes, plus delta(A) = delta_target. Force rows are normalized by their
// linear stiffness M_j^4/2 so the 1e-12 Newton tolerance is meaningful at
// F ~ 1e5 magnitudes.
// ---------------------------------------------------------------------------
class ConstrainedSolver {
public:
    explicit ConstrainedSolver(const NondimArch& arch) : arch_(arch) {
        const int n = arch.N();
        scale_.resize(n);
        const double amax =
            std::max(1.0, *std::max_element(arch.a.begin(), arch.a.end(),
                                            [](double x, double y) {
                                                return std::abs(x) < std::abs(y);
                                            }));
        for (int j = 0; j < n; ++j) scale_[j] = 0.5 * arch.M4[j] * std::abs(amax);
    }

    Eigen::VectorXd residual(const Eigen::VectorXd& A, double delta_t) const {
        const int n = arch_.N();
        std::vector<double> Av(A.data(), A.data() + n);
        const std::vector<double> v = internal_force_vector(Av, arch_);
        Eigen::VectorXd R(n);
        for (int j = 1; j < n; ++j) R(j - 1) = v[j] / scale_[j];
        R(n - 1) = midpoint_displacement(arch_, Av) - delta_t;
        return R;
    }

    Eigen::MatrixXd jacobian(const Eigen::VectorXd& A) const {
        const int n = arch_.N();
        std::vector<double> Av(A.data(), A.data() + n);
        const ForceDerivatives d = gradient_and_hessians(Av, arch_);
        Eigen::MatrixXd J(n, n);
        for (int j = 1; j < n; ++j) J.row(j - 1) = -d.G.row(j) / scale_[j];
        for (int k = 0; k < n; ++k) J(n - 1, k) = -2.0 * arch_.load_mask[k];
        return J;
    }

    // Damped Newton from `A`; throws NewtonDivergence on failure.
    Eigen::VectorXd solve(double delta_t, Eigen::VectorXd A) const {
        constexpr int kMaxIter = 50;
        constexpr double kTol = 1e-12;
        Eigen::VectorXd R = residual(A, delta_t);
        for (int it = 0; it < kMaxIter; ++it) {
            if (R.lpNorm<Eigen::Infinity>() < kTol) return A;
            const Eigen::MatrixXd J = jacobian(A);
            const Eigen::VectorXd dA = J.fullPivLu().solve(-R);
            double t = 1.0;
            const double r0 = R.norm();
            bool accepted = false;
            for (int back = 0; back < 40; ++back) {
                const Eigen::VectorXd An = A + t * dA;
                const Eigen::VectorXd Rn = residual(An, delta_t);
                if (Rn.norm() < (1.0 - 1e-4 * t) * r0 || Rn.norm() < kTol) {
                    A = An;
                    R = Rn;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if (!accepted) break;
        }
        if (R.lpNorm<Eigen::Infinity>() < kTol) return A;
        std::ostringstream msg;
        msg << "constrained static solve stalled at delta = " << delta_t
            << ", scaled residual = " << R.lpNorm<Eigen::Infinity>();
        throw NewtonDivergence(msg.str());
    }

    // solve() plus branch-loss recovery.  When a followed secondary-mode
    // root folds away (internal snap of a stiff mode), Newton stalls; the
    // path then continues on a different root.  Recovery kicks the last
    // iterate along the softest stiffness eigenvector (the direction that
    // lost its solution) at a few amplitudes and retries.  `jumped` is set
    // when the accepted solution is far from the previous one, so callers
    // can avoid comparing path slopes across disconnected segments.
    Eigen::VectorXd solve_recover(double delta_t, const Eigen::VectorXd& A_prev,
                                  bool& jumped) const {
        const double scale = std::max(1.0, A_prev.lpNorm<Eigen::Infinity>());
        const auto far_from_prev = [&](const Eigen::VectorXd& A) {
            return (A - A_prev).lpNorm<Eigen::Infinity>() > 0.15 * scale;
        };
        try {
            Eigen::VectorXd A = solve(delta_t, A_prev);
            jumped = far_from_prev(A);
            return A;
        } catch (const NewtonDivergence&) {
        }
        std::vector<double> Av(A_prev.data(), A_prev.data() + arch_.N());
        const ForceDerivatives d = gradient_and_hessians(Av, arch_);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            0.5 * (d.G + d.G.transpose()));
        int min_idx = 0;
        es.eigenvalues().cwiseAbs().minCoeff(&min_idx);
        const Eigen::VectorXd soft = es.eigenvectors().col(min_idx);
        for (double amp : {0.1, 0.3, 0.6, 1.0}) {
            for (double sign : {1.0, -1.0}) {
                try {
                    Eigen::VectorXd A = solve(
                        delta_t, A_prev + sign * amp * scale * soft);
                    jumped = true;
                    return A;
                } catch (const NewtonDivergence&) {
                }
            }
        }
        // Last resort: the one-mode-family seed for this displacement.
        Eigen::VectorXd A = solve(delta_t, seed(delta_t));
        jumped = true;
        return A;
    }

    double force_of(const Eigen::VectorXd& A) const {
        std::vector<double> Av(A.data(), A.data() + arch_.N());
        return 4.0 * internal_force_vector(Av, arch_)[0];
    }

    // dF/ddelta along the constrained path, from the implicit-function
    // derivative of the solved system (row scaling cancels in the solve).
    double slope_of(const Eigen::VectorXd& A) const {
        const int n = arch_.N();
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        rhs(n - 1) = 1.0;
        const Eigen::VectorXd dAddelta = jacobian(A).fullPivLu().solve(rhs);
        std::vector<double> Av(A.data(), A.data() + n);
        const ForceDerivatives d = gradient_and_hessians(Av, arch_);
        return -4.0 * d.G.row(0).dot(dAddelta);
    }

    Eigen::VectorXd seed(double delta_t) const {
        const int n = arch_.N();
        Eigen::VectorXd A(n);
        for (int j = 0; j < n; ++j) A(j) = arch_.a[j];
        A(0) = arch_.a[0] - 0.5 * delta_t;  // exact for the one-mode family
        return A;
    }

private:
    const NondimArch& arch_;
    std::vector<double> scale_;
};

bool stable_at(const std::vector<double>& A, const NondimArch& arch) {
    const ForceDerivatives d = gradient_and_hessians(A, arch);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (d.G + d.G.transpose()));
    return es.eigenvalues().minCoeff() > 0.0;
}

void fill_spectrum(CriticalPoint& cp, const NondimArch& arch) {
    const ForceDerivatives d = gradient_and_hessians(cp.A_c, arch);
    if (arch.N() == 1) {
        // A 1x1 stiffness matrix is itself ~0 at the fold; judge the null
        // eigenvalue against the linear modal stiffness instead.
        cp.lambda_min = d.G(0, 0);
        cp.lambda_max = 0.5 * arch.M4[0];
        return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (d.G + d.G.transpose()));
    const Eigen::VectorXd ev = es.eigenvalues();
    double amin = std::numeric_limits<double>::max(), amax = 0.0;
    for (int i = 0; i < ev.size(); ++i) {
        amin = std::min(amin, std::abs(ev(i)));
        amax = std::max(amax, std::abs(ev(i)));
    }
    cp.lambda_min = amin;
    cp.lambda_max = amax;
}

} // namespace

ForceDerivatives gradient_and_hessians(const std::vector<double>& A,
                                       const NondimArch& arch) {
    const int n = arch.N();
    if (static_cast<int>(A.size()) != n)
        throw ValidationError("state length does not match arch mode count");

    double S = 0.0;
    for (int j = 0; j < n; ++j)
        S += (arch.a[j] * arch.a[j] - A[j] * A[j]) * arch.M2[j];
    const double q3 = 3.0 * arch.Q * arch.Q;

    ForceDerivatives out;
    out.G.resize(n, n);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            double g = q3 * A[j] * arch.M2[j] * A[k] * arch.M2[k];
            if (j == k) g += 0.5 * arch.M4[j] - 0.5 * q3 * S * arch.M2[j];
            out.G(j, k) = g;
        }
    }
    out.H.reserve(n);
    for (int j = 0; j < n; ++j) {
        Eigen::MatrixXd Hj = Eigen::MatrixXd::Zero(n, n);
        for (int k = 0; k < n; ++k) {
            for (int l = 0; l < n; ++l) {
                double h = 0.0;
                if (j == k) h += arch.M2[j] * A[l] * arch.M2[l];
                if (j == l) h += arch.M2[j] * A[k] * arch.M2[k];
                if (k == l) h += arch.M2[k] * A[j] * arch.M2[j];
                Hj(k, l) = q3 * h;
            }
        }
        out.H.push_back(std::move(Hj));
    }
    return out;
}

CriticalPoint critical_point_one_mode(const NondimArch& arch) {
    if (arch.N() != 1)
        throw ValidationError("critical_point_one_mode requires N = 1");
    require_primary_loaded(arch);
    const double rad = primary_radicand(arch);
    if (rad <= 0.0)
        throw NotBistable(
            "no fold: a1^2/3 - 1/(9 Q^2) = " + std::to_string(rad) +
            " is not positive (Q a1 at or below the bistability threshold)");
    const double a1 = arch.a[0];
    const double s = std::sqrt(rad);

    CriticalPoint cp;
    cp.delta_c = 2.0 * a1 - 2.0 * s;
    cp.A_c = {a1 - 0.5 * cp.delta_c};
    cp.F_c = internal_force_scalar(cp.delta_c, arch);
    cp.K = 4.5 * arch.Q * arch.Q * arch.M4[0] * s;
    cp.V1 = {1.0};
    cp.load_coefficient = 1.0;
    fill_spectrum(cp, arch);
    return cp;
}

EquilibriumPath trace_equilibrium_path(const NondimArch& arch,
                                       const std::vector<double>& delta_grid) {
    require_primary_loaded(arch);
    if (delta_grid.empty())
        throw ValidationError("trace_equilibrium_path needs a nonempty grid");
    const double hi = 4.0 * arch.a[0] + 1e-9;
    bool inc = true, dec = true;
    for (size_t i = 0; i < delta_grid.size(); ++i) {
        if (delta_grid[i] < -1e-12 || delta_grid[i] > hi)
            throw ValidationError("delta grid must lie within [0, 4 a1]");
        if (i > 0) {
            inc = inc && delta_grid[i] >= delta_grid[i - 1];
            dec = dec && delta_grid[i] <= delta_grid[i - 1];
        }
    }
    if (!inc && !dec) throw ValidationError("delta grid must be monotone");

    const ConstrainedSolver solver(arch);
    EquilibriumPath path;
    path.samples.reserve(delta_grid.size());
    Eigen::VectorXd A = solver.seed(delta_grid.front());
    for (const double delta : delta_grid) {
        bool jumped = false;
        A = solver.solve_recover(delta, A, jumped);
        PathSample s;
        s.delta = delta;
        s.A.assign(A.data(), A.data() + arch.N());
        s.F = solver.force_of(A);
        s.stable = stable_at(s.A, arch);
        path.samples.push_back(std::move(s));
    }
    return path;
}

CriticalPoint critical_point_multi_mode(const NondimArch& arch) {
    if (arch.N() < 2)
        throw ValidationError("critical_point_multi_mode requires N >= 2");
    require_primary_loaded(arch);
    if (primary_radicand(arch) <= 0.0)
        throw NotBistable("primary mode is below the bistability threshold");

    // Seed near the one-mode fold and march until the path slope changes sign.
    const NondimArch primary(arch.Q, {arch.a[0]}, arch.c, {arch.modes[0]});
    const double delta_seed = critical_point_one_mode(primary).delta_c;

    const ConstrainedSolver solver(arch);
    const double lo = 0.05 * delta_seed;
    const double limit = std::min(3.5 * delta_seed, 3.9 * arch.a[0]);
    const double step = 0.05 * delta_seed;

    bool seeded_jump = false;
    Eigen::VectorXd A = solver.solve_recover(lo, solver.seed(lo), seeded_jump);
    double d_prev = lo;
    double s_prev = solver.slope_of(A);
    double d_lo = 0.0, d_hi = 0.0;
    bool bracketed = false;
    for (double d = lo + step; d <= limit; d += step) {
        bool jumped = false;
        A = solver.solve_recover(d, A, jumped);
        const double s = solver.slope_of(A);
        // A slope sign change only brackets a fold when both endpoints lie
        // on the same connected branch segment; across an internal snap the
        // comparison is meaningless, so tracking restarts there.
        if (!jumped && s_prev > 0.0 && s <= 0.0) {
            d_lo = d_prev;
            d_hi = d;
            bracketed = true;
            break;
        }
        d_prev = d;
        s_prev = s;
    }
    if (!bracketed)
        throw NotBistable("no interior force peak on the equilibrium path");

    // Bisect the slope sign change to machine resolution; evaluations are
    // warm-started so each one costs a couple of Newton iterations.
    for (int it = 0; it < 110; ++it) {
        const double mid = 0.5 * (d_lo + d_hi);
        if (mid == d_lo || mid == d_hi) break;
        A = solver.solve(mid, A);
        if (solver.slope_of(A) > 0.0)
            d_lo = mid;
        else
            d_hi = mid;
    }

    CriticalPoint cp;
    cp.delta_c = 0.5 * (d_lo + d_hi);
    A = solver.solve(cp.delta_c, A);
    cp.A_c.assign(A.data(), A.data() + arch.N());
    cp.F_c = solver.force_of(A);
    fill_spectrum(cp, arch);

    const NormalForm nf = reduce_to_normal_form(cp, arch);
    cp.K = nf.K_bar;
    cp.V1 = nf.V1;
    cp.load_coefficient = nf.load_coefficient;
    return cp;
}

CriticalPoint critical_point(const NondimArch& arch) {
    return arch.N() == 1 ? critical_point_one_mode(arch)
                         : critical_point_multi_mode(arch);
}

NormalForm reduce_to_normal_form(const CriticalPoint& cp,
                                 const NondimArch& arch) {
    const int n = arch.N();
    if (static_cast<int>(cp.A_c.size()) != n)
        throw ValidationError("critical point does not match the arch");

    const ForceDerivatives d = gradient_and_hessians(cp.A_c, arch);
    Eigen::VectorXd V;
    double lam_sel = 0.0, lam_ref = 0.0;
    if (n == 1) {
        V = Eigen::VectorXd::Ones(1);
        lam_sel = d.G(0, 0);
        lam_ref = 0.5 * arch.M4[0];
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            0.5 * (d.G + d.G.transpose()));
        const Eigen::VectorXd ev = es.eigenvalues();
        int sel = 0;
        for (int i = 1; i < n; ++i)
            if (std::abs(ev(i)) < std::abs(ev(sel))) sel = i;
        V = es.eigenvectors().col(sel);
        lam_sel = ev(sel);
        lam_ref = ev.cwiseAbs().maxCoeff();
    }
    if (std::abs(lam_sel) > 1e-6 * lam_ref)
        throw ValidationError(
            "reduce_to_normal_form requires a fold state (null eigenvalue not "
            "resolved)");

    // Orient so the load projection is nonnegative (V1 = +1 for N = 1).
    double coef = 0.0;
    for (int j = 0; j < n; ++j) coef += V(j) * arch.load_mask[j];
    if (coef < 0.0) {
        V = -V;
        coef = -coef;
    }
    if (coef < 1e-12)
        throw DegenerateReduction(
            "load pattern is orthogonal to the fold null direction");

    // Quadratic coefficient along the null direction.
    double k_bar = 0.0;
    for (int j = 0; j < n; ++j)
        k_bar += V(j) * 0.5 * V.dot(d.H[j] * V);
    if (k_bar <= 0.0)
        throw DegenerateReduction(
            "fold curvature does not drive the arch toward switching");

    NormalForm nf;
    nf.K_bar = k_bar;
    nf.load_coefficient = coef;
    nf.V1.assign(V.data(), V.data() + n);
    return nf;
}

double fold_excursion_scale(const NondimArch& arch) {
    require_primary_loaded(arch);
    const double rad = primary_radicand(arch);
    if (rad <= 0.0) throw NotBistable("arch has no fold");
    return 6.0 * std::sqrt(rad);
}

} // namespace snapdyn
