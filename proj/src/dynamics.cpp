#include "snapdyn/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <utility>

#include "snapdyn/errors.hpp"
#include "snapdyn/specfun.hpp"

namespace snapdyn::dynamics {

namespace {

constexpr double kDampedFraction = 0.5;
// Inertial passages cross the threshold just below the undamped turning
// point at 4/3 of the excursion scale; at exactly 4/3 the slowdown on the
// approach cancels the analytic tail beyond the threshold, and the small
// back-off keeps the crossing transverse.
constexpr double kUndampedFraction = 1.32;
constexpr std::size_t kMaxSteps = 1'000'000'000;

// --- Dormand-Prince 5(4) tableau ------------------------------------------

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - bhat, for the embedded 4th-order error estimate.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

// One integration's worth of scratch buffers and controller state.
template <class Rhs>
class Dopri5 {
public:
    Dopri5(Rhs rhs, int dim, double rtol, double atol)
        : rhs_(std::move(rhs)), dim_(dim), rtol_(rtol), atol_(atol) {
        for (auto* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ytmp_})
            v->assign(dim_, 0.0);
    }

    // Advances y from tau0 toward tau_end.  on_step(tau_prev, y_prev, f_prev,
    // tau_new, y_new, f_new) is called after every accepted step and returns
    // false to stop early.
    template <class OnStep>
    void drive(std::vector<double>& y, double tau0, double tau_end,
               OnStep&& on_step, std::size_t& accepted,
               std::size_t& rejected) {
        double tau = tau0;
        yprev_ = y;
        rhs_(tau, y.data(), k1_.data());
        double h = initial_step(tau, y, tau_end);
        double facold = 1e-4;

        while (tau < tau_end) {
            if (accepted + rejected >= kMaxSteps)
                throw IntegrationError(
                    "step budget exhausted before reaching the time horizon");
            h = std::min(h, tau_end - tau);
            if (!(h > 1e-14 * std::max(1.0, std::abs(tau))))
                throw StepSizeUnderflow(
                    "step size underflow at tau = " + std::to_string(tau));

            const double err = attempt(tau, y, h);
            const double fac11 = std::pow(err, 0.17);
            if (err <= 1.0) {
                const double fac = std::clamp(
                    fac11 / (std::pow(facold, 0.04) * 0.9), 0.1, 5.0);
                facold = std::max(err, 1e-4);
                yprev_.swap(y);
                y = ytmp_;  // ytmp_ holds the accepted 5th-order solution
                const double tau_prev = tau;
                tau += h;
                ++accepted;
                const bool go = on_step(tau_prev, yprev_, k1_, tau, y, k7_);
                k1_.swap(k7_);  // FSAL
                h /= fac;
                if (!go) return;
            } else {
                ++rejected;
                h /= std::min(5.0, fac11 / 0.9);
            }
        }
    }

private:
    double scaled_norm(const std::vector<double>& v,
                       const std::vector<double>& ya,
                       const std::vector<double>& yb) const {
        double sum = 0.0;
        for (int i = 0; i < dim_; ++i) {
            const double sc =
                atol_ + rtol_ * std::max(std::abs(ya[i]), std::abs(yb[i]));
            const double q = v[i] / sc;
            sum += q * q;
        }
        return std::sqrt(sum / dim_);
    }

    double initial_step(double tau, const std::vector<double>& y,
                        double tau_end) {
        double dnf = 0.0, dny = 0.0;
        for (int i = 0; i < dim_; ++i) {
            const double sk = atol_ + rtol_ * std::abs(y[i]);
            dnf += (k1_[i] / sk) * (k1_[i] / sk);
            dny += (y[i] / sk) * (y[i] / sk);
        }
        double h = (dnf <= 1e-10 || dny <= 1e-10)
                       ? 1e-6
                       : 0.01 * std::sqrt(dny / dnf);
        h = std::min(h, tau_end - tau);
        for (int i = 0; i < dim_; ++i) ytmp_[i] = y[i] + h * k1_[i];
        rhs_(tau + h, ytmp_.data(), k2_.data());
        double der2 = 0.0;
        for (int i = 0; i < dim_; ++i) {
            const double sk = atol_ + rtol_ * std::abs(y[i]);
            const double q = (k2_[i] - k1_[i]) / sk;
            der2 += q * q;
        }
        der2 = std::sqrt(der2) / h;
        const double der12 = std::max(der2, std::sqrt(dnf));
        const double h1 = (der12 <= 1e-15)
                              ? std::max(1e-6, h * 1e-3)
                              : std::pow(0.01 / der12, 0.2);
        return std::max(std::min({100.0 * h, h1, tau_end - tau}), 1e-300);
    }

    // Runs the stages from (tau, y) with step h; leaves the candidate in
    // ytmp_ and its derivative in k7_; returns the scaled error.
    double attempt(double tau, const std::vector<double>& y, double h) {
        for (int i = 0; i < dim_; ++i) ytmp_[i] = y[i] + h * a21 * k1_[i];
        rhs_(tau + c2 * h, ytmp_.data(), k2_.data());
        for (int i = 0; i < dim_; ++i)
            ytmp_[i] = y[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
        rhs_(tau + c3 * h, ytmp_.data(), k3_.data());
        for (int i = 0; i < dim_; ++i)
            ytmp_[i] = y[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
        rhs_(tau + c4 * h, ytmp_.data(), k4_.data());
        for (int i = 0; i < dim_; ++i)
            ytmp_[i] = y[i] + h * (a51 * k1_[i] + a52 * k2_[i] +
                                   a53 * k3_[i] + a54 * k4_[i]);
        rhs_(tau + c5 * h, ytmp_.data(), k5_.data());
        for (int i = 0; i < dim_; ++i)
            ytmp_[i] = y[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] +
                                   a64 * k4_[i] + a65 * k5_[i]);
        rhs_(tau + h, ytmp_.data(), k6_.data());
        for (int i = 0; i < dim_; ++i)
            ytmp_[i] = y[i] + h * (b1 * k1_[i] + b3 * k3_[i] + b4 * k4_[i] +
                                   b5 * k5_[i] + b6 * k6_[i]);
        rhs_(tau + h, ytmp_.data(), k7_.data());
        for (int i = 0; i < dim_; ++i)
            k2_[i] = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] +
                          e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
        return scaled_norm(k2_, y, ytmp_);
    }

    Rhs rhs_;
    int dim_;
    double rtol_, atol_;
    std::vector<double> k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_, yprev_;
};

double null_direction_excursion(const std::vector<double>& V1,
                                const std::vector<double>& A_c,
                                const double* A) {
    double u = 0.0;
    for (std::size_t j = 0; j < V1.size(); ++j) u -= V1[j] * (A[j] - A_c[j]);
    return u;
}

double threshold_fraction(RegimeForm form, double damping) {
    if (form == RegimeForm::overdamped || damping > 0.0)
        return kDampedFraction;
    return kUndampedFraction;
}

double resolve_threshold(RegimeForm form, double damping,
                         double excursion_scale, double delta_c,
                         double lambda) {
    const double lam = lambda > 0.0 ? lambda : 1e3 * std::abs(delta_c);
    if (!(lam > 0.0))
        throw ValidationError("switching cutoff must resolve to a positive value");
    if (excursion_scale > 0.0)
        return std::min(lam, threshold_fraction(form, damping) * excursion_scale);
    return lam;
}

struct Hermite {
    // Cubic Hermite value at fraction t in [0, 1] of the interval of width h.
    static double value(double y0, double d0, double y1, double d1, double h,
                        double t) {
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0 +
               (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * d1;
    }
};

TimeSeries run(const NondimArch& arch, const LoadProgram& load,
               const SimulationConfig& cfg, RegimeForm form) {
    arch.validate();
    load.validate();
    cfg.validate();
    const int n = arch.N();
    if (form == RegimeForm::overdamped && !(arch.c > 0.0))
        throw ValidationError(
            "overdamped integration requires positive damping");

    std::optional<CriticalPoint> cp;
    try {
        cp = critical_point(arch);
    } catch (const NotBistable&) {
        if (cfg.init == InitialState::critical_state) throw;
    }
    double excursion = 0.0;
    try {
        excursion = fold_excursion_scale(arch);
    } catch (const NotBistable&) {
    }

    TimeSeries ts;
    ts.form = form;
    ts.load = load;
    ts.damping = arch.c;
    ts.excursion_scale = excursion;

    // Initial state.
    std::vector<double> A0, Adot0(n, 0.0);
    switch (cfg.init) {
        case InitialState::critical_state:
            A0 = cp->A_c;
            break;
        case InitialState::as_fabricated:
            A0 = arch.a;
            break;
        case InitialState::custom:
            if (static_cast<int>(cfg.A0.size()) != n)
                throw ValidationError(
                    "custom initial state has wrong mode count");
            A0 = cfg.A0;
            if (!cfg.Adot0.empty()) {
                if (static_cast<int>(cfg.Adot0.size()) != n)
                    throw ValidationError(
                        "custom initial velocity has wrong mode count");
                Adot0 = cfg.Adot0;
            }
            break;
    }

    // Switching monitor.  The run stops at the first accepted step at or past
    // the detection threshold itself: that step and its predecessor are always
    // stored, which is exactly the bracket the event locator needs.  Any
    // overshoot target beyond the threshold would be unreachable for inertial
    // passages, whose energy turning point sits just above it.
    const bool armed = cp.has_value() && cfg.stop_at_switching;
    double u_th = std::numeric_limits<double>::infinity();
    double u_stop = std::numeric_limits<double>::infinity();
    if (cp) {
        const double theta = resolve_threshold(form, arch.c, excursion,
                                               cp->delta_c, cfg.lambda);
        u_th = theta / (2.0 * cp->load_coefficient);
        u_stop = u_th;
    }

    // Overdamped applicability: the reduction assumes the relaxation rate c
    // dominates the reduced force scale sqrt(K eps_eff).
    if (form == RegimeForm::overdamped && cp) {
        double eps_eff = 0.0;
        if (load.kind == LoadProgram::Kind::static_perturbation) {
            eps_eff = cp->load_coefficient * load.eps;
        } else if (load.nu > 0.0) {
            const double knu = cp->K * cp->load_coefficient * load.nu;
            const double delay = specfun::airy_first_negative_zero() *
                                 std::pow(knu / (arch.c * arch.c), -1.0 / 3.0);
            eps_eff = cp->load_coefficient * load.nu * delay;
        }
        if (eps_eff > 0.0 &&
            arch.c * arch.c < 100.0 * std::sqrt(cp->K * eps_eff)) {
            std::ostringstream w;
            w << "overdamped form marginal: c^2 = " << arch.c * arch.c
              << " is below 100*sqrt(K*eps) = "
              << 100.0 * std::sqrt(cp->K * eps_eff)
              << "; inertia may not be negligible";
            ts.warnings.push_back(w.str());
        }
    }

    const int dim = form == RegimeForm::full ? 2 * n : n;
    std::vector<double> y(dim);
    std::copy(A0.begin(), A0.end(), y.begin());
    if (form == RegimeForm::full)
        std::copy(Adot0.begin(), Adot0.end(), y.begin() + n);

    std::vector<double> force(n);
    auto rhs = [&](double tau, const double* yv, double* dy) {
        internal_force_vector_into(yv, arch, force.data());
        const double F = load.force_at(tau);
        if (form == RegimeForm::full) {
            for (int i = 0; i < n; ++i) {
                dy[i] = yv[n + i];
                dy[n + i] = 2.0 * force[i] - 0.5 * F * arch.load_mask[i] -
                            arch.c * yv[n + i];
            }
        } else {
            for (int i = 0; i < n; ++i)
                dy[i] = (2.0 * force[i] - 0.5 * F * arch.load_mask[i]) /
                        arch.c;
        }
    };

    auto make_sample = [&](double tau, const std::vector<double>& yv,
                           const std::vector<double>& fv) {
        SamplePoint s;
        s.tau = tau;
        s.A.assign(yv.begin(), yv.begin() + n);
        if (form == RegimeForm::full)
            s.Adot.assign(yv.begin() + n, yv.end());
        else
            s.Adot.assign(fv.begin(), fv.begin() + n);
        s.F = load.force_at(tau);
        s.delta = midpoint_displacement(arch, s.A);
        StateVector sv;
        sv.A = s.A;
        if (form == RegimeForm::full) sv.Adot = s.Adot;
        sv.tau = tau;
        s.energy = total_energy(sv, arch, s.F);
        return s;
    };

    double last_stored = -std::numeric_limits<double>::infinity();
    bool prev_stored = false;
    std::vector<double> final_y, final_f;
    double final_tau = 0.0;
    bool have_final = false;

    auto on_step = [&](double tau_prev, const std::vector<double>& y_prev,
                       const std::vector<double>& f_prev, double tau_new,
                       const std::vector<double>& y_new,
                       const std::vector<double>& f_new) {
        if (ts.samples.empty()) {
            ts.samples.push_back(make_sample(tau_prev, y_prev, f_prev));
            last_stored = tau_prev;
        }
        double u_new = 0.0;
        if (cp)
            u_new = null_direction_excursion(cp->V1, cp->A_c, y_new.data());
        const bool near_threshold = cp && u_new >= 0.9 * u_th;
        const bool stop = armed && u_new >= u_stop;
        const bool store = cfg.sample_dt <= 0.0 ||
                           tau_new - last_stored >= cfg.sample_dt ||
                           near_threshold || stop;
        if (store) {
            // Keep the skipped predecessor so stored samples bracketing the
            // threshold are always adjacent accepted steps.
            if (!prev_stored && ts.samples.back().tau < tau_prev)
                ts.samples.push_back(make_sample(tau_prev, y_prev, f_prev));
            ts.samples.push_back(make_sample(tau_new, y_new, f_new));
            last_stored = tau_new;
        }
        prev_stored = store;
        final_tau = tau_new;
        final_y = y_new;
        final_f = f_new;
        have_final = true;
        if (stop) {
            ts.hit_stop_threshold = true;
            return false;
        }
        return true;
    };

    Dopri5<decltype(rhs)> stepper(rhs, dim, cfg.rtol, cfg.atol);
    stepper.drive(y, 0.0, cfg.tau_max, on_step, ts.steps_accepted,
                  ts.steps_rejected);

    if (ts.samples.empty()) {
        // Degenerate horizon with no accepted steps: record the start state.
        std::vector<double> f0(dim);
        rhs(0.0, y.data(), f0.data());
        ts.samples.push_back(make_sample(0.0, y, f0));
    } else if (have_final && !prev_stored) {
        ts.samples.push_back(make_sample(final_tau, final_y, final_f));
    }

    if (cfg.expect_switching && !ts.hit_stop_threshold)
        throw MaxTimeExceeded(
            "no switching before tau_max = " + std::to_string(cfg.tau_max));
    return ts;
}

} // namespace

void SimulationConfig::validate() const {
    auto tol_ok = [](double t) { return t > 0.0 && t <= 1e-3; };
    if (!tol_ok(rtol) || !tol_ok(atol))
        throw ValidationError("tolerances must lie in (0, 1e-3]");
    if (!(tau_max > 0.0) || !std::isfinite(tau_max))
        throw ValidationError("tau_max must be positive and finite");
    if (!std::isfinite(lambda))
        throw ValidationError("switching cutoff must be finite");
    if (sample_dt < 0.0 || !std::isfinite(sample_dt))
        throw ValidationError("sample_dt must be nonnegative");
}

double damped_transit_fraction() { return kDampedFraction; }
double undamped_transit_fraction() { return kUndampedFraction; }

TimeSeries integrate_full(const NondimArch& arch, const LoadProgram& load,
                          const SimulationConfig& cfg) {
    return run(arch, load, cfg, RegimeForm::full);
}

TimeSeries integrate_overdamped(const NondimArch& arch,
                                const LoadProgram& load,
                                const SimulationConfig& cfg) {
    return run(arch, load, cfg, RegimeForm::overdamped);
}

double effective_threshold_delta(const TimeSeries& ts, const CriticalPoint& cp,
                                 const SimulationConfig& cfg) {
    return resolve_threshold(ts.form, ts.damping, ts.excursion_scale,
                             cp.delta_c, cfg.lambda);
}

SwitchingEvent detect_switching(const TimeSeries& ts, const CriticalPoint& cp,
                                const SimulationConfig& cfg) {
    if (ts.samples.empty())
        throw ValidationError("cannot detect switching in an empty series");
    const std::size_t n = cp.A_c.size();
    if (ts.samples.front().A.size() != n || cp.V1.size() != n)
        throw ValidationError("series and critical point mode counts differ");
    if (!(cp.load_coefficient > 0.0))
        throw ValidationError("critical point has no load coupling");

    const double theta = effective_threshold_delta(ts, cp, cfg);
    const double u_th = theta / (2.0 * cp.load_coefficient);

    auto u_of = [&](const SamplePoint& s) {
        return null_direction_excursion(cp.V1, cp.A_c, s.A.data());
    };
    auto du_of = [&](const SamplePoint& s) {
        double du = 0.0;
        for (std::size_t j = 0; j < n; ++j) du -= cp.V1[j] * s.Adot[j];
        return du;
    };

    std::size_t hit = ts.samples.size();
    double u_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ts.samples.size(); ++i) {
        const double u = u_of(ts.samples[i]);
        u_max = std::max(u_max, u);
        if (u >= u_th) {
            hit = i;
            break;
        }
    }
    if (hit == ts.samples.size()) {
        std::ostringstream msg;
        msg << "no switching: excursion reached " << u_max
            << " of threshold " << u_th << " along the null direction";
        throw NoSwitching(msg.str());
    }

    SwitchingEvent ev;
    ev.threshold_delta = theta;
    ev.threshold_u = u_th;
    if (hit == 0) {
        const SamplePoint& s = ts.samples.front();
        ev.tau_switch = s.tau;
        ev.F_switch = ts.load.force_at(s.tau);
        ev.A_tip = s.A;
        return ev;
    }

    const SamplePoint& s0 = ts.samples[hit - 1];
    const SamplePoint& s1 = ts.samples[hit];
    const double h = s1.tau - s0.tau;
    const double u0 = u_of(s0), u1 = u_of(s1);
    const double d0 = du_of(s0), d1 = du_of(s1);
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 100 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        (Hermite::value(u0, d0, u1, d1, h, mid) < u_th ? lo : hi) = mid;
    }
    const double t = 0.5 * (lo + hi);
    ev.tau_switch = s0.tau + t * h;
    ev.F_switch = ts.load.force_at(ev.tau_switch);
    ev.A_tip.resize(n);
    for (std::size_t j = 0; j < n; ++j)
        ev.A_tip[j] = Hermite::value(s0.A[j], s0.Adot[j], s1.A[j], s1.Adot[j],
                                     h, t);
    return ev;
}

} // namespace snapdyn::dynamics
