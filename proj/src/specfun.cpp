#include "snapdyn/specfun.hpp"
#include "snapdyn/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace snapdyn::specfun {

namespace {

constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Carlson symmetric integral R_F via the duplication theorem. Standard
// convergence: each pass quarters the spread of the arguments; the fifth-order
// tail expansion then leaves a relative error ~ ERRTOL^6 (< 3e-16 here).
// Domain: x, y, z >= 0 with at most one of them zero.
// ---------------------------------------------------------------------------
double carlson_rf(double x, double y, double z) {
    constexpr double ERRTOL = 0.0020;
    constexpr int kMaxIter = 200;
    double xt = x, yt = y, zt = z;
    double mu = 0.0, dx = 0.0, dy = 0.0, dz = 0.0;
    for (int it = 0; it < kMaxIter; ++it) {
        const double sx = std::sqrt(xt);
        const double sy = std::sqrt(yt);
        const double sz = std::sqrt(zt);
        const double lam = sx * (sy + sz) + sy * sz;
        xt = 0.25 * (xt + lam);
        yt = 0.25 * (yt + lam);
        zt = 0.25 * (zt + lam);
        mu = (xt + yt + zt) / 3.0;
        dx = (mu - xt) / mu;
        dy = (mu - yt) / mu;
        dz = (mu - zt) / mu;
        const double spread =
            std::max(std::abs(dx), std::max(std::abs(dy), std::abs(dz)));
        if (spread < ERRTOL) break;
    }
    const double e2 = dx * dy - dz * dz;
    const double e3 = dx * dy * dz;
    return (1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0) /
           std::sqrt(mu);
}

void require_modulus(double k) {
    if (!(k >= 0.0) || !(k < 1.0))
        throw ValidationError("elliptic modulus must satisfy 0 <= k < 1, got " +
                              std::to_string(k));
}

// ---------------------------------------------------------------------------
// Airy Maclaurin branch, |z| <= 10.
//
// f and g are the initial-value solutions of y'' = z y with (f, f')(0) = (1, 0)
// and (g, g')(0) = (0, 1); a_{n+3} = a_n / ((n+3)(n+2)) generates both. For
// z < 0 the partial sums cancel down from ~7e7 to O(1e-1), so the four series
// run in long double with compensated (Kahan) accumulation.
// ---------------------------------------------------------------------------
struct KahanL {
    long double s = 0.0L;
    long double c = 0.0L;
    void add(long double t) {
        const long double y = t - c;
        const long double u = s + y;
        c = (u - s) - y;
        s = u;
    }
};

// Ai(0) and -Ai'(0): 3^{-2/3}/Gamma(2/3) and 3^{-1/3}/Gamma(1/3).
constexpr long double kAi0 = 0.355028053887817239260063186004L;
constexpr long double kNegAip0 = 0.258819403792806798405183560189L;

AiryPair airy_series(double z) {
    const long double sqrt3l = 1.732050807568877293527446341506L;
    if (z == 0.0) {
        // The derivative recurrences below divide by z; return the exact
        // initial values instead.
        AiryPair out;
        out.Ai = static_cast<double>(kAi0);
        out.Aip = static_cast<double>(-kNegAip0);
        out.Bi = static_cast<double>(sqrt3l * kAi0);
        out.Bip = static_cast<double>(sqrt3l * kNegAip0);
        return out;
    }
    const long double zl = z;
    const long double z3 = zl * zl * zl;

    KahanL f, fp, g, gp;
    // k = 0 terms: f = 1, f' = 0, g = z, g' = 1.
    f.add(1.0L);
    g.add(zl);
    gp.add(1.0L);

    long double tf = 1.0L;  // a_{3k} z^{3k}
    long double tg = zl;    // a_{3k+1} z^{3k+1}
    for (int k = 1; k <= 240; ++k) {
        tf *= z3 / (static_cast<long double>(3 * k) * (3 * k - 1));
        tg *= z3 / (static_cast<long double>(3 * k + 1) * (3 * k));
        const long double tfp = tf * (3.0L * k) / zl;      // d/dz of f term
        const long double tgp = tg * (3.0L * k + 1) / zl;  // d/dz of g term
        f.add(tf);
        g.add(tg);
        fp.add(tfp);
        gp.add(tgp);
        const long double mag =
            std::abs(tf) + std::abs(tg) + std::abs(tfp) + std::abs(tgp);
        if (mag < 1e-26L * (std::abs(f.s) + std::abs(g.s) + 1.0L)) break;
    }

    const long double sqrt3 = 1.732050807568877293527446341506L;
    AiryPair out;
    out.Ai = static_cast<double>(kAi0 * f.s - kNegAip0 * g.s);
    out.Aip = static_cast<double>(kAi0 * fp.s - kNegAip0 * gp.s);
    out.Bi = static_cast<double>(sqrt3 * (kAi0 * f.s + kNegAip0 * g.s));
    out.Bip = static_cast<double>(sqrt3 * (kAi0 * fp.s + kNegAip0 * gp.s));
    return out;
}

// Poincare coefficients u_k (and v_k for derivatives) of the large-argument
// expansions; generated on the fly, truncated at the smallest term.
struct AsymptoticSums {
    double su_alt = 0.0;   // sum (-1)^k u_k / zeta^k
    double su = 0.0;       // sum u_k / zeta^k
    double sv_alt = 0.0;   // sum (-1)^k v_k / zeta^k
    double sv = 0.0;       // sum v_k / zeta^k
    double p_even = 0.0;   // sum (-1)^k u_{2k} zeta^{-2k}
    double q_odd = 0.0;    // sum (-1)^k u_{2k+1} zeta^{-2k-1}
    double r_even = 0.0;   // sum (-1)^k v_{2k} zeta^{-2k}
    double s_odd = 0.0;    // sum (-1)^k v_{2k+1} zeta^{-2k-1}
};

AsymptoticSums airy_asymptotic_sums(double zeta) {
    AsymptoticSums a;
    double u = 1.0;       // u_k
    double pw = 1.0;      // zeta^{-k}
    double prev = std::numeric_limits<double>::max();
    for (int k = 0; k <= 60; ++k) {
        if (k > 0) {
            const double num = (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0);
            u *= num / (216.0 * k * (2.0 * k - 1.0));
            pw /= zeta;
        }
        const double v = (k == 0) ? 1.0 : u * (6.0 * k + 1.0) / (1.0 - 6.0 * k);
        const double term = u * pw;
        if (std::abs(term) > prev) break;  // past the optimal truncation point
        prev = std::abs(term);
        const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
        a.su += term;
        a.su_alt += sgn * term;
        a.sv += v * pw;
        a.sv_alt += sgn * v * pw;
        if (k % 2 == 0) {
            const double sgn2 = (k / 2 % 2 == 0) ? 1.0 : -1.0;
            a.p_even += sgn2 * term;
            a.r_even += sgn2 * v * pw;
        } else {
            const double sgn2 = ((k - 1) / 2 % 2 == 0) ? 1.0 : -1.0;
            a.q_odd += sgn2 * term;
            a.s_odd += sgn2 * v * pw;
        }
        if (std::abs(term) < 1e-19) break;
    }
    return a;
}

AiryPair airy_asymptotic_positive(double z) {
    const double zeta = (2.0 / 3.0) * z * std::sqrt(z);
    const AsymptoticSums a = airy_asymptotic_sums(zeta);
    const double q = std::pow(z, 0.25);
    const double sp = std::sqrt(kPi);
    const double em = std::exp(-zeta);
    const double ep = std::exp(zeta);
    AiryPair out;
    out.Ai = em / (2.0 * sp * q) * a.su_alt;
    out.Aip = -q * em / (2.0 * sp) * a.sv_alt;
    out.Bi = ep / (sp * q) * a.su;
    out.Bip = q * ep / sp * a.sv;
    return out;
}

AiryPair airy_asymptotic_negative(double z) {
    const double x = -z;
    const double zeta = (2.0 / 3.0) * x * std::sqrt(x);
    const AsymptoticSums a = airy_asymptotic_sums(zeta);
    const double q = std::pow(x, 0.25);
    const double sp = std::sqrt(kPi);
    const double cw = std::cos(zeta - kPi / 4.0);
    const double sw = std::sin(zeta - kPi / 4.0);
    AiryPair out;
    out.Ai = (cw * a.p_even + sw * a.q_odd) / (sp * q);
    out.Aip = q / sp * (sw * a.r_even - cw * a.s_odd);
    out.Bi = (-sw * a.p_even + cw * a.q_odd) / (sp * q);
    out.Bip = q / sp * (cw * a.r_even + sw * a.s_odd);
    return out;
}

} // namespace

void EllipticArgs::validate() const {
    require_modulus(k);
    if (!std::isfinite(phi))
        throw ValidationError("elliptic amplitude must be finite");
}

double elliptic_K(double k) {
    require_modulus(k);
    return carlson_rf(0.0, (1.0 - k) * (1.0 + k), 1.0);
}

double elliptic_F(double phi, double k) {
    require_modulus(k);
    if (!std::isfinite(phi))
        throw ValidationError("elliptic amplitude must be finite");
    if (k == 0.0) return phi;  // integrand is exactly 1
    if (phi == 0.0) return 0.0;

    // Reduce the amplitude to r in [-pi/2, pi/2]: F(n*pi + r) = 2n K + F(r).
    const double n = std::floor(phi / kPi + 0.5);
    const double r = phi - n * kPi;
    double val = 0.0;
    if (n != 0.0) val += 2.0 * n * elliptic_K(k);
    if (r != 0.0) {
        const double s = std::sin(r);
        const double c = std::cos(r);
        val += s * carlson_rf(c * c, (1.0 - k * s) * (1.0 + k * s), 1.0);
    }
    return val;
}

AiryPair airy(double z) {
    if (z > 50.0)
        throw OverflowGuard("airy: z = " + std::to_string(z) +
                            " exceeds 50; Bi would overflow the supported range");
    if (z < -50.0)
        throw ValidationError("airy: z = " + std::to_string(z) +
                              " below -50, outside the supported window");
    if (std::abs(z) <= 10.0) return airy_series(z);
    return (z > 0.0) ? airy_asymptotic_positive(z) : airy_asymptotic_negative(z);
}

double airy_first_negative_zero() {
    // Ai(-2) > 0 > Ai(-3); bisect, then polish with Newton on Ai(-z).
    double lo = 2.0, hi = 3.0;
    for (int i = 0; i < 40; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (airy(-mid).Ai > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    double zstar = 0.5 * (lo + hi);
    for (int i = 0; i < 6; ++i) {
        const AiryPair p = airy(-zstar);
        // d/dz* Ai(-z*) = -Ai'(-z*)
        const double step = p.Ai / p.Aip;
        zstar += step;
        if (std::abs(step) < 1e-15 * zstar) break;
    }
    return zstar;
}

} // namespace snapdyn::specfun
