#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "snapdyn/errors.hpp"
#include "snapdyn/specfun.hpp"

#include "oracles.hpp"

#include <cmath>
#include <vector>

using namespace snapdyn;
using specfun::airy;
using specfun::airy_first_negative_zero;
using specfun::elliptic_F;
using specfun::elliptic_K;

namespace {

constexpr double kPi = 3.141592653589793238462643383279;

// Defining integral of F(phi, k), evaluated by adaptive quadrature.
double elliptic_quadrature(double phi, double k, double tol = 1e-14) {
    return oracles::integrate(
        [k](double t) { return 1.0 / std::sqrt(1.0 - k * k * std::sin(t) * std::sin(t)); },
        0.0, phi, tol);
}

// High-precision references (30-digit arbitrary-precision oracle, frozen).
struct AiryRef {
    double z, Ai, Bi, Aip, Bip;
};
const std::vector<AiryRef> kAiryRefs = {
    {-30, -0.087968188456842163, -0.22444694220056632, 1.2286206026374851, -0.48369472582768149},
    {-15, 0.27821749087082893, -0.069126594531010061, 0.27237420430864202, 1.0764297530843748},
    {-10.5, -0.3119260350510506, -0.030356123264021013, 0.090957487390681673, -1.0116140816303775},
    {-10, 0.040241238486443191, -0.31467982964383863, 0.99626504413279006, 0.11941411339990924},
    {-7.5, 0.32177571638064788, -0.11246348507649081, 0.3188095066985546, 0.87780228154576092},
    {-5, 0.35076100902411432, -0.13836913490160058, 0.32719281855444314, 0.77841177300189925},
    {-2.33810741045977, -2.1523679279957463e-15, -0.45394320205833564, 0.70121082272069136, -0.045982121821861342},
    {-1, 0.53556088329235212, 0.10399738949694461, -0.010160567116645209, 0.59237562642279235},
    {0, 0.35502805388781724, 0.61492662744600074, -0.2588194037928068, 0.44828835735382636},
    {0.5, 0.23169360648083349, 0.85427704310315549, -0.22491053266468389, 0.5445725641405923},
    {2, 0.034924130423274379, 3.2980949999782147, -0.053090384433653632, 4.1006820499328899},
    {5, 0.00010834442813607442, 657.79204417117118, -0.00024741389086846248, 1435.8190802179825},
    {10, 1.1047532552898686e-10, 455641153.54822514, -3.5206336767389236e-10, 1429236134.4828658},
    {10.5, 2.2022745192834016e-11, 2230554441.1366952, -7.1876967814515671e-11, 7173692245.2832992},
    {15, 2.1649625207379923e-18, 18982099567493590.0, -8.4205679540177728e-18, 73197492034070105.0},
    {30, 3.2082175915504956e-49, 9.057288512151307e+46, -1.759876581432726e-48, 4.953304512891299e+47},
};

} // namespace

// ---------------------------------------------------------------------------
// elliptic_F
// ---------------------------------------------------------------------------

TEST_CASE("elliptic_F with zero modulus is the identity") {
    for (double phi : {0.0, 0.3, 1.0, kPi / 2, kPi, 5.0, -2.0})
        CHECK(elliptic_F(phi, 0.0) == doctest::Approx(phi).epsilon(1e-15));
}

TEST_CASE("complete integral at the lemniscatic modulus") {
    const double k = 1.0 / std::sqrt(2.0);
    CHECK(elliptic_K(k) == doctest::Approx(1.8540746773013719).epsilon(1e-13));
    CHECK(elliptic_K(k) == doctest::Approx(elliptic_F(kPi / 2, k)).epsilon(1e-15));
    CHECK(elliptic_K(k) ==
          doctest::Approx(elliptic_quadrature(kPi / 2, k)).epsilon(1e-13));
}

TEST_CASE("elliptic_F matches the quadrature oracle to 1e-12 on a 100-point grid") {
    // 10 amplitudes x 10 moduli, amplitudes within the principal range where
    // the defining integral is directly computable.
    double worst = 0.0;
    for (int i = 1; i <= 10; ++i) {
        const double phi = i * (kPi / 2) / 10.0;
        for (int j = 0; j < 10; ++j) {
            const double k = j / 10.0; // 0, 0.1, ..., 0.9
            const double got = elliptic_F(phi, k);
            const double ref = elliptic_quadrature(phi, k);
            worst = std::max(worst, std::abs(got - ref));
        }
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("elliptic_F frozen spot values") {
    CHECK(elliptic_F(0.3, 0.2) == doctest::Approx(0.30017706757885615).epsilon(1e-14));
    CHECK(elliptic_F(1.2, 0.5) == doctest::Approx(1.2607117273569367).epsilon(1e-14));
    CHECK(elliptic_F(2.5, 0.8) == doctest::Approx(3.3198755177924328).epsilon(1e-13));
    CHECK(elliptic_F(7.0, 0.99) == doctest::Approx(14.212074361692753).epsilon(1e-13));
    CHECK(elliptic_F(kPi / 3, 0.5) == doctest::Approx(1.0895506700518854).epsilon(1e-14));
    CHECK(elliptic_F(kPi, 1.0 / std::sqrt(2.0)) ==
          doctest::Approx(3.7081493546027438).epsilon(1e-13));
}

TEST_CASE("periodic extension beyond pi/2") {
    const double k = 0.6;
    const double K = elliptic_K(k);
    for (int n = 1; n <= 4; ++n)
        for (double phi : {0.2, 0.9, 1.4})
            CHECK(elliptic_F(phi + n * kPi, k) ==
                  doctest::Approx(elliptic_F(phi, k) + 2 * n * K).epsilon(1e-13));
}

TEST_CASE("elliptic_F is odd in the amplitude") {
    for (double phi : {0.4, 1.3, 2.8, 6.1})
        CHECK(elliptic_F(-phi, 0.7) ==
              doctest::Approx(-elliptic_F(phi, 0.7)).epsilon(1e-15));
}

TEST_CASE("elliptic_F strictly increasing in amplitude and modulus") {
    double prev = elliptic_F(0.05, 0.5);
    for (int i = 2; i <= 60; ++i) {
        const double cur = elliptic_F(0.05 * i, 0.5);
        CHECK(cur > prev);
        prev = cur;
    }
    prev = elliptic_F(1.2, 0.0);
    for (int j = 1; j <= 19; ++j) {
        const double cur = elliptic_F(1.2, 0.05 * j);
        CHECK(cur > prev);
        prev = cur;
    }
}

TEST_CASE("undamped static prefactor composes to 3.4508") {
    const double coef = (1.0 / std::sqrt(2.0)) * std::pow(3.0, 0.25) *
                        elliptic_F(kPi, 1.0 / std::sqrt(2.0));
    CHECK(std::abs(coef - 3.4508) < 5e-4);
    CHECK(coef == doctest::Approx(3.450821807669628).epsilon(1e-13));
}

TEST_CASE("elliptic_F rejects modulus at or above one") {
    CHECK_THROWS_AS((void)elliptic_F(1.0, 1.0), ValidationError);
    CHECK_THROWS_AS((void)elliptic_F(1.0, 1.5), ValidationError);
    CHECK_THROWS_AS((void)elliptic_K(1.0), ValidationError);
}

// ---------------------------------------------------------------------------
// airy
// ---------------------------------------------------------------------------

TEST_CASE("airy matches frozen references to 1e-10 absolute inside |z| <= 10") {
    for (const auto& r : kAiryRefs) {
        if (std::abs(r.z) > 10.0) continue;
        const auto p = airy(r.z);
        CHECK(std::abs(p.Ai - r.Ai) < 1e-10);
        CHECK(std::abs(p.Bi - r.Bi) < 1e-10 * std::max(1.0, std::abs(r.Bi)));
        CHECK(std::abs(p.Aip - r.Aip) < 1e-10);
        CHECK(std::abs(p.Bip - r.Bip) < 1e-10 * std::max(1.0, std::abs(r.Bip)));
    }
}

TEST_CASE("airy matches frozen references relatively on the asymptotic side") {
    for (const auto& r : kAiryRefs) {
        if (std::abs(r.z) <= 10.0) continue;
        const auto p = airy(r.z);
        CHECK(p.Ai == doctest::Approx(r.Ai).epsilon(1e-11));
        CHECK(p.Bi == doctest::Approx(r.Bi).epsilon(1e-11));
        CHECK(p.Aip == doctest::Approx(r.Aip).epsilon(1e-11));
        CHECK(p.Bip == doctest::Approx(r.Bip).epsilon(1e-11));
    }
}

TEST_CASE("airy initial values are exact") {
    const auto p = airy(0.0);
    CHECK(p.Ai == doctest::Approx(0.35502805388781724).epsilon(1e-15));
    CHECK(p.Bi == doctest::Approx(0.61492662744600074).epsilon(1e-15));
    CHECK(p.Aip == doctest::Approx(-0.2588194037928068).epsilon(1e-15));
    CHECK(p.Bip == doctest::Approx(0.44828835735382636).epsilon(1e-15));
}

TEST_CASE("Wronskian equals 1/pi to 1e-10 across z in [-10, 5]") {
    for (int i = 0; i <= 600; ++i) {
        const double z = -10.0 + 15.0 * i / 600.0;
        CHECK(std::abs(airy(z).wronskian() - 1.0 / kPi) < 1e-10);
    }
}

TEST_CASE("Airy ODE residual vanishes under finite differences") {
    // y'' = z y for both kinds; second differences with h = 1e-3 carry
    // O(h^2 y'''') truncation, so compare on a relative scale.
    const double h = 1e-3;
    for (double z : {-9.0, -6.3, -2.0, -0.7, 0.0, 1.1, 3.5, 7.0}) {
        const auto m = airy(z);
        const double ai2 = (airy(z + h).Ai - 2 * m.Ai + airy(z - h).Ai) / (h * h);
        const double bi2 = (airy(z + h).Bi - 2 * m.Bi + airy(z - h).Bi) / (h * h);
        const double scale_a = std::max(1.0, std::abs(z * m.Ai));
        const double scale_b = std::max(1.0, std::abs(z * m.Bi));
        CHECK(std::abs(ai2 - z * m.Ai) / scale_a < 1e-6);
        CHECK(std::abs(bi2 - z * m.Bi) / scale_b < 1e-6);
    }
}

TEST_CASE("series and asymptotic branches agree at the switchover") {
    // The representation switches at |z| = 10; values must be continuous
    // through the seam to the cross-validation tolerance.
    for (double seam : {10.0, -10.0}) {
        const auto lo = airy(std::nextafter(seam, 0.0));
        const auto hi = airy(std::nextafter(seam, 2.0 * seam));
        CHECK(std::abs(lo.Ai - hi.Ai) < 1e-9 * std::max(1.0, std::abs(hi.Ai)));
        CHECK(std::abs(lo.Bi - hi.Bi) < 1e-9 * std::max(1.0, std::abs(hi.Bi)));
        CHECK(std::abs(lo.Aip - hi.Aip) < 1e-9 * std::max(1.0, std::abs(hi.Aip)));
        CHECK(std::abs(lo.Bip - hi.Bip) < 1e-9 * std::max(1.0, std::abs(hi.Bip)));
    }
}

TEST_CASE("airy guards the overflowing and unsupported ranges") {
    CHECK_THROWS_AS((void)airy(50.5), OverflowGuard);
    CHECK_THROWS_AS((void)airy(-50.5), ValidationError);
    CHECK_NOTHROW((void)airy(50.0));
    CHECK_NOTHROW((void)airy(-50.0));
}

// ---------------------------------------------------------------------------
// airy_first_negative_zero
// ---------------------------------------------------------------------------

TEST_CASE("first negative Airy zero") {
    const double zs = airy_first_negative_zero();
    CHECK(std::abs(airy(-zs).Ai) < 1e-10);
    CHECK(std::abs(zs - 2.3381) < 1e-4);
    CHECK(zs == doctest::Approx(2.338107410459767).epsilon(1e-12));
    // Simple zero: the derivative stays well away from zero there.
    CHECK(std::abs(airy(-zs).Aip) > 0.5);
    CHECK(airy(-zs).Aip == doctest::Approx(0.70121082272069136).epsilon(1e-9));
}
