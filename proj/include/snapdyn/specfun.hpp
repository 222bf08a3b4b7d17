#pragma once

namespace snapdyn::specfun {

// ============================================================================
// Special functions used by the closed-form switching laws. Everything is
// real-argument, double-precision, and implemented in-house: the incomplete
// elliptic integral of the first kind (Legendre form) and the Airy functions
// with derivatives.
// ============================================================================

// Arguments of the incomplete elliptic integral F(phi, k). The amplitude may
// exceed pi/2; evaluation uses the periodic extension.
struct EllipticArgs {
    double phi = 0.0; // amplitude, radians
    double k = 0.0;   // modulus, 0 <= k < 1

    void validate() const; // throws ValidationError on k >= 1 or non-finite phi
};

// Airy functions of the first and second kind with derivatives at one real
// argument. Satisfies the Wronskian identity Ai*Bi' - Ai'*Bi = 1/pi.
struct AiryPair {
    double Ai = 0.0;
    double Bi = 0.0;
    double Aip = 0.0; // d/dz Ai
    double Bip = 0.0; // d/dz Bi

    double wronskian() const { return Ai * Bip - Aip * Bi; }
};

// Legendre incomplete elliptic integral of the first kind,
//   F(phi, k) = integral_0^phi dtheta / sqrt(1 - k^2 sin^2 theta),
// for 0 <= k < 1 and any finite amplitude. Amplitudes beyond pi/2 use the
// periodic extension F(phi + n*pi, k) = F(phi, k) + 2n*K(k). Odd in phi.
// Evaluated through Carlson's symmetric integral R_F (duplication theorem);
// absolute accuracy better than 1e-12 over the supported domain.
double elliptic_F(double phi, double k);

// Complete integral K(k) = F(pi/2, k).
double elliptic_K(double k);

// Ai, Bi, Ai', Bi' at real z, |z| <= 50.
//   |z| <= 10 : Maclaurin series of the two standard initial-value solutions,
//               accumulated in extended precision (the alternating series for
//               negative z cancels ~9 digits at z = -10, which long-double
//               compensated summation absorbs).
//   |z| > 10  : asymptotic expansions truncated at the smallest term.
// Absolute accuracy 1e-10 or better for |z| <= 10; the two branches are
// cross-validated at the seam by the test suite.
//
// Throws OverflowGuard for z > 50 (Bi grows ~ exp(2/3 z^{3/2})) and
// ValidationError for z < -50 (outside the supported window).
AiryPair airy(double z);

// First zero of Ai(-z) on the positive axis, z* = 2.33810741...; bracketed on
// (2, 3) and polished by bisection + Newton to ~1e-12.
double airy_first_negative_zero();

} // namespace snapdyn::specfun
