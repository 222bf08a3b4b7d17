#pragma once
// Shared numerical oracles for the test suite: quadrature, finite
// differences, and regression, all independent of the library under test.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracles {

// Adaptive Simpson quadrature with absolute tolerance.
inline double simpson_rec(const std::function<double(double)>& f, double a,
                          double b, double fa, double fm, double fb,
                          double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-12) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 60);
}

// Fourth-order central first derivative.
inline double derivative(const std::function<double(double)>& f, double x,
                         double h) {
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) /
           (12.0 * h);
}

// Second-order central second derivative.
inline double second_derivative(const std::function<double(double)>& f,
                                double x, double h) {
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x,
                        const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::runtime_error("fit_line needs two equally sized samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    LineFit fit;
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / n;
    return fit;
}

inline LineFit fit_loglog(const std::vector<double>& x,
                          const std::vector<double>& y) {
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        lx[i] = std::log10(x[i]);
        ly[i] = std::log10(y[i]);
    }
    return fit_line(lx, ly);
}

}  // namespace oracles
