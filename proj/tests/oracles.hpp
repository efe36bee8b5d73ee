#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the transform or AoI code under test.

#include <cmath>
#include <functional>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

/// Central-difference derivative (order 1 or 2) with Richardson
/// extrapolation: first step 1e-3*max(1,x) (1e-2 for the second
/// derivative, whose stencil divides by h^2), two halvings.
inline double richardson(const std::function<double(double)>& f, double x, int order) {
    const double h0 = (order == 1 ? 1e-3 : 1e-2) * std::max(1.0, std::abs(x));
    double row[3];
    for (int i = 0; i < 3; ++i) {
        const double h = h0 / (1 << i);
        row[i] = order == 1 ? (f(x + h) - f(x - h)) / (2 * h)
                            : (f(x + h) - 2 * f(x) + f(x - h)) / (h * h);
    }
    const double r1a = (4 * row[1] - row[0]) / 3;
    const double r1b = (4 * row[2] - row[1]) / 3;
    return (16 * r1b - r1a) / 15;
}

/// One-sided first derivative at x for functions defined only on [x, inf):
/// three-point forward stencil, then Richardson over h^2, h^3, h^4.
inline double richardson_forward(const std::function<double(double)>& f, double x, double h0) {
    double t[4][4];
    for (int i = 0; i < 4; ++i) {
        const double h = h0 / (1 << i);
        t[i][0] = (-3 * f(x) + 4 * f(x + h) - f(x + 2 * h)) / (2 * h);
    }
    for (int j = 1; j < 4; ++j) {
        const double r = std::pow(2.0, j + 1);
        for (int i = j; i < 4; ++i) t[i][j] = t[i][j - 1] + (t[i][j - 1] - t[i - 1][j - 1]) / (r - 1);
    }
    return t[3][3];
}

/// E[X^n] from the survival function: n * int_0^inf x^(n-1) (1 - F(x)) dx.
inline double moment_from_cdf(const std::function<double(double)>& cdf, int n) {
    boost::math::quadrature::exp_sinh<double> integrator;
    auto g = [&](double x) { return n * std::pow(x, n - 1) * (1.0 - cdf(x)); };
    return integrator.integrate(g);
}

/// E[exp(-sX)] = 1 - s * int_0^inf exp(-sx) (1 - F(x)) dx.
inline double lst_from_cdf(const std::function<double(double)>& cdf, double s) {
    if (s == 0.0) return 1.0;
    boost::math::quadrature::exp_sinh<double> integrator;
    auto g = [&](double x) { return std::exp(-s * x) * (1.0 - cdf(x)); };
    return 1.0 - s * integrator.integrate(g);
}

/// Finite-interval Gauss-Kronrod integral.
inline double integrate(const std::function<double(double)>& f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 10, 1e-13);
}

/// FCFS M/M/1 average age of information.
inline double mm1_aaoi(double lambda, double mu) {
    const double rho = lambda / mu;
    return (1.0 / mu) * (1.0 + 1.0 / rho + rho * rho / (1.0 - rho));
}

/// M/M/1 sojourn time is exponential with rate mu - lambda.
inline double mm1_sojourn_lst(double lambda, double mu, double a) {
    return (mu - lambda) / (mu - lambda + a);
}

/// Pollaczek-Khinchine mean wait.
inline double pk_mean_wait(double lambda, double m1, double m2) {
    return lambda * m2 / (2.0 * (1.0 - lambda * m1));
}

/// Kolmogorov limiting distribution P(K <= x).
inline double kolmogorov_cdf(double x) {
    if (x <= 0.0) return 0.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-18) break;
    }
    return 1.0 - 2.0 * sum;
}

}  // namespace oracle
