#pragma once

#include <functional>

namespace heraldkit {

/// Adaptive Simpson quadrature of f over [a, b].
/// Recursion splits an interval until the local Richardson error estimate
/// drops below the local tolerance share. Throws std::runtime_error if the
/// requested tolerance cannot be met within the depth limit.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10, int max_depth = 48);

/// Golden-section maximization of a unimodal f on [a, b].
/// Returns the abscissa of the maximum to within x_tol.
double golden_section_max(const std::function<double(double)>& f, double a, double b,
                          double x_tol = 1e-6);

/// Solve f(x) = target by bisection, assuming f is continuous and strictly
/// decreasing on [a, b] with f(a) >= target >= f(b). Stops once
/// |f(x) - target| <= f_tol. Throws std::runtime_error if the bracket is
/// invalid.
double bisect_decreasing(const std::function<double(double)>& f, double a, double b,
                         double target, double f_tol = 1e-10);

}  // namespace heraldkit
