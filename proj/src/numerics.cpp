#include "heraldkit/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace heraldkit {

namespace {

double simpson_rule(double fa, double fm, double fb, double h) {
    return h / 6.0 * (fa + 4.0 * fm + fb);
}

double simpson_recurse(const std::function<double(double)>& f, double a, double b,
                       double fa, double fm, double fb, double whole, double tol,
                       int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson_rule(fa, flm, fm, m - a);
    const double right = simpson_rule(fm, frm, fb, b - m);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    if (depth <= 0) {
        throw std::runtime_error("adaptive_simpson: tolerance not reached within depth limit");
    }
    return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_depth) {
    if (a == b) {
        return 0.0;
    }
    const double m = 0.5 * (a + b);
    const double fa = f(a);
    const double fm = f(m);
    const double fb = f(b);
    const double whole = simpson_rule(fa, fm, fb, b - a);
    return simpson_recurse(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

double golden_section_max(const std::function<double(double)>& f, double a, double b,
                          double x_tol) {
    if (!(a < b)) {
        throw std::runtime_error("golden_section_max: invalid bracket");
    }
    constexpr double inv_phi = 0.6180339887498949;  // (sqrt(5)-1)/2
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    while (b - a > x_tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

double bisect_decreasing(const std::function<double(double)>& f, double a, double b,
                         double target, double f_tol) {
    double fa = f(a);
    double fb = f(b);
    if (!(fa >= target && target >= fb)) {
        throw std::runtime_error("bisect_decreasing: target not bracketed");
    }
    double lo = a;
    double hi = b;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = f(mid);
        if (std::abs(fmid - target) <= f_tol) {
            return mid;
        }
        if (fmid > target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    throw std::runtime_error("bisect_decreasing: no convergence to requested tolerance");
}

}  // namespace heraldkit
