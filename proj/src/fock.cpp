#include "heraldkit/fock.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace heraldkit {

namespace {

constexpr double kTwoOverPi = 2.0 / std::numbers::pi;
constexpr double kInvPi = 1.0 / std::numbers::pi;

// A complement operator's subtracted series is trusted only once its stored
// coefficients have decayed below this level at the truncation boundary.
constexpr double kComplementTailWarn = 1e-10;

int clamp_k_max(int k) {
    return std::clamp(k, 1, FockCutoff::kHardCap);
}

void check_tail_epsilon(double tail_epsilon) {
    if (!(tail_epsilon > 0.0 && tail_epsilon < 1.0)) {
        throw std::domain_error("FockCutoff: tail_epsilon must lie in (0,1)");
    }
}

// e^(-u/2) L_k(u) for k = 0..k_max in one recurrence pass. The scaling keeps
// every term bounded for large u, where raw L_k(u) would overflow.
std::vector<double> scaled_laguerre_all(int k_max, double u) {
    std::vector<double> out(static_cast<std::size_t>(k_max) + 1);
    const double s = std::exp(-0.5 * u);
    out[0] = s;
    if (k_max >= 1) {
        out[1] = (1.0 - u) * s;
    }
    for (int k = 1; k < k_max; ++k) {
        out[static_cast<std::size_t>(k) + 1] =
            ((2.0 * k + 1.0 - u) * out[static_cast<std::size_t>(k)] -
             k * out[static_cast<std::size_t>(k) - 1]) /
            (k + 1.0);
    }
    return out;
}

}  // namespace

FockCutoff FockCutoff::fixed(int k_max, double tail_epsilon) {
    check_tail_epsilon(tail_epsilon);
    if (k_max < 1 || k_max > kHardCap) {
        throw std::domain_error("FockCutoff: k_max must lie in [1, " +
                                std::to_string(kHardCap) + "]");
    }
    return FockCutoff{k_max, tail_epsilon};
}

FockCutoff FockCutoff::for_geometric(double ratio, double tail_epsilon) {
    check_tail_epsilon(tail_epsilon);
    if (!(ratio >= 0.0 && ratio < 1.0)) {
        throw std::domain_error("FockCutoff: geometric ratio must lie in [0,1)");
    }
    if (ratio == 0.0) {
        return FockCutoff{1, tail_epsilon};
    }
    // smallest k with ratio^k < tail_epsilon
    const int k = static_cast<int>(std::floor(std::log(tail_epsilon) / std::log(ratio))) + 1;
    return FockCutoff{clamp_k_max(k), tail_epsilon};
}

FockCutoff FockCutoff::for_twin_beam(double lambda, double tail_epsilon) {
    if (!(lambda >= 0.0 && lambda < 1.0)) {
        throw std::domain_error("FockCutoff: twin-beam lambda must lie in [0,1)");
    }
    return for_geometric(lambda * lambda, tail_epsilon);
}

FockCutoff FockCutoff::for_probe(double mu_max, double tail_epsilon) {
    check_tail_epsilon(tail_epsilon);
    if (!(mu_max >= 0.0)) {
        throw std::domain_error("FockCutoff: probe mean photon number must be >= 0");
    }
    int k = 1;
    while (k < kHardCap && poisson_tail_bound(mu_max, k) >= tail_epsilon) {
        ++k;
    }
    return FockCutoff{k, tail_epsilon};
}

DiagonalFockOperator DiagonalFockOperator::fock_projector(int k, int dim) {
    if (k < 0 || k >= dim) {
        throw std::domain_error("fock_projector: level outside truncated space");
    }
    DiagonalFockOperator op;
    op.coeffs.assign(static_cast<std::size_t>(dim), 0.0);
    op.coeffs[static_cast<std::size_t>(k)] = 1.0;
    return op;
}

DiagonalFockOperator DiagonalFockOperator::density(std::vector<double> populations) {
    DiagonalFockOperator op;
    op.coeffs = std::move(populations);
    if (!op.is_density()) {
        throw std::invalid_argument("DiagonalFockOperator: not a valid diagonal density");
    }
    return op;
}

bool DiagonalFockOperator::is_density() const {
    if (complement || coeffs.empty()) {
        return false;
    }
    double sum = 0.0;
    for (double c : coeffs) {
        if (!(c >= 0.0) || !std::isfinite(c)) {
            return false;
        }
        sum += c;
    }
    return std::abs(sum - 1.0) <= 1e-12;
}

double total_variation_distance(const DiagonalFockOperator& a, const DiagonalFockOperator& b) {
    if (a.coeffs.size() != b.coeffs.size() || a.complement || b.complement) {
        throw std::invalid_argument("total_variation_distance: incompatible operands");
    }
    double d = 0.0;
    for (std::size_t k = 0; k < a.coeffs.size(); ++k) {
        d += std::abs(a.coeffs[k] - b.coeffs[k]);
    }
    return 0.5 * d;
}

std::vector<double> poisson_weights(double mu, const FockCutoff& cutoff) {
    if (!(mu >= 0.0)) {
        throw std::domain_error("poisson_weights: mean photon number must be >= 0");
    }
    std::vector<double> w(static_cast<std::size_t>(cutoff.dim()), 0.0);
    if (mu == 0.0) {
        w[0] = 1.0;
        return w;
    }
    const double w0 = std::exp(-mu);
    if (w0 == 0.0) {
        throw std::domain_error("poisson_weights: e^(-mu) underflows for mu this large");
    }
    w[0] = w0;
    for (int k = 1; k <= cutoff.k_max; ++k) {
        w[static_cast<std::size_t>(k)] = w[static_cast<std::size_t>(k) - 1] * mu / k;
    }
    return w;
}

double poisson_tail_bound(double mu, int k_max) {
    if (!(mu >= 0.0) || k_max < 0) {
        throw std::domain_error("poisson_tail_bound: invalid arguments");
    }
    if (mu == 0.0) {
        return 0.0;
    }
    // mu^(k_max+1)/(k_max+1)! evaluated in log space to dodge overflow
    return std::exp((k_max + 1.0) * std::log(mu) - std::lgamma(k_max + 2.0));
}

double laguerre_eval(int k, double u) {
    if (k < 0) {
        throw std::domain_error("laguerre_eval: order must be >= 0");
    }
    if (k == 0) {
        return 1.0;
    }
    double prev = 1.0;
    double curr = 1.0 - u;
    for (int n = 1; n < k; ++n) {
        const double next = ((2.0 * n + 1.0 - u) * curr - n * prev) / (n + 1.0);
        prev = curr;
        curr = next;
    }
    return curr;
}

double wigner_fock_radial(int k, double r) {
    if (k < 0 || !(r >= 0.0)) {
        throw std::domain_error("wigner_fock_radial: invalid arguments");
    }
    const double u = 4.0 * r * r;
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    if (u < 700.0) {
        return kTwoOverPi * sign * std::exp(-0.5 * u) * laguerre_eval(k, u);
    }
    // far tail: use the scaled recurrence so intermediates stay finite
    return kTwoOverPi * sign * scaled_laguerre_all(k, u)[static_cast<std::size_t>(k)];
}

WignerValue wigner_diagonal(const DiagonalFockOperator& op, double r) {
    if (op.coeffs.empty()) {
        throw std::invalid_argument("wigner_diagonal: empty operator");
    }
    if (!(r >= 0.0)) {
        throw std::domain_error("wigner_diagonal: radius must be >= 0");
    }
    const int k_max = op.k_max();
    const std::vector<double> ell = scaled_laguerre_all(k_max, 4.0 * r * r);
    double series = 0.0;
    double sign = 1.0;
    for (int k = 0; k <= k_max; ++k) {
        series += op.coeffs[static_cast<std::size_t>(k)] * sign * ell[static_cast<std::size_t>(k)];
        sign = -sign;
    }
    series *= kTwoOverPi;

    WignerValue out;
    if (op.complement) {
        out.value = kInvPi - series;
        out.precision_warning =
            std::abs(op.coeffs[static_cast<std::size_t>(k_max)]) > kComplementTailWarn;
    } else {
        out.value = series;
    }
    return out;
}

}  // namespace heraldkit
