// Fock-space foundations: cutoff selection, Poisson statistics, Laguerre
// recurrence, and radial Wigner functions. Every nontrivial numeric claim is
// checked against an independently coded oracle (factorial sums, monomial
// expansions, quadrature) rather than against the implementation itself.

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "heraldkit/fock.hpp"
#include "heraldkit/numerics.hpp"

using heraldkit::DiagonalFockOperator;
using heraldkit::FockCutoff;

namespace {

// Poisson pmf the slow way: long-double factorial accumulation.
long double poisson_pmf_oracle(double mu, int k) {
    long double fact = 1.0L;
    for (int i = 2; i <= k; ++i) {
        fact *= i;
    }
    return std::exp(static_cast<long double>(-mu)) *
           std::pow(static_cast<long double>(mu), k) / fact;
}

// L_k(u) from the explicit monomial form sum_i C(k,i) (-u)^i / i!.
long double laguerre_oracle(int k, double u) {
    long double sum = 0.0L;
    long double binom = 1.0L;  // C(k, i)
    long double upow = 1.0L;   // u^i
    long double fact = 1.0L;   // i!
    long double sign = 1.0L;
    for (int i = 0; i <= k; ++i) {
        sum += sign * binom * upow / fact;
        binom = binom * (k - i) / (i + 1.0L);
        upow *= u;
        fact *= (i + 1.0L);
        sign = -sign;
    }
    return sum;
}

}  // namespace

TEST_CASE("fixed cutoff enforces its bounds") {
    CHECK(FockCutoff::fixed(1).k_max == 1);
    CHECK(FockCutoff::fixed(400).k_max == 400);
    CHECK(FockCutoff::fixed(25).dim() == 26);
    CHECK_THROWS_AS(FockCutoff::fixed(0), std::domain_error);
    CHECK_THROWS_AS(FockCutoff::fixed(401), std::domain_error);
    CHECK_THROWS_AS(FockCutoff::fixed(10, 0.0), std::domain_error);
    CHECK_THROWS_AS(FockCutoff::fixed(10, 1.5), std::domain_error);
}

TEST_CASE("geometric cutoff is the smallest level with ratio^k below the tail bound") {
    for (double ratio : {0.1, 0.5, 0.81, 0.9025}) {
        for (double eps : {1e-6, 1e-12}) {
            const FockCutoff c = FockCutoff::for_geometric(ratio, eps);
            CHECK(std::pow(ratio, c.k_max) < eps);
            if (c.k_max > 1) {
                CHECK(std::pow(ratio, c.k_max - 1) >= eps);
            }
        }
    }
    CHECK(FockCutoff::for_geometric(0.0).k_max == 1);
    // ratios near 1 hit the hard cap instead of exploding
    CHECK(FockCutoff::for_geometric(0.9999).k_max == FockCutoff::kHardCap);
    CHECK_THROWS_AS(FockCutoff::for_geometric(1.0), std::domain_error);
    CHECK_THROWS_AS(FockCutoff::for_geometric(-0.1), std::domain_error);
}

TEST_CASE("twin-beam cutoff matches the geometric cutoff for lambda squared") {
    for (double lambda : {0.05, 0.5, 0.9, 0.95}) {
        const FockCutoff a = FockCutoff::for_twin_beam(lambda);
        const FockCutoff b = FockCutoff::for_geometric(lambda * lambda);
        CHECK(a.k_max == b.k_max);
    }
    CHECK_THROWS_AS(FockCutoff::for_twin_beam(1.0), std::domain_error);
}

TEST_CASE("probe cutoff puts the Poisson tail bound below the requested epsilon") {
    for (double mu : {0.3, 1.0, 5.0, 10.0}) {
        const FockCutoff c = FockCutoff::for_probe(mu);
        CHECK(heraldkit::poisson_tail_bound(mu, c.k_max) < c.tail_epsilon);
        if (c.k_max > 1) {
            CHECK(heraldkit::poisson_tail_bound(mu, c.k_max - 1) >= c.tail_epsilon);
        }
    }
    CHECK(FockCutoff::for_probe(0.0).k_max == 1);
    CHECK_THROWS_AS(FockCutoff::for_probe(-1.0), std::domain_error);
}

TEST_CASE("poisson weights match the factorial oracle") {
    const FockCutoff cutoff = FockCutoff::fixed(20);
    for (double mu : {0.0, 0.3, 1.0, 5.0}) {
        const std::vector<double> w = heraldkit::poisson_weights(mu, cutoff);
        REQUIRE(static_cast<int>(w.size()) == cutoff.dim());
        double sum = 0.0;
        for (int k = 0; k <= cutoff.k_max; ++k) {
            const double expected = static_cast<double>(poisson_pmf_oracle(mu, k));
            if (expected > 0.0) {
                CHECK(w[static_cast<std::size_t>(k)] ==
                      doctest::Approx(expected).epsilon(1e-12));
            } else {
                CHECK(w[static_cast<std::size_t>(k)] == 0.0);
            }
            sum += w[static_cast<std::size_t>(k)];
        }
        // truncated mass never exceeds 1, and the deficit obeys the tail bound
        CHECK(sum <= 1.0 + 1e-12);
        CHECK(1.0 - sum <= heraldkit::poisson_tail_bound(mu, cutoff.k_max) + 1e-12);
    }
}

TEST_CASE("poisson weights reject invalid means") {
    const FockCutoff cutoff = FockCutoff::fixed(5);
    CHECK_THROWS_AS(heraldkit::poisson_weights(-0.5, cutoff), std::domain_error);
    CHECK_THROWS_AS(heraldkit::poisson_weights(800.0, cutoff), std::domain_error);
}

TEST_CASE("laguerre recurrence matches the monomial-sum oracle") {
    CHECK(heraldkit::laguerre_eval(0, 3.7) == 1.0);
    CHECK(heraldkit::laguerre_eval(1, 3.7) == doctest::Approx(1.0 - 3.7).epsilon(1e-15));
    for (int k : {2, 3, 5, 8, 12}) {
        for (double u : {0.0, 0.25, 1.0, 4.0, 9.5, 20.0}) {
            const double expected = static_cast<double>(laguerre_oracle(k, u));
            const double got = heraldkit::laguerre_eval(k, u);
            if (std::abs(expected) > 1e-8) {
                CHECK(got == doctest::Approx(expected).epsilon(1e-9));
            } else {
                CHECK(got == doctest::Approx(expected).scale(1.0).epsilon(1e-9));
            }
        }
    }
    CHECK_THROWS_AS(heraldkit::laguerre_eval(-1, 0.0), std::domain_error);
}

TEST_CASE("fock wigner functions alternate sign 2/pi at the origin") {
    const double two_over_pi = 2.0 / std::numbers::pi;
    for (int k = 0; k <= 50; ++k) {
        const double expected = (k % 2 == 0) ? two_over_pi : -two_over_pi;
        CHECK(heraldkit::wigner_fock_radial(k, 0.0) ==
              doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("fock wigner functions integrate to unity over the plane") {
    // 2 pi int_0^inf W_k(r) r dr = 1; the integrand has decayed by r = 10
    for (int k : {0, 1, 5, 15, 30}) {
        const double integral = heraldkit::adaptive_simpson(
            [k](double r) { return 2.0 * std::numbers::pi * r * heraldkit::wigner_fock_radial(k, r); },
            0.0, 10.0, 1e-11);
        CHECK(integral == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("fock wigner functions stay finite far into the tail") {
    // 4 r^2 = 900 here, beyond the range where raw Laguerre values overflow
    const double v = heraldkit::wigner_fock_radial(350, 15.0);
    CHECK(std::isfinite(v));
    CHECK(std::abs(v) < 1.0);
}

TEST_CASE("fock projector and diagonal density basics") {
    const DiagonalFockOperator p2 = DiagonalFockOperator::fock_projector(2, 5);
    REQUIRE(p2.coeffs.size() == 5);
    CHECK(p2.coeffs[2] == 1.0);
    CHECK(p2.coeffs[0] == 0.0);
    CHECK(p2.is_density());
    CHECK_THROWS_AS(DiagonalFockOperator::fock_projector(5, 5), std::domain_error);
    CHECK_THROWS_AS(DiagonalFockOperator::fock_projector(-1, 5), std::domain_error);

    const DiagonalFockOperator rho = DiagonalFockOperator::density({0.5, 0.25, 0.25});
    CHECK(rho.k_max() == 2);
    CHECK(rho.effective_coeff(1) == 0.25);
    CHECK_THROWS_AS(DiagonalFockOperator::density({0.5, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(DiagonalFockOperator::density({-0.1, 1.1}), std::invalid_argument);

    DiagonalFockOperator comp;
    comp.coeffs = {0.25, 0.5};
    comp.complement = true;
    CHECK(comp.effective_coeff(0) == 0.75);
    CHECK(comp.effective_coeff(1) == 0.5);
    CHECK_FALSE(comp.is_density());
}

TEST_CASE("total variation distance separates and coincides as expected") {
    const DiagonalFockOperator a = DiagonalFockOperator::density({1.0, 0.0, 0.0});
    const DiagonalFockOperator b = DiagonalFockOperator::density({0.0, 1.0, 0.0});
    CHECK(heraldkit::total_variation_distance(a, a) == 0.0);
    CHECK(heraldkit::total_variation_distance(a, b) == 1.0);

    const DiagonalFockOperator c = DiagonalFockOperator::density({0.75, 0.25, 0.0});
    CHECK(heraldkit::total_variation_distance(a, c) == doctest::Approx(0.25).epsilon(1e-15));

    const DiagonalFockOperator short_one = DiagonalFockOperator::density({1.0});
    CHECK_THROWS_AS(heraldkit::total_variation_distance(a, short_one), std::invalid_argument);
    DiagonalFockOperator comp = a;
    comp.complement = true;
    CHECK_THROWS_AS(heraldkit::total_variation_distance(a, comp), std::invalid_argument);
}

TEST_CASE("diagonal wigner evaluation agrees with the single-mode form on projectors") {
    for (int k : {0, 1, 4, 9}) {
        const DiagonalFockOperator p = DiagonalFockOperator::fock_projector(k, 12);
        for (double r : {0.0, 0.3, 1.1, 2.5}) {
            const heraldkit::WignerValue w = heraldkit::wigner_diagonal(p, r);
            CHECK_FALSE(w.precision_warning);
            CHECK(w.value ==
                  doctest::Approx(heraldkit::wigner_fock_radial(k, r)).scale(1.0).epsilon(1e-13));
        }
    }
}

TEST_CASE("geometric diagonal operator reproduces its gaussian wigner closed form") {
    // coefficients e^(-nu) (1-eta)^k resum to a thermal-like gaussian,
    //   W(r) = e^(-nu) (2/pi) / (2-eta) * exp(-2 eta r^2 / (2-eta))
    const double eta = 0.28;
    const double nu = 0.1;
    const double q = 1.0 - eta;
    const FockCutoff cutoff = FockCutoff::for_geometric(q, 1e-14);

    DiagonalFockOperator off;
    off.coeffs.resize(static_cast<std::size_t>(cutoff.dim()));
    double power = std::exp(-nu);
    for (int k = 0; k <= cutoff.k_max; ++k) {
        off.coeffs[static_cast<std::size_t>(k)] = power;
        power *= q;
    }

    for (double r = 0.0; r <= 3.0; r += 0.25) {
        const double closed = std::exp(-nu) * (2.0 / std::numbers::pi) / (2.0 - eta) *
                              std::exp(-2.0 * eta * r * r / (2.0 - eta));
        const heraldkit::WignerValue w = heraldkit::wigner_diagonal(off, r);
        CHECK_FALSE(w.precision_warning);
        CHECK(w.value == doctest::Approx(closed).scale(1.0).epsilon(1e-10));
    }
}

TEST_CASE("complement wigner value crosses zero at the predicted dark-count level") {
    // W_on(0) = 1/pi - e^(-nu) (2/pi)/(2-eta) changes sign at nu = ln(2/(2-eta));
    // for eta = 0.28 that is about 0.1508, so 0.14 is below and 0.16 above.
    const double eta = 0.28;
    const double q = 1.0 - eta;
    const FockCutoff cutoff = FockCutoff::for_geometric(q, 1e-14);

    auto on_origin_value = [&](double nu) {
        DiagonalFockOperator on;
        on.complement = true;
        on.coeffs.resize(static_cast<std::size_t>(cutoff.dim()));
        double power = std::exp(-nu);
        for (int k = 0; k <= cutoff.k_max; ++k) {
            on.coeffs[static_cast<std::size_t>(k)] = power;
            power *= q;
        }
        const heraldkit::WignerValue w = heraldkit::wigner_diagonal(on, 0.0);
        CHECK_FALSE(w.precision_warning);
        const double closed = 1.0 / std::numbers::pi -
                              std::exp(-nu) * (2.0 / std::numbers::pi) / (2.0 - eta);
        CHECK(w.value == doctest::Approx(closed).scale(1.0).epsilon(1e-12));
        return w.value;
    };

    CHECK(on_origin_value(0.14) < 0.0);
    CHECK(on_origin_value(0.16) > 0.0);
}

TEST_CASE("complement wigner evaluation warns when the stored series has not decayed") {
    DiagonalFockOperator stubby;
    stubby.complement = true;
    stubby.coeffs = {0.5, 0.4};
    const heraldkit::WignerValue w = heraldkit::wigner_diagonal(stubby, 0.5);
    CHECK(w.precision_warning);
}
