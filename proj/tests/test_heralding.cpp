// Heralded state preparation: conditional states, rates, fidelities, and the
// closed-form / series cross-checks. The closed expressions used as oracles
// here are coded inline from the geometric sums they come from, so they are
// independent of the library's own closed-form route.

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "heraldkit/detectors.hpp"
#include "heraldkit/fock.hpp"
#include "heraldkit/heralding.hpp"

using heraldkit::DetectorModel;
using heraldkit::DiagonalFockOperator;
using heraldkit::FidelityBranch;
using heraldkit::FidelityRate;
using heraldkit::FockCutoff;
using heraldkit::HeraldedState;
using heraldkit::Povm;
using heraldkit::TwinBeamSource;

namespace {

// geometric-sum oracles for the on/off detector, heralding on the click
double oracle_apd_fidelity(double eta, double nu, double lambda) {
    const double l2 = lambda * lambda;
    const double q = 1.0 - eta;
    const double denom = 1.0 / (1.0 - l2) - std::exp(-nu) / (1.0 - q * l2);
    return l2 * (1.0 - std::exp(-nu) * q) / denom;
}

double oracle_apd_rate(double eta, double nu, double lambda) {
    const double l2 = lambda * lambda;
    const double q = 1.0 - eta;
    return 1.0 - std::exp(-nu) * (1.0 - l2) / (1.0 - q * l2);
}

// balanced two-bin detector, heralding on exactly one click
double oracle_tmd_fidelity(double eta, double nu, double lambda) {
    const double l2 = lambda * lambda;
    const double a = 1.0 - eta / 2.0;
    const double q = 1.0 - eta;
    const double denom = 1.0 / (1.0 - a * l2) - std::exp(-nu / 2.0) / (1.0 - q * l2);
    return l2 * (a - std::exp(-nu / 2.0) * q) / denom;
}

double oracle_tmd_rate(double eta, double nu, double lambda) {
    const double l2 = lambda * lambda;
    const double a = 1.0 - eta / 2.0;
    const double q = 1.0 - eta;
    return 2.0 * (1.0 - l2) *
           (std::exp(-nu / 2.0) / (1.0 - a * l2) - std::exp(-nu) / (1.0 - q * l2));
}

}  // namespace

TEST_CASE("twin beam source validates lambda and reports the thermal mean") {
    CHECK_THROWS_AS(TwinBeamSource(1.0), std::domain_error);
    CHECK_THROWS_AS(TwinBeamSource(-0.2), std::domain_error);
    CHECK(TwinBeamSource(0.0).mean_photons() == 0.0);
    const double lambda = 0.6;
    CHECK(TwinBeamSource(lambda).mean_photons() ==
          doctest::Approx(0.36 / 0.64).epsilon(1e-15));

    const std::vector<double> w = TwinBeamSource(0.5).arm_weights(FockCutoff::fixed(6));
    CHECK(w[0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(0.75 * 0.25).epsilon(1e-15));
}

TEST_CASE("ideal counter heralds an exact single photon") {
    const FockCutoff cutoff = FockCutoff::fixed(60);
    const Povm povm = heraldkit::make_povm(DetectorModel::ideal_pnr(), cutoff);
    for (double lambda : {0.1, 0.5, 0.9}) {
        const HeraldedState h =
            heraldkit::conditional_state(TwinBeamSource(lambda), povm, 1);
        CHECK(h.state.coeffs[1] == 1.0);
        for (int k = 0; k <= cutoff.k_max; ++k) {
            if (k != 1) {
                CHECK(h.state.coeffs[static_cast<std::size_t>(k)] == 0.0);
            }
        }
        const double l2 = lambda * lambda;
        CHECK(h.rate == doctest::Approx((1.0 - l2) * l2).epsilon(1e-15));
        CHECK(heraldkit::fidelity_single_photon(h.state) == 1.0);
    }
}

TEST_CASE("dark-free detectors on vacuum input stay silent") {
    const Povm povm =
        heraldkit::make_povm(DetectorModel::apd(0.9, 0.0), FockCutoff::fixed(20));
    const TwinBeamSource off_source(0.0);
    CHECK(heraldkit::heralding_rate(off_source, povm, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(heraldkit::heralding_rate(off_source, povm, 1) == 0.0);
    // zero-probability outcome has no conditional state
    CHECK_THROWS_AS(heraldkit::conditional_state(off_source, povm, 1), std::invalid_argument);
}

TEST_CASE("weakly pumped on-off heralding approaches unit fidelity") {
    // eta = 0.9, nu = 0, lambda = 0.1: (1 - 0.01)(1 - 0.1 * 0.01) = 0.98901
    const FockCutoff cutoff = FockCutoff::fixed(60);
    const Povm povm = heraldkit::make_povm(DetectorModel::apd(0.9, 0.0), cutoff);
    const HeraldedState h = heraldkit::conditional_state(TwinBeamSource(0.1), povm, 1);
    CHECK(heraldkit::fidelity_single_photon(h.state) ==
          doctest::Approx(0.98901).epsilon(1e-10));
}

TEST_CASE("closed-form metrics match the inline geometric-sum oracles") {
    for (double lambda : {0.05, 0.3, 0.6, 0.95}) {
        for (double eta : {0.28, 0.9}) {
            for (double nu : {0.0, 0.08}) {
                const FidelityRate apd =
                    heraldkit::closed_form_metrics(DetectorModel::apd(eta, nu), lambda);
                CHECK(apd.fidelity ==
                      doctest::Approx(oracle_apd_fidelity(eta, nu, lambda)).epsilon(1e-13));
                CHECK(apd.rate ==
                      doctest::Approx(oracle_apd_rate(eta, nu, lambda)).epsilon(1e-13));
                CHECK(apd.method == heraldkit::Method::ClosedForm);

                const FidelityRate tmd =
                    heraldkit::closed_form_metrics(DetectorModel::tmd(eta, nu, 0.5), lambda);
                CHECK(tmd.fidelity ==
                      doctest::Approx(oracle_tmd_fidelity(eta, nu, lambda)).epsilon(1e-13));
                CHECK(tmd.rate ==
                      doctest::Approx(oracle_tmd_rate(eta, nu, lambda)).epsilon(1e-13));
            }
        }
    }
    CHECK_THROWS_AS(heraldkit::closed_form_metrics(DetectorModel::tmd(0.5, 0.0, 0.3), 0.5),
                    std::invalid_argument);
}

TEST_CASE("series metrics converge to the closed forms") {
    for (double lambda : {0.05, 0.35, 0.65, 0.95}) {
        const FockCutoff cutoff = FockCutoff::for_twin_beam(lambda);
        for (double eta : {0.28, 0.9}) {
            for (double nu : {0.0, 0.08}) {
                for (const DetectorModel& model :
                     {DetectorModel::apd(eta, nu), DetectorModel::tmd(eta, nu, 0.5)}) {
                    const FidelityRate closed = heraldkit::closed_form_metrics(model, lambda);
                    const FidelityRate series =
                        heraldkit::series_metrics(model, lambda, cutoff);
                    if (closed.rate == 0.0) {
                        CHECK(series.rate == 0.0);
                        continue;
                    }
                    CHECK(series.fidelity ==
                          doctest::Approx(closed.fidelity).scale(1.0).epsilon(1e-10));
                    CHECK(series.rate ==
                          doctest::Approx(closed.rate).scale(1.0).epsilon(1e-10));
                    CHECK(series.method == heraldkit::Method::Series);
                }
            }
        }
    }
}

TEST_CASE("perfect efficiency reduces the fidelities to their simple forms") {
    for (double lambda : {0.2, 0.5, 0.8}) {
        const double l2 = lambda * lambda;
        const FidelityRate apd =
            heraldkit::closed_form_metrics(DetectorModel::apd(1.0, 0.0), lambda);
        CHECK(apd.fidelity == doctest::Approx(1.0 - l2).epsilon(1e-14));
        CHECK(apd.rate == doctest::Approx(l2).epsilon(1e-14));

        const FidelityRate tmd =
            heraldkit::closed_form_metrics(DetectorModel::tmd(1.0, 0.0, 0.5), lambda);
        CHECK(tmd.fidelity == doctest::Approx(1.0 - l2 / 2.0).epsilon(1e-14));
    }
}

TEST_CASE("outcome rates of a complete povm sum to unity") {
    for (double lambda : {0.3, 0.95}) {
        const TwinBeamSource source(lambda);
        const FockCutoff cutoff = FockCutoff::for_twin_beam(lambda);
        for (const DetectorModel& model : {DetectorModel::apd(0.28, 0.08),
                                           DetectorModel::tmd(0.9, 0.2, 0.4),
                                           DetectorModel::ideal_pnr()}) {
            const Povm povm = heraldkit::make_povm(model, cutoff);
            double total = 0.0;
            for (const heraldkit::PovmOutcome& o : povm.outcomes) {
                const double r = heraldkit::heralding_rate(source, povm, o.label);
                CHECK(r >= 0.0);
                CHECK(r <= 1.0);
                total += r;
            }
            CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("a vanishing splitter arm turns the two-bin detector into an on-off one") {
    // R -> 0 sends every photon to one bin; with no dark counts the single-click
    // element approaches the on/off click element like k * eta * R
    const FockCutoff cutoff = FockCutoff::fixed(40);
    const double eta = 0.9;
    const Povm tmd = heraldkit::make_povm(DetectorModel::tmd(eta, 0.0, 1e-6), cutoff);
    const Povm apd = heraldkit::make_povm(DetectorModel::apd(eta, 0.0), cutoff);
    for (int k = 0; k <= cutoff.k_max; ++k) {
        CHECK(tmd.coefficient(k, 1) ==
              doctest::Approx(apd.coefficient(k, 1)).scale(1.0).epsilon(1e-4));
        CHECK(tmd.coefficient(k, 2) == doctest::Approx(0.0).scale(1.0).epsilon(1e-4));
    }
}

TEST_CASE("high-gain limit matches the normalized povm element") {
    const FockCutoff cutoff = FockCutoff::fixed(400);

    const Povm ideal = heraldkit::make_povm(DetectorModel::ideal_pnr(), FockCutoff::fixed(30));
    const DiagonalFockOperator limit = heraldkit::high_gain_limit_state(ideal, 1);
    CHECK(limit.coeffs[1] == 1.0);

    // perfect on-off click element is flat over k >= 1, so its limit is uniform
    const Povm apd = heraldkit::make_povm(DetectorModel::apd(1.0, 0.0), cutoff);
    const DiagonalFockOperator flat = heraldkit::high_gain_limit_state(apd, 1);
    CHECK(flat.coeffs[0] == 0.0);
    for (int k = 1; k <= cutoff.k_max; ++k) {
        CHECK(flat.coeffs[static_cast<std::size_t>(k)] ==
              doctest::Approx(1.0 / cutoff.k_max).epsilon(1e-12));
    }

    // conditional states drift toward the limit as the pump grows
    const Povm lossy = heraldkit::make_povm(DetectorModel::apd(0.28, 0.05), cutoff);
    const DiagonalFockOperator target = heraldkit::high_gain_limit_state(lossy, 1);
    double prev = 2.0;
    for (double lambda : {0.9, 0.99, 0.999}) {
        const HeraldedState h =
            heraldkit::conditional_state(TwinBeamSource(lambda), lossy, 1);
        const double d = heraldkit::total_variation_distance(h.state, target);
        CHECK(d < prev);
        prev = d;
    }

    // impossible outcome has no limit state
    const Povm blind = heraldkit::make_povm(DetectorModel::apd(0.0, 0.0), cutoff);
    CHECK_THROWS_AS(heraldkit::high_gain_limit_state(blind, 1), std::invalid_argument);
}

TEST_CASE("phase-space overlap fidelity agrees with the population fidelity") {
    const FockCutoff cutoff = FockCutoff::for_twin_beam(0.7, 1e-14);
    const Povm povm = heraldkit::make_povm(DetectorModel::apd(0.9, 0.0), cutoff);
    const HeraldedState h = heraldkit::conditional_state(TwinBeamSource(0.7), povm, 1);

    const DiagonalFockOperator one = DiagonalFockOperator::fock_projector(1, cutoff.dim());
    const double via_wigner = heraldkit::fidelity_overlap_wigner(h.state, one);
    CHECK(via_wigner ==
          doctest::Approx(heraldkit::fidelity_single_photon(h.state)).epsilon(1e-6));

    // a state is a perfect match for itself, orthogonal to the wrong projector
    CHECK(heraldkit::fidelity_overlap_wigner(one, one) == doctest::Approx(1.0).epsilon(1e-6));
    const DiagonalFockOperator vac = DiagonalFockOperator::fock_projector(0, cutoff.dim());
    CHECK(heraldkit::fidelity_overlap_wigner(vac, one) ==
          doctest::Approx(0.0).scale(1.0).epsilon(1e-6));

    DiagonalFockOperator mixed = h.state;
    CHECK_THROWS_AS(heraldkit::fidelity_overlap_wigner(h.state, mixed), std::invalid_argument);
}

TEST_CASE("sweep emits one row per model, dark-count level, and pump value") {
    const std::vector<DetectorModel> models = {DetectorModel::apd(0.9, 0.0),
                                               DetectorModel::tmd(0.9, 0.0, 0.5)};
    const std::vector<double> lambdas = {0.0, 0.2, 0.4, 0.6, 0.8};
    const std::vector<double> nus = {0.0, 0.08};
    const FockCutoff cutoff = FockCutoff::for_twin_beam(0.8);
    const std::vector<heraldkit::SweepRow> rows =
        heraldkit::sweep(models, lambdas, nus, cutoff);
    REQUIRE(rows.size() == models.size() * lambdas.size() * nus.size());

    for (const heraldkit::SweepRow& row : rows) {
        if (row.impossible) {
            // lambda = 0 with no dark counts: no click, so no fidelity
            CHECK(row.lambda == 0.0);
            CHECK(row.nu == 0.0);
            CHECK(std::isnan(row.fidelity_series));
            continue;
        }
        CHECK(row.fidelity_series ==
              doctest::Approx(row.fidelity_closed).scale(1.0).epsilon(1e-9));
        CHECK(row.rate_series == doctest::Approx(row.rate_closed).scale(1.0).epsilon(1e-9));
        CHECK(std::abs(row.fidelity_difference) < 1e-9);
        CHECK(std::abs(row.rate_difference) < 1e-9);
    }

    // unbalanced two-bin rows carry series values but no closed-form columns
    const std::vector<heraldkit::SweepRow> unbalanced =
        heraldkit::sweep({DetectorModel::tmd(0.9, 0.0, 0.3)}, {0.5}, {0.0}, cutoff);
    REQUIRE(unbalanced.size() == 1);
    CHECK(std::isnan(unbalanced[0].fidelity_closed));
    CHECK(std::isnan(unbalanced[0].rate_closed));
    CHECK(unbalanced[0].fidelity_series > 0.0);
}

TEST_CASE("with no dark counts the fidelity falls monotonically with the pump") {
    const std::vector<DetectorModel> models = {DetectorModel::apd(0.9, 0.0),
                                               DetectorModel::tmd(0.9, 0.0, 0.5)};
    for (const DetectorModel& model : models) {
        double prev = 1.1;
        for (double lambda = 0.05; lambda <= 0.951; lambda += 0.05) {
            const double f = heraldkit::closed_form_metrics(model, lambda).fidelity;
            CHECK(f < prev);
            prev = f;
        }
    }
}

TEST_CASE("photon counting beats the on-off click at every pump strength") {
    for (double eta : {0.28, 0.9}) {
        double min_gap_low = 1.0;
        double min_gap_high = 1.0;
        for (double lambda = 0.05; lambda <= 0.951; lambda += 0.05) {
            const double f_apd =
                heraldkit::closed_form_metrics(DetectorModel::apd(eta, 0.0), lambda).fidelity;
            const double f_tmd =
                heraldkit::closed_form_metrics(DetectorModel::tmd(eta, 0.0, 0.5), lambda)
                    .fidelity;
            CHECK(f_tmd > f_apd);
            (eta < 0.5 ? min_gap_low : min_gap_high) =
                std::min(eta < 0.5 ? min_gap_low : min_gap_high, f_tmd - f_apd);
        }
    }
}

TEST_CASE("rate at target fidelity: ideal counter saturates at the balanced pump") {
    const heraldkit::RatePoint p =
        heraldkit::rate_at_target_fidelity(DetectorModel::ideal_pnr(), 1.0);
    CHECK(p.lambda_star == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(p.rate == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p.fidelity == 1.0);
}

TEST_CASE("rate at target fidelity: bisection hits the target on the closed-form route") {
    const DetectorModel apd = DetectorModel::apd(0.9, 0.0);
    const heraldkit::RatePoint p = heraldkit::rate_at_target_fidelity(apd, 0.99);
    CHECK(heraldkit::closed_form_metrics(apd, p.lambda_star).fidelity ==
          doctest::Approx(0.99).epsilon(1e-9));
    CHECK(p.rate == doctest::Approx(heraldkit::closed_form_metrics(apd, p.lambda_star).rate)
                        .epsilon(1e-12));

    // at equal fidelity the photon counter affords a stronger pump, hence more rate
    const heraldkit::RatePoint q =
        heraldkit::rate_at_target_fidelity(DetectorModel::tmd(0.9, 0.0, 0.5), 0.99);
    CHECK(q.rate > p.rate);
    CHECK(q.lambda_star > p.lambda_star);
}

TEST_CASE("rate at target fidelity: series route for the unbalanced splitter") {
    const DetectorModel model = DetectorModel::tmd(0.9, 0.0, 0.3);
    const heraldkit::RatePoint p = heraldkit::rate_at_target_fidelity(model, 0.9);
    const FockCutoff cutoff = FockCutoff::for_twin_beam(0.96);
    CHECK(heraldkit::series_metrics(model, p.lambda_star, cutoff).fidelity ==
          doctest::Approx(0.9).epsilon(1e-8));
}

TEST_CASE("rate at target fidelity: dark counts force an explicit branch choice") {
    // the noisy curve peaks near F ~ 0.59, so 0.5 sits on the falling branch
    const DetectorModel noisy = DetectorModel::apd(0.9, 0.08);
    CHECK_THROWS_AS(heraldkit::rate_at_target_fidelity(noisy, 0.5), std::invalid_argument);

    const heraldkit::RatePoint p =
        heraldkit::rate_at_target_fidelity(noisy, 0.5, FidelityBranch::Decreasing);
    CHECK(heraldkit::closed_form_metrics(noisy, p.lambda_star).fidelity ==
          doctest::Approx(0.5).epsilon(1e-9));

    // beyond the curve's peak no pump value reaches the target
    CHECK_THROWS_AS(
        heraldkit::rate_at_target_fidelity(noisy, 0.999, FidelityBranch::Decreasing),
        std::runtime_error);
    CHECK_THROWS_AS(heraldkit::rate_at_target_fidelity(noisy, 1.5), std::domain_error);
}
