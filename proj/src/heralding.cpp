#include "heraldkit/heralding.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "heraldkit/numerics.hpp"

namespace heraldkit {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kBalancedTol = 1e-12;

void check_lambda(double lambda) {
    if (!(lambda >= 0.0 && lambda < 1.0)) {
        throw std::domain_error("twin beam: lambda must lie in [0,1)");
    }
}

// sum_{k=0}^{k_max} lambda^(2k) coeffs[k], the truncated geometric moment of
// an element's stored coefficient list.
double truncated_moment(const std::vector<double>& coeffs, double lambda) {
    const double ratio = lambda * lambda;
    double w = 1.0;
    double sum = 0.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
        sum += w * coeffs[k];
        w *= ratio;
    }
    return sum;
}

}  // namespace

TwinBeamSource::TwinBeamSource(double lambda_) : lambda(lambda_) { check_lambda(lambda); }

double TwinBeamSource::mean_photons() const {
    check_lambda(lambda);
    const double l2 = lambda * lambda;
    return l2 / (1.0 - l2);
}

std::vector<double> TwinBeamSource::arm_weights(const FockCutoff& cutoff) const {
    check_lambda(lambda);
    const double ratio = lambda * lambda;
    std::vector<double> w(static_cast<std::size_t>(cutoff.dim()));
    double term = 1.0 - ratio;
    for (std::size_t k = 0; k < w.size(); ++k) {
        w[k] = term;
        term *= ratio;
    }
    return w;
}

double heralding_rate(const TwinBeamSource& source, const Povm& povm, int outcome_label) {
    check_lambda(source.lambda);
    const PovmOutcome& outcome = povm.outcome_by_label(outcome_label);
    const double prefactor = 1.0 - source.lambda * source.lambda;
    const double moment = truncated_moment(outcome.element.coeffs, source.lambda);
    if (outcome.element.complement) {
        // identity minus the stored part; the geometric tail above the
        // cutoff belongs entirely to this element and sums to lambda^(2K+2)
        return 1.0 - prefactor * moment;
    }
    return prefactor * moment;
}

HeraldedState conditional_state(const TwinBeamSource& source, const Povm& povm,
                                int outcome_label) {
    check_lambda(source.lambda);
    const PovmOutcome& outcome = povm.outcome_by_label(outcome_label);
    const double ratio = source.lambda * source.lambda;

    HeraldedState result;
    result.outcome_label = outcome_label;
    result.rate = heralding_rate(source, povm, outcome_label);

    std::vector<double> w(static_cast<std::size_t>(povm.cutoff.dim()));
    double weight = 1.0;
    double total = 0.0;
    for (int k = 0; k <= povm.cutoff.k_max; ++k) {
        w[static_cast<std::size_t>(k)] = weight * outcome.element.effective_coeff(k);
        total += w[static_cast<std::size_t>(k)];
        weight *= ratio;
    }
    if (!(total > 0.0)) {
        throw std::invalid_argument("conditional_state: outcome " +
                                    std::to_string(outcome_label) +
                                    " has zero probability");
    }
    for (double& p : w) {
        p /= total;
    }
    result.state.coeffs = std::move(w);
    return result;
}

DiagonalFockOperator high_gain_limit_state(const Povm& povm, int outcome_label) {
    const PovmOutcome& outcome = povm.outcome_by_label(outcome_label);
    std::vector<double> w(static_cast<std::size_t>(povm.cutoff.dim()));
    double total = 0.0;
    for (int k = 0; k <= povm.cutoff.k_max; ++k) {
        w[static_cast<std::size_t>(k)] = outcome.element.effective_coeff(k);
        total += w[static_cast<std::size_t>(k)];
    }
    if (!(total > 0.0)) {
        throw std::invalid_argument("high_gain_limit_state: outcome " +
                                    std::to_string(outcome_label) +
                                    " has zero trace on the truncated space");
    }
    DiagonalFockOperator state;
    state.coeffs = std::move(w);
    for (double& p : state.coeffs) {
        p /= total;
    }
    return state;
}

double fidelity_single_photon(const DiagonalFockOperator& state) {
    if (state.coeffs.size() < 2 || state.complement) {
        throw std::invalid_argument("fidelity_single_photon: expected a diagonal state");
    }
    return state.coeffs[1];
}

double fidelity_overlap_wigner(const DiagonalFockOperator& state,
                               const DiagonalFockOperator& target, double r_max) {
    if (state.complement) {
        throw std::invalid_argument("fidelity_overlap_wigner: expected a diagonal state");
    }
    if (!(r_max > 0.0)) {
        throw std::domain_error("fidelity_overlap_wigner: integration radius must be > 0");
    }
    // a pure diagonal target is necessarily a Fock projector
    int target_k = -1;
    if (!target.complement) {
        for (std::size_t k = 0; k < target.coeffs.size(); ++k) {
            if (target.coeffs[k] == 1.0 && target_k < 0) {
                target_k = static_cast<int>(k);
            } else if (target.coeffs[k] != 0.0) {
                target_k = -1;
                break;
            }
        }
    }
    if (target_k < 0) {
        throw std::invalid_argument(
            "fidelity_overlap_wigner: target must be a pure Fock-state projector");
    }
    const auto numerator = [&](double r) {
        return wigner_diagonal(state, r).value * wigner_fock_radial(target_k, r) * r;
    };
    const auto denominator = [&](double r) {
        const double w = wigner_fock_radial(target_k, r);
        return w * w * r;
    };
    const double num = adaptive_simpson(numerator, 0.0, r_max, 1e-12);
    const double den = adaptive_simpson(denominator, 0.0, r_max, 1e-12);
    return num / den;
}

FidelityRate closed_form_metrics(const DetectorModel& model, double lambda) {
    check_lambda(lambda);
    model.validate();
    const double l2 = lambda * lambda;

    if (model.kind == DetectorKind::IdealPnr) {
        const double rate = (1.0 - l2) * l2;
        return FidelityRate{rate > 0.0 ? 1.0 : kNan, rate, Method::ClosedForm};
    }

    if (model.kind == DetectorKind::Apd) {
        const double quiet = std::exp(-model.nu);
        const double b = 1.0 / (1.0 - (1.0 - model.eta) * l2);
        const double rate = 1.0 - quiet * (1.0 - l2) * b;
        if (!(rate > 0.0)) {
            return FidelityRate{kNan, 0.0, Method::ClosedForm};
        }
        const double moment = 1.0 / (1.0 - l2) - quiet * b;
        const double fidelity = l2 * (1.0 - quiet * (1.0 - model.eta)) / moment;
        return FidelityRate{fidelity, rate, Method::ClosedForm};
    }

    if (std::abs(model.reflectivity - 0.5) > kBalancedTol) {
        throw std::invalid_argument(
            "closed_form_metrics: one-click closed form needs a balanced splitter; "
            "use the series route for other reflectivities");
    }
    const double quiet_bin = std::exp(-0.5 * model.nu);
    const double quiet = std::exp(-model.nu);
    const double a = 1.0 / (1.0 - (1.0 - 0.5 * model.eta) * l2);
    const double b = 1.0 / (1.0 - (1.0 - model.eta) * l2);
    const double moment = 2.0 * (quiet_bin * a - quiet * b);
    const double rate = (1.0 - l2) * moment;
    if (!(rate > 0.0)) {
        return FidelityRate{kNan, 0.0, Method::ClosedForm};
    }
    const double one_click_single = 2.0 * (quiet_bin * (1.0 - 0.5 * model.eta) -
                                           quiet * (1.0 - model.eta));
    return FidelityRate{l2 * one_click_single / moment, rate, Method::ClosedForm};
}

FidelityRate series_metrics(const DetectorModel& model, double lambda,
                            const FockCutoff& cutoff, int outcome_label) {
    const Povm povm = make_povm(model, cutoff);
    const TwinBeamSource source(lambda);
    const double rate = heralding_rate(source, povm, outcome_label);
    if (!(rate > 0.0)) {
        return FidelityRate{kNan, 0.0, Method::Series};
    }
    const HeraldedState heralded = conditional_state(source, povm, outcome_label);
    return FidelityRate{fidelity_single_photon(heralded.state), rate, Method::Series};
}

std::vector<SweepRow> sweep(const std::vector<DetectorModel>& models,
                            const std::vector<double>& lambdas,
                            const std::vector<double>& nus, const FockCutoff& cutoff) {
    std::vector<SweepRow> rows;
    rows.reserve(models.size() * nus.size() * lambdas.size());
    for (const DetectorModel& base : models) {
        for (double nu : nus) {
            DetectorModel model = base;
            model.nu = nu;
            model.validate();
            const Povm povm = make_povm(model, cutoff);
            for (double lambda : lambdas) {
                SweepRow row;
                row.lambda = lambda;
                row.eta = model.eta;
                row.nu = model.nu;
                row.kind = model.kind;
                row.outcome_label = 1;

                const TwinBeamSource source(lambda);
                row.rate_series = heralding_rate(source, povm, row.outcome_label);
                if (row.rate_series > 0.0) {
                    const HeraldedState heralded =
                        conditional_state(source, povm, row.outcome_label);
                    row.fidelity_series = fidelity_single_photon(heralded.state);
                } else {
                    row.fidelity_series = kNan;
                    row.impossible = true;
                }

                try {
                    const FidelityRate closed = closed_form_metrics(model, lambda);
                    row.fidelity_closed = closed.fidelity;
                    row.rate_closed = closed.rate;
                } catch (const std::invalid_argument&) {
                    row.fidelity_closed = kNan;
                    row.rate_closed = kNan;
                }
                row.fidelity_difference = row.fidelity_series - row.fidelity_closed;
                row.rate_difference = row.rate_series - row.rate_closed;
                rows.push_back(row);
            }
        }
    }
    return rows;
}

RatePoint rate_at_target_fidelity(const DetectorModel& model, double fidelity_target,
                                  FidelityBranch branch) {
    model.validate();
    if (!(fidelity_target > 0.0 && fidelity_target <= 1.0)) {
        throw std::domain_error("rate_at_target_fidelity: target must lie in (0,1]");
    }

    if (model.kind == DetectorKind::IdealPnr) {
        // fidelity is exactly 1 for every lambda, so pick the rate maximum of
        // (1-lambda^2) lambda^2 at lambda^2 = 1/2
        const double lambda_star = std::sqrt(0.5);
        return RatePoint{lambda_star, 0.25, 1.0};
    }

    const bool closed_available =
        model.kind == DetectorKind::Apd ||
        std::abs(model.reflectivity - 0.5) <= kBalancedTol;
    // the series route caps lambda so the geometric cutoff stays within the
    // hard truncation limit
    const double lo = 1e-6;
    const double hi = closed_available ? 1.0 - 1e-6 : 0.96;
    const FockCutoff cutoff =
        closed_available ? FockCutoff::fixed(1) : FockCutoff::for_twin_beam(hi);

    const auto fidelity_at = [&](double lambda) {
        const FidelityRate m = closed_available ? closed_form_metrics(model, lambda)
                                                : series_metrics(model, lambda, cutoff);
        return m.fidelity;
    };
    const auto metrics_at = [&](double lambda) {
        return closed_available ? closed_form_metrics(model, lambda)
                                : series_metrics(model, lambda, cutoff);
    };

    double search_lo = lo;
    if (model.nu > 0.0) {
        if (branch != FidelityBranch::Decreasing) {
            throw std::invalid_argument(
                "rate_at_target_fidelity: the fidelity curve is not monotone when "
                "dark counts are present; request the decreasing branch explicitly");
        }
        search_lo = golden_section_max(fidelity_at, lo, hi, 1e-6);
    }

    const double f_lo = fidelity_at(search_lo);
    const double f_hi = fidelity_at(hi);
    if (!(f_lo >= fidelity_target)) {
        throw std::runtime_error(
            "rate_at_target_fidelity: target exceeds the best fidelity on this branch");
    }
    if (!(f_hi <= fidelity_target)) {
        throw std::runtime_error(
            "rate_at_target_fidelity: target is below the branch floor; raise the target");
    }

    const double lambda_star =
        bisect_decreasing(fidelity_at, search_lo, hi, fidelity_target, 1e-10);
    const FidelityRate at_star = metrics_at(lambda_star);
    return RatePoint{lambda_star, at_star.rate, at_star.fidelity};
}

}  // namespace heraldkit
