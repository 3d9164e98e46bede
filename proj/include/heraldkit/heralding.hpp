#pragma once

#include <optional>
#include <vector>

#include "heraldkit/detectors.hpp"
#include "heraldkit/fock.hpp"

namespace heraldkit {

/// Twin-beam (two-mode squeezed vacuum) source. The joint state is
/// sqrt(1-lambda^2) sum_k lambda^k |k,k>, so tracing out either arm leaves a
/// thermal photon-number distribution (1-lambda^2) lambda^(2k).
struct TwinBeamSource {
    double lambda = 0.0;

    TwinBeamSource() = default;
    explicit TwinBeamSource(double lambda_);

    /// Mean photon number per arm, lambda^2 / (1 - lambda^2).
    double mean_photons() const;

    /// Unconditional number distribution of one arm on the truncated space.
    std::vector<double> arm_weights(const FockCutoff& cutoff) const;
};

/// Diagonal state of the free arm after the trigger arm reported a given
/// outcome, together with the probability of that outcome.
struct HeraldedState {
    DiagonalFockOperator state;  // populations on the truncated space, sum 1
    double rate = 0.0;           // exact outcome probability (tail included)
    int outcome_label = 0;
};

/// Probability of the given outcome on one arm of the source. Complement
/// elements are handled exactly: their geometric tail above the cutoff is
/// summed in closed form, so the rates of a complete POVM add up to 1.
double heralding_rate(const TwinBeamSource& source, const Povm& povm, int outcome_label);

/// Conditional state of the free arm given the outcome. The populations are
/// normalized on the truncated space; the rate is exact as in
/// heralding_rate. Throws std::invalid_argument when the outcome has zero
/// probability (no conditional state exists).
HeraldedState conditional_state(const TwinBeamSource& source, const Povm& povm,
                                int outcome_label);

/// Limit of the conditional state as lambda -> 1: populations proportional
/// to the POVM element's diagonal, i.e. the element normalized by its
/// truncated trace. Throws std::invalid_argument if that trace is zero.
DiagonalFockOperator high_gain_limit_state(const Povm& povm, int outcome_label);

/// Single-photon preparation fidelity <1|rho|1> of a diagonal state.
double fidelity_single_photon(const DiagonalFockOperator& state);

/// Overlap fidelity Tr[rho sigma] computed in phase space for a pure Fock
/// target sigma = |k><k|: both Wigner functions are radially symmetric, so
/// the overlap reduces to a 1-D radial integral, evaluated by adaptive
/// quadrature on [0, r_max] and normalized by the target's own phase-space
/// norm (exactly 1 for a pure state). Throws std::invalid_argument when the
/// target is not a Fock projector.
double fidelity_overlap_wigner(const DiagonalFockOperator& state,
                               const DiagonalFockOperator& target, double r_max = 8.0);

enum class Method { Series, ClosedForm };

struct FidelityRate {
    double fidelity = 0.0;  // nan when the outcome has zero probability
    double rate = 0.0;
    Method method = Method::Series;
};

/// Closed-form single-photon fidelity and rate for heralding on outcome 1.
/// Available for the ideal counter (fidelity exactly 1), the on/off detector
/// (any parameters) and the balanced two-bin detector (reflectivity 1/2).
/// Throws std::invalid_argument for an unbalanced two-bin detector; use the
/// series route there.
FidelityRate closed_form_metrics(const DetectorModel& model, double lambda);

/// Series-route metrics for heralding on the given outcome: build the POVM
/// at the cutoff, condition, and read off <1|rho|1> and the exact rate.
FidelityRate series_metrics(const DetectorModel& model, double lambda,
                            const FockCutoff& cutoff, int outcome_label = 1);

struct SweepRow {
    double lambda = 0.0;
    double eta = 0.0;
    double nu = 0.0;
    DetectorKind kind = DetectorKind::Apd;
    int outcome_label = 1;
    double fidelity_series = 0.0;
    double fidelity_closed = 0.0;  // nan when no closed form applies
    double rate_series = 0.0;
    double rate_closed = 0.0;        // nan when no closed form applies
    double fidelity_difference = 0.0;  // series minus closed, nan when either is
    double rate_difference = 0.0;
    bool impossible = false;  // outcome probability is zero at this point
};

/// Cartesian sweep over models x nu grid x lambda grid, heralding on
/// outcome 1. Each model is re-parameterized with every nu from the grid
/// (the ideal counter ignores nu but still emits one row per grid point so
/// the table stays rectangular). A single cutoff is used for every row.
std::vector<SweepRow> sweep(const std::vector<DetectorModel>& models,
                            const std::vector<double>& lambdas,
                            const std::vector<double>& nus, const FockCutoff& cutoff);

enum class FidelityBranch {
    Auto,       // requires a monotone fidelity curve (nu = 0)
    Decreasing  // right of the fidelity peak, the high-rate branch
};

struct RatePoint {
    double lambda_star = 0.0;
    double rate = 0.0;
    double fidelity = 0.0;  // achieved fidelity at lambda_star
};

/// Largest heralding rate compatible with a target fidelity, scanning the
/// pump parameter. With nu = 0 the fidelity decreases monotonically in
/// lambda, so the unique solution is found by bisection. With nu > 0 the
/// curve rises from 0, peaks, and falls; the caller must request the
/// decreasing branch explicitly and the peak is located first. Throws
/// std::runtime_error when the target is not reachable on the branch.
RatePoint rate_at_target_fidelity(const DetectorModel& model, double fidelity_target,
                                  FidelityBranch branch = FidelityBranch::Auto);

}  // namespace heraldkit
