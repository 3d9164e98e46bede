#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "heraldkit/fock.hpp"

namespace heraldkit {

enum class DetectorKind { IdealPnr, Apd, Tmd };

std::string to_string(DetectorKind kind);
DetectorKind detector_kind_from_string(const std::string& name);

/// Parameterized detector family.
///
/// eta is the per-photon detection probability, nu the mean number of
/// Poissonian dark counts per detection window (defined in front of the
/// detector, so e^(-nu) is the no-dark-count probability regardless of the
/// internal layout), and reflectivity the intensity splitting ratio of the
/// two-bin time-multiplexed detector (ignored for the other kinds).
struct DetectorModel {
    DetectorKind kind = DetectorKind::IdealPnr;
    double eta = 1.0;
    double nu = 0.0;
    double reflectivity = 0.5;

    static DetectorModel ideal_pnr();
    static DetectorModel apd(double eta, double nu);
    static DetectorModel tmd(double eta, double nu, double reflectivity = 0.5);

    /// Throws std::domain_error naming the violated bound.
    void validate() const;
};

/// One detector outcome: an integer label and its diagonal POVM element.
struct PovmOutcome {
    int label = 0;
    DiagonalFockOperator element;
};

/// Ordered set of diagonal POVM elements summing to the identity on the
/// truncated space (complement-flagged elements expanded accordingly).
struct Povm {
    std::vector<PovmOutcome> outcomes;
    FockCutoff cutoff;

    int n_outcomes() const { return static_cast<int>(outcomes.size()); }

    /// Conditional probability r_{k,n} = P(outcome n | k photons) on the
    /// truncated space.
    double coefficient(int k, int n) const;

    /// All coefficients expanded to [outcome][k] with complements resolved.
    std::vector<std::vector<double>> expanded() const;

    const PovmOutcome& outcome_by_label(int label) const;
};

/// Ideal photon-number-resolving detector: outcomes 0..n_outcomes-2 are Fock
/// projectors, the last outcome absorbs every higher photon number so the set
/// stays complete. Requires 1 <= n_outcomes <= k_max.
Povm povm_ideal_pnr(const FockCutoff& cutoff, int n_outcomes);

/// On/off avalanche photodiode. Outcome 0 (off): r_{k,off} = e^(-nu)(1-eta)^k.
/// Outcome 1 (on) is stored as the complement of off.
Povm povm_apd(const DetectorModel& model, const FockCutoff& cutoff);

/// Two-bin time-multiplexed detector with outcomes 0/1/2 clicks. With
/// T = 1 - R:
///   r_{k,0} = e^(-nu) (1-eta)^k
///   r_{k,1} = e^(-nu/2) [(1-R eta)^k + (1-T eta)^k] - 2 e^(-nu) (1-eta)^k
/// and the 2-click element is the complement of the other two.
Povm povm_tmd(const DetectorModel& model, const FockCutoff& cutoff);

/// Dispatch to the constructor for the model's kind. ideal_outcomes is only
/// used for the ideal PNR detector.
Povm make_povm(const DetectorModel& model, const FockCutoff& cutoff, int ideal_outcomes = 8);

/// Independent enumeration oracle: computes P(n|k) by summing over binomial
/// splits of k photons across the detector's bins, with per-bin no-click
/// probability e^(-nu_bin) (1-eta)^p. Refuses cutoffs above k_max = 60 to
/// bound enumeration cost. Every element is stored explicitly (no
/// complements), which makes the result a useful cross-check for the
/// analytic constructors.
Povm povm_brute_force(const DetectorModel& model, const FockCutoff& cutoff);

struct PovmDiagnostics {
    double max_completeness_violation = 0.0;
    double min_coefficient = 0.0;
    double max_coefficient = 0.0;
    std::vector<double> outcome_traces;  // truncated-space trace per outcome
    bool coefficients_in_range = true;
};

PovmDiagnostics validate_povm(const Povm& povm);

/// JSON round-trip of a POVM (detector parameters optional). Doubles are
/// serialized with shortest round-trip formatting, so write/read is
/// bit-exact.
nlohmann::json povm_to_json(const Povm& povm,
                            const std::optional<DetectorModel>& model = std::nullopt);
Povm povm_from_json(const nlohmann::json& j);
std::optional<DetectorModel> detector_from_json(const nlohmann::json& j);
nlohmann::json detector_to_json(const DetectorModel& model);

}  // namespace heraldkit
