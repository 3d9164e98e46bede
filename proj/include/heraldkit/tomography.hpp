#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "heraldkit/detectors.hpp"
#include "heraldkit/fock.hpp"

namespace heraldkit {

/// Coherent-probe schedule: mean photon numbers |alpha_j|^2, the number of
/// shots per setting, and the relative amplitude calibration error.
struct ProbeGrid {
    std::vector<double> amplitudes_sq;  // strictly increasing, >= 0
    long long shots_per_probe = 0;
    double amplitude_error_sigma = 0.05;

    /// n_probes equally spaced mean photon numbers from mu_min to mu_max.
    static ProbeGrid linspaced(double mu_min, double mu_max, int n_probes,
                               long long shots, double sigma = 0.05);

    void validate() const;
    double mu_max() const;
    int n_probes() const { return static_cast<int>(amplitudes_sq.size()); }
};

/// Click-count record of a (possibly synthetic) tomography run.
struct TomographyDataset {
    ProbeGrid grid;
    std::vector<std::vector<long long>> counts;  // [probe][outcome], rows sum to M
    std::vector<int> outcome_labels;
    std::uint64_t rng_seed = 0;
    std::optional<DetectorModel> true_model;  // set when the data is synthetic

    int n_outcomes() const { return static_cast<int>(outcome_labels.size()); }
    void validate() const;
};

/// Outcome probabilities p[probe][outcome] of the POVM under the grid's
/// nominal coherent probes: p_{n,j} = sum_k c_{j,k} r_{k,n} with c the
/// truncated Poisson weights. Columns sum to 1 up to the Poisson tail.
/// Throws std::runtime_error when the cutoff leaves a tail above the
/// cutoff's tail_epsilon at the largest probe.
std::vector<std::vector<double>> predicted_probabilities(const Povm& povm,
                                                         const ProbeGrid& grid);

/// Exact outcome probabilities of a detector model under a coherent probe of
/// mean photon number mu. The Poisson mixture over photon number collapses
/// in closed form, so this route never touches the Fock-space machinery and
/// serves as an independent reference for it. ideal_outcomes fixes the
/// number of bins reported by the ideal counter (last bin absorbs the tail).
std::vector<double> coherent_outcome_probabilities(const DetectorModel& model, double mu,
                                                   int ideal_outcomes = 8);

/// Synthetic dataset: for each probe, one relative amplitude error epsilon ~
/// Normal(0, sigma) truncated at 3 sigma is drawn (per batch, not per shot),
/// the exact outcome probabilities are evaluated at mu (1 + epsilon), and M
/// outcomes are sampled. Deterministic for a given seed.
TomographyDataset simulate_dataset(const DetectorModel& model, const ProbeGrid& grid,
                                   std::uint64_t seed, int ideal_outcomes = 8);

struct ReconstructionOptions {
    double tol_per_datum = 1e-10;  // log-likelihood gain per shot at which to stop
    int max_iterations = 5000;
    std::optional<Povm> initial;  // default: uniform over outcomes
};

struct ReconstructionResult {
    Povm povm;
    std::vector<double> loglik_trace;  // one entry per iteration, non-decreasing
    int iterations = 0;
    bool converged = false;
    double final_delta = 0.0;
    bool probability_clamped = false;      // a zero-probability observation occurred
    std::vector<int> unidentified_levels;  // k with probe weight below 1e-6
    // worst per-k row-sum deviation from 1 and smallest coefficient seen at
    // any point of the iteration, so invariant checks cover every iterate
    double max_completeness_violation = 0.0;
    double min_coefficient = 0.0;
};

/// Iterative maximum-likelihood POVM reconstruction. Multiplicative
/// expectation-maximization updates with per-k renormalization keep every
/// iterate a valid POVM; the squared-gain step is tried first and the plain
/// step is substituted whenever it would lower the likelihood, so the trace
/// is monotone. Stops when the per-iteration gain drops below
/// tol_per_datum * (total shots) or after max_iterations.
ReconstructionResult ml_reconstruct(const TomographyDataset& dataset,
                                    const FockCutoff& cutoff,
                                    const ReconstructionOptions& options = {});

/// sum_{j,n} f_{n,j} ln p_{n,j}. Zero-count cells contribute nothing;
/// zero-probability cells with counts are clamped to 1e-300. When clamped is
/// non-null it is always written: true if any cell was clamped, else false.
double loglikelihood(const TomographyDataset& dataset, const Povm& povm,
                     bool* clamped = nullptr);

struct PovmComparison {
    double max_abs_difference = 0.0;     // over outcomes and k <= k_limit
    std::vector<double> l1_per_outcome;  // sum of |difference| over k <= k_limit
};

/// Coefficient-wise distance between two POVMs with identical outcome
/// labels, restricted to k <= k_limit. Throws std::invalid_argument on a
/// label mismatch.
PovmComparison compare_povm(const Povm& a, const Povm& b, int k_limit);

/// CSV with header mu,shots,count_outcome_<label>,... and one row per probe.
std::string dataset_to_csv(const TomographyDataset& dataset);

/// Sidecar metadata: seed, sigma, outcome labels, and the generating
/// detector when the dataset is synthetic.
nlohmann::json dataset_sidecar_json(const TomographyDataset& dataset);

TomographyDataset dataset_from_csv(const std::string& csv_text,
                                   const nlohmann::json& sidecar);

/// Run-log JSON for a reconstruction: iterations, final log-likelihood,
/// convergence flag, unidentified k levels, and the clamp flag.
nlohmann::json run_log_json(const ReconstructionResult& result);

}  // namespace heraldkit
