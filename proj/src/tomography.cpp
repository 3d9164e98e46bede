#include "heraldkit/tomography.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace heraldkit {

namespace {

constexpr double kProbClamp = 1e-300;
constexpr double kUnidentifiedWeight = 1e-6;
constexpr double kTwoPi = 6.283185307179586476925286766559;

// uniform double in [0,1) from the top 53 bits of the engine output
double next_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// standard normal via Box-Muller (cosine branch), rejecting beyond 3 sigma
double truncated_standard_normal(std::mt19937_64& rng) {
    for (;;) {
        const double u1 = next_uniform(rng);
        const double u2 = next_uniform(rng);
        const double z = std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(kTwoPi * u2);
        if (std::abs(z) <= 3.0) {
            return z;
        }
    }
}

// compensated accumulator; the log-likelihood sums millions of terms and the
// monotonicity slack is absolute, so plain summation would eat it
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

std::string shortest_double(double v) {
    char buf[32];
    const std::to_chars_result res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// log-likelihood of count matrix f under probability matrix p
double loglik_of(const std::vector<std::vector<long long>>& f,
                 const std::vector<std::vector<double>>& p, bool* clamped) {
    KahanSum acc;
    for (std::size_t j = 0; j < f.size(); ++j) {
        for (std::size_t n = 0; n < f[j].size(); ++n) {
            if (f[j][n] == 0) {
                continue;
            }
            double prob = p[j][n];
            if (!(prob >= kProbClamp)) {
                prob = kProbClamp;
                if (clamped != nullptr) {
                    *clamped = true;
                }
            }
            acc.add(static_cast<double>(f[j][n]) * std::log(prob));
        }
    }
    return acc.sum;
}

std::vector<std::vector<double>> probe_weights(const ProbeGrid& grid,
                                               const FockCutoff& cutoff) {
    if (poisson_tail_bound(grid.mu_max(), cutoff.k_max) >= cutoff.tail_epsilon) {
        throw std::runtime_error(
            "probe grid: Poisson tail above tail_epsilon at the largest probe; "
            "raise the cutoff");
    }
    std::vector<std::vector<double>> c(static_cast<std::size_t>(grid.n_probes()));
    for (std::size_t j = 0; j < c.size(); ++j) {
        c[j] = poisson_weights(grid.amplitudes_sq[j], cutoff);
    }
    return c;
}

std::vector<std::vector<double>> probabilities_from(
    const std::vector<std::vector<double>>& c, const std::vector<std::vector<double>>& r) {
    const std::size_t n_outcomes = r.empty() ? 0 : r[0].size();
    std::vector<std::vector<double>> p(c.size(), std::vector<double>(n_outcomes, 0.0));
    for (std::size_t j = 0; j < c.size(); ++j) {
        for (std::size_t k = 0; k < c[j].size(); ++k) {
            const double w = c[j][k];
            if (w == 0.0) {
                continue;
            }
            for (std::size_t n = 0; n < n_outcomes; ++n) {
                p[j][n] += w * r[k][n];
            }
        }
    }
    return p;
}

}  // namespace

ProbeGrid ProbeGrid::linspaced(double mu_min, double mu_max, int n_probes,
                               long long shots, double sigma) {
    if (n_probes < 1) {
        throw std::domain_error("ProbeGrid: number of probes must be >= 1");
    }
    ProbeGrid grid;
    grid.shots_per_probe = shots;
    grid.amplitude_error_sigma = sigma;
    grid.amplitudes_sq.resize(static_cast<std::size_t>(n_probes));
    if (n_probes == 1) {
        grid.amplitudes_sq[0] = mu_min;
    } else {
        const double step = (mu_max - mu_min) / (n_probes - 1);
        for (int j = 0; j < n_probes; ++j) {
            grid.amplitudes_sq[static_cast<std::size_t>(j)] = mu_min + j * step;
        }
        grid.amplitudes_sq.back() = mu_max;
    }
    grid.validate();
    return grid;
}

void ProbeGrid::validate() const {
    if (amplitudes_sq.empty()) {
        throw std::domain_error("ProbeGrid: at least one probe is required");
    }
    for (std::size_t j = 0; j < amplitudes_sq.size(); ++j) {
        if (!(amplitudes_sq[j] >= 0.0) || !std::isfinite(amplitudes_sq[j])) {
            throw std::domain_error("ProbeGrid: mean photon numbers must be >= 0");
        }
        if (j > 0 && !(amplitudes_sq[j] > amplitudes_sq[j - 1])) {
            throw std::domain_error("ProbeGrid: mean photon numbers must increase strictly");
        }
    }
    if (shots_per_probe < 1) {
        throw std::domain_error("ProbeGrid: shots_per_probe must be >= 1");
    }
    if (!(amplitude_error_sigma >= 0.0) || !std::isfinite(amplitude_error_sigma)) {
        throw std::domain_error("ProbeGrid: amplitude_error_sigma must be >= 0");
    }
}

double ProbeGrid::mu_max() const {
    if (amplitudes_sq.empty()) {
        throw std::domain_error("ProbeGrid: empty grid has no largest probe");
    }
    return amplitudes_sq.back();
}

void TomographyDataset::validate() const {
    grid.validate();
    if (outcome_labels.empty()) {
        throw std::invalid_argument("dataset: outcome labels are missing");
    }
    for (std::size_t a = 0; a < outcome_labels.size(); ++a) {
        for (std::size_t b = a + 1; b < outcome_labels.size(); ++b) {
            if (outcome_labels[a] == outcome_labels[b]) {
                throw std::invalid_argument("dataset: duplicate outcome label");
            }
        }
    }
    if (counts.size() != static_cast<std::size_t>(grid.n_probes())) {
        throw std::invalid_argument("dataset: one count row per probe is required");
    }
    for (const std::vector<long long>& row : counts) {
        if (row.size() != outcome_labels.size()) {
            throw std::invalid_argument("dataset: count row width != number of outcomes");
        }
        long long total = 0;
        for (long long v : row) {
            if (v < 0) {
                throw std::invalid_argument("dataset: negative count");
            }
            total += v;
        }
        if (total != grid.shots_per_probe) {
            throw std::invalid_argument("dataset: count row does not sum to shots_per_probe");
        }
    }
}

std::vector<std::vector<double>> predicted_probabilities(const Povm& povm,
                                                         const ProbeGrid& grid) {
    grid.validate();
    const std::vector<std::vector<double>> c = probe_weights(grid, povm.cutoff);
    const std::vector<std::vector<double>> expanded = povm.expanded();

    // reshape to [k][n] for the cache-friendly inner loop
    std::vector<std::vector<double>> r(static_cast<std::size_t>(povm.cutoff.dim()),
                                       std::vector<double>(expanded.size(), 0.0));
    for (std::size_t n = 0; n < expanded.size(); ++n) {
        for (std::size_t k = 0; k < r.size(); ++k) {
            r[k][n] = expanded[n][k];
        }
    }
    return probabilities_from(c, r);
}

std::vector<double> coherent_outcome_probabilities(const DetectorModel& model, double mu,
                                                   int ideal_outcomes) {
    model.validate();
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
        throw std::domain_error("coherent probe: mean photon number must be >= 0");
    }

    if (model.kind == DetectorKind::Apd) {
        const double p_off = std::exp(-model.nu - model.eta * mu);
        return {p_off, 1.0 - p_off};
    }

    if (model.kind == DetectorKind::Tmd) {
        const double split = model.reflectivity;
        const double p0 = std::exp(-model.nu - model.eta * mu);
        const double p1 = std::max(
            0.0, std::exp(-0.5 * model.nu) * (std::exp(-split * model.eta * mu) +
                                              std::exp(-(1.0 - split) * model.eta * mu)) -
                     2.0 * p0);
        const double p2 = std::max(0.0, 1.0 - p0 - p1);
        return {p0, p1, p2};
    }

    if (ideal_outcomes < 1) {
        throw std::domain_error("coherent probe: ideal counter needs >= 1 outcome");
    }
    std::vector<double> p(static_cast<std::size_t>(ideal_outcomes), 0.0);
    double term = std::exp(-mu);
    double head = 0.0;
    for (int n = 0; n < ideal_outcomes - 1; ++n) {
        p[static_cast<std::size_t>(n)] = term;
        head += term;
        term *= mu / (n + 1);
    }
    p.back() = std::max(0.0, 1.0 - head);
    return p;
}

TomographyDataset simulate_dataset(const DetectorModel& model, const ProbeGrid& grid,
                                   std::uint64_t seed, int ideal_outcomes) {
    model.validate();
    grid.validate();

    TomographyDataset dataset;
    dataset.grid = grid;
    dataset.rng_seed = seed;
    dataset.true_model = model;

    const std::size_t n_outcomes =
        coherent_outcome_probabilities(model, 0.0, ideal_outcomes).size();
    dataset.outcome_labels.resize(n_outcomes);
    for (std::size_t n = 0; n < n_outcomes; ++n) {
        dataset.outcome_labels[n] = static_cast<int>(n);
    }

    std::mt19937_64 rng(seed);
    dataset.counts.assign(static_cast<std::size_t>(grid.n_probes()),
                          std::vector<long long>(n_outcomes, 0));
    std::vector<double> cdf(n_outcomes);
    for (std::size_t j = 0; j < dataset.counts.size(); ++j) {
        // one calibration error per probe batch, drawn even when sigma = 0
        // so the sample stream does not depend on sigma
        const double eps = grid.amplitude_error_sigma * truncated_standard_normal(rng);
        const double mu_eff = std::max(0.0, grid.amplitudes_sq[j] * (1.0 + eps));
        const std::vector<double> p =
            coherent_outcome_probabilities(model, mu_eff, ideal_outcomes);

        double running = 0.0;
        for (std::size_t n = 0; n < n_outcomes; ++n) {
            running += p[n];
            cdf[n] = running;
        }
        for (long long shot = 0; shot < grid.shots_per_probe; ++shot) {
            const double u = next_uniform(rng);
            std::size_t n = 0;
            while (n + 1 < n_outcomes && u >= cdf[n]) {
                ++n;
            }
            ++dataset.counts[j][n];
        }
    }
    return dataset;
}

double loglikelihood(const TomographyDataset& dataset, const Povm& povm, bool* clamped) {
    dataset.validate();
    if (clamped != nullptr) {
        *clamped = false;
    }
    // order the POVM columns by the dataset's labels
    Povm ordered;
    ordered.cutoff = povm.cutoff;
    for (int label : dataset.outcome_labels) {
        ordered.outcomes.push_back(povm.outcome_by_label(label));
    }
    const std::vector<std::vector<double>> p =
        predicted_probabilities(ordered, dataset.grid);
    return loglik_of(dataset.counts, p, clamped);
}

ReconstructionResult ml_reconstruct(const TomographyDataset& dataset,
                                    const FockCutoff& cutoff,
                                    const ReconstructionOptions& options) {
    dataset.validate();
    if (!(dataset.grid.mu_max() > 0.0)) {
        throw std::invalid_argument("ml_reconstruct: need at least one probe with mu > 0");
    }
    if (options.max_iterations < 1) {
        throw std::domain_error("ml_reconstruct: max_iterations must be >= 1");
    }
    if (!(options.tol_per_datum > 0.0)) {
        throw std::domain_error("ml_reconstruct: tol_per_datum must be > 0");
    }

    const std::size_t n_probes = dataset.counts.size();
    const std::size_t n_outcomes = dataset.outcome_labels.size();
    const std::size_t dim = static_cast<std::size_t>(cutoff.dim());
    const double total_shots =
        static_cast<double>(dataset.grid.shots_per_probe) * static_cast<double>(n_probes);
    const double gain_threshold = options.tol_per_datum * total_shots;

    const std::vector<std::vector<double>> c = probe_weights(dataset.grid, cutoff);

    ReconstructionResult result;
    for (std::size_t k = 0; k < dim; ++k) {
        double weight = 0.0;
        for (std::size_t j = 0; j < n_probes; ++j) {
            weight += c[j][k];
        }
        if (weight < kUnidentifiedWeight) {
            result.unidentified_levels.push_back(static_cast<int>(k));
        }
    }

    // coefficients as [k][n] rows; every row is a probability vector
    std::vector<std::vector<double>> r(
        dim, std::vector<double>(n_outcomes, 1.0 / static_cast<double>(n_outcomes)));
    if (options.initial.has_value()) {
        const Povm& init = *options.initial;
        if (init.cutoff.k_max != cutoff.k_max) {
            throw std::invalid_argument("ml_reconstruct: initial POVM cutoff mismatch");
        }
        for (std::size_t n = 0; n < n_outcomes; ++n) {
            const PovmOutcome& outcome = init.outcome_by_label(dataset.outcome_labels[n]);
            for (std::size_t k = 0; k < dim; ++k) {
                r[k][n] = outcome.element.effective_coeff(static_cast<int>(k));
            }
        }
    }

    // normalized frequencies; the scale cancels in the update ratio but
    // keeps the gain matrix O(1)
    std::vector<std::vector<double>> f_norm(n_probes, std::vector<double>(n_outcomes));
    const double inv_total = 1.0 / total_shots;
    for (std::size_t j = 0; j < n_probes; ++j) {
        for (std::size_t n = 0; n < n_outcomes; ++n) {
            f_norm[j][n] = static_cast<double>(dataset.counts[j][n]) * inv_total;
        }
    }

    const auto record_iterate_bounds = [&result, &r]() {
        for (const std::vector<double>& row : r) {
            double row_sum = 0.0;
            for (double v : row) {
                row_sum += v;
                result.min_coefficient = std::min(result.min_coefficient, v);
            }
            result.max_completeness_violation =
                std::max(result.max_completeness_violation, std::abs(row_sum - 1.0));
        }
    };
    result.min_coefficient = r[0][0];
    record_iterate_bounds();

    std::vector<std::vector<double>> p = probabilities_from(c, r);
    double loglik = loglik_of(dataset.counts, p, &result.probability_clamped);
    result.loglik_trace.push_back(loglik);

    std::vector<std::vector<double>> gain(dim, std::vector<double>(n_outcomes, 0.0));
    std::vector<std::vector<double>> candidate(dim, std::vector<double>(n_outcomes, 0.0));

    const auto apply_step = [&](int power) {
        for (std::size_t k = 0; k < dim; ++k) {
            double row_total = 0.0;
            for (std::size_t n = 0; n < n_outcomes; ++n) {
                const double g = gain[k][n];
                candidate[k][n] = r[k][n] * (power == 2 ? g * g : g);
                row_total += candidate[k][n];
            }
            if (row_total > 0.0 && std::isfinite(row_total)) {
                for (std::size_t n = 0; n < n_outcomes; ++n) {
                    candidate[k][n] /= row_total;
                }
            } else {
                candidate[k] = r[k];  // unidentified level, keep it untouched
            }
        }
    };

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        for (std::size_t k = 0; k < dim; ++k) {
            std::fill(gain[k].begin(), gain[k].end(), 0.0);
        }
        for (std::size_t j = 0; j < n_probes; ++j) {
            for (std::size_t n = 0; n < n_outcomes; ++n) {
                if (f_norm[j][n] == 0.0) {
                    continue;
                }
                const double ratio = f_norm[j][n] / std::max(p[j][n], kProbClamp);
                for (std::size_t k = 0; k < dim; ++k) {
                    gain[k][n] += ratio * c[j][k];
                }
            }
        }

        // squared-gain step first; fall back to the plain
        // expectation-maximization step when it does not improve
        apply_step(2);
        std::vector<std::vector<double>> p_next = probabilities_from(c, candidate);
        double loglik_next = loglik_of(dataset.counts, p_next, &result.probability_clamped);
        if (loglik_next < loglik) {
            apply_step(1);
            p_next = probabilities_from(c, candidate);
            loglik_next = loglik_of(dataset.counts, p_next, &result.probability_clamped);
        }

        r.swap(candidate);
        p.swap(p_next);
        record_iterate_bounds();
        const double delta = loglik_next - loglik;
        loglik = loglik_next;
        result.loglik_trace.push_back(loglik);
        result.iterations = iter + 1;
        result.final_delta = delta;
        if (delta < gain_threshold) {
            result.converged = true;
            break;
        }
    }

    result.povm.cutoff = cutoff;
    result.povm.outcomes.resize(n_outcomes);
    for (std::size_t n = 0; n < n_outcomes; ++n) {
        result.povm.outcomes[n].label = dataset.outcome_labels[n];
        result.povm.outcomes[n].element.coeffs.resize(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            result.povm.outcomes[n].element.coeffs[k] = r[k][n];
        }
    }
    return result;
}

PovmComparison compare_povm(const Povm& a, const Povm& b, int k_limit) {
    if (k_limit < 0) {
        throw std::domain_error("compare_povm: k_limit must be >= 0");
    }
    if (a.n_outcomes() != b.n_outcomes()) {
        throw std::invalid_argument("compare_povm: outcome label mismatch");
    }
    const int k_top = std::min({k_limit, a.cutoff.k_max, b.cutoff.k_max});

    PovmComparison cmp;
    cmp.l1_per_outcome.assign(a.outcomes.size(), 0.0);
    for (std::size_t n = 0; n < a.outcomes.size(); ++n) {
        const PovmOutcome& oa = a.outcomes[n];
        const PovmOutcome& ob = b.outcome_by_label(oa.label);  // throws on mismatch
        for (int k = 0; k <= k_top; ++k) {
            const double d = std::abs(oa.element.effective_coeff(k) -
                                      ob.element.effective_coeff(k));
            cmp.l1_per_outcome[n] += d;
            cmp.max_abs_difference = std::max(cmp.max_abs_difference, d);
        }
    }
    return cmp;
}

std::string dataset_to_csv(const TomographyDataset& dataset) {
    dataset.validate();
    std::ostringstream out;
    out << "mu,shots";
    for (int label : dataset.outcome_labels) {
        out << ",count_outcome_" << label;
    }
    out << "\n";
    for (std::size_t j = 0; j < dataset.counts.size(); ++j) {
        out << shortest_double(dataset.grid.amplitudes_sq[j]) << ","
            << dataset.grid.shots_per_probe;
        for (long long v : dataset.counts[j]) {
            out << "," << v;
        }
        out << "\n";
    }
    return out.str();
}

nlohmann::json dataset_sidecar_json(const TomographyDataset& dataset) {
    nlohmann::json j;
    j["seed"] = dataset.rng_seed;
    j["sigma"] = dataset.grid.amplitude_error_sigma;
    j["outcome_labels"] = dataset.outcome_labels;
    if (dataset.true_model.has_value()) {
        j["detector"] = detector_to_json(*dataset.true_model);
    } else {
        j["detector"] = nullptr;
    }
    return j;
}

TomographyDataset dataset_from_csv(const std::string& csv_text,
                                   const nlohmann::json& sidecar) {
    TomographyDataset dataset;
    dataset.rng_seed = sidecar.at("seed").get<std::uint64_t>();
    dataset.grid.amplitude_error_sigma = sidecar.at("sigma").get<double>();
    dataset.outcome_labels = sidecar.at("outcome_labels").get<std::vector<int>>();
    dataset.true_model = detector_from_json(sidecar);

    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) {
        throw std::invalid_argument("dataset CSV: missing header");
    }
    {
        std::ostringstream expected;
        expected << "mu,shots";
        for (int label : dataset.outcome_labels) {
            expected << ",count_outcome_" << label;
        }
        if (line != expected.str()) {
            throw std::invalid_argument(
                "dataset CSV: header does not match the sidecar outcome labels");
        }
    }

    bool shots_known = false;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        std::string cell;
        if (!std::getline(row, cell, ',')) {
            throw std::invalid_argument("dataset CSV: malformed row");
        }
        dataset.grid.amplitudes_sq.push_back(std::stod(cell));
        if (!std::getline(row, cell, ',')) {
            throw std::invalid_argument("dataset CSV: row missing shot count");
        }
        const long long shots = std::stoll(cell);
        if (!shots_known) {
            dataset.grid.shots_per_probe = shots;
            shots_known = true;
        } else if (shots != dataset.grid.shots_per_probe) {
            throw std::invalid_argument("dataset CSV: rows disagree on shots_per_probe");
        }
        std::vector<long long> counts;
        while (std::getline(row, cell, ',')) {
            counts.push_back(std::stoll(cell));
        }
        if (counts.size() != dataset.outcome_labels.size()) {
            throw std::invalid_argument("dataset CSV: row width != number of outcomes");
        }
        dataset.counts.push_back(std::move(counts));
    }
    dataset.validate();
    return dataset;
}

nlohmann::json run_log_json(const ReconstructionResult& result) {
    nlohmann::json j;
    j["iterations"] = result.iterations;
    j["final_loglik"] = result.loglik_trace.empty() ? 0.0 : result.loglik_trace.back();
    j["converged"] = result.converged;
    j["unidentified_k_levels"] = result.unidentified_levels;
    j["final_delta"] = result.final_delta;
    j["probability_clamped"] = result.probability_clamped;
    return j;
}

}  // namespace heraldkit
