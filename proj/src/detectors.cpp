#include "heraldkit/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace heraldkit {

namespace {

constexpr int kBruteForceKMaxGuard = 60;

std::vector<double> geometric_powers(double base, int k_max) {
    std::vector<double> p(static_cast<std::size_t>(k_max) + 1);
    p[0] = 1.0;
    for (int k = 1; k <= k_max; ++k) {
        p[static_cast<std::size_t>(k)] = p[static_cast<std::size_t>(k) - 1] * base;
    }
    return p;
}

// Binomial split weights C(k,p) R^p (1-R)^(k-p) for p = 0..k, built by the
// Pascal-style update so no factorials overflow.
std::vector<double> binomial_weights(int k, double r) {
    std::vector<double> w(static_cast<std::size_t>(k) + 1);
    const double t = 1.0 - r;
    // start from p = 0 term and walk up: w_{p+1} = w_p * (k-p)/(p+1) * R/T
    // (guard T = 0 by walking from the other end)
    if (t > 0.0) {
        w[0] = std::pow(t, k);
        for (int p = 0; p < k; ++p) {
            w[static_cast<std::size_t>(p) + 1] =
                w[static_cast<std::size_t>(p)] * (static_cast<double>(k - p) / (p + 1)) * (r / t);
        }
    } else {
        std::fill(w.begin(), w.end(), 0.0);
        w[static_cast<std::size_t>(k)] = 1.0;
    }
    return w;
}

}  // namespace

std::string to_string(DetectorKind kind) {
    switch (kind) {
        case DetectorKind::IdealPnr:
            return "ideal_pnr";
        case DetectorKind::Apd:
            return "apd";
        case DetectorKind::Tmd:
            return "tmd";
    }
    return "unknown";
}

DetectorKind detector_kind_from_string(const std::string& name) {
    if (name == "ideal_pnr" || name == "ideal") {
        return DetectorKind::IdealPnr;
    }
    if (name == "apd") {
        return DetectorKind::Apd;
    }
    if (name == "tmd") {
        return DetectorKind::Tmd;
    }
    throw std::domain_error("unknown detector kind '" + name + "' (expected ideal_pnr|apd|tmd)");
}

DetectorModel DetectorModel::ideal_pnr() {
    return DetectorModel{DetectorKind::IdealPnr, 1.0, 0.0, 0.5};
}

DetectorModel DetectorModel::apd(double eta, double nu) {
    DetectorModel m{DetectorKind::Apd, eta, nu, 0.5};
    m.validate();
    return m;
}

DetectorModel DetectorModel::tmd(double eta, double nu, double reflectivity) {
    DetectorModel m{DetectorKind::Tmd, eta, nu, reflectivity};
    m.validate();
    return m;
}

void DetectorModel::validate() const {
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw std::domain_error("detector: quantum efficiency eta must lie in [0,1]");
    }
    if (!(nu >= 0.0) || !std::isfinite(nu)) {
        throw std::domain_error("detector: dark-count mean nu must be >= 0");
    }
    if (kind == DetectorKind::Tmd && !(reflectivity > 0.0 && reflectivity < 1.0)) {
        throw std::domain_error("detector: TMD reflectivity must lie in (0,1)");
    }
}

double Povm::coefficient(int k, int n) const {
    return outcomes[static_cast<std::size_t>(n)].element.effective_coeff(k);
}

std::vector<std::vector<double>> Povm::expanded() const {
    std::vector<std::vector<double>> r(outcomes.size());
    for (std::size_t n = 0; n < outcomes.size(); ++n) {
        r[n].resize(static_cast<std::size_t>(cutoff.dim()));
        for (int k = 0; k <= cutoff.k_max; ++k) {
            r[n][static_cast<std::size_t>(k)] = outcomes[n].element.effective_coeff(k);
        }
    }
    return r;
}

const PovmOutcome& Povm::outcome_by_label(int label) const {
    for (const PovmOutcome& o : outcomes) {
        if (o.label == label) {
            return o;
        }
    }
    throw std::invalid_argument("povm: no outcome with label " + std::to_string(label));
}

Povm povm_ideal_pnr(const FockCutoff& cutoff, int n_outcomes) {
    if (n_outcomes < 1 || n_outcomes > cutoff.k_max) {
        throw std::domain_error("povm_ideal_pnr: n_outcomes must lie in [1, k_max]");
    }
    Povm povm;
    povm.cutoff = cutoff;
    const auto dim = static_cast<std::size_t>(cutoff.dim());
    std::vector<double> absorbed(dim, 0.0);
    for (int n = 0; n < n_outcomes - 1; ++n) {
        PovmOutcome o;
        o.label = n;
        o.element = DiagonalFockOperator::fock_projector(n, cutoff.dim());
        absorbed[static_cast<std::size_t>(n)] = 1.0;
        povm.outcomes.push_back(std::move(o));
    }
    PovmOutcome last;
    last.label = n_outcomes - 1;
    last.element.coeffs = std::move(absorbed);
    last.element.complement = true;  // projector onto k >= n_outcomes-1
    povm.outcomes.push_back(std::move(last));
    return povm;
}

Povm povm_apd(const DetectorModel& model, const FockCutoff& cutoff) {
    if (model.kind != DetectorKind::Apd) {
        throw std::invalid_argument("povm_apd: model kind is not apd");
    }
    model.validate();
    const double no_dark = std::exp(-model.nu);
    std::vector<double> off = geometric_powers(1.0 - model.eta, cutoff.k_max);
    for (double& c : off) {
        c *= no_dark;
    }

    Povm povm;
    povm.cutoff = cutoff;
    povm.outcomes.resize(2);
    povm.outcomes[0].label = 0;  // off
    povm.outcomes[0].element.coeffs = off;
    povm.outcomes[1].label = 1;  // on = identity - off
    povm.outcomes[1].element.coeffs = std::move(off);
    povm.outcomes[1].element.complement = true;
    return povm;
}

Povm povm_tmd(const DetectorModel& model, const FockCutoff& cutoff) {
    if (model.kind != DetectorKind::Tmd) {
        throw std::invalid_argument("povm_tmd: model kind is not tmd");
    }
    model.validate();
    const double r = model.reflectivity;
    const double t = 1.0 - r;
    const double no_dark = std::exp(-model.nu);
    const double no_dark_bin = std::exp(-0.5 * model.nu);

    const std::vector<double> q_full = geometric_powers(1.0 - model.eta, cutoff.k_max);
    const std::vector<double> q_refl = geometric_powers(1.0 - r * model.eta, cutoff.k_max);
    const std::vector<double> q_trans = geometric_powers(1.0 - t * model.eta, cutoff.k_max);

    const auto dim = static_cast<std::size_t>(cutoff.dim());
    std::vector<double> zero(dim);
    std::vector<double> one(dim);
    std::vector<double> zero_plus_one(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        zero[k] = no_dark * q_full[k];
        one[k] = no_dark_bin * (q_refl[k] + q_trans[k]) - 2.0 * no_dark * q_full[k];
        zero_plus_one[k] = zero[k] + one[k];
    }

    Povm povm;
    povm.cutoff = cutoff;
    povm.outcomes.resize(3);
    povm.outcomes[0].label = 0;
    povm.outcomes[0].element.coeffs = std::move(zero);
    povm.outcomes[1].label = 1;
    povm.outcomes[1].element.coeffs = std::move(one);
    povm.outcomes[2].label = 2;  // 2 clicks = identity - (0 clicks) - (1 click)
    povm.outcomes[2].element.coeffs = std::move(zero_plus_one);
    povm.outcomes[2].element.complement = true;
    return povm;
}

Povm make_povm(const DetectorModel& model, const FockCutoff& cutoff, int ideal_outcomes) {
    switch (model.kind) {
        case DetectorKind::IdealPnr:
            return povm_ideal_pnr(cutoff, ideal_outcomes);
        case DetectorKind::Apd:
            return povm_apd(model, cutoff);
        case DetectorKind::Tmd:
            return povm_tmd(model, cutoff);
    }
    throw std::invalid_argument("make_povm: unknown detector kind");
}

Povm povm_brute_force(const DetectorModel& model, const FockCutoff& cutoff) {
    model.validate();
    if (cutoff.k_max > kBruteForceKMaxGuard) {
        throw std::domain_error("povm_brute_force: refuses k_max above 60");
    }
    const auto dim = static_cast<std::size_t>(cutoff.dim());

    Povm povm;
    povm.cutoff = cutoff;

    if (model.kind == DetectorKind::IdealPnr) {
        // perfect counter: every level is its own outcome, top level absorbs
        // the truncation remainder; enumeration is the identity map here
        const int n_outcomes = std::min(cutoff.k_max, 8);
        povm.outcomes.resize(static_cast<std::size_t>(n_outcomes));
        for (int n = 0; n < n_outcomes; ++n) {
            povm.outcomes[static_cast<std::size_t>(n)].label = n;
            auto& coeffs = povm.outcomes[static_cast<std::size_t>(n)].element.coeffs;
            coeffs.assign(dim, 0.0);
            for (int k = 0; k <= cutoff.k_max; ++k) {
                const bool hit = (n < n_outcomes - 1) ? (k == n) : (k >= n);
                coeffs[static_cast<std::size_t>(k)] = hit ? 1.0 : 0.0;
            }
        }
        return povm;
    }

    const int n_outcomes = (model.kind == DetectorKind::Apd) ? 2 : 3;
    povm.outcomes.resize(static_cast<std::size_t>(n_outcomes));
    for (int n = 0; n < n_outcomes; ++n) {
        povm.outcomes[static_cast<std::size_t>(n)].label = n;
        povm.outcomes[static_cast<std::size_t>(n)].element.coeffs.assign(dim, 0.0);
    }

    if (model.kind == DetectorKind::Apd) {
        const double no_dark = std::exp(-model.nu);
        for (int k = 0; k <= cutoff.k_max; ++k) {
            const double no_click = no_dark * std::pow(1.0 - model.eta, k);
            povm.outcomes[0].element.coeffs[static_cast<std::size_t>(k)] = no_click;
            povm.outcomes[1].element.coeffs[static_cast<std::size_t>(k)] = 1.0 - no_click;
        }
        return povm;
    }

    // TMD: split k photons over the two bins with probabilities R and 1-R,
    // each bin is dark-free with probability e^(-nu/2) and misses p photons
    // with probability (1-eta)^p; tally 0/1/2-click patterns.
    const double no_dark_bin = std::exp(-0.5 * model.nu);
    for (int k = 0; k <= cutoff.k_max; ++k) {
        const std::vector<double> split = binomial_weights(k, model.reflectivity);
        double p0 = 0.0;
        double p1 = 0.0;
        double p2 = 0.0;
        for (int p = 0; p <= k; ++p) {
            const double quiet_a = no_dark_bin * std::pow(1.0 - model.eta, p);
            const double quiet_b = no_dark_bin * std::pow(1.0 - model.eta, k - p);
            const double w = split[static_cast<std::size_t>(p)];
            p0 += w * quiet_a * quiet_b;
            p1 += w * (quiet_a * (1.0 - quiet_b) + (1.0 - quiet_a) * quiet_b);
            p2 += w * (1.0 - quiet_a) * (1.0 - quiet_b);
        }
        povm.outcomes[0].element.coeffs[static_cast<std::size_t>(k)] = p0;
        povm.outcomes[1].element.coeffs[static_cast<std::size_t>(k)] = p1;
        povm.outcomes[2].element.coeffs[static_cast<std::size_t>(k)] = p2;
    }
    return povm;
}

PovmDiagnostics validate_povm(const Povm& povm) {
    PovmDiagnostics diag;
    if (povm.outcomes.empty()) {
        throw std::invalid_argument("validate_povm: empty POVM");
    }
    const std::vector<std::vector<double>> r = povm.expanded();
    diag.min_coefficient = r[0][0];
    diag.max_coefficient = r[0][0];
    diag.outcome_traces.assign(r.size(), 0.0);
    for (int k = 0; k <= povm.cutoff.k_max; ++k) {
        double row_sum = 0.0;
        for (std::size_t n = 0; n < r.size(); ++n) {
            const double c = r[n][static_cast<std::size_t>(k)];
            row_sum += c;
            diag.min_coefficient = std::min(diag.min_coefficient, c);
            diag.max_coefficient = std::max(diag.max_coefficient, c);
            diag.outcome_traces[n] += c;
        }
        diag.max_completeness_violation =
            std::max(diag.max_completeness_violation, std::abs(row_sum - 1.0));
    }
    diag.coefficients_in_range = diag.min_coefficient >= 0.0 && diag.max_coefficient <= 1.0;
    return diag;
}

nlohmann::json detector_to_json(const DetectorModel& model) {
    nlohmann::json j;
    j["kind"] = to_string(model.kind);
    j["eta"] = model.eta;
    j["nu"] = model.nu;
    if (model.kind == DetectorKind::Tmd) {
        j["reflectivity"] = model.reflectivity;
    }
    return j;
}

std::optional<DetectorModel> detector_from_json(const nlohmann::json& j) {
    if (!j.contains("detector") || j["detector"].is_null()) {
        return std::nullopt;
    }
    const nlohmann::json& d = j["detector"];
    DetectorModel m;
    m.kind = detector_kind_from_string(d.at("kind").get<std::string>());
    m.eta = d.at("eta").get<double>();
    m.nu = d.at("nu").get<double>();
    if (d.contains("reflectivity")) {
        m.reflectivity = d["reflectivity"].get<double>();
    }
    m.validate();
    return m;
}

nlohmann::json povm_to_json(const Povm& povm, const std::optional<DetectorModel>& model) {
    nlohmann::json j;
    if (model) {
        j["detector"] = detector_to_json(*model);
    } else {
        j["detector"] = nullptr;
    }
    j["cutoff"] = {{"k_max", povm.cutoff.k_max}, {"tail_epsilon", povm.cutoff.tail_epsilon}};
    nlohmann::json outcomes = nlohmann::json::array();
    for (const PovmOutcome& o : povm.outcomes) {
        outcomes.push_back({{"label", o.label},
                            {"complement_flag", o.element.complement},
                            {"coeffs", o.element.coeffs}});
    }
    j["outcomes"] = std::move(outcomes);
    return j;
}

Povm povm_from_json(const nlohmann::json& j) {
    Povm povm;
    povm.cutoff = FockCutoff::fixed(j.at("cutoff").at("k_max").get<int>(),
                                    j.at("cutoff").at("tail_epsilon").get<double>());
    for (const nlohmann::json& o : j.at("outcomes")) {
        PovmOutcome outcome;
        outcome.label = o.at("label").get<int>();
        outcome.element.complement = o.at("complement_flag").get<bool>();
        outcome.element.coeffs = o.at("coeffs").get<std::vector<double>>();
        if (outcome.element.coeffs.size() != static_cast<std::size_t>(povm.cutoff.dim())) {
            throw std::invalid_argument("povm_from_json: coefficient length does not match cutoff");
        }
        povm.outcomes.push_back(std::move(outcome));
    }
    if (povm.outcomes.empty()) {
        throw std::invalid_argument("povm_from_json: no outcomes");
    }
    return povm;
}

}  // namespace heraldkit
