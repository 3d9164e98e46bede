#include "cli_app.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "heraldkit/detectors.hpp"
#include "heraldkit/fock.hpp"
#include "heraldkit/heralding.hpp"
#include "heraldkit/tomography.hpp"

namespace heraldkit::cli {

namespace {

namespace fs = std::filesystem;

constexpr int kDisplayKMaxFloor = 30;

struct GlobalOptions {
    std::string out_dir = "out";
    std::uint64_t seed = 12345;
    std::string cutoff_spec = "auto";
};

struct ModelFlags {
    std::string kind = "apd";
    double eta = 1.0;
    double nu = 0.0;
    double reflectivity = 0.5;
    int ideal_outcomes = 8;

    DetectorModel build() const {
        DetectorModel model;
        model.kind = detector_kind_from_string(kind);
        model.eta = eta;
        model.nu = nu;
        model.reflectivity = reflectivity;
        model.validate();
        return model;
    }
};

void add_model_flags(CLI::App* cmd, ModelFlags& flags) {
    cmd->add_option("--kind", flags.kind, "detector kind: ideal_pnr, apd or tmd")
        ->capture_default_str();
    cmd->add_option("--eta", flags.eta, "quantum efficiency, in [0,1]")
        ->capture_default_str();
    cmd->add_option("--nu", flags.nu, "mean dark counts per detection window")
        ->capture_default_str();
    cmd->add_option("--r", flags.reflectivity, "two-bin splitter reflectivity, in (0,1)")
        ->capture_default_str();
    cmd->add_option("--ideal-outcomes", flags.ideal_outcomes,
                    "click bins reported by the ideal counter")
        ->capture_default_str();
}

// 12 significant digits, the table format shared by all CSV output
std::string sig12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::string(buf);
}

int parse_outcome_label(const std::string& text) {
    if (text == "off") {
        return 0;
    }
    if (text == "on") {
        return 1;
    }
    try {
        std::size_t pos = 0;
        const int value = std::stoi(text, &pos);
        if (pos == text.size()) {
            return value;
        }
    } catch (const std::exception&) {
    }
    throw std::domain_error("outcome must be an integer label or one of off/on");
}

FockCutoff resolve_cutoff(const std::string& spec, const FockCutoff& automatic) {
    if (spec == "auto") {
        return automatic;
    }
    try {
        std::size_t pos = 0;
        const int k = std::stoi(spec, &pos);
        if (pos == spec.size()) {
            return FockCutoff::fixed(k);
        }
    } catch (const std::domain_error&) {
        throw;
    } catch (const std::exception&) {
    }
    throw std::domain_error("--cutoff must be 'auto' or an integer k_max");
}

// cutoff for coefficient tables: follow the geometric decay of the off
// element but keep at least a screenful of levels
FockCutoff display_cutoff(const DetectorModel& model) {
    const double ratio = 1.0 - model.eta;
    FockCutoff cutoff =
        ratio >= 1.0 ? FockCutoff::fixed(kDisplayKMaxFloor) : FockCutoff::for_geometric(ratio);
    if (cutoff.k_max < kDisplayKMaxFloor) {
        cutoff.k_max = kDisplayKMaxFloor;
    }
    return cutoff;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw std::runtime_error("cannot open for writing: " + path.string());
    }
    file << content;
    file.flush();
    if (!file) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) {
        throw std::runtime_error("cannot open for reading: " + path.string());
    }
    std::ostringstream buffer;
    buffer << file.rdbuf();
    if (!file) {
        throw std::runtime_error("read failed: " + path.string());
    }
    return buffer.str();
}

nlohmann::json cutoff_json(const FockCutoff& cutoff) {
    return {{"k_max", cutoff.k_max}, {"tail_epsilon", cutoff.tail_epsilon}};
}

void write_manifest(const fs::path& dir, nlohmann::json manifest,
                    const std::vector<std::string>& outputs, std::ostream& out) {
    manifest["outputs"] = outputs;
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    for (const std::string& name : outputs) {
        out << "wrote " << (dir / name).string() << "\n";
    }
    out << "wrote " << (dir / "manifest.json").string() << "\n";
}

std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 1) {
        throw std::domain_error("grid needs at least one point");
    }
    std::vector<double> v(static_cast<std::size_t>(n));
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    const double step = (hi - lo) / (n - 1);
    for (int i = 0; i < n; ++i) {
        v[static_cast<std::size_t>(i)] = lo + i * step;
    }
    v.back() = hi;
    return v;
}

// ---------------------------------------------------------------- povm ----

struct PovmArgs {
    ModelFlags model;
};

void run_povm(const PovmArgs& args, const GlobalOptions& global, std::ostream& out) {
    const DetectorModel model = args.model.build();
    const FockCutoff cutoff = resolve_cutoff(global.cutoff_spec, display_cutoff(model));
    const Povm povm = make_povm(model, cutoff, args.model.ideal_outcomes);
    const PovmDiagnostics diag = validate_povm(povm);

    const fs::path dir(global.out_dir);
    fs::create_directories(dir);
    write_file(dir / "povm.json", povm_to_json(povm, model).dump(2) + "\n");

    std::ostringstream csv;
    csv << "k";
    for (const PovmOutcome& outcome : povm.outcomes) {
        csv << ",r_k_" << outcome.label;
    }
    csv << "\n";
    for (int k = 0; k <= cutoff.k_max; ++k) {
        csv << k;
        for (const PovmOutcome& outcome : povm.outcomes) {
            csv << "," << sig12(outcome.element.effective_coeff(k));
        }
        csv << "\n";
    }
    write_file(dir / "povm_coefficients.csv", csv.str());

    nlohmann::json manifest;
    manifest["command"] = "povm";
    manifest["parameters"] = {{"detector", detector_to_json(model)},
                              {"ideal_outcomes", args.model.ideal_outcomes}};
    manifest["cutoff"] = cutoff_json(cutoff);
    manifest["methods"] = {{"coefficients", "closed_form"}};
    manifest["diagnostics"] = {
        {"max_completeness_violation", diag.max_completeness_violation},
        {"coefficients_in_range", diag.coefficients_in_range}};
    write_manifest(dir, manifest, {"povm.json", "povm_coefficients.csv"}, out);
}

// -------------------------------------------------------------- wigner ----

struct WignerArgs {
    ModelFlags model;
    std::string outcome = "1";
    std::optional<double> lambda;  // set: profile the heralded state instead
    double r_max = 3.0;
    double step = 0.01;
};

void run_wigner(const WignerArgs& args, const GlobalOptions& global, std::ostream& out) {
    const DetectorModel model = args.model.build();
    const int label = parse_outcome_label(args.outcome);
    if (!(args.step > 0.0) || !(args.r_max > 0.0)) {
        throw std::domain_error("wigner: --step and --r-max must be positive");
    }

    FockCutoff automatic = display_cutoff(model);
    if (args.lambda.has_value()) {
        automatic = FockCutoff::for_twin_beam(*args.lambda);
        if (automatic.k_max < kDisplayKMaxFloor) {
            automatic.k_max = kDisplayKMaxFloor;
        }
    }
    const FockCutoff cutoff = resolve_cutoff(global.cutoff_spec, automatic);
    const Povm povm = make_povm(model, cutoff, args.model.ideal_outcomes);

    DiagonalFockOperator object;
    std::string object_name;
    nlohmann::json summary;
    if (args.lambda.has_value()) {
        const TwinBeamSource source(*args.lambda);
        const HeraldedState heralded = conditional_state(source, povm, label);
        object = heralded.state;
        object_name = "heralded state, " + to_string(model.kind) + ", outcome " +
                      std::to_string(label);
        summary["rate"] = heralded.rate;
        summary["lambda"] = *args.lambda;
    } else {
        object = povm.outcome_by_label(label).element;
        object_name = "povm element, " + to_string(model.kind) + ", outcome " +
                      std::to_string(label);
    }

    const int n_points = static_cast<int>(std::floor(args.r_max / args.step + 0.5)) + 1;
    bool precision_warning = false;
    std::ostringstream csv;
    csv << "r,value\n";
    for (int i = 0; i < n_points; ++i) {
        const double r = i * args.step;
        const WignerValue w = wigner_diagonal(object, r);
        precision_warning = precision_warning || w.precision_warning;
        csv << sig12(r) << "," << sig12(w.value) << "\n";
    }

    const fs::path dir(global.out_dir);
    fs::create_directories(dir);
    write_file(dir / "wigner_profile.csv", csv.str());

    const WignerValue origin = wigner_diagonal(object, 0.0);
    summary["object"] = object_name;
    summary["w0"] = origin.value;
    summary["negative_at_origin"] = origin.value < 0.0;
    summary["precision_warning"] = precision_warning || origin.precision_warning;
    write_file(dir / "wigner_summary.json", summary.dump(2) + "\n");

    nlohmann::json manifest;
    manifest["command"] = "wigner";
    manifest["parameters"] = {{"detector", detector_to_json(model)},
                              {"outcome", label},
                              {"r_max", args.r_max},
                              {"step", args.step}};
    if (args.lambda.has_value()) {
        manifest["parameters"]["lambda"] = *args.lambda;
    }
    manifest["cutoff"] = cutoff_json(cutoff);
    manifest["methods"] = {{"wigner", "series"}};
    write_manifest(dir, manifest, {"wigner_profile.csv", "wigner_summary.json"}, out);
}

// -------------------------------------------------------------- herald ----

struct HeraldArgs {
    std::vector<std::string> kinds{"apd", "tmd"};
    double eta = 0.9;
    double reflectivity = 0.5;
    double lambda_min = 0.05;
    double lambda_max = 0.95;
    int lambda_steps = 19;
    std::vector<double> nus{0.0};
    std::vector<double> fidelity_targets;
    std::string branch = "auto";
};

void run_herald(const HeraldArgs& args, const GlobalOptions& global, std::ostream& out,
                std::ostream& err) {
    std::vector<DetectorModel> models;
    for (const std::string& kind_name : args.kinds) {
        DetectorModel model;
        model.kind = detector_kind_from_string(kind_name);
        model.eta = args.eta;
        model.nu = 0.0;
        model.reflectivity = args.reflectivity;
        model.validate();
        models.push_back(model);
    }
    if (models.empty()) {
        throw std::domain_error("herald: at least one detector kind is required");
    }
    const std::vector<double> lambdas =
        linspace(args.lambda_min, args.lambda_max, args.lambda_steps);
    for (double lambda : lambdas) {
        if (!(lambda >= 0.0 && lambda < 1.0)) {
            throw std::domain_error("herald: lambda grid must stay within [0,1)");
        }
    }
    if (args.nus.empty()) {
        throw std::domain_error("herald: --nus needs at least one value");
    }

    const FockCutoff cutoff =
        resolve_cutoff(global.cutoff_spec, FockCutoff::for_twin_beam(args.lambda_max));
    const std::vector<SweepRow> rows = sweep(models, lambdas, args.nus, cutoff);

    std::ostringstream csv;
    csv << "lambda,eta,nu,detector,outcome,fidelity_series,fidelity_closed,"
           "rate_series,rate_closed\n";
    for (const SweepRow& row : rows) {
        csv << sig12(row.lambda) << "," << sig12(row.eta) << "," << sig12(row.nu) << ","
            << to_string(row.kind) << "," << row.outcome_label << ","
            << sig12(row.fidelity_series) << "," << sig12(row.fidelity_closed) << ","
            << sig12(row.rate_series) << "," << sig12(row.rate_closed) << "\n";
    }

    const fs::path dir(global.out_dir);
    fs::create_directories(dir);
    write_file(dir / "sweep.csv", csv.str());
    std::vector<std::string> outputs{"sweep.csv"};

    if (!args.fidelity_targets.empty()) {
        FidelityBranch branch = FidelityBranch::Auto;
        if (args.branch == "decreasing") {
            branch = FidelityBranch::Decreasing;
        } else if (args.branch != "auto") {
            throw std::domain_error("herald: --branch must be auto or decreasing");
        }
        for (const DetectorModel& base : models) {
            DetectorModel model = base;
            model.nu = args.nus.front();
            std::ostringstream targets_csv;
            targets_csv << "fidelity_target,lambda_star,rate\n";
            for (double target : args.fidelity_targets) {
                targets_csv << sig12(target) << ",";
                try {
                    const RatePoint point = rate_at_target_fidelity(model, target, branch);
                    targets_csv << sig12(point.lambda_star) << "," << sig12(point.rate);
                } catch (const std::runtime_error& e) {
                    // unreachable target: mark the row, keep going
                    targets_csv << "nan,nan";
                    err << "herald: target " << sig12(target) << " ("
                        << to_string(model.kind) << "): " << e.what() << "\n";
                }
                targets_csv << "\n";
            }
            const std::string name = "rate_at_fidelity_" + to_string(model.kind) + ".csv";
            write_file(dir / name, targets_csv.str());
            outputs.push_back(name);
        }
    }

    nlohmann::json manifest;
    manifest["command"] = "herald";
    manifest["parameters"] = {{"kinds", args.kinds},
                              {"eta", args.eta},
                              {"reflectivity", args.reflectivity},
                              {"lambda_min", args.lambda_min},
                              {"lambda_max", args.lambda_max},
                              {"lambda_steps", args.lambda_steps},
                              {"nus", args.nus},
                              {"fidelity_targets", args.fidelity_targets},
                              {"branch", args.branch}};
    manifest["cutoff"] = cutoff_json(cutoff);
    manifest["methods"] = {{"fidelity_series", "series"},
                           {"fidelity_closed", "closed_form"},
                           {"rate_series", "series"},
                           {"rate_closed", "closed_form"},
                           {"rate_at_fidelity", "closed_form where available, else series"}};
    write_manifest(dir, manifest, outputs, out);
}

// ---------------------------------------------------------------- tomo ----

struct TomoArgs {
    ModelFlags model;
    double mu_min = 0.0;
    double mu_max = 10.0;
    int probes = 101;
    long long shots = 100000;
    double sigma = 0.05;
    std::string dataset_path;
    std::string sidecar_path;
    std::vector<int> expect_labels;
    double tol = 1e-10;
    int max_iterations = 5000;
    int k_limit = 10;
};

fs::path default_sidecar_path(const fs::path& dataset_path) {
    fs::path sidecar = dataset_path;
    sidecar.replace_extension();
    sidecar += "_meta.json";
    return sidecar;
}

TomographyDataset simulate_with(const TomoArgs& args, const GlobalOptions& global) {
    const DetectorModel model = args.model.build();
    const ProbeGrid grid =
        ProbeGrid::linspaced(args.mu_min, args.mu_max, args.probes, args.shots, args.sigma);
    return simulate_dataset(model, grid, global.seed, args.model.ideal_outcomes);
}

void write_dataset_files(const TomographyDataset& dataset, const fs::path& dir,
                         std::vector<std::string>& outputs) {
    write_file(dir / "dataset.csv", dataset_to_csv(dataset));
    write_file(dir / "dataset_meta.json", dataset_sidecar_json(dataset).dump(2) + "\n");
    outputs.push_back("dataset.csv");
    outputs.push_back("dataset_meta.json");
}

ReconstructionResult reconstruct_with(const TomographyDataset& dataset,
                                      const TomoArgs& args, const GlobalOptions& global,
                                      FockCutoff& cutoff_used) {
    const FockCutoff automatic = FockCutoff::for_probe(dataset.grid.mu_max());
    cutoff_used = resolve_cutoff(global.cutoff_spec, automatic);
    ReconstructionOptions options;
    options.tol_per_datum = args.tol;
    options.max_iterations = args.max_iterations;
    return ml_reconstruct(dataset, cutoff_used, options);
}

void write_reconstruction_files(const ReconstructionResult& result, const fs::path& dir,
                                std::vector<std::string>& outputs, std::ostream& err) {
    write_file(dir / "reconstructed_povm.json",
               povm_to_json(result.povm).dump(2) + "\n");
    write_file(dir / "run_log.json", run_log_json(result).dump(2) + "\n");
    outputs.push_back("reconstructed_povm.json");
    outputs.push_back("run_log.json");
    if (result.probability_clamped) {
        err << "warning: a zero-probability outcome was observed; its probability was "
               "clamped (see run_log.json)\n";
    }
    if (!result.converged) {
        err << "warning: reconstruction stopped at the iteration limit before the "
               "log-likelihood gain fell below tolerance\n";
    }
}

nlohmann::json tomo_manifest(const std::string& subcommand, const TomoArgs& args,
                             const GlobalOptions& global) {
    nlohmann::json manifest;
    manifest["command"] = "tomo " + subcommand;
    manifest["seed"] = global.seed;
    manifest["parameters"] = {{"mu_min", args.mu_min},       {"mu_max", args.mu_max},
                              {"probes", args.probes},       {"shots", args.shots},
                              {"sigma", args.sigma},         {"tol", args.tol},
                              {"max_iterations", args.max_iterations},
                              {"k_limit", args.k_limit}};
    manifest["methods"] = {{"simulation", "coherent closed form"},
                           {"reconstruction", "series"}};
    return manifest;
}

void run_tomo_simulate(const TomoArgs& args, const GlobalOptions& global,
                       std::ostream& out) {
    const TomographyDataset dataset = simulate_with(args, global);
    const fs::path dir(global.out_dir);
    fs::create_directories(dir);
    std::vector<std::string> outputs;
    write_dataset_files(dataset, dir, outputs);

    nlohmann::json manifest = tomo_manifest("simulate", args, global);
    manifest["parameters"]["detector"] = detector_to_json(args.model.build());
    write_manifest(dir, manifest, outputs, out);
}

void run_tomo_reconstruct(const TomoArgs& args, const GlobalOptions& global,
                          std::ostream& out, std::ostream& err) {
    if (args.dataset_path.empty()) {
        throw std::domain_error("tomo reconstruct: --dataset is required");
    }
    const fs::path dataset_path(args.dataset_path);
    const fs::path sidecar_path = args.sidecar_path.empty()
                                      ? default_sidecar_path(dataset_path)
                                      : fs::path(args.sidecar_path);
    const nlohmann::json sidecar = nlohmann::json::parse(read_file(sidecar_path));
    const TomographyDataset dataset = dataset_from_csv(read_file(dataset_path), sidecar);
    if (!args.expect_labels.empty() && args.expect_labels != dataset.outcome_labels) {
        throw std::invalid_argument(
            "tomo reconstruct: --labels do not match the dataset sidecar labels");
    }

    FockCutoff cutoff_used = FockCutoff::fixed(1);
    const ReconstructionResult result = reconstruct_with(dataset, args, global, cutoff_used);

    const fs::path dir(global.out_dir);
    fs::create_directories(dir);
    std::vector<std::string> outputs;
    write_reconstruction_files(result, dir, outputs, err);

    nlohmann::json manifest = tomo_manifest("reconstruct", args, global);
    manifest["parameters"]["dataset"] = dataset_path.string();
    manifest["cutoff"] = cutoff_json(cutoff_used);
    write_manifest(dir, manifest, outputs, out);
}

void run_tomo_roundtrip(const TomoArgs& args, const GlobalOptions& global,
                        std::ostream& out, std::ostream& err) {
    const DetectorModel model = args.model.build();
    const TomographyDataset dataset = simulate_with(args, global);

    const fs::path dir(global.out_dir);
    fs::create_directories(dir);
    std::vector<std::string> outputs;
    write_dataset_files(dataset, dir, outputs);

    FockCutoff cutoff_used = FockCutoff::fixed(1);
    const ReconstructionResult result = reconstruct_with(dataset, args, global, cutoff_used);
    write_reconstruction_files(result, dir, outputs, err);

    const Povm truth = make_povm(model, cutoff_used, args.model.ideal_outcomes);
    write_file(dir / "true_povm.json", povm_to_json(truth, model).dump(2) + "\n");
    outputs.push_back("true_povm.json");

    const PovmComparison comparison = compare_povm(truth, result.povm, args.k_limit);
    nlohmann::json compare_json;
    compare_json["k_limit"] = args.k_limit;
    compare_json["max_abs_difference"] = comparison.max_abs_difference;
    compare_json["l1_per_outcome"] = comparison.l1_per_outcome;
    write_file(dir / "compare.json", compare_json.dump(2) + "\n");
    outputs.push_back("compare.json");

    nlohmann::json manifest = tomo_manifest("roundtrip", args, global);
    manifest["parameters"]["detector"] = detector_to_json(model);
    manifest["cutoff"] = cutoff_json(cutoff_used);
    write_manifest(dir, manifest, outputs, out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"photon counter models, heralded single-photon metrics and detector "
                 "tomography"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--out", global.out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", global.seed, "random seed for synthetic data")
        ->capture_default_str();
    app.add_option("--cutoff", global.cutoff_spec,
                   "Fock cutoff: 'auto' or an explicit k_max")
        ->capture_default_str();
    app.set_config("--config", "",
                   "key=value configuration file; command-line flags take precedence");
    app.allow_config_extras(CLI::config_extras_mode::error);

    PovmArgs povm_args;
    CLI::App* povm_cmd =
        app.add_subcommand("povm", "write a detector POVM as JSON plus a coefficient table");
    povm_cmd->fallthrough();
    add_model_flags(povm_cmd, povm_args.model);

    WignerArgs wigner_args;
    CLI::App* wigner_cmd = app.add_subcommand(
        "wigner", "radial Wigner profile of a POVM element or a heralded state");
    wigner_cmd->fallthrough();
    add_model_flags(wigner_cmd, wigner_args.model);
    wigner_cmd->add_option("--outcome", wigner_args.outcome, "outcome label (or off/on)")
        ->capture_default_str();
    wigner_cmd->add_option("--lambda", wigner_args.lambda,
                           "profile the state heralded at this pump parameter instead of "
                           "the POVM element");
    wigner_cmd->add_option("--r-max", wigner_args.r_max, "largest radius sampled")
        ->capture_default_str();
    wigner_cmd->add_option("--step", wigner_args.step, "radial sampling step")
        ->capture_default_str();

    HeraldArgs herald_args;
    CLI::App* herald_cmd = app.add_subcommand(
        "herald", "fidelity/rate sweep over the pump parameter, plus rate-at-fidelity "
                  "tables");
    herald_cmd->fallthrough();
    herald_cmd->add_option("--kinds", herald_args.kinds, "detector kinds to sweep")
        ->delimiter(',')
        ->capture_default_str();
    herald_cmd->add_option("--eta", herald_args.eta, "quantum efficiency, in [0,1]")
        ->capture_default_str();
    herald_cmd
        ->add_option("--r", herald_args.reflectivity,
                     "two-bin splitter reflectivity, in (0,1)")
        ->capture_default_str();
    herald_cmd->add_option("--lambda-min", herald_args.lambda_min, "grid start")
        ->capture_default_str();
    herald_cmd->add_option("--lambda-max", herald_args.lambda_max, "grid end")
        ->capture_default_str();
    herald_cmd->add_option("--lambda-steps", herald_args.lambda_steps, "grid points")
        ->capture_default_str();
    herald_cmd->add_option("--nus", herald_args.nus, "dark count levels to sweep")
        ->delimiter(',')
        ->capture_default_str();
    herald_cmd
        ->add_option("--fidelity-targets", herald_args.fidelity_targets,
                     "emit rate_at_fidelity_<kind>.csv for these targets")
        ->delimiter(',');
    herald_cmd
        ->add_option("--branch", herald_args.branch,
                     "fidelity inversion branch: auto or decreasing")
        ->capture_default_str();

    TomoArgs tomo_args;
    CLI::App* tomo_cmd = app.add_subcommand(
        "tomo", "synthetic coherent-probe datasets and maximum-likelihood reconstruction");
    tomo_cmd->fallthrough();
    tomo_cmd->require_subcommand(1);

    CLI::App* tomo_sim = tomo_cmd->add_subcommand("simulate", "write a synthetic dataset");
    CLI::App* tomo_rec =
        tomo_cmd->add_subcommand("reconstruct", "reconstruct a POVM from a dataset");
    CLI::App* tomo_round = tomo_cmd->add_subcommand(
        "roundtrip", "simulate, reconstruct and compare against the generating model");
    for (CLI::App* sub : {tomo_sim, tomo_rec, tomo_round}) {
        sub->fallthrough();
    }
    for (CLI::App* sub : {tomo_sim, tomo_round}) {
        add_model_flags(sub, tomo_args.model);
        sub->add_option("--mu-min", tomo_args.mu_min, "smallest probe mean photon number")
            ->capture_default_str();
        sub->add_option("--mu-max", tomo_args.mu_max, "largest probe mean photon number")
            ->capture_default_str();
        sub->add_option("--probes", tomo_args.probes, "number of probe settings")
            ->capture_default_str();
        sub->add_option("--shots", tomo_args.shots, "shots per probe")
            ->capture_default_str();
        sub->add_option("--sigma", tomo_args.sigma,
                        "relative amplitude calibration error (per probe batch)")
            ->capture_default_str();
    }
    tomo_rec->add_option("--dataset", tomo_args.dataset_path, "dataset CSV path");
    tomo_rec->add_option("--sidecar", tomo_args.sidecar_path,
                         "sidecar JSON path (default: <dataset>_meta.json)");
    tomo_rec
        ->add_option("--labels", tomo_args.expect_labels,
                     "expected outcome labels; mismatch with the sidecar is an error")
        ->delimiter(',');
    for (CLI::App* sub : {tomo_rec, tomo_round}) {
        sub->add_option("--tol", tomo_args.tol, "log-likelihood gain per shot at which "
                                                "iteration stops")
            ->capture_default_str();
        sub->add_option("--max-iter", tomo_args.max_iterations, "iteration cap")
            ->capture_default_str();
        sub->add_option("--k-limit", tomo_args.k_limit,
                        "largest photon number in comparison reports")
            ->capture_default_str();
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (povm_cmd->parsed()) {
            run_povm(povm_args, global, out);
        } else if (wigner_cmd->parsed()) {
            run_wigner(wigner_args, global, out);
        } else if (herald_cmd->parsed()) {
            run_herald(herald_args, global, out, err);
        } else if (tomo_cmd->parsed()) {
            if (tomo_sim->parsed()) {
                run_tomo_simulate(tomo_args, global, out);
            } else if (tomo_rec->parsed()) {
                run_tomo_reconstruct(tomo_args, global, out, err);
            } else {
                run_tomo_roundtrip(tomo_args, global, out, err);
            }
        }
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

}  // namespace heraldkit::cli
