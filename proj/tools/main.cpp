#include "heteroseir/integrate.hpp"
#include "heteroseir/likelihood.hpp"
#include "heteroseir/prediction.hpp"
#include "heteroseir/profile.hpp"
#include "heteroseir/sensitivity.hpp"
#include "heteroseir/study.hpp"
#include "heteroseir/synthesis.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace heteroseir;

namespace {

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    json j;
    in >> j;
    return j;
}

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> replicates;
    bool full = false;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required = true) {
    auto* c = cmd->add_option("--config", opts.config_path, "JSON config file");
    if (config_required) c->required();
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "override RNG seed");
    cmd->add_option("--replicates", opts.replicates, "override replicate count");
    cmd->add_flag("--full", opts.full, "run at full scale (200 replicates)");
    cmd->add_option("--threads", opts.threads, "worker threads (0 = all cores)");
}

Scenario scenario_from_config(const CommonOpts& opts) {
    // The scenario config uses the same schema as the dataset sidecar.
    Scenario sc = read_scenario_meta(opts.config_path);
    if (opts.seed) sc.rng_seed = *opts.seed;
    if (opts.replicates) sc.n_replicates = *opts.replicates;
    if (opts.full) sc.n_replicates = 200;
    return sc;
}

struct FitInputs {
    std::vector<std::vector<IncidenceDataset>> replicates;
    FitSpec spec;
    Scenario scenario;
};

FitInputs load_fit_inputs(const CommonOpts& opts) {
    const json j = load_json(opts.config_path);
    FitInputs in;

    if (j.contains("dataset_csv")) {
        const std::string meta = j.at("meta_json").get<std::string>();
        in.replicates = read_datasets_csv(j.at("dataset_csv").get<std::string>(), meta);
        in.scenario = read_scenario_meta(meta);
    } else {
        // Self-contained mode: simulate the scenario embedded in the config.
        in.scenario = read_scenario_meta(opts.config_path);
        if (opts.seed) in.scenario.rng_seed = *opts.seed;
        if (opts.replicates) in.scenario.n_replicates = *opts.replicates;
        in.replicates = generate_scenario(in.scenario);
    }

    const json spec_json = j.value("spec", json::object());
    const bool heterogeneous = spec_json.value("heterogeneous", true);
    const bool with_npi = spec_json.value("with_npi", true);
    std::vector<double> i0s{in.scenario.i0_focal};
    const bool joint = spec_json.value("two_epidemic", in.scenario.i0_auxiliary.has_value());
    if (joint && in.scenario.i0_auxiliary) i0s.push_back(*in.scenario.i0_auxiliary);

    const ModelParams& base = in.scenario.params;
    if (heterogeneous && with_npi) {
        in.spec = FitSpec::heterogeneous_npi(base, i0s);
    } else if (heterogeneous) {
        in.spec = FitSpec::heterogeneous_no_npi(base, i0s);
    } else if (with_npi) {
        in.spec = FitSpec::homogeneous_npi(base, i0s);
    } else {
        in.spec = FitSpec::homogeneous_no_npi(base, i0s);
    }
    in.spec.fit_from = j.value("fit_from", 1);
    in.spec.fit_to = j.value("fit_to", std::min(100, in.scenario.horizon));

    if (!joint) {
        for (auto& group : in.replicates) group.resize(1);
    }
    if (opts.replicates && *opts.replicates < static_cast<int>(in.replicates.size())) {
        in.replicates.resize(static_cast<size_t>(*opts.replicates));
    }
    return in;
}

std::vector<FitResult> run_fits(const FitInputs& in, const CommonOpts& opts) {
    std::vector<FitResult> fits(in.replicates.size());
    parallel_for(static_cast<int>(in.replicates.size()), opts.threads, [&](int r) {
        FitOptions fit_opts;
        fit_opts.rng_seed =
            derive_seed(opts.seed.value_or(in.scenario.rng_seed), 2, static_cast<std::uint64_t>(r));
        fits[static_cast<size_t>(r)] = fit_mle(in.replicates[static_cast<size_t>(r)], in.spec, fit_opts);
    });
    return fits;
}

int cmd_simulate(const CommonOpts& opts) {
    const Scenario sc = scenario_from_config(opts);
    const auto replicates = generate_scenario(sc);
    fs::create_directories(opts.out_dir);
    write_datasets_csv(replicates, (fs::path(opts.out_dir) / "datasets.csv").string());
    write_scenario_meta(sc, (fs::path(opts.out_dir) / "scenario.json").string());

    // A noise-free reference trajectory per epidemic for plotting.
    const Trajectory traj = integrate(sc.params, initial_state(sc.i0_focal, sc.params), sc.horizon);
    write_trajectory_csv(traj, (fs::path(opts.out_dir) / "trajectory_focal.csv").string());
    if (sc.i0_auxiliary) {
        const Trajectory aux =
            integrate(sc.params, initial_state(*sc.i0_auxiliary, sc.params), sc.horizon);
        write_trajectory_csv(aux, (fs::path(opts.out_dir) / "trajectory_auxiliary.csv").string());
    }
    std::cout << "wrote " << replicates.size() << " replicates to " << opts.out_dir << "\n";
    return 0;
}

int cmd_fit(const CommonOpts& opts) {
    const FitInputs in = load_fit_inputs(opts);
    const auto fits = run_fits(in, opts);
    fs::create_directories(opts.out_dir);
    write_fit_results_jsonl(fits, (fs::path(opts.out_dir) / "fits.jsonl").string());
    int n_ok = 0;
    for (const auto& f : fits) n_ok += f.converged ? 1 : 0;
    std::cout << "fitted " << fits.size() << " replicates (" << n_ok << " converged), results in "
              << opts.out_dir << "/fits.jsonl\n";
    return 0;
}

int cmd_profile(const CommonOpts& opts) {
    const FitInputs in = load_fit_inputs(opts);
    const json j = load_json(opts.config_path);
    std::vector<ParamId> params;
    if (j.contains("params")) {
        for (const auto& name : j.at("params")) params.push_back(param_from_name(name));
    } else {
        params = in.spec.free_params;
    }
    const auto fits = run_fits(in, opts);
    fs::create_directories(opts.out_dir);

    ProfileOptions popts;
    popts.n_points = j.value("profile_points", popts.n_points);
    for (size_t r = 0; r < in.replicates.size(); ++r) {
        if (!fits[r].converged) {
            std::cerr << "replicate " << r << " did not converge; skipping profiles\n";
            continue;
        }
        for (const ParamId id : params) {
            const ProfileResult pr = profiled_ci(id, in.replicates[r], in.spec, fits[r], popts);
            const std::string name =
                "profile_rep" + std::to_string(r) + "_" + param_name(id) + ".csv";
            write_profile_csv(pr.curve, pr.ci, (fs::path(opts.out_dir) / name).string());
        }
    }
    std::cout << "profiles written to " << opts.out_dir << "\n";
    return 0;
}

int cmd_sensitivity(const CommonOpts& opts) {
    const json j = load_json(opts.config_path);
    const Scenario sc = read_scenario_meta(opts.config_path);
    std::vector<double> i0s{sc.i0_focal};
    if (sc.i0_auxiliary) i0s.push_back(*sc.i0_auxiliary);
    const int from_day = j.value("from_day", 1);
    const int to_day = j.value("to_day", sc.horizon);

    const std::vector<ParamId> which = {ParamId::R0, ParamId::Nu, ParamId::T0, ParamId::C1};
    const auto mats = sensitivities(sc.params, i0s, from_day, to_day, which);
    fs::create_directories(opts.out_dir);
    write_sensitivity_csv(mats, (fs::path(opts.out_dir) / "sensitivity.csv").string());

    const auto nu_col = stacked_column(mats, ParamId::Nu);
    std::vector<double> strength_col = stacked_column(mats, ParamId::C1);
    for (double& v : strength_col) v = -v;  // intervention-strength direction
    std::cout << "compensation score (nu vs intervention strength): "
              << compensation_score(nu_col, strength_col) << "\n";
    std::cout << "sensitivities written to " << opts.out_dir << "/sensitivity.csv\n";
    return 0;
}

int cmd_forecast(const CommonOpts& opts) {
    const FitInputs in = load_fit_inputs(opts);
    const json j = load_json(opts.config_path);
    const size_t replicate = j.value("replicate", 0);
    if (replicate >= in.replicates.size()) throw std::runtime_error("forecast: replicate out of range");
    const int fit_days = in.spec.fit_to;
    const int total_days = j.value("total_days", 250);
    const int n_draws = j.value("n_draws", 2000);

    const auto fits = run_fits(in, opts);
    const FitResult& fit = fits[replicate];
    if (!fit.converged) throw std::runtime_error("forecast: fit did not converge");

    std::optional<double> lift;
    bool lift_at_fit_end = true;
    if (j.contains("npi_lift_day")) {
        if (j.at("npi_lift_day").is_null()) {
            lift_at_fit_end = false;
        } else {
            lift = j.at("npi_lift_day").get<double>();
        }
    }
    RngStream rng(derive_seed(opts.seed.value_or(in.scenario.rng_seed), 9, replicate));
    const ForecastBands bands = forecast(fit, in.spec.i0_per_epidemic[0], fit_days, total_days,
                                         n_draws, rng, lift, lift_at_fit_end);
    fs::create_directories(opts.out_dir);
    write_forecast_csv(bands, (fs::path(opts.out_dir) / "forecast.csv").string());
    std::cout << "forecast written to " << opts.out_dir << "/forecast.csv\n";
    return 0;
}

int cmd_study(const CommonOpts& opts, const std::vector<std::string>& studies) {
    StudyConfig config;
    if (!opts.config_path.empty()) config.apply_json_file(opts.config_path);
    if (opts.seed) config.rng_seed = *opts.seed;
    if (opts.replicates) config.n_replicates = *opts.replicates;
    if (opts.full) config.full = true;
    if (opts.threads > 0) config.threads = opts.threads;
    if (opts.out_dir != "out") config.out_dir = opts.out_dir;

    std::vector<std::string> selected = studies;
    if (selected.empty() && !opts.config_path.empty()) {
        const json j = load_json(opts.config_path);
        if (j.contains("studies")) selected = j.at("studies").get<std::vector<std::string>>();
    }
    if (selected.empty()) selected = {"baseline", "two_epidemic"};

    auto want = [&](const std::string& name) {
        return std::find(selected.begin(), selected.end(), name) != selected.end();
    };

    StudySummary summary;
    summary.config = config;
    if (want("baseline")) {
        std::cout << "running baseline study (" << config.effective_replicates() << " replicates)\n";
        summary.baseline = run_baseline_study(config);
    }
    if (want("two_epidemic")) {
        std::cout << "running two-epidemic study (" << config.effective_replicates()
                  << " replicates)\n";
        summary.two_epidemic = run_two_epidemic_study(config);
    }
    if (want("seed_sweep")) {
        std::cout << "running seed sweep (" << config.effective_replicates() << " replicates/cell)\n";
        summary.seed_sweep = run_seed_sweep(config);
    }
    emit_reports(summary);
    std::cout << "reports written to " << config.out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SEIR epidemics with gamma-distributed susceptibility: simulation, "
                 "maximum-likelihood inference and identifiability studies"};
    app.require_subcommand(1);

    CommonOpts simulate_opts, fit_opts, profile_opts, sens_opts, forecast_opts, study_opts;
    std::vector<std::string> studies;

    add_common(app.add_subcommand("simulate", "generate Poisson-noised incidence datasets"),
               simulate_opts);
    add_common(app.add_subcommand("fit", "maximum-likelihood fits for a dataset batch"), fit_opts);
    add_common(app.add_subcommand("profile", "profile-likelihood curves and CIs"), profile_opts);
    add_common(app.add_subcommand("sensitivity", "finite-difference sensitivity functions"),
               sens_opts);
    add_common(app.add_subcommand("forecast", "forecast bands from a fitted replicate"),
               forecast_opts);
    auto* study_cmd =
        app.add_subcommand("study", "full simulation studies (baseline, two-epidemic, sweep)");
    add_common(study_cmd, study_opts, /*config_required=*/false);
    study_cmd->add_option("--studies", studies,
                          "subset of {baseline,two_epidemic,seed_sweep} to run");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("simulate")) return cmd_simulate(simulate_opts);
        if (app.got_subcommand("fit")) return cmd_fit(fit_opts);
        if (app.got_subcommand("profile")) return cmd_profile(profile_opts);
        if (app.got_subcommand("sensitivity")) return cmd_sensitivity(sens_opts);
        if (app.got_subcommand("forecast")) return cmd_forecast(forecast_opts);
        if (app.got_subcommand("study")) return cmd_study(study_opts, studies);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
