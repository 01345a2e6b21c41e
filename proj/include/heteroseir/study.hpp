#ifndef HETEROSEIR_STUDY_HPP
#define HETEROSEIR_STUDY_HPP

#include "heteroseir/likelihood.hpp"
#include "heteroseir/profile.hpp"
#include "heteroseir/synthesis.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace heteroseir {

/// Settings shared by all three studies. Defaults reproduce the source
/// studies at desk scale (50 replicates); `full` switches to 200.
struct StudyConfig {
    int n_replicates = 50;
    bool full = false;
    std::uint64_t rng_seed = 20260809;
    int threads = 0;  // 0 = all hardware threads
    std::string out_dir = "out";

    // Truth / backdrop parameter values.
    double r0 = 3.0;
    double nu_het = 1.414;
    double t0 = 15.0;
    double t1 = 20.0;
    double c1_npi = 0.3;
    double rho = 0.5;
    double delta = 1.0 / 5.5;
    double gamma = 0.25;
    double n_pop = 100000.0;
    double i0_focal = 40.0;
    double i0_auxiliary = 400.0;
    int horizon = 100;
    int fit_from = 1;
    int fit_to = 100;

    ProfileOptions profile;

    // Auxiliary-seed sweep grid.
    std::vector<double> sweep_c1{0.2, 0.3, 0.4};
    std::vector<double> sweep_aux_i0{20, 40, 80, 160, 320, 400};
    std::string sweep_mode = "two";  // "two" or "single"

    int effective_replicates() const { return full ? 200 : n_replicates; }
    ModelParams truth_params(double nu, double c1) const;

    static StudyConfig from_json_file(const std::string& path);
    void apply_json_file(const std::string& path);
};

struct ParamStats {
    ParamId param = ParamId::R0;
    double mean = 0.0;
    double lo = 0.0;  // empirical 2.5% quantile across replicates
    double hi = 0.0;  // empirical 97.5% quantile
};

/// One (case, spec) cell of the baseline study.
struct BaselineCell {
    std::string case_name;  // "I(a)(i)", ..., "II(b)"
    std::string spec_name;  // "heterogeneous" or "homogeneous"
    FitSpec spec;
    int n_total = 0;
    int n_converged = 0;
    std::vector<ParamStats> stats;          // over converged replicates
    double aic_mean = 0.0;
    Eigen::MatrixXd median_correlation;     // per-entry median of Hessian correlations
    Eigen::MatrixXd estimate_correlation;   // Pearson correlation of MLEs across replicates
    std::vector<FitResult> fits;            // one per replicate
};

struct BaselineSummary {
    std::vector<BaselineCell> cells;
    const BaselineCell& cell(const std::string& case_name, const std::string& spec_name) const;
    const BaselineCell* find_cell(const std::string& case_name,
                                  const std::string& spec_name) const noexcept;
};

/// Per-design results of the single- vs two-epidemic comparison.
struct DesignStats {
    std::string design;  // "single" or "two"
    std::vector<ParamId> params;
    int n_total = 0;
    int n_converged = 0;
    std::vector<double> est_mean, est_sd;
    std::vector<double> ci_width_mean;   // profile CI widths
    std::vector<double> coverage;        // fraction of replicates covering truth
    std::vector<double> rel_bias_pct;
    std::vector<double> kappas;          // Hessian condition numbers, converged fits
    Eigen::MatrixXd median_correlation;
    std::vector<FitResult> fits;
    std::vector<std::array<ProfileCi, 4>> profile_cis;  // r0, nu, t0, c1 per replicate
    std::vector<std::array<ProfileCurve, 4>> sample_curves;  // kept for the first replicates
};

struct TwoEpidemicSummary {
    DesignStats single_design;
    DesignStats two_design;
    std::vector<double> width_reduction;  // per param: 1 - width_two / width_single
};

/// One (c1, auxiliary seed) cell of the sweep: distributions of per-replicate
/// Hessian correlations for each parameter pair.
struct SweepCell {
    double c1 = 0.0;
    double aux_i0 = 0.0;
    bool coinciding = false;  // auxiliary seed equals the focal seed
    int n_total = 0;
    int n_converged = 0;
    std::vector<std::pair<ParamId, ParamId>> pairs;
    std::vector<std::vector<double>> corr_values;  // [pair][replicate]
};

struct SweepSummary {
    std::string mode;
    std::vector<SweepCell> cells;
};

struct StudySummary {
    StudyConfig config;
    std::optional<BaselineSummary> baseline;
    std::optional<TwoEpidemicSummary> two_epidemic;
    std::optional<SweepSummary> seed_sweep;
};

/// Table 2 run: Cases I(a)(i) .. II(b), homogeneous and heterogeneous specs.
/// Per-replicate failures are logged; throws std::runtime_error if more than
/// 20% of replicates fail in any cell.
BaselineSummary run_baseline_study(const StudyConfig& config);

/// Single- vs two-epidemic comparison with profile CIs on every replicate.
TwoEpidemicSummary run_two_epidemic_study(const StudyConfig& config);

/// Correlation sweep over auxiliary seeds and intervention strengths.
SweepSummary run_seed_sweep(const StudyConfig& config);

/// Write CSV tables, JSON-lines per-replicate records and SVG plots for
/// whichever studies the summary holds. formats is any subset of
/// {"csv", "jsonl", "svg"}; empty means all.
void emit_reports(const StudySummary& summary, const std::vector<std::string>& formats = {});

/// Deterministic seed derivation used throughout the studies.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

/// Run fn(0..n-1) on a pool; results must go to index-addressed slots so the
/// outcome is independent of scheduling.
void parallel_for(int n, int n_threads, const std::function<void(int)>& fn);

}  // namespace heteroseir

#endif  // HETEROSEIR_STUDY_HPP
