#include "heteroseir/study.hpp"

#include "heteroseir/integrate.hpp"
#include "heteroseir/prediction.hpp"
#include "heteroseir/svg.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

namespace heteroseir {

using nlohmann::json;

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t s = base;
    splitmix64(s);
    s ^= 0x9e3779b97f4a7c15ULL * (a + 1);
    splitmix64(s);
    s ^= 0xc2b2ae3d27d4eb4fULL * (b + 1);
    splitmix64(s);
    s ^= 0x165667b19e3779f9ULL * (c + 1);
    return splitmix64(s);
}

void parallel_for(int n, int n_threads, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    int workers = n_threads > 0 ? n_threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

ModelParams StudyConfig::truth_params(double nu, double c1) const {
    ModelParams p;
    p.r0 = r0;
    p.nu = nu;
    p.rho = rho;
    p.delta = delta;
    p.gamma = gamma;
    p.n_pop = n_pop;
    p.npi = NpiSchedule{t0, t1, c1};
    return p;
}

void StudyConfig::apply_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("StudyConfig: cannot open " + path);
    json j;
    in >> j;
    n_replicates = j.value("n_replicates", n_replicates);
    full = j.value("full", full);
    rng_seed = j.value("rng_seed", rng_seed);
    threads = j.value("threads", threads);
    out_dir = j.value("out_dir", out_dir);
    r0 = j.value("r0", r0);
    nu_het = j.value("nu_het", nu_het);
    t0 = j.value("t0", t0);
    t1 = j.value("t1", t1);
    c1_npi = j.value("c1_npi", c1_npi);
    rho = j.value("rho", rho);
    delta = j.value("delta", delta);
    gamma = j.value("gamma", gamma);
    n_pop = j.value("n_pop", n_pop);
    i0_focal = j.value("i0_focal", i0_focal);
    i0_auxiliary = j.value("i0_auxiliary", i0_auxiliary);
    horizon = j.value("horizon", horizon);
    fit_from = j.value("fit_from", fit_from);
    fit_to = j.value("fit_to", fit_to);
    if (j.contains("sweep_c1")) sweep_c1 = j.at("sweep_c1").get<std::vector<double>>();
    if (j.contains("sweep_aux_i0")) sweep_aux_i0 = j.at("sweep_aux_i0").get<std::vector<double>>();
    sweep_mode = j.value("sweep_mode", sweep_mode);
    if (j.contains("profile")) {
        const auto& p = j.at("profile");
        profile.n_points = p.value("n_points", profile.n_points);
        profile.span_se = p.value("span_se", profile.span_se);
        profile.refine_points = p.value("refine_points", profile.refine_points);
    }
}

StudyConfig StudyConfig::from_json_file(const std::string& path) {
    StudyConfig config;
    config.apply_json_file(path);
    return config;
}

namespace {

double vec_mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (const double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double vec_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = vec_mean(v);
    double s = 0.0;
    for (const double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double vec_quantile(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double vec_median(const std::vector<double>& v) { return vec_quantile(v, 0.5); }

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) return 0.0;
    const double ma = vec_mean(a), mb = vec_mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (size_t k = 0; k < a.size(); ++k) {
        sab += (a[k] - ma) * (b[k] - mb);
        saa += (a[k] - ma) * (a[k] - ma);
        sbb += (b[k] - mb) * (b[k] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

Eigen::MatrixXd median_correlation_matrix(const std::vector<FitResult>& fits, size_t p) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p),
                                                static_cast<Eigen::Index>(p));
    for (size_t i = 0; i < p; ++i) {
        for (size_t j = 0; j < p; ++j) {
            std::vector<double> entries;
            for (const auto& fit : fits) {
                if (!fit.converged || fit.correlation.rows() != static_cast<Eigen::Index>(p)) continue;
                entries.push_back(fit.correlation(static_cast<Eigen::Index>(i),
                                                  static_cast<Eigen::Index>(j)));
            }
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                entries.empty() ? 0.0 : vec_median(entries);
        }
    }
    return out;
}

Eigen::MatrixXd estimate_correlation_matrix(const std::vector<FitResult>& fits, size_t p) {
    std::vector<std::vector<double>> cols(p);
    for (const auto& fit : fits) {
        if (!fit.converged || fit.mle.size() != p) continue;
        for (size_t k = 0; k < p; ++k) cols[k].push_back(fit.mle[k]);
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p),
                                                    static_cast<Eigen::Index>(p));
    for (size_t i = 0; i < p; ++i) {
        for (size_t j = 0; j < p; ++j) {
            if (i != j) {
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    pearson(cols[i], cols[j]);
            }
        }
    }
    return out;
}

void check_failure_rate(const std::string& label, int n_failed, int n_total) {
    if (n_failed > 0) {
        std::cerr << "[study] " << label << ": " << n_failed << "/" << n_total
                  << " replicates failed to converge\n";
    }
    if (5 * n_failed > n_total) {
        throw std::runtime_error("study aborted: more than 20% of replicates failed in " + label);
    }
}

struct CellDef {
    const char* case_name;
    int scenario;  // index into the four generating scenarios
    bool heterogeneous;
    bool with_npi;
};

constexpr CellDef kBaselineCells[] = {
    {"I(a)(i)", 0, true, false},   {"I(a)(i)", 0, false, false},
    {"I(a)(ii)", 0, true, true},   {"I(a)(ii)", 0, false, true},
    {"I(b)", 1, true, true},       {"I(b)", 1, false, true},
    {"II(a)(i)", 2, true, false},  {"II(a)(i)", 2, false, false},
    {"II(a)(ii)", 2, true, true},  {"II(a)(ii)", 2, false, true},
    {"II(b)", 3, true, true},      {"II(b)", 3, false, true},
};

void summarise_cell(BaselineCell& cell, double truth_nu) {
    (void)truth_nu;
    const size_t p = cell.spec.free_params.size();
    cell.n_total = static_cast<int>(cell.fits.size());
    cell.n_converged = 0;
    std::vector<std::vector<double>> values(p);
    std::vector<double> aics;
    for (const auto& fit : cell.fits) {
        if (!fit.converged) continue;
        ++cell.n_converged;
        aics.push_back(fit.aic);
        for (size_t k = 0; k < p; ++k) values[k].push_back(fit.mle[k]);
    }
    cell.aic_mean = vec_mean(aics);
    cell.stats.clear();
    for (size_t k = 0; k < p; ++k) {
        ParamStats st;
        st.param = cell.spec.free_params[k];
        st.mean = vec_mean(values[k]);
        st.lo = vec_quantile(values[k], 0.025);
        st.hi = vec_quantile(values[k], 0.975);
        cell.stats.push_back(st);
    }
    cell.median_correlation = median_correlation_matrix(cell.fits, p);
    cell.estimate_correlation = estimate_correlation_matrix(cell.fits, p);
}

}  // namespace

const BaselineCell* BaselineSummary::find_cell(const std::string& case_name,
                                               const std::string& spec_name) const noexcept {
    for (const auto& c : cells) {
        if (c.case_name == case_name && c.spec_name == spec_name) return &c;
    }
    return nullptr;
}

const BaselineCell& BaselineSummary::cell(const std::string& case_name,
                                          const std::string& spec_name) const {
    const BaselineCell* c = find_cell(case_name, spec_name);
    if (!c) throw std::out_of_range("BaselineSummary: no cell " + case_name + "/" + spec_name);
    return *c;
}

BaselineSummary run_baseline_study(const StudyConfig& config) {
    const int n_reps = config.effective_replicates();

    // Four generating scenarios; (i)- and (ii)-type fits share datasets.
    const std::array<ModelParams, 4> truths = {
        config.truth_params(0.0, 1.0),           // I(a)
        config.truth_params(0.0, config.c1_npi),  // I(b)
        config.truth_params(config.nu_het, 1.0),  // II(a)
        config.truth_params(config.nu_het, config.c1_npi),  // II(b)
    };

    BaselineSummary summary;
    summary.cells.resize(std::size(kBaselineCells));
    for (size_t c = 0; c < std::size(kBaselineCells); ++c) {
        const CellDef& def = kBaselineCells[c];
        auto& cell = summary.cells[c];
        cell.case_name = def.case_name;
        cell.spec_name = def.heterogeneous ? "heterogeneous" : "homogeneous";
        const ModelParams& truth = truths[static_cast<size_t>(def.scenario)];
        if (def.heterogeneous && def.with_npi) {
            cell.spec = FitSpec::heterogeneous_npi(truth, {config.i0_focal});
        } else if (def.heterogeneous) {
            cell.spec = FitSpec::heterogeneous_no_npi(truth, {config.i0_focal});
        } else if (def.with_npi) {
            cell.spec = FitSpec::homogeneous_npi(truth, {config.i0_focal});
        } else {
            cell.spec = FitSpec::homogeneous_no_npi(truth, {config.i0_focal});
        }
        cell.spec.fit_from = config.fit_from;
        cell.spec.fit_to = config.fit_to;
        cell.fits.resize(static_cast<size_t>(n_reps));
    }

    for (int scenario = 0; scenario < 4; ++scenario) {
        Scenario sc;
        sc.params = truths[static_cast<size_t>(scenario)];
        sc.i0_focal = config.i0_focal;
        sc.horizon = config.horizon;
        sc.n_replicates = n_reps;
        sc.rng_seed = derive_seed(config.rng_seed, 1, static_cast<std::uint64_t>(scenario));
        const auto datasets = generate_scenario(sc);

        std::vector<size_t> cell_indices;
        for (size_t c = 0; c < std::size(kBaselineCells); ++c) {
            if (kBaselineCells[c].scenario == scenario) cell_indices.push_back(c);
        }

        parallel_for(n_reps, config.threads, [&](int rep) {
            for (const size_t c : cell_indices) {
                auto& cell = summary.cells[c];
                FitOptions opts;
                opts.rng_seed = derive_seed(sc.rng_seed, 2, static_cast<std::uint64_t>(rep), c);
                cell.fits[static_cast<size_t>(rep)] =
                    fit_mle(datasets[static_cast<size_t>(rep)], cell.spec, opts);
            }
        });
    }

    for (size_t c = 0; c < std::size(kBaselineCells); ++c) {
        auto& cell = summary.cells[c];
        summarise_cell(cell, truths[static_cast<size_t>(kBaselineCells[c].scenario)].nu);
        check_failure_rate(cell.case_name + " " + cell.spec_name,
                           cell.n_total - cell.n_converged, cell.n_total);
    }
    return summary;
}

namespace {

constexpr std::array<ParamId, 4> kThetaB = {ParamId::R0, ParamId::Nu, ParamId::T0, ParamId::C1};
constexpr int kProfileCurveKeep = 3;  // replicates whose full curves are retained

void summarise_design(DesignStats& d, const std::vector<double>& truth_values) {
    const size_t p = d.params.size();
    d.n_total = static_cast<int>(d.fits.size());
    d.n_converged = 0;
    std::vector<std::vector<double>> values(p);
    std::vector<std::vector<double>> widths(p);
    std::vector<int> covered(p, 0), with_ci(p, 0);
    d.kappas.clear();
    for (size_t r = 0; r < d.fits.size(); ++r) {
        const auto& fit = d.fits[r];
        if (!fit.converged) continue;
        ++d.n_converged;
        for (size_t k = 0; k < p; ++k) values[k].push_back(fit.mle[k]);
        if (fit.hessian_pd) d.kappas.push_back(fit.condition_number);
        for (size_t k = 0; k < p; ++k) {
            const ProfileCi& ci = d.profile_cis[r][k];
            ++with_ci[k];
            if (ci.covers(truth_values[k])) ++covered[k];
            if (!ci.lower_open && !ci.upper_open) widths[k].push_back(ci.width());
        }
    }
    d.est_mean.clear();
    d.est_sd.clear();
    d.ci_width_mean.clear();
    d.coverage.clear();
    d.rel_bias_pct.clear();
    for (size_t k = 0; k < p; ++k) {
        d.est_mean.push_back(vec_mean(values[k]));
        d.est_sd.push_back(vec_sd(values[k]));
        d.ci_width_mean.push_back(vec_mean(widths[k]));
        d.coverage.push_back(with_ci[k] > 0 ? static_cast<double>(covered[k]) / with_ci[k] : 0.0);
        d.rel_bias_pct.push_back(truth_values[k] != 0.0
                                     ? (d.est_mean[k] - truth_values[k]) / truth_values[k] * 100.0
                                     : 0.0);
    }
    d.median_correlation = median_correlation_matrix(d.fits, p);
}

}  // namespace

TwoEpidemicSummary run_two_epidemic_study(const StudyConfig& config) {
    const int n_reps = config.effective_replicates();
    const ModelParams truth = config.truth_params(config.nu_het, config.c1_npi);
    const std::vector<double> truth_values = {config.r0, config.nu_het, config.t0, config.c1_npi};

    Scenario sc;
    sc.params = truth;
    sc.i0_focal = config.i0_focal;
    sc.i0_auxiliary = config.i0_auxiliary;
    sc.horizon = config.horizon;
    sc.n_replicates = n_reps;
    sc.rng_seed = derive_seed(config.rng_seed, 10);
    const auto datasets = generate_scenario(sc);

    TwoEpidemicSummary summary;
    for (DesignStats* d : {&summary.single_design, &summary.two_design}) {
        d->params.assign(kThetaB.begin(), kThetaB.end());
        d->fits.resize(static_cast<size_t>(n_reps));
        d->profile_cis.resize(static_cast<size_t>(n_reps));
        d->sample_curves.resize(std::min(n_reps, kProfileCurveKeep));
    }
    summary.single_design.design = "single";
    summary.two_design.design = "two";

    const FitSpec spec_single = [&] {
        FitSpec s = FitSpec::heterogeneous_npi(truth, {config.i0_focal});
        s.fit_from = config.fit_from;
        s.fit_to = config.fit_to;
        return s;
    }();
    const FitSpec spec_two = [&] {
        FitSpec s = FitSpec::heterogeneous_npi(truth, {config.i0_focal, config.i0_auxiliary});
        s.fit_from = config.fit_from;
        s.fit_to = config.fit_to;
        return s;
    }();

    parallel_for(n_reps, config.threads, [&](int rep) {
        const auto& pair = datasets[static_cast<size_t>(rep)];
        const std::vector<IncidenceDataset> focal_only = {pair[0]};

        for (int design = 0; design < 2; ++design) {
            DesignStats& d = design == 0 ? summary.single_design : summary.two_design;
            const FitSpec& spec = design == 0 ? spec_single : spec_two;
            const auto& data = design == 0 ? focal_only : pair;

            FitOptions opts;
            opts.rng_seed = derive_seed(sc.rng_seed, 20 + static_cast<std::uint64_t>(design),
                                        static_cast<std::uint64_t>(rep));
            FitResult fit = fit_mle(data, spec, opts);

            std::array<ProfileCi, 4> cis{};
            if (fit.converged) {
                for (size_t k = 0; k < kThetaB.size(); ++k) {
                    ProfileResult pr = profiled_ci(kThetaB[k], data, spec, fit, config.profile);
                    cis[k] = pr.ci;
                    if (rep < kProfileCurveKeep) {
                        d.sample_curves[static_cast<size_t>(rep)][k] = std::move(pr.curve);
                    }
                }
            }
            d.profile_cis[static_cast<size_t>(rep)] = cis;
            d.fits[static_cast<size_t>(rep)] = std::move(fit);
        }
    });

    summarise_design(summary.single_design, truth_values);
    summarise_design(summary.two_design, truth_values);
    check_failure_rate("two-epidemic study (single design)",
                       summary.single_design.n_total - summary.single_design.n_converged,
                       summary.single_design.n_total);
    check_failure_rate("two-epidemic study (two design)",
                       summary.two_design.n_total - summary.two_design.n_converged,
                       summary.two_design.n_total);

    summary.width_reduction.clear();
    for (size_t k = 0; k < kThetaB.size(); ++k) {
        const double ws = summary.single_design.ci_width_mean[k];
        const double wt = summary.two_design.ci_width_mean[k];
        summary.width_reduction.push_back(ws > 0.0 ? 1.0 - wt / ws : 0.0);
    }
    return summary;
}

SweepSummary run_seed_sweep(const StudyConfig& config) {
    const int n_reps = config.effective_replicates();
    const bool two_mode = config.sweep_mode != "single";

    SweepSummary summary;
    summary.mode = two_mode ? "two" : "single";

    const std::vector<std::pair<ParamId, ParamId>> pairs = {
        {ParamId::R0, ParamId::Nu}, {ParamId::R0, ParamId::T0}, {ParamId::R0, ParamId::C1},
        {ParamId::Nu, ParamId::T0}, {ParamId::Nu, ParamId::C1}, {ParamId::T0, ParamId::C1},
    };

    std::uint64_t cell_index = 0;
    for (const double c1 : config.sweep_c1) {
        for (const double seed_value : config.sweep_aux_i0) {
            const ModelParams truth = config.truth_params(config.nu_het, c1);
            Scenario sc;
            sc.params = truth;
            sc.horizon = config.horizon;
            sc.n_replicates = n_reps;
            sc.rng_seed = derive_seed(config.rng_seed, 30, cell_index);
            if (two_mode) {
                sc.i0_focal = config.i0_focal;
                sc.i0_auxiliary = seed_value;
            } else {
                sc.i0_focal = seed_value;
            }
            const auto datasets = generate_scenario(sc);

            FitSpec spec = two_mode
                               ? FitSpec::heterogeneous_npi(truth, {sc.i0_focal, seed_value})
                               : FitSpec::heterogeneous_npi(truth, {seed_value});
            spec.fit_from = config.fit_from;
            spec.fit_to = config.fit_to;

            std::vector<FitResult> fits(static_cast<size_t>(n_reps));
            parallel_for(n_reps, config.threads, [&](int rep) {
                FitOptions opts;
                opts.rng_seed = derive_seed(sc.rng_seed, 40, static_cast<std::uint64_t>(rep));
                fits[static_cast<size_t>(rep)] =
                    fit_mle(datasets[static_cast<size_t>(rep)], spec, opts);
            });

            SweepCell cell;
            cell.c1 = c1;
            cell.aux_i0 = seed_value;
            cell.coinciding = two_mode && seed_value == config.i0_focal;
            cell.n_total = n_reps;
            cell.pairs = pairs;
            cell.corr_values.resize(pairs.size());
            for (const auto& fit : fits) {
                if (!fit.converged || fit.correlation.rows() != 4) continue;
                ++cell.n_converged;
                for (size_t q = 0; q < pairs.size(); ++q) {
                    const int i = fit.index_of(pairs[q].first);
                    const int j = fit.index_of(pairs[q].second);
                    cell.corr_values[q].push_back(fit.correlation(i, j));
                }
            }
            check_failure_rate("seed sweep c1=" + std::to_string(c1) + " i0=" +
                                   std::to_string(seed_value),
                               cell.n_total - cell.n_converged, cell.n_total);
            summary.cells.push_back(std::move(cell));
            ++cell_index;
        }
    }
    return summary;
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

namespace {

std::string sanitize(const std::string& name) {
    std::string out;
    for (const char ch : name) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            out += ch;
        } else if (!out.empty() && out.back() != '_') {
            out += '_';
        }
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out;
}

bool wants(const std::vector<std::string>& formats, const std::string& f) {
    return formats.empty() || std::find(formats.begin(), formats.end(), f) != formats.end();
}

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_file(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_reports: cannot open " + path.string());
    return out;
}

void emit_baseline(const StudySummary& summary, const std::vector<std::string>& formats,
                   const std::filesystem::path& dir) {
    const BaselineSummary& base = *summary.baseline;
    const StudyConfig& config = summary.config;

    if (wants(formats, "csv")) {
        auto out = open_file(dir / "baseline_summary.csv");
        out << "case,spec,n_converged,n_total,r0_mean,r0_lo,r0_hi,nu_mean,nu_lo,nu_hi,"
               "t0_mean,t0_lo,t0_hi,c1_mean,c1_lo,c1_hi,aic_mean\n";
        for (const auto& cell : base.cells) {
            out << cell.case_name << ',' << cell.spec_name << ',' << cell.n_converged << ','
                << cell.n_total;
            for (const ParamId id : kThetaB) {
                const ParamStats* st = nullptr;
                for (const auto& s : cell.stats) {
                    if (s.param == id) st = &s;
                }
                if (st) {
                    out << ',' << num(st->mean) << ',' << num(st->lo) << ',' << num(st->hi);
                } else {
                    out << ",NA,NA,NA";
                }
            }
            out << ',' << num(cell.aic_mean) << '\n';
        }

        auto corr = open_file(dir / "baseline_correlations.csv");
        corr << "case,spec,kind,param_i,param_j,value\n";
        for (const auto& cell : base.cells) {
            const auto& ids = cell.spec.free_params;
            for (const char* kind : {"hessian_median", "estimate"}) {
                const Eigen::MatrixXd& m = std::string(kind) == "hessian_median"
                                               ? cell.median_correlation
                                               : cell.estimate_correlation;
                for (size_t i = 0; i < ids.size(); ++i) {
                    for (size_t j = 0; j < ids.size(); ++j) {
                        corr << cell.case_name << ',' << cell.spec_name << ',' << kind << ','
                             << param_name(ids[i]) << ',' << param_name(ids[j]) << ','
                             << num(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
                             << '\n';
                    }
                }
            }
        }
    }

    if (wants(formats, "jsonl")) {
        auto out = open_file(dir / "baseline_replicates.jsonl");
        for (const auto& cell : base.cells) {
            for (size_t r = 0; r < cell.fits.size(); ++r) {
                json line = json::parse(fit_result_json(cell.fits[r]));
                line["case"] = cell.case_name;
                line["spec_name"] = cell.spec_name;
                line["replicate"] = r;
                out << line.dump() << '\n';
            }
        }
    }

    if (wants(formats, "svg")) {
        for (const auto& cell : base.cells) {
            const std::string tag = sanitize(cell.case_name) + "_" + cell.spec_name;
            std::vector<std::string> labels;
            for (const ParamId id : cell.spec.free_params) labels.emplace_back(param_name(id));
            write_heatmap_svg(cell.median_correlation, labels,
                              "Median parameter correlations, " + cell.case_name + " " +
                                  cell.spec_name,
                              (dir / ("corr_" + tag + ".svg")).string());

            const ModelParams& truth = cell.spec.fixed;
            for (size_t k = 0; k < cell.spec.free_params.size(); ++k) {
                const ParamId id = cell.spec.free_params[k];
                std::vector<double> values;
                for (const auto& fit : cell.fits) {
                    if (fit.converged) values.push_back(fit.mle[k]);
                }
                double truth_value = 0.0;
                switch (id) {
                    case ParamId::R0: truth_value = truth.r0; break;
                    case ParamId::Nu: truth_value = truth.nu; break;
                    case ParamId::T0: truth_value = truth.npi.t0; break;
                    case ParamId::C1: truth_value = truth.npi.c1; break;
                }
                write_histogram_svg(values, truth_value, true,
                                    std::string(param_name(id)) + " estimates, " + cell.case_name +
                                        " " + cell.spec_name,
                                    (dir / ("hist_" + tag + "_" + param_name(id) + ".svg")).string());
            }
        }

        // Forecast bands for the NPI cases, replicate 0.
        for (const char* case_name_c : {"I(b)", "II(b)"}) {
            const std::string case_name(case_name_c);
            if (!base.find_cell(case_name, "heterogeneous") ||
                !base.find_cell(case_name, "homogeneous")) {
                continue;
            }
            const int scenario = case_name == "I(b)" ? 1 : 3;
            Scenario sc;
            sc.params = config.truth_params(case_name == "I(b)" ? 0.0 : config.nu_het,
                                            config.c1_npi);
            sc.i0_focal = config.i0_focal;
            sc.horizon = config.horizon;
            sc.n_replicates = 1;
            sc.rng_seed = derive_seed(config.rng_seed, 1, static_cast<std::uint64_t>(scenario));
            const auto data = generate_scenario(sc);
            std::vector<double> obs_days(data[0][0].counts.size());
            std::vector<double> obs(data[0][0].counts.size());
            for (size_t k = 0; k < obs.size(); ++k) {
                obs_days[k] = static_cast<double>(k + 1);
                obs[k] = static_cast<double>(data[0][0].counts[k]);
            }
            for (const char* spec_name_c : {"heterogeneous", "homogeneous"}) {
                const std::string spec_name(spec_name_c);
                const auto& cell = base.cell(case_name, spec_name);
                if (cell.fits.empty()) continue;
                const auto& fit = cell.fits[0];
                if (!fit.converged || !fit.hessian_pd) continue;
                RngStream rng(derive_seed(config.rng_seed, 90, static_cast<std::uint64_t>(scenario)),
                              spec_name == "heterogeneous" ? 1 : 0);
                const ForecastBands bands =
                    forecast(fit, config.i0_focal, config.fit_to, 250, 2000, rng);
                const std::string tag = sanitize(case_name) + "_" + spec_name;
                write_forecast_csv(bands, (dir / ("forecast_" + tag + ".csv")).string());
                write_band_svg(bands.times, bands.lower, bands.upper, bands.median, obs_days, obs,
                               "Forecast, " + case_name + " " + spec_name + " fit",
                               (dir / ("forecast_" + tag + ".svg")).string());
            }
        }
    }
}

void emit_two_epidemic(const StudySummary& summary, const std::vector<std::string>& formats,
                       const std::filesystem::path& dir) {
    const TwoEpidemicSummary& two = *summary.two_epidemic;

    if (wants(formats, "csv")) {
        auto out = open_file(dir / "two_epidemic_summary.csv");
        out << "param,design,n_converged,mean,sd,ci_width_mean,coverage_pct,rel_bias_pct,"
               "width_reduction_pct\n";
        for (size_t k = 0; k < two.single_design.params.size(); ++k) {
            for (const DesignStats* d : {&two.single_design, &two.two_design}) {
                out << param_name(d->params[k]) << ',' << d->design << ',' << d->n_converged << ','
                    << num(d->est_mean[k]) << ',' << num(d->est_sd[k]) << ','
                    << num(d->ci_width_mean[k]) << ',' << num(100.0 * d->coverage[k]) << ','
                    << num(d->rel_bias_pct[k]) << ','
                    << (d == &two.two_design ? num(100.0 * two.width_reduction[k]) : "NA") << '\n';
            }
        }

        auto cond = open_file(dir / "condition_numbers.csv");
        cond << "metric,single,two\n";
        const auto& ks = two.single_design.kappas;
        const auto& kt = two.two_design.kappas;
        cond << "mean," << num(vec_mean(ks)) << ',' << num(vec_mean(kt)) << '\n';
        cond << "median," << num(vec_median(ks)) << ',' << num(vec_median(kt)) << '\n';
        cond << "min," << num(ks.empty() ? 0 : *std::min_element(ks.begin(), ks.end())) << ','
             << num(kt.empty() ? 0 : *std::min_element(kt.begin(), kt.end())) << '\n';
        cond << "max," << num(ks.empty() ? 0 : *std::max_element(ks.begin(), ks.end())) << ','
             << num(kt.empty() ? 0 : *std::max_element(kt.begin(), kt.end())) << '\n';
        cond << "sd," << num(vec_sd(ks)) << ',' << num(vec_sd(kt)) << '\n';

        for (const DesignStats* d : {&two.single_design, &two.two_design}) {
            for (size_t rep = 0; rep < d->sample_curves.size(); ++rep) {
                for (size_t k = 0; k < d->params.size(); ++k) {
                    const ProfileCurve& curve = d->sample_curves[rep][k];
                    if (curve.grid.empty()) continue;
                    const std::string name = "profile_" + d->design + "_" +
                                             param_name(d->params[k]) + "_rep" +
                                             std::to_string(rep) + ".csv";
                    write_profile_csv(curve, d->profile_cis[rep][k], (dir / name).string());
                }
            }
        }
    }

    if (wants(formats, "jsonl")) {
        auto out = open_file(dir / "two_epidemic_replicates.jsonl");
        for (const DesignStats* d : {&two.single_design, &two.two_design}) {
            for (size_t r = 0; r < d->fits.size(); ++r) {
                json line = json::parse(fit_result_json(d->fits[r]));
                line["design"] = d->design;
                line["replicate"] = r;
                json cis;
                for (size_t k = 0; k < d->params.size(); ++k) {
                    const ProfileCi& ci = d->profile_cis[r][k];
                    cis[param_name(d->params[k])] = json{{"lower", ci.lower},
                                                         {"upper", ci.upper},
                                                         {"lower_open", ci.lower_open},
                                                         {"upper_open", ci.upper_open}};
                }
                line["profile_ci"] = cis;
                out << line.dump() << '\n';
            }
        }
    }

    if (wants(formats, "svg")) {
        std::vector<std::string> labels;
        for (const ParamId id : two.single_design.params) labels.emplace_back(param_name(id));
        write_heatmap_svg(two.single_design.median_correlation, labels,
                          "Median parameter correlations, single epidemic",
                          (dir / "corr_single.svg").string());
        write_heatmap_svg(two.two_design.median_correlation, labels,
                          "Median parameter correlations, two epidemics",
                          (dir / "corr_two.svg").string());

        for (size_t k = 0; k < two.single_design.params.size(); ++k) {
            if (two.single_design.sample_curves.empty() || two.two_design.sample_curves.empty()) break;
            const ProfileCurve& cs = two.single_design.sample_curves[0][k];
            const ProfileCurve& ct = two.two_design.sample_curves[0][k];
            if (cs.grid.empty() || ct.grid.empty()) continue;
            std::vector<Series> series(2);
            series[0] = {cs.grid, cs.profile_loglik, "#1f77b4", "single"};
            // Shift each curve to its own maximum so both threshold sets read
            // off one dashed line.
            const double ms = *std::max_element(cs.profile_loglik.begin(), cs.profile_loglik.end());
            const double mt = *std::max_element(ct.profile_loglik.begin(), ct.profile_loglik.end());
            for (auto& v : series[0].y) v -= ms;
            series[1] = {ct.grid, ct.profile_loglik, "#d62728", "two"};
            for (auto& v : series[1].y) v -= mt;
            write_curves_svg(series,
                             std::string("Profile likelihood, ") + param_name(two.single_design.params[k]),
                             param_name(two.single_design.params[k]), "loglik - max",
                             (dir / (std::string("profile_") + param_name(two.single_design.params[k]) +
                                     "_rep0.svg"))
                                 .string(),
                             -kChiSq95Df1 / 2.0, true, {cs.mle_value, ct.mle_value});
        }
    }
}

void emit_sweep(const StudySummary& summary, const std::vector<std::string>& formats,
                const std::filesystem::path& dir) {
    const SweepSummary& sweep = *summary.seed_sweep;

    if (wants(formats, "csv")) {
        auto out = open_file(dir / "seed_sweep_summary.csv");
        out << "mode,c1,i0,coinciding,pair,n_converged,corr_median,corr_q25,corr_q75\n";
        for (const auto& cell : sweep.cells) {
            for (size_t q = 0; q < cell.pairs.size(); ++q) {
                out << sweep.mode << ',' << num(cell.c1) << ',' << num(cell.aux_i0) << ','
                    << (cell.coinciding ? 1 : 0) << ',' << param_name(cell.pairs[q].first) << '-'
                    << param_name(cell.pairs[q].second) << ',' << cell.n_converged << ','
                    << num(vec_median(cell.corr_values[q])) << ','
                    << num(vec_quantile(cell.corr_values[q], 0.25)) << ','
                    << num(vec_quantile(cell.corr_values[q], 0.75)) << '\n';
            }
        }
    }

    if (wants(formats, "svg")) {
        // One chart per c1 level: median correlation vs auxiliary seed per pair.
        std::vector<double> c1_levels;
        for (const auto& cell : sweep.cells) {
            if (std::find(c1_levels.begin(), c1_levels.end(), cell.c1) == c1_levels.end()) {
                c1_levels.push_back(cell.c1);
            }
        }
        const std::vector<std::string> colors = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                                 "#d62728", "#9467bd", "#8c564b"};
        for (const double c1 : c1_levels) {
            std::vector<Series> series;
            for (size_t q = 0; q < 6; ++q) {
                Series s;
                s.color = colors[q % colors.size()];
                for (const auto& cell : sweep.cells) {
                    if (cell.c1 != c1 || q >= cell.pairs.size()) continue;
                    s.x.push_back(cell.aux_i0);
                    s.y.push_back(vec_median(cell.corr_values[q]));
                    s.label = std::string(param_name(cell.pairs[q].first)) + "-" +
                              param_name(cell.pairs[q].second);
                }
                if (!s.x.empty()) series.push_back(std::move(s));
            }
            char title[96];
            std::snprintf(title, sizeof(title), "Correlation medians vs auxiliary seed, c1 = %g", c1);
            char fname[64];
            std::snprintf(fname, sizeof(fname), "seed_sweep_c1_%g.svg", c1);
            write_curves_svg(series, title, "auxiliary I(0)", "median correlation",
                             (dir / fname).string());
        }
    }
}

}  // namespace

void emit_reports(const StudySummary& summary, const std::vector<std::string>& formats) {
    const std::filesystem::path dir(summary.config.out_dir);
    std::filesystem::create_directories(dir);

    if (summary.baseline) emit_baseline(summary, formats, dir);
    if (summary.two_epidemic) emit_two_epidemic(summary, formats, dir);
    if (summary.seed_sweep) emit_sweep(summary, formats, dir);

    if (!summary.baseline && !summary.two_epidemic && !summary.seed_sweep &&
        wants(formats, "csv")) {
        // Nothing ran: still leave a header-only summary so downstream
        // tooling sees the schema.
        auto out = open_file(dir / "baseline_summary.csv");
        out << "case,spec,n_converged,n_total,r0_mean,r0_lo,r0_hi,nu_mean,nu_lo,nu_hi,"
               "t0_mean,t0_lo,t0_hi,c1_mean,c1_lo,c1_hi,aic_mean\n";
    }
}

}  // namespace heteroseir
