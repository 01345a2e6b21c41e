#include "heteroseir/likelihood.hpp"

#include "heteroseir/integrate.hpp"
#include "heteroseir/nelder_mead.hpp"
#include "heteroseir/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace heteroseir {

using nlohmann::json;

const char* param_name(ParamId id) {
    switch (id) {
        case ParamId::R0: return "r0";
        case ParamId::Nu: return "nu";
        case ParamId::T0: return "t0";
        case ParamId::C1: return "c1";
    }
    return "?";
}

ParamId param_from_name(const std::string& name) {
    if (name == "r0") return ParamId::R0;
    if (name == "nu") return ParamId::Nu;
    if (name == "t0") return ParamId::T0;
    if (name == "c1") return ParamId::C1;
    throw std::invalid_argument("unknown parameter name: " + name);
}

FitSpec FitSpec::homogeneous_no_npi(const ModelParams& base, std::vector<double> i0s) {
    FitSpec s;
    s.free_params = {ParamId::R0};
    s.heterogeneous = false;
    s.with_npi = false;
    s.fixed = base;
    s.i0_per_epidemic = std::move(i0s);
    return s;
}

FitSpec FitSpec::heterogeneous_no_npi(const ModelParams& base, std::vector<double> i0s) {
    FitSpec s;
    s.free_params = {ParamId::R0, ParamId::Nu};
    s.heterogeneous = true;
    s.with_npi = false;
    s.fixed = base;
    s.i0_per_epidemic = std::move(i0s);
    return s;
}

FitSpec FitSpec::homogeneous_npi(const ModelParams& base, std::vector<double> i0s) {
    FitSpec s;
    s.free_params = {ParamId::R0, ParamId::T0, ParamId::C1};
    s.heterogeneous = false;
    s.with_npi = true;
    s.fixed = base;
    s.i0_per_epidemic = std::move(i0s);
    return s;
}

FitSpec FitSpec::heterogeneous_npi(const ModelParams& base, std::vector<double> i0s) {
    FitSpec s;
    s.free_params = {ParamId::R0, ParamId::Nu, ParamId::T0, ParamId::C1};
    s.heterogeneous = true;
    s.with_npi = true;
    s.fixed = base;
    s.i0_per_epidemic = std::move(i0s);
    return s;
}

void FitSpec::validate() const {
    if (free_params.empty()) throw std::invalid_argument("FitSpec: no free parameters");
    const bool has_nu = std::find(free_params.begin(), free_params.end(), ParamId::Nu) != free_params.end();
    const bool has_t0 = std::find(free_params.begin(), free_params.end(), ParamId::T0) != free_params.end();
    const bool has_c1 = std::find(free_params.begin(), free_params.end(), ParamId::C1) != free_params.end();
    if (has_nu != heterogeneous) {
        throw std::invalid_argument("FitSpec: nu must be free iff heterogeneous");
    }
    if ((has_t0 || has_c1) != with_npi || has_t0 != has_c1) {
        throw std::invalid_argument("FitSpec: t0 and c1 must both be free iff with_npi");
    }
    if (fit_from < 1 || fit_to <= fit_from) {
        throw std::invalid_argument("FitSpec: need 1 <= fit_from < fit_to");
    }
    if (i0_per_epidemic.empty() || i0_per_epidemic.size() > 2) {
        throw std::invalid_argument("FitSpec: one or two epidemics supported");
    }
}

ModelParams FitSpec::apply(std::span<const double> values) const {
    if (values.size() != free_params.size()) {
        throw std::invalid_argument("FitSpec::apply: value count mismatch");
    }
    ModelParams p = fixed;
    if (!heterogeneous) p.nu = 0.0;
    if (!with_npi) p.npi.c1 = 1.0;
    for (size_t k = 0; k < free_params.size(); ++k) {
        switch (free_params[k]) {
            case ParamId::R0: p.r0 = values[k]; break;
            case ParamId::Nu: p.nu = values[k]; break;
            case ParamId::T0: p.npi.t0 = values[k]; break;
            case ParamId::C1: p.npi.c1 = values[k]; break;
        }
    }
    return p;
}

double poisson_loglik(std::span<const long> observed, std::span<const double> expected) {
    if (observed.size() != expected.size()) {
        throw std::invalid_argument("poisson_loglik: length mismatch");
    }
    double loglik = 0.0;
    for (size_t k = 0; k < observed.size(); ++k) {
        const double lambda = expected[k];
        const long y = observed[k];
        if (!(lambda >= 0.0)) throw std::invalid_argument("poisson_loglik: negative expected rate");
        if (lambda == 0.0) {
            if (y == 0) continue;
            return -std::numeric_limits<double>::infinity();
        }
        loglik += y * std::log(lambda) - lambda - std::lgamma(static_cast<double>(y) + 1.0);
    }
    return loglik;
}

double joint_loglik(const std::vector<IncidenceDataset>& datasets,
                    std::span<const double> values, const FitSpec& spec) {
    if (datasets.size() != spec.i0_per_epidemic.size()) {
        throw std::invalid_argument("joint_loglik: dataset count does not match i0_per_epidemic");
    }
    const ModelParams params = spec.apply(values);
    double total = 0.0;
    for (size_t epi = 0; epi < datasets.size(); ++epi) {
        const auto& counts = datasets[epi].counts;
        if (counts.size() < static_cast<size_t>(spec.fit_to)) {
            throw std::invalid_argument("joint_loglik: dataset shorter than the fit window");
        }
        const Trajectory traj = integrate(params, initial_state(spec.i0_per_epidemic[epi], params),
                                          spec.fit_to);
        const std::vector<double> expected = incidence_series(traj, spec.fit_from, spec.fit_to);
        const std::span<const long> observed(counts.data() + (spec.fit_from - 1),
                                             expected.size());
        total += poisson_loglik(observed, expected);
    }
    return total;
}

namespace {

bool uses_log_scale(ParamId id) { return id != ParamId::C1; }

double transform_one(ParamId id, double v) {
    if (uses_log_scale(id)) {
        if (!(v > 0.0)) {
            throw std::domain_error(std::string("transform: ") + param_name(id) + " must be > 0");
        }
        return std::log(v);
    }
    if (!(v > 0.0 && v < 1.0)) throw std::domain_error("transform: c1 must lie in (0, 1)");
    return std::log(v / (1.0 - v));
}

double untransform_one(ParamId id, double z) {
    if (uses_log_scale(id)) return std::exp(z);
    return 1.0 / (1.0 + std::exp(-z));
}

}  // namespace

std::vector<double> transform(std::span<const double> natural, const FitSpec& spec) {
    if (natural.size() != spec.free_params.size()) {
        throw std::invalid_argument("transform: size mismatch");
    }
    std::vector<double> z(natural.size());
    for (size_t k = 0; k < natural.size(); ++k) z[k] = transform_one(spec.free_params[k], natural[k]);
    return z;
}

std::vector<double> untransform(std::span<const double> z, const FitSpec& spec) {
    if (z.size() != spec.free_params.size()) {
        throw std::invalid_argument("untransform: size mismatch");
    }
    std::vector<double> natural(z.size());
    for (size_t k = 0; k < z.size(); ++k) natural[k] = untransform_one(spec.free_params[k], z[k]);
    return natural;
}

double aic(double loglik, int n_free) {
    if (n_free < 0) throw std::invalid_argument("aic: n_free must be >= 0");
    return 2.0 * n_free - 2.0 * loglik;
}

HessianEigen hessian_eigen(const Eigen::MatrixXd& hessian, bool require_positive) {
    if (hessian.rows() != hessian.cols() || hessian.rows() == 0) {
        throw std::invalid_argument("hessian_eigen: matrix must be square and non-empty");
    }
    const Eigen::MatrixXd sym = 0.5 * (hessian + hessian.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("hessian_eigen: eigen-decomposition failed");
    }

    const Eigen::Index p = sym.rows();
    HessianEigen out;
    out.eigenvalues.resize(static_cast<size_t>(p));
    out.eigenvectors.resize(p, p);
    for (Eigen::Index k = 0; k < p; ++k) {
        out.eigenvalues[static_cast<size_t>(k)] = solver.eigenvalues()(p - 1 - k);
        out.eigenvectors.col(k) = solver.eigenvectors().col(p - 1 - k);
    }
    out.condition_number = out.eigenvalues.front() / out.eigenvalues.back();
    if (require_positive && out.eigenvalues.back() <= 0.0) {
        throw std::runtime_error(
            "hessian_eigen: non-positive eigenvalue at a claimed interior optimum "
            "(identifiability failure), smallest = " +
            std::to_string(out.eigenvalues.back()));
    }
    return out;
}

Eigen::MatrixXd correlation_from_hessian(const Eigen::MatrixXd& hessian) {
    const Eigen::MatrixXd sym = 0.5 * (hessian + hessian.transpose());
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sym);
    if (!lu.isInvertible()) {
        const HessianEigen eig = hessian_eigen(sym);
        throw std::runtime_error("correlation_from_hessian: singular Hessian, condition number " +
                                 std::to_string(eig.condition_number));
    }
    const Eigen::MatrixXd inv = lu.inverse();
    Eigen::MatrixXd corr(inv.rows(), inv.cols());
    for (Eigen::Index i = 0; i < inv.rows(); ++i) {
        for (Eigen::Index j = 0; j < inv.cols(); ++j) {
            corr(i, j) = inv(i, j) / std::sqrt(inv(i, i) * inv(j, j));
        }
    }
    return corr;
}

namespace {

struct StartBox {
    double lo, hi;
};

StartBox start_box(ParamId id) {
    switch (id) {
        case ParamId::R0: return {1.5, 5.0};
        case ParamId::Nu: return {0.05, 3.0};
        case ParamId::T0: return {5.0, 40.0};
        case ParamId::C1: return {0.05, 0.95};
    }
    return {0.0, 1.0};
}

// Latin-hypercube start points on the natural scale, one row per start.
std::vector<std::vector<double>> lhs_starts(const FitSpec& spec, int n_starts, RngStream& rng) {
    const size_t p = spec.free_params.size();
    std::vector<std::vector<double>> starts(static_cast<size_t>(n_starts),
                                            std::vector<double>(p));
    for (size_t d = 0; d < p; ++d) {
        std::vector<int> strata(static_cast<size_t>(n_starts));
        std::iota(strata.begin(), strata.end(), 0);
        for (size_t k = strata.size(); k > 1; --k) {
            const size_t j = static_cast<size_t>(rng.next_double() * static_cast<double>(k));
            std::swap(strata[k - 1], strata[std::min(j, k - 1)]);
        }
        const StartBox box = start_box(spec.free_params[d]);
        for (int s = 0; s < n_starts; ++s) {
            const double u = (strata[static_cast<size_t>(s)] + rng.next_double()) / n_starts;
            starts[static_cast<size_t>(s)][d] = box.lo + u * (box.hi - box.lo);
        }
    }
    return starts;
}

constexpr double kBadObjective = 1e300;

// Central-difference Hessian of f at z with Richardson extrapolation
// (one halving). The cross term uses the symmetric 4-point formula.
Eigen::MatrixXd fd_hessian(const std::function<double(std::span<const double>)>& f,
                           const std::vector<double>& z, double step) {
    const size_t p = z.size();
    auto single = [&](double h) {
        Eigen::MatrixXd H(p, p);
        const double f0 = f(z);
        std::vector<double> zp(z);
        for (size_t i = 0; i < p; ++i) {
            zp = z;
            zp[i] = z[i] + h;
            const double fp = f(zp);
            zp[i] = z[i] - h;
            const double fm = f(zp);
            H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = (fp - 2.0 * f0 + fm) / (h * h);
            for (size_t j = i + 1; j < p; ++j) {
                zp = z;
                zp[i] = z[i] + h;
                zp[j] = z[j] + h;
                const double fpp = f(zp);
                zp[j] = z[j] - h;
                const double fpm = f(zp);
                zp[i] = z[i] - h;
                zp[j] = z[j] + h;
                const double fmp = f(zp);
                zp[j] = z[j] - h;
                const double fmm = f(zp);
                const double hij = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
                H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = hij;
                H(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = hij;
            }
        }
        return H;
    };
    const Eigen::MatrixXd coarse = single(step);
    const Eigen::MatrixXd fine = single(step / 2.0);
    return (4.0 * fine - coarse) / 3.0;
}

}  // namespace

double FitResult::mle_of(ParamId id) const {
    const int k = index_of(id);
    if (k < 0) throw std::invalid_argument(std::string("FitResult: ") + param_name(id) + " is not free");
    return mle[static_cast<size_t>(k)];
}

int FitResult::index_of(ParamId id) const {
    for (size_t k = 0; k < spec.free_params.size(); ++k) {
        if (spec.free_params[k] == id) return static_cast<int>(k);
    }
    return -1;
}

FitResult fit_mle(const std::vector<IncidenceDataset>& datasets, const FitSpec& spec,
                  const FitOptions& options) {
    spec.validate();
    if (datasets.empty()) throw std::invalid_argument("fit_mle: no datasets");

    const size_t p = spec.free_params.size();
    FitResult result;
    result.spec = spec;

    int evals = 0;
    auto objective = [&](std::span<const double> z) -> double {
        ++evals;
        try {
            const std::vector<double> natural = untransform(z, spec);
            const double ll = joint_loglik(datasets, natural, spec);
            if (!std::isfinite(ll)) return kBadObjective;
            return -ll;
        } catch (const std::exception&) {
            return kBadObjective;  // integrator blow-up at an absurd trial point
        }
    };

    RngStream rng(options.rng_seed, 0x5eedULL);
    const auto starts = lhs_starts(spec, options.n_starts, rng);

    NelderMeadResult best;
    best.fmin = std::numeric_limits<double>::infinity();
    for (const auto& start : starts) {
        const std::vector<double> z0 = transform(start, spec);
        NelderMeadResult run = nelder_mead(objective, z0, 0.25, options.f_tol, options.max_evals);
        if (run.fmin < best.fmin) best = std::move(run);
    }
    // Polish restart: a fresh small simplex at the incumbent smooths over
    // premature collapse along ridge directions.
    NelderMeadResult polish =
        nelder_mead(objective, best.x, 0.05, options.f_tol, options.max_evals);
    if (polish.fmin <= best.fmin) best = std::move(polish);

    result.n_evals = evals;
    result.converged = best.converged && best.fmin < kBadObjective;
    result.mle = untransform(best.x, spec);
    result.loglik = -best.fmin;
    result.aic = aic(result.loglik, static_cast<int>(p));

    if (!options.compute_hessian || !result.converged) return result;

    result.hessian = fd_hessian(objective, best.x, options.hessian_step);

    const HessianEigen eig = hessian_eigen(result.hessian);
    result.eigenvalues = eig.eigenvalues;
    result.condition_number = eig.condition_number;
    result.hessian_pd = eig.eigenvalues.back() > 0.0 && std::isfinite(eig.eigenvalues.front());

    Eigen::MatrixXd cov_z;
    bool have_cov = false;
    if (result.hessian_pd) {
        try {
            result.correlation = correlation_from_hessian(result.hessian);
            cov_z = (0.5 * (result.hessian + result.hessian.transpose())).inverse();
            result.covariance_z = cov_z;
            have_cov = true;
        } catch (const std::exception&) {
            have_cov = false;
        }
    }

    result.wald_ci.assign(p, WaldInterval{});
    if (have_cov) {
        // Delta method back to the natural scale: J = d(natural)/dz at the MLE.
        Eigen::VectorXd jac(static_cast<Eigen::Index>(p));
        for (size_t k = 0; k < p; ++k) {
            const double v = result.mle[k];
            jac(static_cast<Eigen::Index>(k)) = uses_log_scale(spec.free_params[k]) ? v : v * (1.0 - v);
        }
        result.covariance = jac.asDiagonal() * cov_z * jac.asDiagonal();

        const int c1_index = result.index_of(ParamId::C1);
        const bool c1_at_ceiling = c1_index >= 0 && result.mle[static_cast<size_t>(c1_index)] > 0.99;
        for (size_t k = 0; k < p; ++k) {
            const double var_z = cov_z(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
            auto& ci = result.wald_ci[k];
            if (!(var_z > 0.0) || !std::isfinite(var_z)) {
                ci.unbounded = true;
                continue;
            }
            const double half = 1.96 * std::sqrt(var_z);
            ci.lower = untransform_one(spec.free_params[k], best.x[k] - half);
            ci.upper = untransform_one(spec.free_params[k], best.x[k] + half);
            // A transformed-scale half-width this large means the interval is
            // a numerical artefact of a flat direction, not information.
            if (half > 50.0) ci.unbounded = true;
            if (c1_at_ceiling && spec.free_params[k] == ParamId::T0) ci.unbounded = true;
        }
    } else {
        for (auto& ci : result.wald_ci) ci.unbounded = true;
    }
    return result;
}

std::string fit_result_json(const FitResult& fit) {
    json j;
    json mle, ci;
    for (size_t k = 0; k < fit.spec.free_params.size(); ++k) {
        const char* name = param_name(fit.spec.free_params[k]);
        mle[name] = fit.mle[k];
        if (k < fit.wald_ci.size()) {
            ci[name] = json{{"lower", fit.wald_ci[k].lower},
                            {"upper", fit.wald_ci[k].upper},
                            {"unbounded", fit.wald_ci[k].unbounded}};
        }
    }
    j["mle"] = mle;
    j["loglik"] = fit.loglik;
    j["aic"] = fit.aic;
    j["wald_ci"] = ci;
    std::vector<double> corr_rows;
    for (Eigen::Index r = 0; r < fit.correlation.rows(); ++r) {
        for (Eigen::Index c = 0; c < fit.correlation.cols(); ++c) {
            corr_rows.push_back(fit.correlation(r, c));
        }
    }
    j["correlation"] = corr_rows;
    j["eigenvalues"] = fit.eigenvalues;
    j["condition_number"] = fit.condition_number;
    j["converged"] = fit.converged;
    j["hessian_pd"] = fit.hessian_pd;

    json spec;
    std::vector<std::string> names;
    for (const ParamId id : fit.spec.free_params) names.emplace_back(param_name(id));
    spec["free_params"] = names;
    spec["heterogeneous"] = fit.spec.heterogeneous;
    spec["with_npi"] = fit.spec.with_npi;
    spec["fit_window"] = json::array({fit.spec.fit_from, fit.spec.fit_to});
    spec["i0_per_epidemic"] = fit.spec.i0_per_epidemic;
    spec["fixed"] = json{{"rho", fit.spec.fixed.rho},
                         {"delta", fit.spec.fixed.delta},
                         {"gamma", fit.spec.fixed.gamma},
                         {"n_pop", fit.spec.fixed.n_pop},
                         {"t1", fit.spec.fixed.npi.t1}};
    j["spec"] = spec;
    return j.dump();
}

void write_fit_results_jsonl(const std::vector<FitResult>& fits, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_fit_results_jsonl: cannot open " + path);
    for (const auto& fit : fits) out << fit_result_json(fit) << '\n';
}

}  // namespace heteroseir
