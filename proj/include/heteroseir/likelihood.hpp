#ifndef HETEROSEIR_LIKELIHOOD_HPP
#define HETEROSEIR_LIKELIHOOD_HPP

#include "heteroseir/model.hpp"
#include "heteroseir/synthesis.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace heteroseir {

/// The four parameters the studies ever estimate.
enum class ParamId { R0, Nu, T0, C1 };

const char* param_name(ParamId id);
ParamId param_from_name(const std::string& name);

/// Which parameters are free, what stays fixed, and which days and epidemics
/// enter the likelihood. Free parameters keep the fixed order (r0, nu, t0, c1).
struct FitSpec {
    std::vector<ParamId> free_params;
    bool heterogeneous = false;  // nu free; otherwise nu fixed at 0
    bool with_npi = false;       // t0, c1 free; otherwise c(t) = 1
    ModelParams fixed;           // backdrop values, including t1 and the rates
    int fit_from = 1;
    int fit_to = 100;
    std::vector<double> i0_per_epidemic{40.0};

    static FitSpec homogeneous_no_npi(const ModelParams& base, std::vector<double> i0s = {40.0});
    static FitSpec heterogeneous_no_npi(const ModelParams& base, std::vector<double> i0s = {40.0});
    static FitSpec homogeneous_npi(const ModelParams& base, std::vector<double> i0s = {40.0});
    static FitSpec heterogeneous_npi(const ModelParams& base, std::vector<double> i0s = {40.0});

    void validate() const;
    size_t n_free() const { return free_params.size(); }

    /// Fixed params overlaid with the given free values (natural scale).
    ModelParams apply(std::span<const double> values) const;
};

/// Sum over days of y log(lambda) - lambda - log(y!). A day with lambda = 0
/// contributes 0 if y = 0 and -infinity otherwise. Throws on length mismatch
/// or negative rates.
double poisson_loglik(std::span<const long> observed, std::span<const double> expected);

/// Log-likelihood of one or two epidemics sharing the free values and
/// differing only in seed size; the model is integrated once per epidemic.
double joint_loglik(const std::vector<IncidenceDataset>& datasets,
                    std::span<const double> values, const FitSpec& spec);

/// Transforms keeping the optimizer unconstrained: log for r0, nu, t0 and
/// logit for c1. Bijective on the open domains; throws at exact boundaries.
std::vector<double> transform(std::span<const double> natural, const FitSpec& spec);
std::vector<double> untransform(std::span<const double> z, const FitSpec& spec);

double aic(double loglik, int n_free);

struct WaldInterval {
    double lower = 0.0;
    double upper = 0.0;
    bool unbounded = false;  // degenerate direction; the numbers are not meaningful
};

struct FitResult {
    FitSpec spec;
    std::vector<double> mle;          // natural scale, order = spec.free_params
    double loglik = 0.0;
    double aic = 0.0;
    Eigen::MatrixXd hessian;          // of the negative log-likelihood, transformed scale
    Eigen::MatrixXd covariance_z;     // inverse Hessian, transformed scale
    Eigen::MatrixXd covariance;       // natural scale (delta method from the inverse Hessian)
    Eigen::MatrixXd correlation;
    std::vector<WaldInterval> wald_ci;
    std::vector<double> eigenvalues;  // of the Hessian, descending
    double condition_number = 0.0;
    bool converged = false;
    bool hessian_pd = false;
    int n_evals = 0;

    double mle_of(ParamId id) const;
    int index_of(ParamId id) const;  // -1 when not free
};

struct HessianEigen {
    std::vector<double> eigenvalues;  // descending
    Eigen::MatrixXd eigenvectors;     // columns match eigenvalue order
    double condition_number = 0.0;
};

/// Eigen-decomposition of (H + H^T)/2 with eigenvalues sorted descending and
/// condition number lambda_1 / lambda_p. With require_positive set, throws
/// std::runtime_error if any eigenvalue is <= 0 (identifiability failure at a
/// claimed interior optimum).
HessianEigen hessian_eigen(const Eigen::MatrixXd& hessian, bool require_positive = false);

/// Corr_ij = (H^-1)_ij / sqrt((H^-1)_ii (H^-1)_jj). Throws on a singular
/// Hessian, reporting the condition number.
Eigen::MatrixXd correlation_from_hessian(const Eigen::MatrixXd& hessian);

struct FitOptions {
    int n_starts = 5;              // Latin-hypercube multi-starts
    std::uint64_t rng_seed = 0;    // keys the start positions
    double f_tol = 1e-7;           // simplex loglik spread
    int max_evals = 4000;          // per Nelder-Mead run
    double hessian_step = 1e-4;    // transformed scale, Richardson-refined once
    bool compute_hessian = true;
};

/// Maximum-likelihood fit: best of n_starts Nelder-Mead runs on the
/// transformed scale (plus a polish restart), finite-difference Hessian at
/// the optimum and the derived Wald/correlation/eigen diagnostics.
/// Non-convergence is flagged, never silently returned as success.
FitResult fit_mle(const std::vector<IncidenceDataset>& datasets, const FitSpec& spec,
                  const FitOptions& options = {});

/// Single-line JSON for one fit (mle, loglik, aic, wald_ci, correlation
/// row-major, eigenvalues, condition_number, converged, spec echo).
std::string fit_result_json(const FitResult& fit);
void write_fit_results_jsonl(const std::vector<FitResult>& fits, const std::string& path);

}  // namespace heteroseir

#endif  // HETEROSEIR_LIKELIHOOD_HPP
