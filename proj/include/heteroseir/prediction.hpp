#ifndef HETEROSEIR_PREDICTION_HPP
#define HETEROSEIR_PREDICTION_HPP

#include "heteroseir/likelihood.hpp"
#include "heteroseir/rng.hpp"

#include <optional>
#include <string>
#include <vector>

namespace heteroseir {

/// Pointwise forecast quantiles of expected daily incidence across
/// correlation-preserving parameter draws.
struct ForecastBands {
    std::vector<double> times;
    std::vector<double> median;
    std::vector<double> lower;   // 2.5% quantile
    std::vector<double> upper;   // 97.5% quantile
    int n_draws = 0;
    int fit_days = 0;
    int n_rejected = 0;  // draws discarded for non-finite trajectories
};

/// Correlation-preserving parameter draws: multivariate normal centred at the
/// transformed MLE with the transformed-scale covariance (inverse Hessian),
/// mapped back through the inverse transforms so every draw is in-domain.
/// A zero covariance returns copies of the MLE. Throws std::runtime_error on
/// Cholesky failure, naming the smallest eigenvalue.
std::vector<std::vector<double>> sample_parameters(const FitResult& fit, int n_draws,
                                                   RngStream& rng);

/// Integrate each draw over [0, total_days] and reduce to pointwise quantile
/// bands. The NPI factor follows the fitted schedule up to npi_lift_day and
/// reverts to 1 afterwards (pass std::nullopt to keep the schedule forever);
/// the default lifts at the end of the fitting window.
ForecastBands forecast(const FitResult& fit, double i0, int fit_days, int total_days,
                       int n_draws, RngStream& rng,
                       std::optional<double> npi_lift_day = std::nullopt,
                       bool lift_at_fit_end = true);

/// Expected incidence over [0, total_days] at one parameter set, with the
/// same NPI-lift convention.
std::vector<double> forecast_trajectory(const ModelParams& params, double i0, int total_days,
                                        std::optional<double> npi_lift_day);

/// CSV with header day,median,lower,upper,is_fit_window.
void write_forecast_csv(const ForecastBands& bands, const std::string& path);

}  // namespace heteroseir

#endif  // HETEROSEIR_PREDICTION_HPP
