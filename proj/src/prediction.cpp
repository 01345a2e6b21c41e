#include "heteroseir/prediction.hpp"

#include "heteroseir/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace heteroseir {

namespace {

double quantile(std::vector<double>& scratch, double p) {
    // Linear interpolation between order statistics; scratch must be sorted.
    const size_t n = scratch.size();
    if (n == 1) return scratch[0];
    const double pos = p * static_cast<double>(n - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    return scratch[lo] + frac * (scratch[hi] - scratch[lo]);
}

}  // namespace

std::vector<std::vector<double>> sample_parameters(const FitResult& fit, int n_draws,
                                                   RngStream& rng) {
    if (n_draws < 1) throw std::invalid_argument("sample_parameters: n_draws must be >= 1");
    if (fit.mle.empty()) throw std::invalid_argument("sample_parameters: fit has no MLE");
    const size_t p = fit.mle.size();

    const std::vector<double> z_mle = transform(fit.mle, fit.spec);

    if (fit.covariance_z.rows() != static_cast<Eigen::Index>(p)) {
        throw std::invalid_argument("sample_parameters: fit carries no transformed-scale covariance");
    }
    const Eigen::MatrixXd cov_z = 0.5 * (fit.covariance_z + fit.covariance_z.transpose());

    std::vector<std::vector<double>> draws;
    draws.reserve(static_cast<size_t>(n_draws));

    if (cov_z.norm() == 0.0) {
        // Degenerate multivariate normal: every draw is the MLE.
        for (int d = 0; d < n_draws; ++d) draws.push_back(fit.mle);
        return draws;
    }

    Eigen::LLT<Eigen::MatrixXd> llt(cov_z);
    if (llt.info() != Eigen::Success) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov_z);
        throw std::runtime_error(
            "sample_parameters: covariance is not positive definite, smallest eigenvalue " +
            std::to_string(es.eigenvalues().minCoeff()));
    }
    const Eigen::MatrixXd chol = llt.matrixL();

    Eigen::VectorXd noise(static_cast<Eigen::Index>(p));
    for (int d = 0; d < n_draws; ++d) {
        for (Eigen::Index k = 0; k < noise.size(); ++k) noise(k) = rng.next_normal();
        const Eigen::VectorXd dz = chol * noise;
        std::vector<double> z(p);
        for (size_t k = 0; k < p; ++k) z[k] = z_mle[k] + dz(static_cast<Eigen::Index>(k));
        draws.push_back(untransform(z, fit.spec));
    }
    return draws;
}

std::vector<double> forecast_trajectory(const ModelParams& params, double i0, int total_days,
                                        std::optional<double> npi_lift_day) {
    const EpidemicState init = initial_state(i0, params);
    if (!npi_lift_day || *npi_lift_day >= total_days) {
        return integrate(params, init, total_days).incidence;
    }
    const int lift = static_cast<int>(std::llround(*npi_lift_day));
    if (lift < 1) {
        ModelParams open = params;
        open.npi = NpiSchedule::none();
        return integrate(open, init, total_days).incidence;
    }

    // Piecewise: fitted schedule up to the lift day, then c(t) = 1. The
    // second leg is autonomous, so restarting its clock at zero is exact.
    const Trajectory first = integrate(params, init, lift);
    ModelParams open = params;
    open.npi = NpiSchedule::none();
    EpidemicState resume = first.states.back();
    resume.t = 0.0;
    const Trajectory second = integrate(open, resume, total_days - lift);

    std::vector<double> incidence = first.incidence;
    incidence.insert(incidence.end(), second.incidence.begin() + 1, second.incidence.end());
    return incidence;
}

ForecastBands forecast(const FitResult& fit, double i0, int fit_days, int total_days,
                       int n_draws, RngStream& rng, std::optional<double> npi_lift_day,
                       bool lift_at_fit_end) {
    if (total_days <= fit_days) throw std::invalid_argument("forecast: total_days must exceed fit_days");
    if (!npi_lift_day && lift_at_fit_end) npi_lift_day = static_cast<double>(fit_days);

    ForecastBands bands;
    bands.n_draws = n_draws;
    bands.fit_days = fit_days;

    std::vector<std::vector<double>> curves;
    curves.reserve(static_cast<size_t>(n_draws));
    const int max_attempts = 10 * n_draws;
    int attempts = 0;
    while (static_cast<int>(curves.size()) < n_draws) {
        if (++attempts > max_attempts) {
            throw std::runtime_error("forecast: too many draws produced non-finite trajectories");
        }
        const auto draw = sample_parameters(fit, 1, rng);
        try {
            std::vector<double> curve =
                forecast_trajectory(fit.spec.apply(draw[0]), i0, total_days, npi_lift_day);
            curves.push_back(std::move(curve));
        } catch (const std::exception&) {
            ++bands.n_rejected;
        }
    }

    const size_t n_days = curves.front().size();
    bands.times.resize(n_days);
    bands.median.resize(n_days);
    bands.lower.resize(n_days);
    bands.upper.resize(n_days);
    std::vector<double> scratch(curves.size());
    for (size_t t = 0; t < n_days; ++t) {
        bands.times[t] = static_cast<double>(t);
        for (size_t d = 0; d < curves.size(); ++d) scratch[d] = curves[d][t];
        std::sort(scratch.begin(), scratch.end());
        bands.lower[t] = quantile(scratch, 0.025);
        bands.median[t] = quantile(scratch, 0.5);
        bands.upper[t] = quantile(scratch, 0.975);
    }
    return bands;
}

void write_forecast_csv(const ForecastBands& bands, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_forecast_csv: cannot open " + path);
    out << "day,median,lower,upper,is_fit_window\n";
    char line[160];
    for (size_t t = 0; t < bands.times.size(); ++t) {
        std::snprintf(line, sizeof(line), "%g,%.17g,%.17g,%.17g,%d\n", bands.times[t],
                      bands.median[t], bands.lower[t], bands.upper[t],
                      bands.times[t] <= bands.fit_days ? 1 : 0);
        out << line;
    }
}

}  // namespace heteroseir
