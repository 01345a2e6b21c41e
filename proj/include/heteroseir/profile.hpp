#ifndef HETEROSEIR_PROFILE_HPP
#define HETEROSEIR_PROFILE_HPP

#include "heteroseir/likelihood.hpp"

#include <string>
#include <vector>

namespace heteroseir {

/// chi^2_{0.95,1}: profile points with 2 (l_mle - PL) at or below this belong
/// to the 95% confidence set.
inline constexpr double kChiSq95Df1 = 3.84;

struct ProfileCi {
    double lower = 0.0;
    double upper = 0.0;
    bool lower_open = false;  // threshold never crossed below the MLE
    bool upper_open = false;
    double width() const { return upper - lower; }
    bool covers(double value) const {
        return (lower_open || value >= lower) && (upper_open || value <= upper);
    }
};

struct ProfileCurve {
    ParamId param = ParamId::R0;
    std::vector<double> grid;            // natural scale, ascending
    std::vector<double> profile_loglik;  // re-optimised loglik per grid value
    std::vector<bool> point_converged;   // non-converged points are gaps
    double mle_loglik = 0.0;
    double mle_value = 0.0;
    bool needs_refinement = false;  // 95% set disconnected on this grid

    // Transformed-scale optima of the re-optimised parameters per grid point;
    // kept so refinement passes can warm-start from the neighbouring optimum.
    std::vector<std::vector<double>> rest_at_point;
};

struct ProfileOptions {
    int n_points = 41;
    double span_se = 6.0;       // grid half-width in Wald standard errors
    double f_tol = 1e-7;
    int max_evals = 2000;       // per re-optimisation
    bool refine_crossings = true;
    int refine_points = 4;      // extra points per threshold bracket
};

/// Grid of fixed values for one parameter: MLE +- span_se Wald SEs on the
/// natural scale, clipped to the domain. Falls back to a relative span when
/// the fit carries no usable covariance.
std::vector<double> make_profile_grid(const FitResult& fit, ParamId param, int n_points = 41,
                                      double span_se = 6.0);

/// Profile likelihood over an explicit grid: at each grid value the remaining
/// free parameters are re-optimised, warm-started from the neighbouring
/// point's optimum, sweeping outward from the MLE in both directions. The
/// first point starts from warm_start_z (transformed scale) when given,
/// otherwise from the fit's MLE.
ProfileCurve profile(ParamId param, const std::vector<IncidenceDataset>& datasets,
                     const FitSpec& spec, std::vector<double> grid, const FitResult& fit,
                     const ProfileOptions& options = {},
                     const std::vector<double>& warm_start_z = {});

/// 95% interval from the chi-square cutoff, endpoints interpolated linearly
/// between the grid points straddling the threshold. Open-ended sides are
/// flagged when the threshold is not crossed within the grid. Throws if the
/// grid point nearest the MLE already exceeds the threshold.
ProfileCi ci_from_profile(const ProfileCurve& curve);

/// Full pipeline: auto grid, profile, one refinement pass around the
/// threshold crossings (with outward grid extension if the threshold is not
/// crossed inside the initial span), final interval.
struct ProfileResult {
    ProfileCurve curve;
    ProfileCi ci;
};
ProfileResult profiled_ci(ParamId param, const std::vector<IncidenceDataset>& datasets,
                          const FitSpec& spec, const FitResult& fit,
                          const ProfileOptions& options = {});

/// CSV with header param,grid_value,profile_loglik,within_ci.
void write_profile_csv(const ProfileCurve& curve, const ProfileCi& ci, const std::string& path);

}  // namespace heteroseir

#endif  // HETEROSEIR_PROFILE_HPP
