#ifndef HETEROSEIR_SENSITIVITY_HPP
#define HETEROSEIR_SENSITIVITY_HPP

#include "heteroseir/likelihood.hpp"
#include "heteroseir/model.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace heteroseir {

/// Local sensitivities of daily incidence: values(t, j) = d(incidence at
/// day times[t]) / d(theta_j), natural-scale parameters.
struct SensitivityMatrix {
    std::vector<double> times;
    std::vector<ParamId> params;
    Eigen::MatrixXd values;  // |times| x |params|

    /// Columns scaled to unit Euclidean norm (zero columns left untouched).
    Eigen::MatrixXd normalized() const;
};

/// Central finite differences with relative step 1e-4 per parameter
/// (absolute step rel_step * max(|theta|, 1)); one matrix per epidemic seed.
std::vector<SensitivityMatrix> sensitivities(const ModelParams& params,
                                             std::span<const double> i0s, int from_day,
                                             int to_day,
                                             std::span<const ParamId> which_params,
                                             double rel_step = 1e-4);

/// Cosine similarity of two sensitivity columns (stacked across epidemics in
/// the two-epidemic case). Throws std::invalid_argument on length mismatch or
/// when either vector has zero norm.
double compensation_score(std::span<const double> col_a, std::span<const double> col_b);

/// Stack one parameter's normalized sensitivity column across epidemics,
/// focal days first.
std::vector<double> stacked_column(const std::vector<SensitivityMatrix>& mats, ParamId param);

/// CSV with header epidemic_id,day,param,value,normalized_value.
void write_sensitivity_csv(const std::vector<SensitivityMatrix>& mats, const std::string& path);

}  // namespace heteroseir

#endif  // HETEROSEIR_SENSITIVITY_HPP
