#include "heteroseir/sensitivity.hpp"

#include "heteroseir/integrate.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace heteroseir {

namespace {

ModelParams with_value(const ModelParams& base, ParamId id, double value) {
    ModelParams p = base;
    switch (id) {
        case ParamId::R0: p.r0 = value; break;
        case ParamId::Nu: p.nu = value; break;
        case ParamId::T0: p.npi.t0 = value; break;
        case ParamId::C1: p.npi.c1 = value; break;
    }
    return p;
}

double value_of(const ModelParams& p, ParamId id) {
    switch (id) {
        case ParamId::R0: return p.r0;
        case ParamId::Nu: return p.nu;
        case ParamId::T0: return p.npi.t0;
        case ParamId::C1: return p.npi.c1;
    }
    return 0.0;
}

}  // namespace

Eigen::MatrixXd SensitivityMatrix::normalized() const {
    Eigen::MatrixXd out = values;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        const double norm = out.col(j).norm();
        if (norm > 0.0) out.col(j) /= norm;
    }
    return out;
}

std::vector<SensitivityMatrix> sensitivities(const ModelParams& params,
                                             std::span<const double> i0s, int from_day,
                                             int to_day,
                                             std::span<const ParamId> which_params,
                                             double rel_step) {
    if (i0s.empty()) throw std::invalid_argument("sensitivities: no epidemics given");
    if (from_day < 0 || to_day <= from_day) {
        throw std::invalid_argument("sensitivities: bad day window");
    }

    const int n_days = to_day - from_day + 1;
    std::vector<SensitivityMatrix> result(i0s.size());
    for (size_t epi = 0; epi < i0s.size(); ++epi) {
        auto& mat = result[epi];
        mat.params.assign(which_params.begin(), which_params.end());
        mat.times.resize(static_cast<size_t>(n_days));
        for (int d = 0; d < n_days; ++d) mat.times[static_cast<size_t>(d)] = from_day + d;
        mat.values.resize(n_days, static_cast<Eigen::Index>(which_params.size()));
    }

    for (size_t j = 0; j < which_params.size(); ++j) {
        const ParamId id = which_params[j];
        const double theta = value_of(params, id);
        const double step = rel_step * std::max(std::abs(theta), 1.0);
        const ModelParams up = with_value(params, id, theta + step);
        const ModelParams down = with_value(params, id, theta - step);
        for (size_t epi = 0; epi < i0s.size(); ++epi) {
            const Trajectory hi = integrate(up, initial_state(i0s[epi], up), to_day);
            const Trajectory lo = integrate(down, initial_state(i0s[epi], down), to_day);
            for (int d = 0; d < n_days; ++d) {
                const size_t day = static_cast<size_t>(from_day + d);
                result[epi].values(d, static_cast<Eigen::Index>(j)) =
                    (hi.incidence[day] - lo.incidence[day]) / (2.0 * step);
            }
        }
    }
    return result;
}

double compensation_score(std::span<const double> col_a, std::span<const double> col_b) {
    if (col_a.size() != col_b.size() || col_a.empty()) {
        throw std::invalid_argument("compensation_score: columns must have equal non-zero length");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t k = 0; k < col_a.size(); ++k) {
        dot += col_a[k] * col_b[k];
        na += col_a[k] * col_a[k];
        nb += col_b[k] * col_b[k];
    }
    if (na == 0.0 || nb == 0.0) {
        throw std::invalid_argument("compensation_score: zero-norm sensitivity column");
    }
    return dot / std::sqrt(na * nb);
}

std::vector<double> stacked_column(const std::vector<SensitivityMatrix>& mats, ParamId param) {
    std::vector<double> out;
    for (const auto& mat : mats) {
        Eigen::Index col = -1;
        for (size_t j = 0; j < mat.params.size(); ++j) {
            if (mat.params[j] == param) col = static_cast<Eigen::Index>(j);
        }
        if (col < 0) throw std::invalid_argument("stacked_column: parameter missing from matrix");
        const Eigen::MatrixXd norm = mat.normalized();
        for (Eigen::Index t = 0; t < norm.rows(); ++t) out.push_back(norm(t, col));
    }
    return out;
}

void write_sensitivity_csv(const std::vector<SensitivityMatrix>& mats, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_sensitivity_csv: cannot open " + path);
    out << "epidemic_id,day,param,value,normalized_value\n";
    char line[160];
    for (size_t epi = 0; epi < mats.size(); ++epi) {
        const Eigen::MatrixXd norm = mats[epi].normalized();
        for (Eigen::Index t = 0; t < mats[epi].values.rows(); ++t) {
            for (size_t j = 0; j < mats[epi].params.size(); ++j) {
                std::snprintf(line, sizeof(line), "%zu,%g,%s,%.17g,%.17g\n", epi,
                              mats[epi].times[static_cast<size_t>(t)],
                              param_name(mats[epi].params[j]),
                              mats[epi].values(t, static_cast<Eigen::Index>(j)),
                              norm(t, static_cast<Eigen::Index>(j)));
                out << line;
            }
        }
    }
}

}  // namespace heteroseir
