#include "heteroseir/profile.hpp"

#include "heteroseir/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace heteroseir {

namespace {

constexpr double kBadObjective = 1e300;

double domain_floor(ParamId id) { return id == ParamId::C1 ? 1e-6 : 1e-8; }

double clip_to_domain(ParamId id, double v) {
    v = std::max(v, domain_floor(id));
    if (id == ParamId::C1) v = std::min(v, 1.0 - 1e-6);
    return v;
}

// Transform helpers for a subset of parameters (the non-profiled ones).
std::vector<double> transform_subset(const std::vector<ParamId>& ids,
                                     const std::vector<double>& natural) {
    std::vector<double> z(natural.size());
    for (size_t k = 0; k < natural.size(); ++k) {
        z[k] = (ids[k] == ParamId::C1) ? std::log(natural[k] / (1.0 - natural[k]))
                                       : std::log(natural[k]);
    }
    return z;
}

double untransform_scalar(ParamId id, double z) {
    return (id == ParamId::C1) ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z);
}

struct ProfileObjective {
    const std::vector<IncidenceDataset>* datasets;
    const FitSpec* spec;
    size_t param_index;
    std::vector<ParamId> rest_ids;
    std::vector<size_t> rest_positions;  // positions of rest params in free_params
    double fixed_value = 0.0;

    double operator()(std::span<const double> z_rest) const {
        std::vector<double> values(spec->free_params.size());
        values[param_index] = fixed_value;
        for (size_t k = 0; k < rest_ids.size(); ++k) {
            values[rest_positions[k]] = untransform_scalar(rest_ids[k], z_rest[k]);
        }
        try {
            const double ll = joint_loglik(*datasets, values, *spec);
            return std::isfinite(ll) ? -ll : kBadObjective;
        } catch (const std::exception&) {
            return kBadObjective;
        }
    }
};

struct ProfilePoint {
    double loglik = -std::numeric_limits<double>::infinity();
    bool converged = false;
    std::vector<double> rest_z;
};

ProfilePoint optimise_point(ProfileObjective& obj, double value,
                            const std::vector<double>& warm, const ProfileOptions& options) {
    obj.fixed_value = value;
    ProfilePoint point;
    if (warm.empty()) {
        // Nothing left to optimise: the profile value is a direct evaluation.
        const double f = obj(std::span<const double>{});
        point.loglik = -f;
        point.converged = f < kBadObjective;
        return point;
    }
    const NelderMeadResult run = nelder_mead(
        [&](std::span<const double> z) { return obj(z); }, warm, 0.1, options.f_tol,
        options.max_evals);
    point.loglik = -run.fmin;
    point.converged = run.converged && run.fmin < kBadObjective;
    point.rest_z = run.x;
    return point;
}

}  // namespace

std::vector<double> make_profile_grid(const FitResult& fit, ParamId param, int n_points,
                                      double span_se) {
    if (n_points < 2) throw std::invalid_argument("make_profile_grid: need n_points >= 2");
    const int k = fit.index_of(param);
    if (k < 0) throw std::invalid_argument("make_profile_grid: parameter is not free in this fit");
    const double centre = fit.mle[static_cast<size_t>(k)];

    double se = 0.0;
    if (fit.covariance.rows() > k) {
        const double var = fit.covariance(k, k);
        if (std::isfinite(var) && var > 0.0) se = std::sqrt(var);
    }
    if (!(se > 0.0)) se = 0.1 * std::max(std::abs(centre), 0.1);  // covariance unusable

    const double lo = clip_to_domain(param, centre - span_se * se);
    const double hi = clip_to_domain(param, centre + span_se * se);
    std::vector<double> grid(static_cast<size_t>(n_points));
    for (int j = 0; j < n_points; ++j) {
        grid[static_cast<size_t>(j)] = lo + (hi - lo) * j / (n_points - 1);
    }
    return grid;
}

ProfileCurve profile(ParamId param, const std::vector<IncidenceDataset>& datasets,
                     const FitSpec& spec, std::vector<double> grid, const FitResult& fit,
                     const ProfileOptions& options, const std::vector<double>& warm_start_z) {
    spec.validate();
    const int pidx = fit.index_of(param);
    if (pidx < 0) throw std::invalid_argument("profile: parameter is not free in this spec");
    if (grid.empty()) throw std::invalid_argument("profile: grid is empty");
    std::sort(grid.begin(), grid.end());

    ProfileObjective obj;
    obj.datasets = &datasets;
    obj.spec = &spec;
    obj.param_index = static_cast<size_t>(pidx);
    std::vector<double> rest_natural;
    for (size_t k = 0; k < spec.free_params.size(); ++k) {
        if (static_cast<int>(k) == pidx) continue;
        obj.rest_ids.push_back(spec.free_params[k]);
        obj.rest_positions.push_back(k);
        rest_natural.push_back(fit.mle[k]);
    }
    const std::vector<double> warm_mle =
        warm_start_z.empty() ? transform_subset(obj.rest_ids, rest_natural) : warm_start_z;

    ProfileCurve curve;
    curve.param = param;
    curve.grid = grid;
    curve.profile_loglik.assign(grid.size(), 0.0);
    curve.point_converged.assign(grid.size(), false);
    curve.mle_loglik = fit.loglik;
    curve.mle_value = fit.mle[static_cast<size_t>(pidx)];

    size_t start = 0;
    for (size_t j = 1; j < grid.size(); ++j) {
        if (std::abs(grid[j] - curve.mle_value) < std::abs(grid[start] - curve.mle_value)) start = j;
    }

    std::vector<std::vector<double>> rest_at_point(grid.size());
    auto sweep = [&](size_t from, bool rightward) {
        std::vector<double> warm = warm_mle;
        size_t j = from;
        for (;;) {
            const ProfilePoint point = optimise_point(obj, grid[j], warm, options);
            curve.profile_loglik[j] = point.loglik;
            curve.point_converged[j] = point.converged;
            rest_at_point[j] = point.rest_z;
            if (point.converged && !point.rest_z.empty()) warm = point.rest_z;
            if (rightward) {
                if (++j >= grid.size()) break;
            } else {
                if (j-- == 0) break;
            }
        }
    };
    sweep(start, true);
    if (start > 0) sweep(start - 1, false);

    curve.rest_at_point = std::move(rest_at_point);
    return curve;
}

ProfileCi ci_from_profile(const ProfileCurve& curve) {
    const double threshold = curve.mle_loglik - kChiSq95Df1 / 2.0;

    // Nearest converged grid point to the MLE anchors the confidence set.
    int anchor = -1;
    for (size_t j = 0; j < curve.grid.size(); ++j) {
        if (!curve.point_converged[j]) continue;
        if (anchor < 0 || std::abs(curve.grid[j] - curve.mle_value) <
                              std::abs(curve.grid[static_cast<size_t>(anchor)] - curve.mle_value)) {
            anchor = static_cast<int>(j);
        }
    }
    if (anchor < 0) throw std::runtime_error("ci_from_profile: no converged grid points");
    if (curve.profile_loglik[static_cast<size_t>(anchor)] < threshold) {
        throw std::runtime_error(
            "ci_from_profile: profile at the MLE grid point exceeds the chi-square threshold; "
            "curve is inconsistent with the reported MLE");
    }

    ProfileCi ci;
    ci.lower = curve.grid[static_cast<size_t>(anchor)];
    ci.upper = ci.lower;

    auto interpolate = [&](size_t above, size_t below) {
        const double la = curve.profile_loglik[above], lb = curve.profile_loglik[below];
        const double ga = curve.grid[above], gb = curve.grid[below];
        const double f = (la - threshold) / (la - lb);
        return ga + f * (gb - ga);
    };

    // Walk right from the anchor to the first converged point under threshold.
    ci.upper_open = true;
    size_t last_above = static_cast<size_t>(anchor);
    for (size_t j = static_cast<size_t>(anchor) + 1; j < curve.grid.size(); ++j) {
        if (!curve.point_converged[j]) continue;
        if (curve.profile_loglik[j] >= threshold) {
            last_above = j;
            continue;
        }
        ci.upper = interpolate(last_above, j);
        ci.upper_open = false;
        break;
    }
    if (ci.upper_open) ci.upper = curve.grid.back();

    ci.lower_open = true;
    last_above = static_cast<size_t>(anchor);
    for (size_t jr = static_cast<size_t>(anchor); jr-- > 0;) {
        if (!curve.point_converged[jr]) continue;
        if (curve.profile_loglik[jr] >= threshold) {
            last_above = jr;
            continue;
        }
        ci.lower = interpolate(last_above, jr);
        ci.lower_open = false;
        break;
    }
    if (ci.lower_open) ci.lower = curve.grid.front();
    return ci;
}

namespace {

// True when some converged above-threshold point lies outside the contiguous
// above-threshold run containing the anchor (a disconnected 95% set).
bool set_is_disconnected(const ProfileCurve& curve, const ProfileCi& ci) {
    const double threshold = curve.mle_loglik - kChiSq95Df1 / 2.0;
    for (size_t j = 0; j < curve.grid.size(); ++j) {
        if (!curve.point_converged[j] || curve.profile_loglik[j] < threshold) continue;
        const double g = curve.grid[j];
        if ((g < ci.lower && !ci.lower_open) || (g > ci.upper && !ci.upper_open)) return true;
    }
    return false;
}

void merge_points(ProfileCurve& curve, const ProfileCurve& extra) {
    for (size_t j = 0; j < extra.grid.size(); ++j) {
        const auto at = std::upper_bound(curve.grid.begin(), curve.grid.end(), extra.grid[j]);
        const size_t pos = static_cast<size_t>(at - curve.grid.begin());
        curve.grid.insert(curve.grid.begin() + static_cast<long>(pos), extra.grid[j]);
        curve.profile_loglik.insert(curve.profile_loglik.begin() + static_cast<long>(pos),
                                    extra.profile_loglik[j]);
        curve.point_converged.insert(curve.point_converged.begin() + static_cast<long>(pos),
                                     extra.point_converged[j]);
        curve.rest_at_point.insert(curve.rest_at_point.begin() + static_cast<long>(pos),
                                   extra.rest_at_point[j]);
    }
}

}  // namespace

ProfileResult profiled_ci(ParamId param, const std::vector<IncidenceDataset>& datasets,
                          const FitSpec& spec, const FitResult& fit,
                          const ProfileOptions& options) {
    std::vector<double> grid = make_profile_grid(fit, param, options.n_points, options.span_se);

    ProfileResult out;
    out.curve = profile(param, datasets, spec, grid, fit, options);
    ProfileCi ci = ci_from_profile(out.curve);

    // Extend outward once per side if the threshold was not crossed inside
    // the initial span and the domain allows more room.
    auto extend_side = [&](bool lower_side) -> bool {
        const double step = (out.curve.grid.back() - out.curve.grid.front()) /
                            static_cast<double>(out.curve.grid.size() - 1);
        std::vector<double> extension;
        for (int j = 1; j <= options.n_points / 2; ++j) {
            const double g = lower_side ? out.curve.grid.front() - j * step
                                        : out.curve.grid.back() + j * step;
            const double clipped = clip_to_domain(param, g);
            if (std::abs(clipped - g) > 1e-12 * std::max(1.0, std::abs(g))) break;
            extension.push_back(clipped);
        }
        if (extension.empty()) return false;
        merge_points(out.curve, profile(param, datasets, spec, extension, fit, options));
        return true;
    };
    if (ci.upper_open && extend_side(false)) ci = ci_from_profile(out.curve);
    if (ci.lower_open && extend_side(true)) ci = ci_from_profile(out.curve);

    if (options.refine_crossings) {
        // One refinement pass: extra points inside each bracketing interval,
        // warm-started from the inner bracket point's optimum.
        auto refine_at = [&](double endpoint) {
            const auto hi = std::upper_bound(out.curve.grid.begin(), out.curve.grid.end(), endpoint);
            if (hi == out.curve.grid.begin() || hi == out.curve.grid.end()) return;
            const size_t ib = static_cast<size_t>(hi - out.curve.grid.begin());
            const double b = out.curve.grid[ib];
            const double a = out.curve.grid[ib - 1];
            std::vector<double> refinement;
            for (int j = 1; j <= options.refine_points; ++j) {
                refinement.push_back(a + (b - a) * j / (options.refine_points + 1));
            }
            // Whichever bracket side is closer to the MLE carries the better
            // warm start for the ridge.
            const size_t inner = (std::abs(a - out.curve.mle_value) < std::abs(b - out.curve.mle_value))
                                     ? ib - 1
                                     : ib;
            merge_points(out.curve, profile(param, datasets, spec, refinement, fit, options,
                                            out.curve.rest_at_point[inner]));
        };
        if (!ci.lower_open) refine_at(ci.lower);
        if (!ci.upper_open) refine_at(ci.upper);
        ci = ci_from_profile(out.curve);
    }

    out.curve.needs_refinement = set_is_disconnected(out.curve, ci);
    out.ci = ci;
    return out;
}

void write_profile_csv(const ProfileCurve& curve, const ProfileCi& ci, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_profile_csv: cannot open " + path);
    out << "param,grid_value,profile_loglik,within_ci\n";
    char line[160];
    for (size_t j = 0; j < curve.grid.size(); ++j) {
        const bool within = ci.covers(curve.grid[j]);
        std::snprintf(line, sizeof(line), "%s,%.17g,%.17g,%d\n", param_name(curve.param),
                      curve.grid[j], curve.profile_loglik[j], within ? 1 : 0);
        out << line;
    }
}

}  // namespace heteroseir
