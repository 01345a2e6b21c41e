#ifndef HETEROSEIR_NELDER_MEAD_HPP
#define HETEROSEIR_NELDER_MEAD_HPP

#include <algorithm>
#include <functional>
#include <span>
#include <vector>

namespace heteroseir {

struct NelderMeadResult {
    std::vector<double> x;
    double fmin = 0.0;
    int n_evals = 0;
    bool converged = false;
};

/// Derivative-free simplex minimisation with standard coefficients
/// (reflection 1, expansion 2, contraction 0.5, shrink 0.5). Converged when
/// the spread of function values across the simplex drops below f_tol.
inline NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                                    std::span<const double> x0, double initial_step,
                                    double f_tol, int max_evals) {
    const size_t n = x0.size();
    NelderMeadResult result;

    std::vector<std::vector<double>> simplex(n + 1, std::vector<double>(x0.begin(), x0.end()));
    std::vector<double> fvals(n + 1);
    for (size_t i = 1; i <= n; ++i) simplex[i][i - 1] += initial_step;
    for (size_t i = 0; i <= n; ++i) {
        fvals[i] = f(simplex[i]);
        ++result.n_evals;
    }

    std::vector<double> centroid(n), trial(n), trial2(n);
    while (result.n_evals < max_evals) {
        // Order: best first, worst last.
        std::vector<size_t> order(n + 1);
        for (size_t i = 0; i <= n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return fvals[a] < fvals[b]; });
        const size_t best = order[0], worst = order[n], second_worst = order[n > 0 ? n - 1 : 0];

        if (fvals[worst] - fvals[best] < f_tol) {
            result.converged = true;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j];
        }
        for (size_t j = 0; j < n; ++j) centroid[j] /= static_cast<double>(n);

        for (size_t j = 0; j < n; ++j) trial[j] = centroid[j] + (centroid[j] - simplex[worst][j]);
        const double f_reflect = f(trial);
        ++result.n_evals;

        if (f_reflect < fvals[best]) {
            for (size_t j = 0; j < n; ++j) trial2[j] = centroid[j] + 2.0 * (centroid[j] - simplex[worst][j]);
            const double f_expand = f(trial2);
            ++result.n_evals;
            if (f_expand < f_reflect) {
                simplex[worst] = trial2;
                fvals[worst] = f_expand;
            } else {
                simplex[worst] = trial;
                fvals[worst] = f_reflect;
            }
        } else if (f_reflect < fvals[second_worst]) {
            simplex[worst] = trial;
            fvals[worst] = f_reflect;
        } else {
            const bool outside = f_reflect < fvals[worst];
            if (outside) {
                for (size_t j = 0; j < n; ++j) trial2[j] = centroid[j] + 0.5 * (trial[j] - centroid[j]);
            } else {
                for (size_t j = 0; j < n; ++j) trial2[j] = centroid[j] - 0.5 * (centroid[j] - simplex[worst][j]);
            }
            const double f_contract = f(trial2);
            ++result.n_evals;
            if (f_contract < std::min(f_reflect, fvals[worst])) {
                simplex[worst] = trial2;
                fvals[worst] = f_contract;
            } else {
                // Shrink toward the best vertex.
                for (size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (size_t j = 0; j < n; ++j) {
                        simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
                    }
                    fvals[i] = f(simplex[i]);
                    ++result.n_evals;
                }
            }
        }
    }

    size_t best = 0;
    for (size_t i = 1; i <= n; ++i) {
        if (fvals[i] < fvals[best]) best = i;
    }
    result.x = simplex[best];
    result.fmin = fvals[best];
    return result;
}

}  // namespace heteroseir

#endif  // HETEROSEIR_NELDER_MEAD_HPP
