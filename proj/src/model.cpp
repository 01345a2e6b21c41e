#include "heteroseir/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace heteroseir {

void NpiSchedule::validate() const {
    if (!(t0 >= 0.0) || !(t1 >= t0)) {
        throw std::invalid_argument("NpiSchedule: need 0 <= t0 <= t1, got t0=" +
                                    std::to_string(t0) + ", t1=" + std::to_string(t1));
    }
    if (!(c1 >= 0.0 && c1 <= 1.0)) {
        throw std::invalid_argument("NpiSchedule: c1 must lie in [0, 1], got " + std::to_string(c1));
    }
}

double npi_factor(double t, const NpiSchedule& npi) {
    if (t <= npi.t0) return 1.0;
    if (npi.t0 >= npi.t1 || t > npi.t1) return npi.c1;
    return 1.0 - (1.0 - npi.c1) * (t - npi.t0) / (npi.t1 - npi.t0);
}

double beta_from_r0(double r0, double rho, double delta, double gamma) {
    const double scale = rho / delta + 1.0 / gamma;
    if (scale == 0.0) {
        throw std::invalid_argument("beta_from_r0: rho/delta + 1/gamma is zero");
    }
    return r0 / scale;
}

void ModelParams::validate() const {
    if (!(r0 >= 0.0)) throw std::invalid_argument("ModelParams: r0 must be >= 0");
    if (!(nu >= 0.0)) throw std::invalid_argument("ModelParams: nu must be >= 0");
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("ModelParams: rho must lie in [0, 1]");
    if (!(delta > 0.0)) throw std::invalid_argument("ModelParams: delta must be > 0");
    if (!(gamma > 0.0)) throw std::invalid_argument("ModelParams: gamma must be > 0");
    if (!(n_pop > 0.0)) throw std::invalid_argument("ModelParams: n_pop must be > 0");
    npi.validate();
    const double b = beta();
    if (!std::isfinite(b) || b < 0.0) throw std::invalid_argument("ModelParams: derived beta is invalid");
}

StateDeriv reduced_rhs(const EpidemicState& state, const ModelParams& params) {
    const double c = npi_factor(state.t, params.npi);
    const double beta = params.beta();
    const double exponent = 1.0 + params.nu * params.nu;
    const double s_frac = std::max(state.s, 0.0) / params.n_pop;
    const double depletion = (exponent == 1.0) ? s_frac : std::pow(s_frac, exponent);
    const double force = c * beta * (params.rho * state.e + state.i) * depletion;

    StateDeriv d;
    d.ds = -force;
    d.de = force - params.delta * state.e;
    d.di = params.delta * state.e - params.gamma * state.i;
    d.dr = params.gamma * state.i;
    return d;
}

double SusceptibilityGrid::weight_sum() const {
    double w = 0.0;
    for (const auto& n : nodes) w += n.weight;
    return w;
}

double SusceptibilityGrid::mean_x() const {
    double m = 0.0;
    for (const auto& n : nodes) m += n.weight * n.x;
    return m;
}

double SusceptibilityGrid::cv_x() const {
    const double m = mean_x();
    double v = 0.0;
    for (const auto& n : nodes) v += n.weight * (n.x - m) * (n.x - m);
    return std::sqrt(std::max(v, 0.0)) / m;
}

double SusceptibilityGrid::total_susceptible() const {
    double s = 0.0;
    for (const auto& n : nodes) s += n.s_density;
    return s;
}

SusceptibilityGrid gamma_susceptibility_grid(double nu, int n_nodes, double total_susceptible) {
    if (n_nodes < 1) throw std::invalid_argument("gamma_susceptibility_grid: need n_nodes >= 1");
    if (!(nu >= 0.0)) throw std::invalid_argument("gamma_susceptibility_grid: nu must be >= 0");

    SusceptibilityGrid grid;
    if (nu == 0.0) {
        grid.nodes.push_back({1.0, 1.0, total_susceptible});
        return grid;
    }

    // Golub-Welsch: nodes/weights of Gauss quadrature for the gamma density
    // with shape 1/nu^2, scale nu^2 come from the eigen-decomposition of the
    // Jacobi matrix of the generalized Laguerre recurrence with
    // alpha = shape - 1; node x = eigenvalue * scale, weight = (first
    // eigenvector component)^2.
    const double shape = 1.0 / (nu * nu);
    const double scale = nu * nu;
    const double alpha = shape - 1.0;

    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
    for (int k = 0; k < n_nodes; ++k) {
        jacobi(k, k) = 2.0 * k + alpha + 1.0;
        if (k + 1 < n_nodes) {
            const double b = std::sqrt((k + 1.0) * (k + 1.0 + alpha));
            jacobi(k, k + 1) = b;
            jacobi(k + 1, k) = b;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("gamma_susceptibility_grid: Jacobi eigen-decomposition failed");
    }

    grid.nodes.reserve(static_cast<size_t>(n_nodes));
    double weight_total = 0.0;
    for (int k = 0; k < n_nodes; ++k) {
        const double w = solver.eigenvectors()(0, k) * solver.eigenvectors()(0, k);
        grid.nodes.push_back({solver.eigenvalues()(k) * scale, w, 0.0});
        weight_total += w;
    }
    for (auto& node : grid.nodes) {
        node.weight /= weight_total;
        node.s_density = node.weight * total_susceptible;
    }
    return grid;
}

ExplicitDeriv explicit_rhs(const SusceptibilityGrid& grid, double e, double i,
                           const ModelParams& params, double t) {
    const double c = npi_factor(t, params.npi);
    const double beta = params.beta();
    const double infectious_pressure = c * beta * (params.rho * e + i);

    ExplicitDeriv d;
    d.d_density.resize(grid.nodes.size());
    double integrated = 0.0;  // sum of x * S(x) / N over nodes
    for (size_t k = 0; k < grid.nodes.size(); ++k) {
        const double flow = grid.nodes[k].x * std::max(grid.nodes[k].s_density, 0.0) / params.n_pop;
        d.d_density[k] = -infectious_pressure * flow;
        integrated += flow;
    }
    d.de = infectious_pressure * integrated - params.delta * e;
    d.di = params.delta * e - params.gamma * i;
    return d;
}

EpidemicState initial_state(double i0, const ModelParams& params) {
    if (i0 < 0.0) throw std::invalid_argument("initial_state: i0 must be >= 0");
    if (3.5 * i0 > params.n_pop) {
        throw std::invalid_argument("initial_state: 3.5 * i0 exceeds the population size");
    }
    EpidemicState st;
    st.i = i0;
    st.e = 2.5 * i0;
    st.s = params.n_pop - 3.5 * i0;
    st.r = 0.0;
    st.t = 0.0;
    return st;
}

LinearEigen linear_eigen(const ModelParams& params) {
    const double beta = params.beta();
    const double a11 = params.rho * beta - params.delta;
    const double a12 = beta;
    const double a21 = params.delta;
    const double a22 = -params.gamma;

    const double trace = a11 + a22;
    const double disc = (a11 - a22) * (a11 - a22) + 4.0 * a12 * a21;
    const double root = std::sqrt(std::max(disc, 0.0));

    LinearEigen out;
    out.lambda_plus = 0.5 * (trace + root);
    out.lambda_minus = 0.5 * (trace - root);
    // dominant eigenvector from the I-row: delta E - gamma I = lambda I
    out.e_over_i = (out.lambda_plus + params.gamma) / params.delta;
    return out;
}

}  // namespace heteroseir
