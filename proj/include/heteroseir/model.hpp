#ifndef HETEROSEIR_MODEL_HPP
#define HETEROSEIR_MODEL_HPP

#include <vector>

namespace heteroseir {

/// Piecewise-linear contact-reduction profile: c(t) = 1 until t0, linear ramp
/// down on (t0, t1], floor c1 afterwards. c1 = 1 encodes "no NPI" (c(t) = 1
/// for all t).
struct NpiSchedule {
    double t0 = 15.0;  // days, start of behaviour change
    double t1 = 20.0;  // days, start of maximal containment
    double c1 = 1.0;   // dimensionless floor factor in [0, 1]

    static NpiSchedule none() { return NpiSchedule{0.0, 0.0, 1.0}; }

    /// Throws std::invalid_argument unless 0 <= t0 <= t1 and c1 in [0, 1].
    void validate() const;
};

/// Contact factor at time t. Total on any finite t0, t1, c1: when t0 >= t1
/// the ramp degenerates to a step at t0 (1 before, c1 after), which is also
/// what the optimizer sees when it wanders past the fixed t1.
double npi_factor(double t, const NpiSchedule& npi);

/// beta = r0 / (rho/delta + 1/gamma). Throws if the denominator is zero.
double beta_from_r0(double r0, double rho, double delta, double gamma);

/// Rate and shape parameters of the transmission model plus population size.
struct ModelParams {
    double r0 = 3.0;           // basic reproduction number
    double nu = 0.0;           // coefficient of variation of susceptibility
    double rho = 0.5;          // relative infectiousness in E
    double delta = 1.0 / 5.5;  // E -> I rate, per day
    double gamma = 0.25;       // I -> R rate, per day
    double n_pop = 100000.0;   // total population
    NpiSchedule npi = NpiSchedule::none();

    double beta() const { return beta_from_r0(r0, rho, delta, gamma); }

    /// Throws std::invalid_argument on out-of-domain values.
    void validate() const;
};

/// Aggregate compartments at one time point.
struct EpidemicState {
    double s = 0.0;
    double e = 0.0;
    double i = 0.0;
    double r = 0.0;
    double t = 0.0;  // days

    double total() const { return s + e + i + r; }
};

/// Time derivative of an EpidemicState.
struct StateDeriv {
    double ds = 0.0;
    double de = 0.0;
    double di = 0.0;
    double dr = 0.0;
};

/// Right-hand side of the reduced system:
///   dS = -c(t) beta (rho E + I) (S/N)^(1+nu^2),  dE = -dS - delta E,
///   dI = delta E - gamma I,  dR = gamma I.
/// S is clamped to 0 inside the power term to tolerate integrator undershoot.
/// nu = 0 uses exponent 1 exactly.
StateDeriv reduced_rhs(const EpidemicState& state, const ModelParams& params);

/// Discretised susceptibility distribution for the explicit system. Nodes
/// carry a susceptibility factor x, a probability weight, and the current
/// susceptible mass at that factor.
struct SusceptibilityGrid {
    struct Node {
        double x;          // susceptibility factor
        double weight;     // probability mass
        double s_density;  // individuals at this node
    };
    std::vector<Node> nodes;

    double weight_sum() const;
    double mean_x() const;     // weighted mean of x
    double cv_x() const;       // weighted coefficient of variation of x
    double total_susceptible() const;
};

/// Gauss quadrature grid for a gamma distribution with mean 1 and coefficient
/// of variation nu (shape 1/nu^2, scale nu^2), with the total susceptible mass
/// spread over the nodes in proportion to their weights. nu = 0 yields the
/// single node x = 1. Mean and CV of the node set match the distribution to
/// machine precision.
SusceptibilityGrid gamma_susceptibility_grid(double nu, int n_nodes, double total_susceptible);

/// Derivatives of the explicit system: per-node susceptible densities plus
/// the aggregate E and I equations.
struct ExplicitDeriv {
    std::vector<double> d_density;
    double de = 0.0;
    double di = 0.0;
};

/// Right-hand side of the explicit system: each node evolves by
/// -c(t) beta (rho E + I) x S(x)/N; dE gains the weight-integrated force of
/// infection and loses delta E; dI = delta E - gamma I.
ExplicitDeriv explicit_rhs(const SusceptibilityGrid& grid, double e, double i,
                           const ModelParams& params, double t);

/// State at t = 0 seeded with i0 infectious individuals:
/// I = i0, E = 2.5 i0, S = N - 3.5 i0, R = 0.
/// Throws std::invalid_argument if i0 < 0 or 3.5 i0 > N.
EpidemicState initial_state(double i0, const ModelParams& params);

/// Eigen-analysis of the 2x2 early-epidemic linearisation
///   d/dt (E, I) = [[rho beta - delta, beta], [delta, -gamma]] (E, I).
struct LinearEigen {
    double lambda_plus;   // dominant growth rate, per day
    double lambda_minus;  // subdominant rate, per day
    double e_over_i;      // E/I component ratio of the dominant eigenvector
};

LinearEigen linear_eigen(const ModelParams& params);

}  // namespace heteroseir

#endif  // HETEROSEIR_MODEL_HPP
