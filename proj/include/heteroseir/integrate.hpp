#ifndef HETEROSEIR_INTEGRATE_HPP
#define HETEROSEIR_INTEGRATE_HPP

#include "heteroseir/model.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace heteroseir {

/// Fixed RK4 step in days. Chosen so the step-halving check passes with a
/// comfortable margin at the model's rates.
inline constexpr double kDefaultStep = 0.05;

/// Daily-resolution trajectory. incidence[k] = delta * states[k].e.
struct Trajectory {
    std::vector<double> times;           // 0, 1, ..., horizon
    std::vector<EpidemicState> states;   // one per day
    std::vector<double> incidence;       // delta * E, per day
};

/// Integrate the reduced system with classical RK4 at fixed step, reporting
/// states at integer days 0..horizon. Throws std::runtime_error if the state
/// goes non-finite.
Trajectory integrate(const ModelParams& params, const EpidemicState& init, int horizon_days,
                     double step = kDefaultStep);

/// Integrate the explicit per-susceptibility-node system from the standard
/// initial state for seed i0, collapsing to an aggregate trajectory. Used as
/// a cross-check of the reduced system.
Trajectory integrate_explicit(const ModelParams& params, double i0, int horizon_days,
                              int n_nodes = 400, double step = kDefaultStep);

/// Slice of expected daily incidence over [from_day, to_day], inclusive.
/// Throws std::out_of_range unless 0 <= from_day < to_day <= horizon.
std::vector<double> incidence_series(const Trajectory& traj, int from_day, int to_day);

/// CSV with header day,S,E,I,R,incidence.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

}  // namespace heteroseir

#endif  // HETEROSEIR_INTEGRATE_HPP
