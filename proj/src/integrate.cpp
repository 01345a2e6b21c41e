#include "heteroseir/integrate.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace heteroseir {

namespace {

int steps_per_day(double step) {
    const long long n = std::llround(1.0 / step);
    if (n < 1 || std::abs(static_cast<double>(n) * step - 1.0) > 1e-9) {
        throw std::invalid_argument("integrate: step must divide one day");
    }
    return static_cast<int>(n);
}

void check_finite(const EpidemicState& st) {
    if (!std::isfinite(st.s) || !std::isfinite(st.e) || !std::isfinite(st.i) || !std::isfinite(st.r)) {
        throw std::runtime_error("integrate: non-finite state at t = " + std::to_string(st.t));
    }
}

EpidemicState advance(const EpidemicState& y, const StateDeriv& d, double h, double t) {
    return EpidemicState{y.s + h * d.ds, y.e + h * d.de, y.i + h * d.di, y.r + h * d.dr, t};
}

}  // namespace

Trajectory integrate(const ModelParams& params, const EpidemicState& init, int horizon_days,
                     double step) {
    if (horizon_days < 1) throw std::invalid_argument("integrate: horizon must be >= 1 day");
    const int substeps = steps_per_day(step);

    Trajectory traj;
    traj.times.reserve(static_cast<size_t>(horizon_days) + 1);
    traj.states.reserve(static_cast<size_t>(horizon_days) + 1);
    traj.incidence.reserve(static_cast<size_t>(horizon_days) + 1);

    EpidemicState y = init;
    y.t = 0.0;
    traj.times.push_back(0.0);
    traj.states.push_back(y);
    traj.incidence.push_back(params.delta * y.e);

    for (int day = 0; day < horizon_days; ++day) {
        const double day0 = static_cast<double>(day);
        for (int k = 0; k < substeps; ++k) {
            const double t = day0 + k * step;
            const double h = step;
            y.t = t;
            const StateDeriv k1 = reduced_rhs(y, params);
            const StateDeriv k2 = reduced_rhs(advance(y, k1, h / 2, t + h / 2), params);
            const StateDeriv k3 = reduced_rhs(advance(y, k2, h / 2, t + h / 2), params);
            const StateDeriv k4 = reduced_rhs(advance(y, k3, h, t + h), params);
            y.s += h / 6 * (k1.ds + 2 * k2.ds + 2 * k3.ds + k4.ds);
            y.e += h / 6 * (k1.de + 2 * k2.de + 2 * k3.de + k4.de);
            y.i += h / 6 * (k1.di + 2 * k2.di + 2 * k3.di + k4.di);
            y.r += h / 6 * (k1.dr + 2 * k2.dr + 2 * k3.dr + k4.dr);
        }
        y.t = day0 + 1.0;
        check_finite(y);
        traj.times.push_back(y.t);
        traj.states.push_back(y);
        traj.incidence.push_back(params.delta * y.e);
    }
    return traj;
}

Trajectory integrate_explicit(const ModelParams& params, double i0, int horizon_days,
                              int n_nodes, double step) {
    if (horizon_days < 1) throw std::invalid_argument("integrate_explicit: horizon must be >= 1 day");
    const int substeps = steps_per_day(step);

    const EpidemicState init = initial_state(i0, params);
    SusceptibilityGrid grid = gamma_susceptibility_grid(params.nu, n_nodes, init.s);
    const size_t n = grid.nodes.size();

    // Flattened state: node densities, then E, I, R.
    std::vector<double> y(n + 3);
    for (size_t k = 0; k < n; ++k) y[k] = grid.nodes[k].s_density;
    y[n] = init.e;
    y[n + 1] = init.i;
    y[n + 2] = init.r;

    SusceptibilityGrid scratch = grid;
    auto rhs = [&](const std::vector<double>& state, double t, std::vector<double>& d) {
        for (size_t k = 0; k < n; ++k) scratch.nodes[k].s_density = state[k];
        const ExplicitDeriv ed = explicit_rhs(scratch, state[n], state[n + 1], params, t);
        for (size_t k = 0; k < n; ++k) d[k] = ed.d_density[k];
        d[n] = ed.de;
        d[n + 1] = ed.di;
        d[n + 2] = params.gamma * state[n + 1];
    };

    Trajectory traj;
    traj.times.reserve(static_cast<size_t>(horizon_days) + 1);
    traj.states.reserve(static_cast<size_t>(horizon_days) + 1);
    traj.incidence.reserve(static_cast<size_t>(horizon_days) + 1);

    auto record = [&](double t) {
        double s_total = 0.0;
        for (size_t k = 0; k < n; ++k) s_total += y[k];
        EpidemicState st{s_total, y[n], y[n + 1], y[n + 2], t};
        check_finite(st);
        traj.times.push_back(t);
        traj.states.push_back(st);
        traj.incidence.push_back(params.delta * st.e);
    };
    record(0.0);

    std::vector<double> k1(n + 3), k2(n + 3), k3(n + 3), k4(n + 3), tmp(n + 3);
    for (int day = 0; day < horizon_days; ++day) {
        const double day0 = static_cast<double>(day);
        for (int k = 0; k < substeps; ++k) {
            const double t = day0 + k * step;
            const double h = step;
            rhs(y, t, k1);
            for (size_t j = 0; j < y.size(); ++j) tmp[j] = y[j] + h / 2 * k1[j];
            rhs(tmp, t + h / 2, k2);
            for (size_t j = 0; j < y.size(); ++j) tmp[j] = y[j] + h / 2 * k2[j];
            rhs(tmp, t + h / 2, k3);
            for (size_t j = 0; j < y.size(); ++j) tmp[j] = y[j] + h * k3[j];
            rhs(tmp, t + h, k4);
            for (size_t j = 0; j < y.size(); ++j) {
                y[j] += h / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
            }
        }
        record(day0 + 1.0);
    }
    return traj;
}

std::vector<double> incidence_series(const Trajectory& traj, int from_day, int to_day) {
    const int horizon = static_cast<int>(traj.times.size()) - 1;
    if (from_day < 0 || from_day >= to_day || to_day > horizon) {
        throw std::out_of_range("incidence_series: need 0 <= from_day < to_day <= horizon");
    }
    return std::vector<double>(traj.incidence.begin() + from_day, traj.incidence.begin() + to_day + 1);
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
    out << "day,S,E,I,R,incidence\n";
    char line[256];
    for (size_t k = 0; k < traj.times.size(); ++k) {
        const auto& st = traj.states[k];
        std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", traj.times[k],
                      st.s, st.e, st.i, st.r, traj.incidence[k]);
        out << line;
    }
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
    write_trajectory_csv(traj, out);
}

}  // namespace heteroseir
