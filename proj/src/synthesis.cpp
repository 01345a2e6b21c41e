#include "heteroseir/synthesis.hpp"

#include "heteroseir/integrate.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace heteroseir {

using nlohmann::json;

void Scenario::validate() const {
    params.validate();
    if (n_replicates < 1) throw std::invalid_argument("Scenario: n_replicates must be >= 1");
    if (horizon < 1) throw std::invalid_argument("Scenario: horizon must be >= 1");
    if (i0_focal < 0.0) throw std::invalid_argument("Scenario: i0_focal must be >= 0");
    if (i0_auxiliary && *i0_auxiliary < 0.0) {
        throw std::invalid_argument("Scenario: i0_auxiliary must be >= 0");
    }
}

std::vector<long> poissonize(std::span<const double> expected, RngStream& rng) {
    std::vector<long> counts;
    counts.reserve(expected.size());
    for (const double lambda : expected) {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
            throw std::invalid_argument("poissonize: expected rates must be finite and >= 0");
        }
        counts.push_back(poisson_draw(lambda, rng));
    }
    return counts;
}

std::vector<double> expected_incidence(const ModelParams& params, double i0, int horizon) {
    const Trajectory traj = integrate(params, initial_state(i0, params), horizon);
    return incidence_series(traj, 1, horizon);
}

std::vector<std::vector<IncidenceDataset>> generate_scenario(const Scenario& scenario) {
    scenario.validate();

    std::vector<double> i0s{scenario.i0_focal};
    if (scenario.i0_auxiliary) i0s.push_back(*scenario.i0_auxiliary);

    // Deterministic incidence is shared across replicates; only the noise
    // stream differs.
    std::vector<std::vector<double>> expected;
    expected.reserve(i0s.size());
    for (const double i0 : i0s) {
        expected.push_back(expected_incidence(scenario.params, i0, scenario.horizon));
    }

    std::vector<std::vector<IncidenceDataset>> replicates(
        static_cast<size_t>(scenario.n_replicates));
    for (int r = 0; r < scenario.n_replicates; ++r) {
        auto& group = replicates[static_cast<size_t>(r)];
        group.reserve(i0s.size());
        for (size_t epi = 0; epi < i0s.size(); ++epi) {
            RngStream rng(scenario.rng_seed, static_cast<std::uint64_t>(r), epi);
            IncidenceDataset ds;
            ds.counts = poissonize(expected[epi], rng);
            ds.truth = scenario.params;
            ds.i0 = i0s[epi];
            ds.replicate_id = r;
            group.push_back(std::move(ds));
        }
    }
    return replicates;
}

void write_datasets_csv(const std::vector<std::vector<IncidenceDataset>>& replicates,
                        const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_datasets_csv: cannot open " + path);
    // Within a replicate the epidemics appear focal first, auxiliary second;
    // the day column restarting at 1 marks the boundary.
    out << "day,count,replicate_id\n";
    for (const auto& group : replicates) {
        for (const auto& ds : group) {
            for (size_t k = 0; k < ds.counts.size(); ++k) {
                out << (k + 1) << ',' << ds.counts[k] << ',' << ds.replicate_id << '\n';
            }
        }
    }
}

namespace {

json params_to_json(const ModelParams& p) {
    return json{{"r0", p.r0},       {"nu", p.nu},     {"rho", p.rho},
                {"delta", p.delta}, {"gamma", p.gamma}, {"n_pop", p.n_pop},
                {"npi", json{{"t0", p.npi.t0}, {"t1", p.npi.t1}, {"c1", p.npi.c1}}}};
}

ModelParams params_from_json(const json& j) {
    ModelParams p;
    p.r0 = j.at("r0").get<double>();
    p.nu = j.at("nu").get<double>();
    p.rho = j.value("rho", p.rho);
    p.delta = j.value("delta", p.delta);
    p.gamma = j.value("gamma", p.gamma);
    p.n_pop = j.value("n_pop", p.n_pop);
    if (j.contains("npi")) {
        const auto& n = j.at("npi");
        p.npi.t0 = n.value("t0", p.npi.t0);
        p.npi.t1 = n.value("t1", p.npi.t1);
        p.npi.c1 = n.value("c1", p.npi.c1);
    }
    return p;
}

}  // namespace

void write_scenario_meta(const Scenario& scenario, const std::string& path) {
    json j;
    j["params"] = params_to_json(scenario.params);
    j["i0_focal"] = scenario.i0_focal;
    if (scenario.i0_auxiliary) j["i0_auxiliary"] = *scenario.i0_auxiliary;
    j["horizon"] = scenario.horizon;
    j["n_replicates"] = scenario.n_replicates;
    j["rng_seed"] = scenario.rng_seed;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_scenario_meta: cannot open " + path);
    out << j.dump(2) << '\n';
}

Scenario read_scenario_meta(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_scenario_meta: cannot open " + path);
    json j;
    in >> j;
    Scenario s;
    s.params = params_from_json(j.at("params"));
    s.i0_focal = j.at("i0_focal").get<double>();
    if (j.contains("i0_auxiliary")) s.i0_auxiliary = j.at("i0_auxiliary").get<double>();
    s.horizon = j.at("horizon").get<int>();
    s.n_replicates = j.at("n_replicates").get<int>();
    s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    return s;
}

std::vector<std::vector<IncidenceDataset>> read_datasets_csv(const std::string& csv_path,
                                                             const std::string& meta_path) {
    const Scenario scenario = read_scenario_meta(meta_path);
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("read_datasets_csv: cannot open " + csv_path);

    std::vector<std::vector<IncidenceDataset>> replicates;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        int day = 0, replicate = 0;
        long count = 0;
        char comma = ',';
        row >> day >> comma >> count >> comma >> replicate;
        if (!row) throw std::runtime_error("read_datasets_csv: malformed row: " + line);
        if (replicate < 0 || day < 1) {
            throw std::runtime_error("read_datasets_csv: bad indices in row: " + line);
        }
        if (replicates.size() <= static_cast<size_t>(replicate)) {
            replicates.resize(static_cast<size_t>(replicate) + 1);
        }
        auto& group = replicates[static_cast<size_t>(replicate)];
        // A day counter restarting at 1 opens the next epidemic of the pair.
        if (group.empty() || (day == 1 && !group.back().counts.empty())) {
            IncidenceDataset ds;
            ds.truth = scenario.params;
            ds.replicate_id = replicate;
            ds.i0 = group.empty() ? scenario.i0_focal : scenario.i0_auxiliary.value_or(0.0);
            group.push_back(std::move(ds));
        }
        auto& counts = group.back().counts;
        if (counts.size() != static_cast<size_t>(day) - 1) {
            throw std::runtime_error("read_datasets_csv: days out of order near: " + line);
        }
        counts.push_back(count);
    }
    return replicates;
}

}  // namespace heteroseir
