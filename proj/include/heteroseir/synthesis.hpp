#ifndef HETEROSEIR_SYNTHESIS_HPP
#define HETEROSEIR_SYNTHESIS_HPP

#include "heteroseir/model.hpp"
#include "heteroseir/rng.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace heteroseir {

/// One cell of the simulation-study grid: generating parameters, seeds and
/// replication settings. i0_auxiliary is present iff this is a two-epidemic
/// scenario.
struct Scenario {
    ModelParams params;
    double i0_focal = 40.0;
    std::optional<double> i0_auxiliary;
    int horizon = 100;
    int n_replicates = 1;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

/// Observed daily counts for days 1..horizon plus the generating truth.
struct IncidenceDataset {
    std::vector<long> counts;  // counts[k] is the observation for day k+1
    ModelParams truth;
    double i0 = 0.0;
    int replicate_id = 0;
};

/// Independent Poisson draws, one per expected value. Throws on negative or
/// non-finite rates.
std::vector<long> poissonize(std::span<const double> expected, RngStream& rng);

/// All replicates of a scenario. Each inner vector holds one dataset (single
/// epidemic) or the focal/auxiliary pair. Replicate r draws from a stream
/// keyed by (rng_seed, r, epidemic index), so output is identical regardless
/// of generation order.
std::vector<std::vector<IncidenceDataset>> generate_scenario(const Scenario& scenario);

/// Expected (noise-free) daily incidence for days 1..horizon under the
/// scenario truth with the given seed size.
std::vector<double> expected_incidence(const ModelParams& params, double i0, int horizon);

/// CSV with header day,count,replicate_id; all replicates (and both epidemics
/// of a pair, focal first) concatenated.
void write_datasets_csv(const std::vector<std::vector<IncidenceDataset>>& replicates,
                        const std::string& path);

/// Sidecar metadata JSON: generating parameters, seed sizes and RNG seed.
void write_scenario_meta(const Scenario& scenario, const std::string& path);

/// Inverse of write_datasets_csv + write_scenario_meta.
std::vector<std::vector<IncidenceDataset>> read_datasets_csv(const std::string& csv_path,
                                                             const std::string& meta_path);
Scenario read_scenario_meta(const std::string& path);

}  // namespace heteroseir

#endif  // HETEROSEIR_SYNTHESIS_HPP
