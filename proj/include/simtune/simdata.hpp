#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simtune/dataset.hpp"
#include "simtune/sampling.hpp"
#include "simtune/simulator.hpp"

namespace simtune {

/// One simulator-labeled example: the sampled table (restricted to the rows
/// the block uses, plus the globals), the block, and simulate()'s output.
struct SimTriple {
    ParameterTable table;
    std::string block_id;
    double timing = 0.0;
};

struct SimulatedDataset {
    std::vector<SimTriple> triples;
    std::int64_t skipped_unschedulable = 0;

    std::size_t size() const { return triples.size(); }
};

/// Draws multiplier * |source| triples: each one samples a fresh table from
/// `spec` and a uniformly random block from `source`, then labels it with the
/// simulator. Unschedulable draws are skipped (counted) and redrawn.
/// Deterministic given the rng state; simulation runs in parallel after all
/// draws are made.
SimulatedDataset generate_simulated_dataset(const BlockSimulator& sim, const Dataset& source,
                                            const SamplingSpec& spec, int multiplier, Rng& rng,
                                            const FreezeMask& mask = {},
                                            const ParameterTable* defaults = nullptr,
                                            int iterations = kDefaultIterations, int threads = 0);

void save_simdata(const SimulatedDataset& data, const std::string& path);
SimulatedDataset load_simdata(const std::string& path);

}  // namespace simtune
