#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simtune/dataset.hpp"
#include "simtune/params.hpp"
#include "simtune/sampling.hpp"
#include "simtune/simulator.hpp"

namespace simtune {

/// Bounded integer search box for the black-box tuner: per-instruction values
/// in [0,5] (micro-ops in [1,5]), dispatch width in [1,10], reorder buffer in
/// [50,250]. Degenerate ranges pin a family, which shrinks the space for toy
/// experiments.
struct SearchSpace {
    int ports = kDefaultPorts;
    SamplingRange write_latency{0, 5};
    SamplingRange read_advance{0, 5};
    SamplingRange port_map{0, 5};
    SamplingRange num_micro_ops{1, 5};
    SamplingRange dispatch_width{1, 10};
    SamplingRange reorder_buffer_size{50, 250};
};

/// Block-evaluation allowance. One simulator run on one block costs one unit.
struct Budget {
    std::int64_t total = 0;
    std::int64_t consumed = 0;

    std::int64_t remaining() const { return total - consumed; }
};

/// MAPE of the candidate on `subset`, charging |subset| evaluations to the
/// budget. Throws DataError when the remaining budget cannot cover it.
double evaluate_candidate(const BlockSimulator& sim, const ParameterTable& table,
                          const Dataset& subset, Budget& budget,
                          int iterations = kDefaultIterations, int threads = 0);

struct TuneIteration {
    int iteration = 0;
    std::string technique;
    double candidate_mape = 0.0;
    double best_mape = 0.0;
};

struct TuneResult {
    ParameterTable best;
    double best_mape = 0.0;        // on the fixed evaluation subset
    double full_train_mape = -1.0; // final full-train evaluation; -1 if truncated before it
    bool truncated = false;
    std::vector<TuneIteration> log;
};

/// Black-box search under a fixed evaluation budget: a UCB1 bandit picks per
/// iteration among uniform resampling, single-entry hill climbing and
/// simulated annealing over mutation distance. The starting point is a
/// sampling-distribution draw clamped into the space; candidates are scored
/// on a fixed random mini-subset and the incumbent gets one full-train
/// evaluation at the end. Requires budget for at least one full-dataset
/// evaluation.
TuneResult tune(const BlockSimulator& sim, const Dataset& train, const SearchSpace& space,
                Budget& budget, std::uint64_t seed, int subset_size = 512,
                int iterations = kDefaultIterations, int threads = 0);

}  // namespace simtune
