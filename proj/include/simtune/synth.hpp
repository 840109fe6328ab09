#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simtune/dataset.hpp"
#include "simtune/sampling.hpp"
#include "simtune/simulator.hpp"

namespace simtune {

/// Shape of the synthetic workload used by the parameter-recovery experiment.
struct SynthConfig {
    int opcode_count = 30;
    int block_count = 3000;
    int min_length = 1;
    int max_length = 8;
    int register_count = kDefaultRegisterCount;
    int memory_ids = 4;
    double write_probability = 0.9;
    int max_reads = 2;
    double load_probability = 0.2;
    double store_probability = 0.15;
    int iterations = kDefaultIterations;
};

/// Zero-padded opcode names OP00, OP01, ...
std::vector<std::string> make_opcode_names(int count);

BasicBlock random_synthetic_block(const SynthConfig& config,
                                  const std::vector<std::string>& opcodes, std::string id,
                                  Rng& rng);

struct RecoveryData {
    Dataset data;
    ParameterTable hidden_table;  // the ground truth the experiment tries to recover
};

/// Random blocks labeled by the simulator under a hidden table drawn from the
/// sampling distributions. Deterministic under seed.
RecoveryData generate_recovery_dataset(const SynthConfig& config, const SamplingSpec& sampling,
                                       const BlockSimulator& sim, std::uint64_t seed,
                                       int threads = 0);

}  // namespace simtune
