#pragma once

#include <string>
#include <vector>

#include "simtune/params.hpp"
#include "simtune/rng.hpp"

namespace simtune {

struct SamplingRange {
    int lo = 0;
    int hi = 0;
};

/// Per-family sampling distributions for random parameter tables:
/// write_latency and read_advance U{0..5}, num_micro_ops U{1..10},
/// dispatch_width U{1..10}, reorder_buffer_size U{50..250}; the port map
/// picks k ~ U{0..2} distinct ports, each occupied for an independently drawn
/// U{0..2} cycles.
struct SamplingSpec {
    int ports = kDefaultPorts;
    SamplingRange write_latency{0, 5};
    SamplingRange read_advance{0, 5};
    SamplingRange num_micro_ops{1, 10};
    SamplingRange dispatch_width{1, 10};
    SamplingRange reorder_buffer_size{50, 250};
    SamplingRange port_count{0, 2};
    SamplingRange port_cycles{0, 2};
};

ParameterTable sample_parameter_table(const SamplingSpec& spec,
                                      const std::vector<std::string>& opcodes, Rng& rng);

/// As above, but entries covered by `mask` are copied from `defaults` instead
/// of sampled (used by subset-learning runs). `defaults` must cover every
/// frozen entry.
ParameterTable sample_parameter_table(const SamplingSpec& spec,
                                      const std::vector<std::string>& opcodes, Rng& rng,
                                      const FreezeMask& mask, const ParameterTable* defaults);

}  // namespace simtune
