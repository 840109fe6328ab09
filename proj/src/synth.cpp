#include "simtune/synth.hpp"

#include <cstdio>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "simtune/errors.hpp"

namespace simtune {

std::vector<std::string> make_opcode_names(int count) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(count));
    char buf[16];
    for (int i = 0; i < count; ++i) {
        std::snprintf(buf, sizeof buf, "OP%02d", i);
        names.emplace_back(buf);
    }
    return names;
}

BasicBlock random_synthetic_block(const SynthConfig& config,
                                  const std::vector<std::string>& opcodes, std::string id,
                                  Rng& rng) {
    if (opcodes.empty()) throw DataError("random_synthetic_block: empty opcode list");
    BasicBlock block;
    block.id = std::move(id);
    const int length = static_cast<int>(rng.uniform_int(config.min_length, config.max_length));
    for (int i = 0; i < length; ++i) {
        Instruction instr;
        instr.opcode = opcodes[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(opcodes.size()) - 1))];
        if (rng.bernoulli(config.write_probability))
            instr.writes.push_back(static_cast<int>(rng.uniform_int(0, config.register_count - 1)));
        const int reads = static_cast<int>(rng.uniform_int(0, config.max_reads));
        for (int r = 0; r < reads; ++r)
            instr.reads.push_back(static_cast<int>(rng.uniform_int(0, config.register_count - 1)));
        if (rng.bernoulli(config.load_probability))
            instr.load_mem = "m" + std::to_string(rng.uniform_int(0, config.memory_ids - 1));
        if (rng.bernoulli(config.store_probability))
            instr.store_mem = "m" + std::to_string(rng.uniform_int(0, config.memory_ids - 1));
        block.instructions.push_back(std::move(instr));
    }
    return block;
}

RecoveryData generate_recovery_dataset(const SynthConfig& config, const SamplingSpec& sampling,
                                       const BlockSimulator& sim, std::uint64_t seed,
                                       int threads) {
    Rng rng(derive_seed(seed, "recovery-data"));
    const auto opcodes = make_opcode_names(config.opcode_count);

    RecoveryData out;
    out.hidden_table = sample_parameter_table(sampling, opcodes, rng);

    const int digits = config.block_count > 0 ? static_cast<int>(std::to_string(config.block_count - 1).size()) : 1;
    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(config.block_count));
    for (int i = 0; i < config.block_count; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "b%0*d", digits, i);
        ids.emplace_back(buf);
        out.data.blocks.emplace(ids.back(),
                                random_synthetic_block(config, opcodes, ids.back(), rng));
    }

    std::vector<double> timings(ids.size(), 0.0);
    std::exception_ptr failure;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) \
    num_threads(threads > 0 ? threads : omp_get_max_threads())
#endif
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(ids.size()); ++i) {
        try {
            timings[static_cast<std::size_t>(i)] =
                sim.run(out.hidden_table, out.data.block(ids[static_cast<std::size_t>(i)]),
                        config.iterations, nullptr)
                    .cycles_per_iteration;
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    for (std::size_t i = 0; i < ids.size(); ++i)
        out.data.measurements.push_back({ids[i], timings[i]});
    return out;
}

}  // namespace simtune
