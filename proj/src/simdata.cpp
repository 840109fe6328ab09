#include "simtune/simdata.hpp"

#include <cstring>
#include <exception>
#include <fstream>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "binary_io.hpp"
#include "simtune/errors.hpp"

namespace simtune {

namespace {

std::vector<std::string> block_opcodes(const BasicBlock& block) {
    std::set<std::string> set;
    for (const auto& instr : block.instructions) set.insert(instr.opcode);
    return {set.begin(), set.end()};
}

bool schedulable(const ParameterTable& table) {
    for (const auto& [op, row] : table.rows)
        if (row.num_micro_ops > table.reorder_buffer_size) return false;
    return true;
}

}  // namespace

SimulatedDataset generate_simulated_dataset(const BlockSimulator& sim, const Dataset& source,
                                            const SamplingSpec& spec, int multiplier, Rng& rng,
                                            const FreezeMask& mask, const ParameterTable* defaults,
                                            int iterations, int threads) {
    if (multiplier < 1) throw DataError("multiplier must be >= 1");
    if (source.measurements.empty()) throw DataError("cannot sample from an empty dataset");

    const std::size_t count = source.measurements.size() * static_cast<std::size_t>(multiplier);
    SimulatedDataset data;
    data.triples.reserve(count);

    // Draw everything sequentially so the result is a pure function of the
    // rng state, then label in parallel.
    const std::size_t max_attempts = 100 * count + 1000;
    std::size_t attempts = 0;
    while (data.triples.size() < count) {
        if (++attempts > max_attempts)
            throw DataError("too many unschedulable draws; check the sampling ranges");
        const auto pick = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(source.measurements.size()) - 1));
        const std::string& block_id = source.measurements[pick].block_id;
        const BasicBlock& block = source.block(block_id);
        ParameterTable table =
            sample_parameter_table(spec, block_opcodes(block), rng, mask, defaults);
        if (!schedulable(table)) {
            ++data.skipped_unschedulable;
            continue;
        }
        data.triples.push_back({std::move(table), block_id, 0.0});
    }

    std::exception_ptr failure;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads > 0 ? threads : omp_get_max_threads())
#endif
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(data.triples.size()); ++i) {
        try {
            SimTriple& t = data.triples[static_cast<std::size_t>(i)];
            t.timing = sim.run(t.table, source.block(t.block_id), iterations, nullptr)
                           .cycles_per_iteration;
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return data;
}

namespace {

constexpr char kMagic[8] = {'S', 'T', 'S', 'I', 'M', 'D', 'A', 'T'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_simdata(const SimulatedDataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write simulated dataset '" + path + "'");
    out.write(kMagic, sizeof kMagic);
    binio::put_u32(out, kVersion);
    binio::put_u64(out, static_cast<std::uint64_t>(data.skipped_unschedulable));
    binio::put_u64(out, data.triples.size());
    for (const auto& t : data.triples) {
        binio::put_string(out, t.block_id);
        binio::put_f64(out, t.timing);
        binio::put_f64(out, t.table.dispatch_width);
        binio::put_f64(out, t.table.reorder_buffer_size);
        binio::put_u32(out, static_cast<std::uint32_t>(t.table.ports));
        binio::put_u32(out, static_cast<std::uint32_t>(t.table.rows.size()));
        for (const auto& [op, row] : t.table.rows) {
            binio::put_string(out, op);
            binio::put_f64(out, row.num_micro_ops);
            binio::put_f64(out, row.write_latency);
            for (double ra : row.read_advance) binio::put_f64(out, ra);
            for (double p : row.port_map) binio::put_f64(out, p);
        }
    }
    if (!out) throw DataError("failed while writing '" + path + "'");
}

SimulatedDataset load_simdata(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open simulated dataset '" + path + "'");
    char magic[sizeof kMagic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw DataError("'" + path + "' is not a simulated dataset file");
    if (binio::get_u32(in) != kVersion) throw DataError("unsupported simulated dataset version");

    SimulatedDataset data;
    data.skipped_unschedulable = static_cast<std::int64_t>(binio::get_u64(in));
    const std::uint64_t count = binio::get_u64(in);
    data.triples.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        SimTriple t;
        t.block_id = binio::get_string(in);
        t.timing = binio::get_f64(in);
        t.table.form = TableForm::Integer;
        t.table.dispatch_width = binio::get_f64(in);
        t.table.reorder_buffer_size = binio::get_f64(in);
        t.table.ports = static_cast<int>(binio::get_u32(in));
        const std::uint32_t rows = binio::get_u32(in);
        for (std::uint32_t r = 0; r < rows; ++r) {
            std::string op = binio::get_string(in);
            OpcodeParams row;
            row.num_micro_ops = binio::get_f64(in);
            row.write_latency = binio::get_f64(in);
            for (auto& ra : row.read_advance) ra = binio::get_f64(in);
            row.port_map.assign(static_cast<std::size_t>(t.table.ports), 0.0);
            for (auto& p : row.port_map) p = binio::get_f64(in);
            t.table.rows.emplace(std::move(op), std::move(row));
        }
        data.triples.push_back(std::move(t));
    }
    return data;
}

}  // namespace simtune
