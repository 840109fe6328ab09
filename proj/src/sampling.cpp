#include "simtune/sampling.hpp"

#include <algorithm>

#include "simtune/errors.hpp"

namespace simtune {

namespace {

double draw(const SamplingRange& range, Rng& rng) {
    return static_cast<double>(rng.uniform_int(range.lo, range.hi));
}

}  // namespace

ParameterTable sample_parameter_table(const SamplingSpec& spec,
                                      const std::vector<std::string>& opcodes, Rng& rng) {
    FreezeMask none;
    return sample_parameter_table(spec, opcodes, rng, none, nullptr);
}

ParameterTable sample_parameter_table(const SamplingSpec& spec,
                                      const std::vector<std::string>& opcodes, Rng& rng,
                                      const FreezeMask& mask, const ParameterTable* defaults) {
    if (!mask.empty() && !defaults)
        throw DataError("freeze mask requires a defaults table");

    ParameterTable table;
    table.form = TableForm::Integer;
    table.ports = spec.ports;

    table.dispatch_width = mask.frozen(ParamFamily::DispatchWidth)
                               ? defaults->dispatch_width
                               : draw(spec.dispatch_width, rng);
    table.reorder_buffer_size = mask.frozen(ParamFamily::ReorderBufferSize)
                                    ? defaults->reorder_buffer_size
                                    : draw(spec.reorder_buffer_size, rng);

    for (const auto& opcode : opcodes) {
        OpcodeParams row;
        row.port_map.assign(static_cast<std::size_t>(spec.ports), 0.0);

        row.num_micro_ops = mask.frozen(ParamFamily::NumMicroOps, opcode)
                                ? defaults->row(opcode).num_micro_ops
                                : draw(spec.num_micro_ops, rng);
        row.write_latency = mask.frozen(ParamFamily::WriteLatency, opcode)
                                ? defaults->row(opcode).write_latency
                                : draw(spec.write_latency, rng);
        if (mask.frozen(ParamFamily::ReadAdvance, opcode)) {
            row.read_advance = defaults->row(opcode).read_advance;
        } else {
            for (auto& ra : row.read_advance) ra = draw(spec.read_advance, rng);
        }
        if (mask.frozen(ParamFamily::PortMap, opcode)) {
            row.port_map = defaults->row(opcode).port_map;
        } else {
            // k distinct ports, each with its own cycle draw.
            const int k = static_cast<int>(rng.uniform_int(spec.port_count.lo, spec.port_count.hi));
            std::vector<int> ports(static_cast<std::size_t>(spec.ports));
            for (int p = 0; p < spec.ports; ++p) ports[static_cast<std::size_t>(p)] = p;
            for (int j = 0; j < k; ++j) {
                const int pick = static_cast<int>(
                    rng.uniform_int(j, static_cast<std::int64_t>(spec.ports) - 1));
                std::swap(ports[static_cast<std::size_t>(j)], ports[static_cast<std::size_t>(pick)]);
                row.port_map[static_cast<std::size_t>(ports[static_cast<std::size_t>(j)])] =
                    draw(spec.port_cycles, rng);
            }
        }
        table.rows.emplace(opcode, std::move(row));
    }
    validate_integer_form(table);
    return table;
}

}  // namespace simtune
