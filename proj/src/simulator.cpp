#include "simtune/simulator.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

#include "simtune/errors.hpp"

namespace simtune {

std::vector<DepEdge> build_dependencies(const BasicBlock& block, int iterations) {
    const int n = block.length();
    const int total = n * iterations;
    std::vector<DepEdge> edges;
    edges.reserve(static_cast<std::size_t>(total) * 2);

    int max_reg = -1;
    for (const auto& instr : block.instructions) {
        for (int r : instr.writes) max_reg = std::max(max_reg, r);
        for (int r : instr.reads) max_reg = std::max(max_reg, r);
    }
    std::vector<int> last_writer(static_cast<std::size_t>(max_reg) + 1, -1);

    struct MemState {
        int last_store = -1;
        std::vector<int> loads_since_store;
    };
    std::unordered_map<std::string, MemState> memory;

    for (int idx = 0; idx < total; ++idx) {
        const Instruction& instr = block.instructions[static_cast<std::size_t>(idx % n)];
        const int mem_slot = std::min<int>(static_cast<int>(instr.reads.size()), 2);

        for (std::size_t operand = 0; operand < instr.reads.size(); ++operand) {
            int producer = last_writer[static_cast<std::size_t>(instr.reads[operand])];
            if (producer >= 0)
                edges.push_back({producer, idx, std::min<int>(static_cast<int>(operand), 2)});
        }
        if (instr.load_mem) {
            MemState& m = memory[*instr.load_mem];
            if (m.last_store >= 0) edges.push_back({m.last_store, idx, mem_slot});
        }
        if (instr.store_mem) {
            MemState& m = memory[*instr.store_mem];
            if (m.last_store >= 0) edges.push_back({m.last_store, idx, mem_slot});
            for (int load : m.loads_since_store)
                if (load != idx) edges.push_back({load, idx, mem_slot});
        }

        for (int r : instr.writes) last_writer[static_cast<std::size_t>(r)] = idx;
        if (instr.store_mem) {
            MemState& m = memory[*instr.store_mem];
            m.last_store = idx;
            m.loads_since_store.clear();
        }
        if (instr.load_mem && !(instr.store_mem && *instr.store_mem == *instr.load_mem))
            memory[*instr.load_mem].loads_since_store.push_back(idx);
    }
    return edges;
}

int effective_latency(const OpcodeParams& producer, const OpcodeParams& consumer, int slot) {
    const int latency = static_cast<int>(producer.write_latency) -
                        static_cast<int>(consumer.read_advance[static_cast<std::size_t>(slot)]);
    return std::max(0, latency);
}

namespace {

constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::max();

// Per-opcode constants resolved once per run.
struct InstrKind {
    int uops = 1;
    std::int64_t completion_delay = 1;  // max(1, write_latency, max port occupancy)
    std::vector<std::pair<int, int>> ports;  // (port, cycles), cycles > 0
    const OpcodeParams* row = nullptr;
};

}  // namespace

SimResult OutOfOrderSimulator::run(const ParameterTable& table, const BasicBlock& block,
                                   int iterations, SimTrace* trace) const {
    if (iterations < 1) throw DataError("iterations must be >= 1");
    if (table.form != TableForm::Integer) throw DataError("simulate requires an integer-form table");
    validate_integer_form(table);
    if (block.instructions.empty()) throw DataError("empty block");

    const int n = block.length();
    const int total = n * iterations;
    const int dispatch_width = static_cast<int>(table.dispatch_width);
    const std::int64_t rob_size = static_cast<std::int64_t>(table.reorder_buffer_size);

    std::vector<InstrKind> kinds(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Instruction& instr = block.instructions[static_cast<std::size_t>(i)];
        const OpcodeParams& row = table.row(instr.opcode);
        InstrKind& kind = kinds[static_cast<std::size_t>(i)];
        kind.row = &row;
        kind.uops = static_cast<int>(row.num_micro_ops);
        if (kind.uops > rob_size)
            throw SimError("unschedulable: '" + instr.opcode + "' needs " +
                           std::to_string(kind.uops) + " micro-ops but the reorder buffer holds " +
                           std::to_string(rob_size));
        std::int64_t delay = std::max<std::int64_t>(1, static_cast<std::int64_t>(row.write_latency));
        for (int p = 0; p < table.ports; ++p) {
            int cycles = static_cast<int>(row.port_map[static_cast<std::size_t>(p)]);
            if (cycles > 0) {
                kind.ports.emplace_back(p, cycles);
                delay = std::max<std::int64_t>(delay, cycles);
            }
        }
        kind.completion_delay = delay;
    }

    // Group edges by consumer with precomputed effective latencies.
    const auto edges = build_dependencies(block, iterations);
    std::vector<int> edge_start(static_cast<std::size_t>(total) + 1, 0);
    for (const auto& e : edges) ++edge_start[static_cast<std::size_t>(e.consumer) + 1];
    for (int i = 0; i < total; ++i) edge_start[static_cast<std::size_t>(i) + 1] += edge_start[static_cast<std::size_t>(i)];
    struct Dep {
        int producer;
        int latency;
    };
    std::vector<Dep> deps(edges.size());
    {
        std::vector<int> fill(edge_start.begin(), edge_start.end() - 1);
        for (const auto& e : edges) {
            const InstrKind& p = kinds[static_cast<std::size_t>(e.producer % n)];
            const InstrKind& c = kinds[static_cast<std::size_t>(e.consumer % n)];
            deps[static_cast<std::size_t>(fill[static_cast<std::size_t>(e.consumer)]++)] =
                Dep{e.producer, effective_latency(*p.row, *c.row, e.slot)};
        }
    }

    std::vector<std::int64_t> issue_cycle(static_cast<std::size_t>(total), kNever);
    std::vector<std::int64_t> completion(static_cast<std::size_t>(total), kNever);
    std::vector<std::int64_t> port_free(static_cast<std::size_t>(table.ports), 0);

    std::vector<int> pending;  // dispatched but not issued, program order
    pending.reserve(128);

    int dispatch_ptr = 0;      // next instruction to receive dispatch bandwidth
    int dispatch_left = 0;     // micro-ops of dispatch_ptr still to dispatch
    bool dispatch_started = false;
    int retire_ptr = 0;
    std::int64_t rob_used = 0;
    std::int64_t cycle = 0;
    std::int64_t last_retire = 0;

    while (retire_ptr < total) {
        bool event = false;

        // Retire, in program order, everything completed by this cycle.
        while (retire_ptr < total && completion[static_cast<std::size_t>(retire_ptr)] <= cycle) {
            rob_used -= kinds[static_cast<std::size_t>(retire_ptr % n)].uops;
            last_retire = cycle;
            if (trace) trace->events.push_back({cycle, SimEventKind::Retire, retire_ptr});
            ++retire_ptr;
            event = true;
        }

        // Dispatch up to dispatch_width micro-ops; an instruction reserves all
        // of its reorder-buffer slots when its first micro-op dispatches and
        // may keep dispatching across cycles.
        int bandwidth = dispatch_width;
        while (bandwidth > 0 && dispatch_ptr < total) {
            const InstrKind& kind = kinds[static_cast<std::size_t>(dispatch_ptr % n)];
            if (!dispatch_started) {
                if (rob_used + kind.uops > rob_size) break;
                rob_used += kind.uops;
                dispatch_left = kind.uops;
                dispatch_started = true;
            }
            const int take = std::min(bandwidth, dispatch_left);
            dispatch_left -= take;
            bandwidth -= take;
            event = true;
            if (dispatch_left == 0) {
                if (trace) trace->events.push_back({cycle, SimEventKind::Dispatch, dispatch_ptr});
                pending.push_back(dispatch_ptr);
                ++dispatch_ptr;
                dispatch_started = false;
            }
        }
        if (trace) trace->rob_occupancy.emplace_back(cycle, static_cast<int>(rob_used));

        // Issue every ready instruction, oldest first; issuing reserves each
        // needed port for port_map[p] consecutive cycles.
        std::size_t keep = 0;
        for (std::size_t idx = 0; idx < pending.size(); ++idx) {
            const int i = pending[idx];
            const InstrKind& kind = kinds[static_cast<std::size_t>(i % n)];
            bool ready = true;
            for (int e = edge_start[static_cast<std::size_t>(i)];
                 ready && e < edge_start[static_cast<std::size_t>(i) + 1]; ++e) {
                const Dep& dep = deps[static_cast<std::size_t>(e)];
                const std::int64_t produced = issue_cycle[static_cast<std::size_t>(dep.producer)];
                ready = produced != kNever && produced + dep.latency <= cycle;
            }
            for (std::size_t p = 0; ready && p < kind.ports.size(); ++p)
                ready = port_free[static_cast<std::size_t>(kind.ports[p].first)] <= cycle;
            if (!ready) {
                pending[keep++] = i;
                continue;
            }
            issue_cycle[static_cast<std::size_t>(i)] = cycle;
            completion[static_cast<std::size_t>(i)] = cycle + kind.completion_delay;
            for (const auto& [port, cycles] : kind.ports) {
                port_free[static_cast<std::size_t>(port)] = cycle + cycles;
                if (trace) trace->port_reservations.push_back({port, cycle, cycles, i});
            }
            if (trace) trace->events.push_back({cycle, SimEventKind::Issue, i});
            event = true;
        }
        pending.resize(keep);

        if (event) {
            ++cycle;
            continue;
        }

        // Nothing moved: fast-forward to the next cycle at which something
        // can: the in-order retirement head completing, or a pending
        // instruction's operands and ports all becoming available.
        std::int64_t next = kNever;
        if (retire_ptr < total && completion[static_cast<std::size_t>(retire_ptr)] != kNever)
            next = completion[static_cast<std::size_t>(retire_ptr)];
        for (int i : pending) {
            const InstrKind& kind = kinds[static_cast<std::size_t>(i % n)];
            std::int64_t at = cycle + 1;
            bool producers_issued = true;
            for (int e = edge_start[static_cast<std::size_t>(i)];
                 producers_issued && e < edge_start[static_cast<std::size_t>(i) + 1]; ++e) {
                const Dep& dep = deps[static_cast<std::size_t>(e)];
                const std::int64_t produced = issue_cycle[static_cast<std::size_t>(dep.producer)];
                if (produced == kNever)
                    producers_issued = false;
                else
                    at = std::max(at, produced + dep.latency);
            }
            if (!producers_issued) continue;
            for (const auto& [port, cycles] : kind.ports)
                at = std::max(at, port_free[static_cast<std::size_t>(port)]);
            next = std::min(next, at);
        }
        if (next == kNever || next <= cycle)
            throw std::logic_error("simulator made no progress (internal error)");
        cycle = next;
    }

    SimResult result;
    result.iterations = iterations;
    result.total_cycles = last_retire;
    result.cycles_per_iteration =
        static_cast<double>(result.total_cycles) / static_cast<double>(iterations);
    return result;
}

SimResult simulate(const ParameterTable& table, const BasicBlock& block, int iterations,
                   SimTrace* trace) {
    static const OutOfOrderSimulator sim;
    return sim.run(table, block, iterations, trace);
}

}  // namespace simtune
