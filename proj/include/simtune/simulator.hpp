#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "simtune/block.hpp"
#include "simtune/dataset.hpp"
#include "simtune/params.hpp"

namespace simtune {

inline constexpr int kDefaultIterations = 100;

/// Prediction for one block: the cycle at which the last unrolled copy
/// retired, divided by the iteration count.
struct SimResult {
    double cycles_per_iteration = 0.0;
    std::int64_t total_cycles = 0;
    int iterations = 0;
};

/// Use-def edge over the unrolled instruction sequence. `slot` selects the
/// consumer's read_advance entry (read-operand position clamped to [0,2];
/// memory operands use the position after all register reads).
struct DepEdge {
    int producer = 0;
    int consumer = 0;
    int slot = 0;

    bool operator==(const DepEdge&) const = default;
};

/// Edges for (a) register reads against the nearest earlier writer and
/// (b) store->load, store->store and load->store pairs on equal memory ids,
/// across `iterations` copies of the block laid out in program order.
std::vector<DepEdge> build_dependencies(const BasicBlock& block, int iterations);

/// max(0, producer write latency - consumer read_advance[slot]).
int effective_latency(const OpcodeParams& producer, const OpcodeParams& consumer, int slot);

enum class SimEventKind { Dispatch, Issue, Retire };

struct SimEvent {
    std::int64_t cycle = 0;
    SimEventKind kind = SimEventKind::Dispatch;
    int instr = 0;  // index into the unrolled sequence
};

/// Optional per-run event log, used by the trace CLI flag and by the
/// invariant tests (reorder-buffer occupancy, port exclusivity).
struct SimTrace {
    struct PortReservation {
        int port = 0;
        std::int64_t start = 0;
        int length = 0;
        int instr = 0;
    };

    std::vector<SimEvent> events;
    std::vector<std::pair<std::int64_t, int>> rob_occupancy;  // (cycle, micro-ops in flight)
    std::vector<PortReservation> port_reservations;
};

/// Simulator contract: deterministic, pure, one call per (table, block).
class BlockSimulator {
  public:
    virtual ~BlockSimulator() = default;
    virtual SimResult run(const ParameterTable& table, const BasicBlock& block,
                          int iterations = kDefaultIterations, SimTrace* trace = nullptr) const = 0;
};

/// The parameterized out-of-order superscalar model: in-order dispatch
/// limited by dispatch width and reorder-buffer slots, unlimited-width issue
/// gated by use-def latencies and port availability (oldest first), execution
/// ports reserved for port_map[p] consecutive cycles, in-order unbounded
/// retirement. Memory is assumed L1-resident; there is no frontend model.
class OutOfOrderSimulator final : public BlockSimulator {
  public:
    SimResult run(const ParameterTable& table, const BasicBlock& block,
                  int iterations = kDefaultIterations, SimTrace* trace = nullptr) const override;
};

/// Convenience wrapper around a shared OutOfOrderSimulator instance.
SimResult simulate(const ParameterTable& table, const BasicBlock& block,
                   int iterations = kDefaultIterations, SimTrace* trace = nullptr);

/// Forwarding decorator that counts run() calls; used for evaluation-budget
/// accounting and for asserting that table optimization never touches the
/// simulator.
class CountingSimulator final : public BlockSimulator {
  public:
    explicit CountingSimulator(const BlockSimulator& inner) : inner_(inner) {}

    SimResult run(const ParameterTable& table, const BasicBlock& block, int iterations,
                  SimTrace* trace) const override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        return inner_.run(table, block, iterations, trace);
    }

    std::int64_t calls() const { return calls_.load(std::memory_order_relaxed); }

  private:
    const BlockSimulator& inner_;
    mutable std::atomic<std::int64_t> calls_{0};
};

}  // namespace simtune
