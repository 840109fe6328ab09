#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "simtune/errors.hpp"
#include "simtune/metrics.hpp"
#include "simtune/rng.hpp"
#include "simtune/sampling.hpp"
#include "simtune/synth.hpp"

using namespace simtune;

namespace {

// O(n^2) oracle: tau-a with ties contributing zero.
double kendall_tau_bruteforce(const std::vector<double>& p, const std::vector<double>& a) {
    const std::size_t n = p.size();
    std::int64_t net = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const int sp = p[i] < p[j] ? 1 : (p[i] > p[j] ? -1 : 0);
            const int sa = a[i] < a[j] ? 1 : (a[i] > a[j] ? -1 : 0);
            net += sp * sa;
        }
    return static_cast<double>(net) / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

}  // namespace

TEST_CASE("mape: hand values, scale identity and errors") {
    CHECK(mape({2, 4}, {2, 4}) == doctest::Approx(0.0));
    CHECK(mape({4, 8}, {2, 4}) == doctest::Approx(1.0));
    CHECK(mape({3, 1}, {2, 2}) == doctest::Approx(0.5));

    Rng rng(1);
    std::vector<double> actuals(50);
    for (auto& v : actuals) v = rng.uniform_real(0.1, 20.0);
    for (double c : {0.25, 1.0, 3.5}) {
        std::vector<double> scaled = actuals;
        for (auto& v : scaled) v *= c;
        CHECK(mape(scaled, actuals) == doctest::Approx(std::fabs(c - 1.0)));
    }

    CHECK_THROWS_AS(mape({1.0}, {1.0, 2.0}), DataError);
    CHECK_THROWS_AS(mape({1.0}, {0.0}), DataError);
    CHECK_THROWS_AS(mape({}, {}), DataError);
}

TEST_CASE("kendall_tau: perfect, reversed, constant") {
    CHECK(kendall_tau({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(kendall_tau({4, 3, 2, 1}, {10, 20, 30, 40}) == doctest::Approx(-1.0));
    // Every pair ties on the constant side and counts as neither.
    CHECK(kendall_tau({5, 5, 5, 5}, {1, 2, 3, 4}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(kendall_tau({1.0}, {1.0}), DataError);
    CHECK_THROWS_AS(kendall_tau({1, 2}, {1, 2, 3}), DataError);
}

TEST_CASE("kendall_tau matches the brute-force oracle exactly") {
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 200;
        std::vector<double> p(n), a(n);
        const bool with_ties = trial % 2 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = with_ties ? static_cast<double>(rng.uniform_int(0, 12)) : rng.uniform_real();
            a[i] = with_ties ? static_cast<double>(rng.uniform_int(0, 12)) : rng.uniform_real();
        }
        CHECK(kendall_tau(p, a) == doctest::Approx(kendall_tau_bruteforce(p, a)).epsilon(1e-12));
    }
}

TEST_CASE("kendall_tau antisymmetry for tie-free inputs") {
    Rng rng(123);
    std::vector<double> p(64), a(64), reversed(64);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = rng.uniform_real();
        a[i] = rng.uniform_real();
        reversed[i] = -p[i];
    }
    CHECK(kendall_tau(p, p) == doctest::Approx(1.0));
    CHECK(kendall_tau(reversed, a) == doctest::Approx(-kendall_tau(p, a)).epsilon(1e-12));
}

TEST_CASE("evaluate: oracle table scores zero error and perfect tau") {
    SynthConfig synth;
    synth.opcode_count = 4;
    synth.block_count = 30;
    synth.max_length = 4;
    synth.iterations = 20;
    SamplingSpec sampling;
    OutOfOrderSimulator sim;
    RecoveryData recovery = generate_recovery_dataset(synth, sampling, sim, 77);

    EvalReport report =
        evaluate(sim, recovery.hidden_table, recovery.data, "oracle", "synthetic", 20);
    CHECK(report.count == 30);
    CHECK(report.mape == doctest::Approx(0.0));
    CHECK(report.kendall_tau > 0.9);  // only ties keep tau-a below 1 here
    CHECK(report.kendall_tau_b == doctest::Approx(1.0));
}

namespace {

// Workload whose throughput is dispatch-bound below width 4 and port-bound at
// exactly one iteration per cycle above it.
struct DispatchWorkload {
    ParameterTable table;
    Dataset data;
    OutOfOrderSimulator sim;

    DispatchWorkload() {
        table.dispatch_width = 4;
        table.reorder_buffer_size = 100;
        std::string text;
        for (int k = 0; k < 4; ++k) {
            OpcodeParams row;
            row.num_micro_ops = 1;
            row.write_latency = 0;
            row.port_map.assign(kDefaultPorts, 0.0);
            row.port_map[static_cast<std::size_t>(k)] = 1;
            table.rows["I" + std::to_string(k)] = row;
            if (k) text += " | ";
            text += "I" + std::to_string(k) + " W:r" + std::to_string(k) + " R:";
        }
        BasicBlock block = parse_block(text, 16, "w0");
        data.blocks.emplace("w0", block);
        data.measurements.push_back(
            {"w0", sim.run(table, block, 100, nullptr).cycles_per_iteration});
    }
};

}  // namespace

TEST_CASE("sensitivity_sweep: dispatch width improves strictly then plateaus") {
    DispatchWorkload w;
    SweepResult sweep = sensitivity_sweep(w.sim, w.table, w.data, ParamFamily::DispatchWidth,
                                          {1, 2, 3, 4, 5, 6, 8}, 100);
    REQUIRE(sweep.points.size() == 7);
    for (std::size_t i = 1; i < sweep.points.size(); ++i)
        CHECK(sweep.points[i].first > sweep.points[i - 1].first);
    CHECK(sweep.points[0].second > sweep.points[1].second);
    CHECK(sweep.points[1].second > sweep.points[2].second);
    CHECK(sweep.points[2].second > sweep.points[3].second);
    CHECK(sweep.points[3].second == doctest::Approx(0.0));  // true width
    CHECK(sweep.points[4].second == sweep.points[3].second);
    CHECK(sweep.points[5].second == sweep.points[3].second);
    CHECK(sweep.points[6].second == sweep.points[3].second);
}

TEST_CASE("sensitivity_sweep: reorder buffer is flat above its threshold") {
    // Independent latency-5 instructions at width 10 want 50 micro-ops in
    // flight; sizes above that are indistinguishable.
    ParameterTable table;
    table.dispatch_width = 10;
    table.reorder_buffer_size = 200;
    OpcodeParams row;
    row.num_micro_ops = 1;
    row.write_latency = 5;
    row.port_map.assign(kDefaultPorts, 0.0);
    table.rows["I"] = row;

    OutOfOrderSimulator sim;
    Dataset data;
    BasicBlock block = parse_block("I W:r1 R: | I W:r2 R: | I W:r3 R: | I W:r4 R:", 16, "w0");
    data.blocks.emplace("w0", block);
    data.measurements.push_back({"w0", sim.run(table, block, 100, nullptr).cycles_per_iteration});

    SweepResult sweep = sensitivity_sweep(sim, table, data, ParamFamily::ReorderBufferSize,
                                          {4, 10, 30, 60, 120, 240}, 100);
    CHECK(sweep.points[0].second > sweep.points[1].second);
    CHECK(sweep.points[1].second > sweep.points[2].second);
    CHECK(sweep.points[3].second == sweep.points[4].second);
    CHECK(sweep.points[4].second == sweep.points[5].second);
}

TEST_CASE("sensitivity_sweep: single point equals evaluate, bad ranges rejected") {
    DispatchWorkload w;
    SweepResult one =
        sensitivity_sweep(w.sim, w.table, w.data, ParamFamily::DispatchWidth, {3}, 100);
    EvalReport reference = [&] {
        ParameterTable probe = w.table;
        probe.dispatch_width = 3;
        return evaluate(w.sim, probe, w.data, "x", "x", 100);
    }();
    CHECK(one.points[0].second == reference.mape);

    CHECK_THROWS_AS(
        sensitivity_sweep(w.sim, w.table, w.data, ParamFamily::DispatchWidth, {0, 1}, 100),
        DataError);  // below the lower bound
    CHECK_THROWS_AS(
        sensitivity_sweep(w.sim, w.table, w.data, ParamFamily::DispatchWidth, {2, 2}, 100),
        DataError);  // not strictly increasing
    CHECK_THROWS_AS(
        sensitivity_sweep(w.sim, w.table, w.data, ParamFamily::WriteLatency, {1, 2}, 100),
        DataError);  // not a global parameter
}
