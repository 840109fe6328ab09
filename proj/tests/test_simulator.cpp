#include <algorithm>
#include <map>

#include "doctest.h"
#include "simtune/block.hpp"
#include "simtune/errors.hpp"
#include "simtune/params.hpp"
#include "simtune/rng.hpp"
#include "simtune/simulator.hpp"

using namespace simtune;

namespace {

OpcodeParams make_row(double uops, double latency, std::array<double, 3> ra = {0, 0, 0},
                      std::map<int, double> ports = {}) {
    OpcodeParams row;
    row.num_micro_ops = uops;
    row.write_latency = latency;
    row.read_advance = ra;
    row.port_map.assign(kDefaultPorts, 0.0);
    for (auto [p, cycles] : ports) row.port_map[static_cast<std::size_t>(p)] = cycles;
    return row;
}

ParameterTable make_table(double dispatch_width, double rob) {
    ParameterTable t;
    t.dispatch_width = dispatch_width;
    t.reorder_buffer_size = rob;
    return t;
}

}  // namespace

TEST_CASE("effective_latency clips at zero") {
    OpcodeParams producer = make_row(1, 5);
    OpcodeParams consumer = make_row(1, 0, {2, 7, 0});
    CHECK(effective_latency(producer, consumer, 0) == 3);  // 5 - 2
    producer.write_latency = 1;
    CHECK(effective_latency(producer, consumer, 1) == 0);  // max(0, 1 - 7)
    producer.write_latency = 0;
    CHECK(effective_latency(producer, consumer, 2) == 0);
}

TEST_CASE("build_dependencies finds register def-use edges") {
    BasicBlock b = parse_block("A W:r1 R: | B W: R:r1");
    auto edges = build_dependencies(b, 1);
    REQUIRE(edges.size() == 1);
    CHECK(edges[0] == DepEdge{0, 1, 0});
}

TEST_CASE("build_dependencies chains self-dependent copies across iterations") {
    BasicBlock b = parse_block("C W:r1 R:r1");
    auto edges = build_dependencies(b, 3);
    REQUIRE(edges.size() == 2);
    CHECK(edges[0] == DepEdge{0, 1, 0});
    CHECK(edges[1] == DepEdge{1, 2, 0});
}

TEST_CASE("build_dependencies uses the nearest earlier writer") {
    BasicBlock b = parse_block("A W:r1 R: | B W:r1 R: | C W: R:r1");
    auto edges = build_dependencies(b, 1);
    REQUIRE(edges.size() == 1);
    CHECK(edges[0].producer == 1);
}

TEST_CASE("build_dependencies clamps the operand slot") {
    BasicBlock b = parse_block("A W:r0,r1,r2,r3 R: | B W: R:r0,r1,r2,r3");
    auto edges = build_dependencies(b, 1);
    REQUIRE(edges.size() == 4);
    CHECK(edges[0].slot == 0);
    CHECK(edges[1].slot == 1);
    CHECK(edges[2].slot == 2);
    CHECK(edges[3].slot == 2);
}

TEST_CASE("build_dependencies tracks memory through symbolic ids") {
    SUBCASE("store to load") {
        BasicBlock b = parse_block("ST W: R:r2 ST:m0 | LD W:r3 R: LD:m0");
        auto edges = build_dependencies(b, 1);
        REQUIRE(edges.size() == 1);
        CHECK(edges[0].producer == 0);
        CHECK(edges[0].consumer == 1);
    }
    SUBCASE("different ids never alias") {
        BasicBlock b = parse_block("ST W: R:r2 ST:m0 | LD W:r3 R: LD:m1");
        CHECK(build_dependencies(b, 1).empty());
    }
    SUBCASE("store to store and load to store") {
        BasicBlock b = parse_block("ST W: R:r0 ST:m0 | LD W:r1 R: LD:m0 | ST W: R:r1 ST:m0");
        auto edges = build_dependencies(b, 1);
        // store0 -> load1, store0 -> store2, load1 -> store2, plus r1: load1 -> store2
        REQUIRE(edges.size() == 4);
        CHECK(std::count(edges.begin(), edges.end(), DepEdge{0, 1, 0}) == 1);
        CHECK(std::count(edges.begin(), edges.end(), DepEdge{0, 2, 1}) == 1);
        CHECK(std::count(edges.begin(), edges.end(), DepEdge{1, 2, 1}) == 1);
        CHECK(std::count(edges.begin(), edges.end(), DepEdge{1, 2, 0}) == 1);
    }
    SUBCASE("loads do not depend on loads") {
        BasicBlock b = parse_block("LD W:r1 R: LD:m0 | LD W:r2 R: LD:m0");
        CHECK(build_dependencies(b, 1).empty());
    }
}

// Hand-traced: copy i issues at cycle 2i (the write latency of 2 spaces the
// self-dependence chain), the last of 100 copies completes at cycle 200.
TEST_CASE("simulate: latency-chained instruction runs at one copy per 2 cycles") {
    ParameterTable t = make_table(4, 200);
    t.rows["CHAIN"] = make_row(1, 2);
    BasicBlock b = parse_block("CHAIN W:r1 R:r1");
    SimResult r = simulate(t, b, 100);
    CHECK(r.cycles_per_iteration == doctest::Approx(2.0).epsilon(0.025));
    CHECK(r.total_cycles == 200);
}

// Hand-traced: zero write latency lets the dependent copy issue in the same
// cycle, but the single port serializes issue to one copy per cycle.
TEST_CASE("simulate: port occupancy serializes a zero-latency chain") {
    ParameterTable t = make_table(4, 200);
    t.rows["PUSH"] = make_row(1, 0, {0, 0, 0}, {{0, 1}});
    BasicBlock b = parse_block("PUSH W:r7 R:r7");
    SimResult r = simulate(t, b, 100);
    CHECK(r.cycles_per_iteration == doctest::Approx(1.0).epsilon(0.05));
}

// Hand-traced: four independent single-uop instructions saturate a dispatch
// width of 4, one iteration per cycle.
TEST_CASE("simulate: dispatch bandwidth bounds independent instructions") {
    ParameterTable t = make_table(4, 200);
    for (int k = 1; k <= 4; ++k) t.rows["I" + std::to_string(k)] = make_row(1, 0);
    BasicBlock b = parse_block("I1 W:r1 R: | I2 W:r2 R: | I3 W:r3 R: | I4 W:r4 R:");
    SimResult r = simulate(t, b, 100);
    CHECK(r.cycles_per_iteration == doctest::Approx(1.0).epsilon(0.05));
}

// Hand-traced: 6 uops at width 4 dispatch over cycles {0,1}, issue at 1,
// complete at 2. A second copy finishes dispatch at 2, completes at 3.
TEST_CASE("simulate: micro-ops span dispatch cycles") {
    ParameterTable t = make_table(4, 200);
    t.rows["WIDE"] = make_row(6, 0);
    BasicBlock b = parse_block("WIDE W:r1 R:");
    CHECK(simulate(t, b, 1).total_cycles == 2);
    CHECK(simulate(t, b, 2).total_cycles == 3);
}

TEST_CASE("simulate: identical inputs give bit-identical results") {
    ParameterTable t = make_table(3, 60);
    t.rows["A"] = make_row(2, 3, {1, 0, 0}, {{2, 1}});
    t.rows["B"] = make_row(1, 1);
    BasicBlock b = parse_block("A W:r1 R:r2 | B W:r2 R:r1 LD:m0 | A W:r3 R:r3 ST:m0");
    SimResult r1 = simulate(t, b, 100);
    SimResult r2 = simulate(t, b, 100);
    CHECK(r1.total_cycles == r2.total_cycles);
    CHECK(r1.cycles_per_iteration == r2.cycles_per_iteration);
}

TEST_CASE("simulate: cycles per iteration is non-decreasing in write latency") {
    BasicBlock b = parse_block("CHAIN W:r1 R:r1");
    double previous = 0.0;
    for (int latency = 0; latency <= 10; ++latency) {
        ParameterTable t = make_table(4, 200);
        t.rows["CHAIN"] = make_row(1, latency);
        double cpi = simulate(t, b, 100).cycles_per_iteration;
        CHECK(cpi >= previous);
        previous = cpi;
    }
}

TEST_CASE("simulate: dispatch bound for n independent zero-latency instructions") {
    for (int n : {2, 5, 8}) {
        for (int width : {2, 4}) {
            ParameterTable t = make_table(width, 200);
            std::string text;
            for (int k = 0; k < n; ++k) {
                t.rows["I" + std::to_string(k)] = make_row(1, 0);
                if (k) text += " | ";
                text += "I" + std::to_string(k) + " W:r" + std::to_string(k % 16) + " R:";
            }
            double cpi = simulate(t, parse_block(text), 100).cycles_per_iteration;
            double bound = static_cast<double>(n) / width;
            CHECK(cpi >= bound);
            CHECK(cpi <= bound + 2.0 / 100.0 + 0.05);  // pipeline fill amortized over 100 iterations
        }
    }
}

TEST_CASE("simulate: unknown opcode and unschedulable instruction are errors") {
    ParameterTable t = make_table(4, 8);
    t.rows["BIG"] = make_row(9, 0);
    CHECK_THROWS_AS(simulate(t, parse_block("MISSING W: R:"), 10), SimError);
    CHECK_THROWS_WITH_AS(simulate(t, parse_block("BIG W: R:"), 10), doctest::Contains("unschedulable"),
                         SimError);
    CHECK_THROWS_AS(simulate(t, parse_block("BIG W: R:"), 0), DataError);
}

TEST_CASE("simulate: reorder buffer throttles independent long-latency work") {
    // 10-wide dispatch of 1-uop latency-5 instructions wants 50 in flight;
    // a 4-slot buffer limits it to ~4 issues per 5 cycles.
    ParameterTable t = make_table(10, 4);
    t.rows["I"] = make_row(1, 5);
    BasicBlock b = parse_block("I W:r1 R:");
    SimTrace trace;
    SimResult r = simulate(t, b, 100, &trace);
    CHECK(r.cycles_per_iteration >= 1.0);  // 5 cycles / 4 copies plus fill
    for (auto [cycle, occupancy] : trace.rob_occupancy) CHECK(occupancy <= 4);

    ParameterTable wide = make_table(10, 200);
    wide.rows["I"] = make_row(1, 5);
    CHECK(simulate(wide, b, 100).cycles_per_iteration < r.cycles_per_iteration);
}

namespace {

BasicBlock random_block(Rng& rng, const std::vector<std::string>& opcodes, int length) {
    BasicBlock b;
    b.id = "rand";
    for (int i = 0; i < length; ++i) {
        Instruction instr;
        instr.opcode = opcodes[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(opcodes.size()) - 1))];
        if (rng.bernoulli(0.9)) instr.writes.push_back(static_cast<int>(rng.uniform_int(0, 15)));
        int reads = static_cast<int>(rng.uniform_int(0, 2));
        for (int k = 0; k < reads; ++k) instr.reads.push_back(static_cast<int>(rng.uniform_int(0, 15)));
        if (rng.bernoulli(0.2)) instr.load_mem = "m" + std::to_string(rng.uniform_int(0, 3));
        if (rng.bernoulli(0.15)) instr.store_mem = "m" + std::to_string(rng.uniform_int(0, 3));
        b.instructions.push_back(instr);
    }
    return b;
}

ParameterTable random_table(Rng& rng, const std::vector<std::string>& opcodes) {
    ParameterTable t = make_table(rng.uniform_int(1, 10), rng.uniform_int(50, 250));
    for (const auto& op : opcodes) {
        OpcodeParams row = make_row(rng.uniform_int(1, 10), rng.uniform_int(0, 5));
        for (auto& ra : row.read_advance) ra = static_cast<double>(rng.uniform_int(0, 5));
        int k = static_cast<int>(rng.uniform_int(0, 2));
        for (int j = 0; j < k; ++j)
            row.port_map[static_cast<std::size_t>(rng.uniform_int(0, 9))] =
                static_cast<double>(rng.uniform_int(0, 2));
        t.rows[op] = row;
    }
    return t;
}

}  // namespace

TEST_CASE("simulate: ROB occupancy and port exclusivity hold on random pairs") {
    Rng rng(2024);
    std::vector<std::string> opcodes = {"A", "B", "C", "D"};
    for (int trial = 0; trial < 100; ++trial) {
        ParameterTable t = random_table(rng, opcodes);
        BasicBlock b = random_block(rng, opcodes, static_cast<int>(rng.uniform_int(1, 8)));
        SimTrace trace;
        simulate(t, b, 20, &trace);

        for (auto [cycle, occupancy] : trace.rob_occupancy)
            CHECK(occupancy <= static_cast<int>(t.reorder_buffer_size));

        // Per port, reservations must not overlap.
        std::map<int, std::vector<std::pair<std::int64_t, std::int64_t>>> by_port;
        for (const auto& res : trace.port_reservations)
            by_port[res.port].emplace_back(res.start, res.start + res.length);
        for (auto& [port, spans] : by_port) {
            std::sort(spans.begin(), spans.end());
            for (std::size_t i = 1; i < spans.size(); ++i) CHECK(spans[i - 1].second <= spans[i].first);
        }
    }
}

TEST_CASE("parameter table text format round-trips integer tables") {
    ParameterTable t = make_table(4, 192);
    t.rows["ADD"] = make_row(1, 2, {0, 1, 0}, {{0, 1}, {5, 2}});
    t.rows["LD"] = make_row(2, 4, {0, 0, 0}, {{2, 1}});
    ParameterTable back = parse_table(format_table(t));
    CHECK(back == t);
    CHECK(back.form == TableForm::Integer);
}

TEST_CASE("parameter table text format keeps continuous values") {
    ParameterTable t = make_table(4, 192);
    t.rows["ADD"] = make_row(1.25, -2.5);
    t.form = TableForm::Continuous;
    ParameterTable back = parse_table(format_table(t));
    CHECK(back.form == TableForm::Continuous);
    CHECK(back.rows["ADD"].num_micro_ops == 1.25);
    CHECK(back.rows["ADD"].write_latency == -2.5);
}

TEST_CASE("parameter table parser rejects malformed text") {
    CHECK_THROWS_AS(parse_table(""), ParseError);
    CHECK_THROWS_AS(parse_table("dispatch_width 4\n"), ParseError);  // missing rob
    CHECK_THROWS_AS(parse_table("dispatch_width 4\nreorder_buffer_size 10\n"
                                "ADD uops=1 lat=2 ra=0,0 ports=0,0,0,0,0,0,0,0,0,0\n"),
                    ParseError);  // ra arity
    CHECK_THROWS_AS(parse_table("dispatch_width 4\nreorder_buffer_size 10\nADD uops=1\n"), ParseError);
}

TEST_CASE("validate_integer_form enforces the table constraints") {
    ParameterTable t = make_table(4, 100);
    t.rows["A"] = make_row(1, 0);
    CHECK_NOTHROW(validate_integer_form(t));

    ParameterTable zero_width = t;
    zero_width.dispatch_width = 0;
    CHECK_THROWS_AS(validate_integer_form(zero_width), DataError);

    ParameterTable fractional = t;
    fractional.rows["A"].write_latency = 1.5;
    CHECK_THROWS_AS(validate_integer_form(fractional), DataError);

    ParameterTable negative = t;
    negative.rows["A"].read_advance[1] = -1;
    CHECK_THROWS_AS(validate_integer_form(negative), DataError);
}
