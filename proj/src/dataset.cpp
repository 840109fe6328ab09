#include "simtune/dataset.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <set>

#include "simtune/errors.hpp"
#include "simtune/rng.hpp"

namespace simtune {

const BasicBlock& Dataset::block(const std::string& id) const {
    auto it = blocks.find(id);
    if (it == blocks.end()) throw DataError("unresolved block_id '" + id + "'");
    return it->second;
}

namespace {

bool skip_line(const std::string& line) {
    return line.empty() || line[0] == '#';
}

double parse_timing(const std::string& text, const std::string& where) {
    std::size_t consumed = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &consumed);
    } catch (const std::exception&) {
        throw ParseError(where + ": expected decimal timing, got '" + text + "'");
    }
    if (consumed != text.size())
        throw ParseError(where + ": trailing characters after timing '" + text + "'");
    return value;
}

}  // namespace

Dataset load_dataset(const std::string& blocks_path, const std::string& measurements_path,
                     int register_count) {
    std::ifstream blocks_in(blocks_path);
    if (!blocks_in) throw DataError("cannot open blocks file '" + blocks_path + "'");

    Dataset d;
    std::string line;
    int line_no = 0;
    while (std::getline(blocks_in, line)) {
        ++line_no;
        if (skip_line(line)) continue;
        BasicBlock block;
        try {
            block = parse_block_line(line, register_count);
        } catch (const ParseError& e) {
            throw ParseError(blocks_path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!d.blocks.emplace(block.id, block).second)
            throw DataError(blocks_path + ":" + std::to_string(line_no) + ": duplicate block id '" +
                            block.id + "'");
    }

    std::ifstream meas_in(measurements_path);
    if (!meas_in) throw DataError("cannot open measurements file '" + measurements_path + "'");
    std::set<std::string> seen;
    line_no = 0;
    while (std::getline(meas_in, line)) {
        ++line_no;
        if (skip_line(line)) continue;
        const std::string where = measurements_path + ":" + std::to_string(line_no);
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError(where + ": expected <block_id> <TAB> <timing>");
        Measurement m;
        m.block_id = line.substr(0, tab);
        m.timing = parse_timing(line.substr(tab + 1), where);
        if (m.timing <= 0.0)
            throw DataError(where + ": non-positive timing for block '" + m.block_id + "'");
        if (d.blocks.find(m.block_id) == d.blocks.end())
            throw DataError(where + ": unresolved block_id '" + m.block_id + "'");
        if (!seen.insert(m.block_id).second)
            throw DataError(where + ": duplicate measurement for block '" + m.block_id + "'");
        d.measurements.push_back(std::move(m));
    }
    return d;
}

void save_blocks_file(const Dataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write blocks file '" + path + "'");
    for (const auto& [id, block] : d.blocks) out << id << '\t' << format_block(block) << '\n';
}

void save_measurements_file(const Dataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write measurements file '" + path + "'");
    char buf[64];
    for (const auto& m : d.measurements) {
        std::snprintf(buf, sizeof buf, "%.10g", m.timing);
        out << m.block_id << '\t' << buf << '\n';
    }
}

namespace {

// Largest-remainder apportionment of n into parts proportional to weights.
std::vector<std::size_t> largest_remainder(std::size_t n, const std::vector<double>& weights) {
    std::vector<std::size_t> sizes(weights.size());
    std::vector<double> remainders(weights.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        double quota = static_cast<double>(n) * weights[i];
        sizes[i] = static_cast<std::size_t>(quota);
        remainders[i] = quota - static_cast<double>(sizes[i]);
        assigned += sizes[i];
    }
    while (assigned < n) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < weights.size(); ++i)
            if (remainders[i] > remainders[best]) best = i;
        ++sizes[best];
        remainders[best] = -1.0;
        ++assigned;
    }
    return sizes;
}

Dataset take(const Dataset& d, const std::vector<std::size_t>& order, std::size_t begin,
             std::size_t end) {
    Dataset part;
    for (std::size_t i = begin; i < end; ++i) {
        const Measurement& m = d.measurements[order[i]];
        part.measurements.push_back(m);
        part.blocks.emplace(m.block_id, d.block(m.block_id));
    }
    return part;
}

}  // namespace

DatasetSplit split_dataset(const Dataset& d, std::uint64_t seed) {
    if (d.size() < 10) throw DataError("dataset too small to split (need at least 10 measurements)");

    std::vector<std::size_t> order(d.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, "dataset-split"));
    rng.shuffle(order);

    auto sizes = largest_remainder(d.size(), {0.8, 0.1, 0.1});
    DatasetSplit split;
    split.train = take(d, order, 0, sizes[0]);
    split.validation = take(d, order, sizes[0], sizes[0] + sizes[1]);
    split.test = take(d, order, sizes[0] + sizes[1], d.size());
    return split;
}

std::vector<std::string> opcode_vocabulary(const Dataset& d) {
    std::set<std::string> opcodes;
    for (const auto& [id, block] : d.blocks)
        for (const auto& instr : block.instructions) opcodes.insert(instr.opcode);
    return {opcodes.begin(), opcodes.end()};
}

}  // namespace simtune
