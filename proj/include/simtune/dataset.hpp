#pragma once

#include <map>
#include <string>
#include <vector>

#include "simtune/block.hpp"

namespace simtune {

/// A measured timing, in cycles per iteration, for one block.
struct Measurement {
    std::string block_id;
    double timing = 0.0;  // > 0
};

/// Blocks joined with their measurements. Immutable after load; safe to share
/// read-only across workers. At most one measurement per block id, so a split
/// by measurement record is also a split by block.
struct Dataset {
    std::map<std::string, BasicBlock> blocks;
    std::vector<Measurement> measurements;

    std::size_t size() const { return measurements.size(); }
    const BasicBlock& block(const std::string& id) const;
};

/// Loads and joins the two text files (one block / measurement per line,
/// `#` lines are comments). Throws DataError on duplicate ids, unresolved
/// block ids, or non-positive timings; ParseError on malformed lines.
Dataset load_dataset(const std::string& blocks_path, const std::string& measurements_path,
                     int register_count = kDefaultRegisterCount);

void save_blocks_file(const Dataset& d, const std::string& path);
void save_measurements_file(const Dataset& d, const std::string& path);

struct DatasetSplit {
    Dataset train;
    Dataset validation;
    Dataset test;
};

/// Deterministic 80/10/10 split by measurement count, largest-remainder
/// rounding, equal remainders resolved in train/validation/test order.
/// Requires at least 10 measurements.
DatasetSplit split_dataset(const Dataset& d, std::uint64_t seed);

/// Sorted, deduplicated opcode list over all blocks.
std::vector<std::string> opcode_vocabulary(const Dataset& d);

}  // namespace simtune
