#pragma once

#include <string>

#include "simtune/tensor.hpp"

namespace simtune {

/// Versioned binary format for named arrays: magic string, format version,
/// array count, then per array: name length + bytes, rank, dims, values as
/// little-endian 64-bit floats. Throws DataError on malformed files.
void save_weights(const std::string& path, const NamedTensors& tensors);
NamedTensors load_weights(const std::string& path);

}  // namespace simtune
