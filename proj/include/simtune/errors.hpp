#pragma once

#include <stdexcept>
#include <string>

namespace simtune {

// Malformed input text (block grammar, table/config files). Message carries
// position information where available.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Semantically invalid data: unresolved ids, duplicate ids, bad timings,
// violated table invariants.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Simulation cannot proceed: unknown opcode, unschedulable instruction.
struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training diverged (non-finite loss or gradient).
struct NumericsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace simtune
