#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace simtune {

inline constexpr int kDefaultPorts = 10;
inline constexpr int kReadAdvanceSlots = 3;

enum class ParamFamily {
    DispatchWidth,
    ReorderBufferSize,
    NumMicroOps,
    WriteLatency,
    ReadAdvance,
    PortMap,
};

inline constexpr std::array<ParamFamily, 6> kAllFamilies = {
    ParamFamily::DispatchWidth, ParamFamily::ReorderBufferSize, ParamFamily::NumMicroOps,
    ParamFamily::WriteLatency,  ParamFamily::ReadAdvance,       ParamFamily::PortMap,
};

const std::string& family_name(ParamFamily f);
ParamFamily family_from_name(const std::string& name);  // throws ParseError

/// Static description of one parameter family: scope, arity, the constraint
/// lower bound, and the range it is sampled from.
struct ParamSpec {
    ParamFamily family;
    std::string name;
    bool per_opcode = false;
    int arity = 1;
    int lower_bound = 0;
    bool integer_valued = true;
    int sample_lo = 0;
    int sample_hi = 0;
};

const std::vector<ParamSpec>& default_param_specs(int ports = kDefaultPorts);
const ParamSpec& param_spec(ParamFamily f, int ports = kDefaultPorts);

/// Per-opcode parameter row.
struct OpcodeParams {
    double num_micro_ops = 1.0;
    double write_latency = 0.0;
    std::array<double, kReadAdvanceSlots> read_advance{};
    std::vector<double> port_map = std::vector<double>(kDefaultPorts, 0.0);

    bool operator==(const OpcodeParams&) const = default;
};

enum class TableForm { Integer, Continuous };

/// Global parameters plus one row per opcode. Integer form obeys the
/// per-family constraints; continuous form holds unconstrained reals (the
/// lower-bound shift and abs are applied at the surrogate boundary and at
/// extraction).
struct ParameterTable {
    TableForm form = TableForm::Integer;
    int ports = kDefaultPorts;
    double dispatch_width = 1.0;
    double reorder_buffer_size = 1.0;
    std::map<std::string, OpcodeParams> rows;

    bool has(const std::string& opcode) const { return rows.find(opcode) != rows.end(); }
    const OpcodeParams& row(const std::string& opcode) const;  // throws SimError
    OpcodeParams& row(const std::string& opcode);

    bool operator==(const ParameterTable&) const = default;
};

/// Throws DataError if the table violates the integer-form invariants
/// (integrality, dispatch_width >= 1, reorder_buffer_size >= 1,
/// num_micro_ops >= 1, everything else >= 0).
void validate_integer_form(const ParameterTable& table);

ParameterTable load_table(const std::string& path);
void save_table(const ParameterTable& table, const std::string& path);
std::string format_table(const ParameterTable& table);
ParameterTable parse_table(const std::string& text);

/// Entries held at provided defaults during table optimization. An entry with
/// an empty opcode freezes the whole family.
struct FreezeMask {
    std::set<std::pair<ParamFamily, std::string>> entries;

    bool empty() const { return entries.empty(); }
    void freeze(ParamFamily f, const std::string& opcode = "") { entries.emplace(f, opcode); }
    bool frozen(ParamFamily f, const std::string& opcode = "") const;

    /// Parses entries of the form `<family>` or `<family>:<opcode>`.
    static FreezeMask parse(const std::vector<std::string>& specs);
};

}  // namespace simtune
