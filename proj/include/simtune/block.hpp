#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace simtune {

inline constexpr int kDefaultRegisterCount = 16;

/// One abstract instruction: an opcode token with explicit register defs and
/// uses plus optional symbolic memory slots. Two memory operands alias iff
/// their id strings are equal.
struct Instruction {
    std::string opcode;
    std::vector<int> writes;
    std::vector<int> reads;
    std::optional<std::string> load_mem;
    std::optional<std::string> store_mem;

    bool operator==(const Instruction&) const = default;
};

/// Straight-line, non-empty instruction sequence.
struct BasicBlock {
    std::string id;
    std::vector<Instruction> instructions;

    int length() const { return static_cast<int>(instructions.size()); }
    bool operator==(const BasicBlock&) const = default;
};

/// Parses an instruction sequence `<instr>( | <instr>)*` where an instruction
/// is `<OPCODE> W:<reg-list> R:<reg-list> [LD:<mem>] [ST:<mem>]` and a
/// reg-list is a possibly empty comma-separated list of r<digits>.
/// Register ids must lie in [0, register_count).
/// Throws ParseError (with character position) on malformed text.
BasicBlock parse_block(std::string_view text, int register_count = kDefaultRegisterCount,
                       std::string id = "");

/// Parses one blocks-file line: `<block_id> <TAB> <instructions>`.
BasicBlock parse_block_line(std::string_view line, int register_count = kDefaultRegisterCount);

std::string format_instruction(const Instruction& instr);

/// Inverse of parse_block up to whitespace.
std::string format_block(const BasicBlock& block);

}  // namespace simtune
