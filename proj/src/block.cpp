#include "simtune/block.hpp"

#include <cctype>
#include <charconv>

#include "simtune/errors.hpp"

namespace simtune {

namespace {

struct Token {
    std::string_view text;
    std::size_t pos;  // offset into the original text, for error messages
};

std::vector<Token> tokenize(std::string_view text, std::size_t base) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) out.push_back({text.substr(start, i - start), base + start});
    }
    return out;
}

[[noreturn]] void fail(std::size_t pos, const std::string& reason) {
    throw ParseError("at position " + std::to_string(pos) + ": " + reason);
}

std::vector<int> parse_reg_list(std::string_view list, std::size_t pos, int register_count) {
    std::vector<int> regs;
    if (list.empty()) return regs;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = list.find(',', start);
        std::string_view item = list.substr(start, comma == std::string_view::npos
                                                       ? std::string_view::npos
                                                       : comma - start);
        if (item.size() < 2 || item[0] != 'r')
            fail(pos + start, "expected register of the form r<digits>");
        int value = 0;
        auto [ptr, ec] = std::from_chars(item.data() + 1, item.data() + item.size(), value);
        if (ec != std::errc() || ptr != item.data() + item.size())
            fail(pos + start, "expected register of the form r<digits>");
        if (value < 0 || value >= register_count)
            fail(pos + start, "register id out of range (r" + std::to_string(value) +
                                  ", register count " + std::to_string(register_count) + ")");
        regs.push_back(value);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return regs;
}

Instruction parse_instruction(std::string_view text, std::size_t base, int register_count) {
    auto tokens = tokenize(text, base);
    if (tokens.empty()) fail(base, "empty instruction");

    auto has_prefix = [](std::string_view s, std::string_view p) {
        return s.size() >= p.size() && s.substr(0, p.size()) == p;
    };

    Instruction instr;
    const Token& op = tokens[0];
    if (has_prefix(op.text, "W:") || has_prefix(op.text, "R:") || has_prefix(op.text, "LD:") ||
        has_prefix(op.text, "ST:"))
        fail(op.pos, "expected opcode before operand lists");
    instr.opcode = std::string(op.text);

    std::size_t t = 1;
    if (t >= tokens.size() || !has_prefix(tokens[t].text, "W:"))
        fail(t < tokens.size() ? tokens[t].pos : base + text.size(), "expected W:<reg-list>");
    instr.writes = parse_reg_list(tokens[t].text.substr(2), tokens[t].pos + 2, register_count);
    ++t;

    if (t >= tokens.size() || !has_prefix(tokens[t].text, "R:"))
        fail(t < tokens.size() ? tokens[t].pos : base + text.size(), "expected R:<reg-list>");
    instr.reads = parse_reg_list(tokens[t].text.substr(2), tokens[t].pos + 2, register_count);
    ++t;

    if (t < tokens.size() && has_prefix(tokens[t].text, "LD:")) {
        auto mem = tokens[t].text.substr(3);
        if (mem.empty()) fail(tokens[t].pos, "LD: requires a memory id");
        instr.load_mem = std::string(mem);
        ++t;
    }
    if (t < tokens.size() && has_prefix(tokens[t].text, "ST:")) {
        auto mem = tokens[t].text.substr(3);
        if (mem.empty()) fail(tokens[t].pos, "ST: requires a memory id");
        instr.store_mem = std::string(mem);
        ++t;
    }
    if (t < tokens.size()) fail(tokens[t].pos, "unexpected token '" + std::string(tokens[t].text) + "'");
    return instr;
}

}  // namespace

BasicBlock parse_block(std::string_view text, int register_count, std::string id) {
    if (register_count <= 0) throw ParseError("register count must be positive");
    BasicBlock block;
    block.id = std::move(id);
    std::size_t start = 0;
    bool saw_segment = false;
    while (start <= text.size()) {
        std::size_t bar = text.find('|', start);
        std::size_t end = bar == std::string_view::npos ? text.size() : bar;
        std::string_view segment = text.substr(start, end - start);
        bool blank = segment.find_first_not_of(" \t") == std::string_view::npos;
        if (!blank) {
            block.instructions.push_back(parse_instruction(segment, start, register_count));
        } else if (saw_segment || bar != std::string_view::npos) {
            fail(start, "empty instruction between separators");
        }
        saw_segment = true;
        if (bar == std::string_view::npos) break;
        start = bar + 1;
    }
    if (block.instructions.empty()) throw ParseError("empty block");
    return block;
}

BasicBlock parse_block_line(std::string_view line, int register_count) {
    std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError("expected <block_id> <TAB> <instructions>");
    std::string id(line.substr(0, tab));
    if (id.empty()) throw ParseError("empty block id");
    return parse_block(line.substr(tab + 1), register_count, std::move(id));
}

std::string format_instruction(const Instruction& instr) {
    std::string out = instr.opcode + " W:";
    for (std::size_t i = 0; i < instr.writes.size(); ++i) {
        if (i) out += ',';
        out += 'r' + std::to_string(instr.writes[i]);
    }
    out += " R:";
    for (std::size_t i = 0; i < instr.reads.size(); ++i) {
        if (i) out += ',';
        out += 'r' + std::to_string(instr.reads[i]);
    }
    if (instr.load_mem) out += " LD:" + *instr.load_mem;
    if (instr.store_mem) out += " ST:" + *instr.store_mem;
    return out;
}

std::string format_block(const BasicBlock& block) {
    std::string out;
    for (std::size_t i = 0; i < block.instructions.size(); ++i) {
        if (i) out += " | ";
        out += format_instruction(block.instructions[i]);
    }
    return out;
}

}  // namespace simtune
