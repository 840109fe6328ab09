#include "simtune/params.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "simtune/errors.hpp"

namespace simtune {

namespace {

const std::array<std::string, 6> kFamilyNames = {
    "dispatch_width", "reorder_buffer_size", "num_micro_ops",
    "write_latency",  "read_advance",        "port_map",
};

}  // namespace

const std::string& family_name(ParamFamily f) {
    return kFamilyNames[static_cast<std::size_t>(f)];
}

ParamFamily family_from_name(const std::string& name) {
    for (std::size_t i = 0; i < kFamilyNames.size(); ++i)
        if (kFamilyNames[i] == name) return static_cast<ParamFamily>(i);
    throw ParseError("unknown parameter family '" + name + "'");
}

const std::vector<ParamSpec>& default_param_specs(int ports) {
    static std::map<int, std::vector<ParamSpec>> cache;
    auto it = cache.find(ports);
    if (it == cache.end()) {
        std::vector<ParamSpec> specs = {
            {ParamFamily::DispatchWidth, "dispatch_width", false, 1, 1, true, 1, 10},
            {ParamFamily::ReorderBufferSize, "reorder_buffer_size", false, 1, 1, true, 50, 250},
            {ParamFamily::NumMicroOps, "num_micro_ops", true, 1, 1, true, 1, 10},
            {ParamFamily::WriteLatency, "write_latency", true, 1, 0, true, 0, 5},
            {ParamFamily::ReadAdvance, "read_advance", true, kReadAdvanceSlots, 0, true, 0, 5},
            {ParamFamily::PortMap, "port_map", true, ports, 0, true, 0, 2},
        };
        it = cache.emplace(ports, std::move(specs)).first;
    }
    return it->second;
}

const ParamSpec& param_spec(ParamFamily f, int ports) {
    for (const auto& spec : default_param_specs(ports))
        if (spec.family == f) return spec;
    throw std::logic_error("param_spec: missing family");
}

const OpcodeParams& ParameterTable::row(const std::string& opcode) const {
    auto it = rows.find(opcode);
    if (it == rows.end()) throw SimError("unknown opcode '" + opcode + "'");
    return it->second;
}

OpcodeParams& ParameterTable::row(const std::string& opcode) {
    auto it = rows.find(opcode);
    if (it == rows.end()) throw SimError("unknown opcode '" + opcode + "'");
    return it->second;
}

namespace {

bool integral(double v) {
    return std::isfinite(v) && v == std::floor(v);
}

void check(bool ok, const std::string& what) {
    if (!ok) throw DataError("parameter table violates integer form: " + what);
}

}  // namespace

void validate_integer_form(const ParameterTable& table) {
    check(integral(table.dispatch_width) && table.dispatch_width >= 1, "dispatch_width >= 1");
    check(integral(table.reorder_buffer_size) && table.reorder_buffer_size >= 1,
          "reorder_buffer_size >= 1");
    for (const auto& [opcode, row] : table.rows) {
        check(integral(row.num_micro_ops) && row.num_micro_ops >= 1,
              "num_micro_ops >= 1 for '" + opcode + "'");
        check(integral(row.write_latency) && row.write_latency >= 0,
              "write_latency >= 0 for '" + opcode + "'");
        for (double ra : row.read_advance)
            check(integral(ra) && ra >= 0, "read_advance >= 0 for '" + opcode + "'");
        check(static_cast<int>(row.port_map.size()) == table.ports,
              "port_map arity for '" + opcode + "'");
        for (double p : row.port_map)
            check(integral(p) && p >= 0, "port_map >= 0 for '" + opcode + "'");
    }
}

namespace {

std::string format_value(double v) {
    char buf[40];
    if (integral(v) && std::abs(v) < 1e15) {
        std::snprintf(buf, sizeof buf, "%.0f", v);
    } else {
        std::snprintf(buf, sizeof buf, "%.17g", v);
    }
    return buf;
}

double parse_value(const std::string& text, const std::string& where) {
    std::size_t consumed = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &consumed);
    } catch (const std::exception&) {
        throw ParseError(where + ": expected number, got '" + text + "'");
    }
    if (consumed != text.size()) throw ParseError(where + ": trailing characters in '" + text + "'");
    return v;
}

std::vector<double> parse_csv_values(const std::string& text, const std::string& where) {
    std::vector<double> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = text.find(',', start);
        out.push_back(parse_value(
            text.substr(start, comma == std::string::npos ? std::string::npos : comma - start),
            where));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

std::string format_table(const ParameterTable& table) {
    std::ostringstream out;
    out << "dispatch_width " << format_value(table.dispatch_width) << '\n';
    out << "reorder_buffer_size " << format_value(table.reorder_buffer_size) << '\n';
    for (const auto& [opcode, row] : table.rows) {
        out << opcode << " uops=" << format_value(row.num_micro_ops)
            << " lat=" << format_value(row.write_latency) << " ra=";
        for (int i = 0; i < kReadAdvanceSlots; ++i) {
            if (i) out << ',';
            out << format_value(row.read_advance[i]);
        }
        out << " ports=";
        for (std::size_t i = 0; i < row.port_map.size(); ++i) {
            if (i) out << ',';
            out << format_value(row.port_map[i]);
        }
        out << '\n';
    }
    return out.str();
}

ParameterTable parse_table(const std::string& text) {
    ParameterTable table;
    table.ports = -1;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    bool have_dw = false, have_rob = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const std::string where = "table line " + std::to_string(line_no);
        std::istringstream ls(line);
        std::string head;
        ls >> head;
        if (head == "dispatch_width" || head == "reorder_buffer_size") {
            std::string value;
            if (!(ls >> value)) throw ParseError(where + ": missing value");
            double v = parse_value(value, where);
            (head == "dispatch_width" ? table.dispatch_width : table.reorder_buffer_size) = v;
            (head == "dispatch_width" ? have_dw : have_rob) = true;
            continue;
        }
        OpcodeParams row;
        std::string field;
        bool have_uops = false, have_lat = false, have_ra = false, have_ports = false;
        while (ls >> field) {
            auto eq = field.find('=');
            if (eq == std::string::npos) throw ParseError(where + ": expected key=value, got '" + field + "'");
            std::string key = field.substr(0, eq);
            std::string value = field.substr(eq + 1);
            if (key == "uops") {
                row.num_micro_ops = parse_value(value, where);
                have_uops = true;
            } else if (key == "lat") {
                row.write_latency = parse_value(value, where);
                have_lat = true;
            } else if (key == "ra") {
                auto values = parse_csv_values(value, where);
                if (values.size() != kReadAdvanceSlots)
                    throw ParseError(where + ": ra needs " + std::to_string(kReadAdvanceSlots) +
                                     " values");
                for (int i = 0; i < kReadAdvanceSlots; ++i) row.read_advance[i] = values[i];
                have_ra = true;
            } else if (key == "ports") {
                row.port_map = parse_csv_values(value, where);
                have_ports = true;
            } else {
                throw ParseError(where + ": unknown field '" + key + "'");
            }
        }
        if (!have_uops || !have_lat || !have_ra || !have_ports)
            throw ParseError(where + ": row needs uops, lat, ra and ports fields");
        if (table.ports < 0) {
            table.ports = static_cast<int>(row.port_map.size());
        } else if (static_cast<int>(row.port_map.size()) != table.ports) {
            throw ParseError(where + ": inconsistent port count");
        }
        if (!table.rows.emplace(head, std::move(row)).second)
            throw ParseError(where + ": duplicate opcode '" + head + "'");
    }
    if (!have_dw || !have_rob)
        throw ParseError("table is missing dispatch_width / reorder_buffer_size header lines");
    if (table.ports < 0) table.ports = kDefaultPorts;

    auto is_integral = [](double v) { return v == std::floor(v); };
    bool all_int = is_integral(table.dispatch_width) && is_integral(table.reorder_buffer_size);
    for (const auto& [op, row] : table.rows) {
        all_int = all_int && is_integral(row.num_micro_ops) && is_integral(row.write_latency);
        for (double ra : row.read_advance) all_int = all_int && is_integral(ra);
        for (double p : row.port_map) all_int = all_int && is_integral(p);
    }
    table.form = all_int ? TableForm::Integer : TableForm::Continuous;
    return table;
}

ParameterTable load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open table file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_table(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void save_table(const ParameterTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write table file '" + path + "'");
    out << format_table(table);
}

bool FreezeMask::frozen(ParamFamily f, const std::string& opcode) const {
    if (entries.count({f, std::string()})) return true;
    if (!opcode.empty() && entries.count({f, opcode})) return true;
    return false;
}

FreezeMask FreezeMask::parse(const std::vector<std::string>& specs) {
    FreezeMask mask;
    for (const auto& spec : specs) {
        auto colon = spec.find(':');
        std::string family = spec.substr(0, colon);
        std::string opcode = colon == std::string::npos ? "" : spec.substr(colon + 1);
        mask.freeze(family_from_name(family), opcode);
    }
    return mask;
}

}  // namespace simtune
