#include "lossydc/caseio.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace lossydc {

namespace {

using nlohmann::ordered_json;

int line_of_offset(const std::string& text, size_t offset) {
    int line = 1;
    for (size_t i = 0; i < offset && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

BusType bus_type_of(double code, int line) {
    switch (static_cast<int>(code)) {
        case 1: return BusType::PQ;
        case 2: return BusType::PV;
        case 3: return BusType::REF;
        default: throw ParseError("unsupported bus type " + std::to_string(code), line);
    }
}

// One matrix row with its source line, split out of `mpc.X = [ ... ];` blocks.
struct Row {
    std::vector<double> values;
    int line = 0;
};

struct MatlabCase {
    std::string name;
    double base_mva = -1.0;
    std::unordered_map<std::string, std::vector<Row>> tables;
};

std::vector<double> parse_numbers(const std::string& chunk, int line) {
    std::vector<double> out;
    std::istringstream is(chunk);
    std::string tok;
    while (is >> tok) {
        double v = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
            throw ParseError("expected a number, got '" + tok + "'", line);
        out.push_back(v);
    }
    return out;
}

MatlabCase scan_matlab(const std::string& text) {
    MatlabCase mc;
    std::istringstream is(text);
    std::string raw;
    int line_no = 0;
    std::string open_table;  // nonempty while inside `mpc.X = [ ... ];`
    std::string pending;     // row text accumulated across lines

    auto flush_rows = [&](const std::string& chunk, int line) {
        size_t start = 0;
        while (true) {
            const size_t semi = chunk.find(';', start);
            const std::string piece = chunk.substr(start, semi == std::string::npos
                                                               ? std::string::npos
                                                               : semi - start);
            if (semi == std::string::npos) {
                pending += piece;
                return;
            }
            auto values = parse_numbers(pending + piece, line);
            pending.clear();
            if (!values.empty()) mc.tables[open_table].push_back({std::move(values), line});
            start = semi + 1;
        }
    };

    while (std::getline(is, raw)) {
        ++line_no;
        const size_t comment = raw.find('%');
        std::string text_line = comment == std::string::npos ? raw : raw.substr(0, comment);

        if (!open_table.empty()) {
            const size_t close = text_line.find(']');
            const std::string body = close == std::string::npos ? text_line
                                                                : text_line.substr(0, close);
            flush_rows(body, line_no);
            if (close != std::string::npos) {
                auto tail = parse_numbers(pending, line_no);
                pending.clear();
                if (!tail.empty()) mc.tables[open_table].push_back({std::move(tail), line_no});
                open_table.clear();
            }
            continue;
        }

        std::istringstream ls(text_line);
        std::string first;
        if (!(ls >> first)) continue;

        if (first == "function") {
            const size_t eq = text_line.find('=');
            if (eq != std::string::npos) {
                std::istringstream ns(text_line.substr(eq + 1));
                ns >> mc.name;
            }
            continue;
        }
        if (first.rfind("mpc.", 0) != 0) continue;
        std::string field = first.substr(4);

        std::string rest;
        std::getline(ls, rest);
        const size_t eq = rest.find('=');
        if (eq == std::string::npos) throw ParseError("expected '=' after mpc." + field, line_no);
        rest = rest.substr(eq + 1);

        if (field == "baseMVA") {
            const size_t semi = rest.find(';');
            if (semi != std::string::npos) rest = rest.substr(0, semi);
            const auto vals = parse_numbers(rest, line_no);
            if (vals.size() != 1) throw ParseError("expected a single baseMVA value", line_no);
            mc.base_mva = vals[0];
            continue;
        }
        if (field == "version") continue;

        const size_t open = rest.find('[');
        if (open == std::string::npos) continue;  // scalar/string field outside the subset
        open_table = field;
        pending.clear();
        const std::string body = rest.substr(open + 1);
        const size_t close = body.find(']');
        if (close == std::string::npos) {
            flush_rows(body, line_no);
        } else {
            flush_rows(body.substr(0, close), line_no);
            auto tail = parse_numbers(pending, line_no);
            pending.clear();
            if (!tail.empty()) mc.tables[open_table].push_back({std::move(tail), line_no});
            open_table.clear();
        }
    }
    if (!open_table.empty())
        throw ParseError("unterminated matrix mpc." + open_table, line_no);
    return mc;
}

const std::vector<Row>& require_table(const MatlabCase& mc, const std::string& key) {
    const auto it = mc.tables.find(key);
    if (it == mc.tables.end() || it->second.empty())
        throw ParseError("missing table mpc." + key, 0);
    return it->second;
}

CaseFile parse_matlab(const std::string& text) {
    const MatlabCase mc = scan_matlab(text);
    CaseFile cf;
    cf.name = mc.name;
    if (mc.base_mva <= 0.0) throw ParseError("missing or non-positive mpc.baseMVA", 0);
    cf.base_mva = mc.base_mva;

    const auto& bus = require_table(mc, "bus");
    const auto& gen = require_table(mc, "gen");
    const auto& branch = require_table(mc, "branch");

    const size_t bus_w = bus.front().values.size();
    if (bus_w < 13) throw ParseError("mpc.bus needs at least 13 columns", bus.front().line);
    for (const auto& row : bus) {
        if (row.values.size() != bus_w)
            throw ParseError("mpc.bus row has " + std::to_string(row.values.size()) +
                                 " columns, expected " + std::to_string(bus_w),
                             row.line);
        CaseBus b;
        b.id = static_cast<int>(row.values[0]);
        b.type = bus_type_of(row.values[1], row.line);
        b.pd = row.values[2];
        b.gs = row.values[4];
        b.vm = row.values[7];
        b.va = row.values[8];
        cf.buses.push_back(b);
    }

    const size_t gen_w = gen.front().values.size();
    if (gen_w < 8) throw ParseError("mpc.gen needs at least 8 columns", gen.front().line);
    for (const auto& row : gen) {
        if (row.values.size() != gen_w)
            throw ParseError("mpc.gen row has " + std::to_string(row.values.size()) +
                                 " columns, expected " + std::to_string(gen_w),
                             row.line);
        if (row.values[7] <= 0.0) continue;  // out of service
        cf.gens.push_back({static_cast<int>(row.values[0]), row.values[1], true});
    }

    const size_t br_w = branch.front().values.size();
    if (br_w < 11) throw ParseError("mpc.branch needs at least 11 columns", branch.front().line);
    for (const auto& row : branch) {
        if (row.values.size() != br_w)
            throw ParseError("mpc.branch row has " + std::to_string(row.values.size()) +
                                 " columns, expected " + std::to_string(br_w),
                             row.line);
        if (row.values[10] <= 0.0) continue;  // out of service
        CaseBranch b;
        b.from = static_cast<int>(row.values[0]);
        b.to = static_cast<int>(row.values[1]);
        b.r = row.values[2];
        b.x = row.values[3];
        b.tap = row.values[8];
        cf.branches.push_back(b);
    }
    return cf;
}

CaseFile parse_json_case(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what(), line_of_offset(text, e.byte));
    }
    try {
        CaseFile cf;
        if (j.contains("name")) cf.name = j.at("name").get<std::string>();
        cf.base_mva = j.at("base_mva").get<double>();
        if (cf.base_mva <= 0.0) throw ParseError("base_mva must be positive", 0);
        for (const auto& jb : j.at("buses")) {
            CaseBus b;
            b.id = jb.at("id").get<int>();
            b.type = bus_type_of(jb.at("type").get<double>(), 0);
            b.vm = jb.at("v").get<double>();
            b.pd = -jb.at("p").get<double>() * cf.base_mva;
            b.gs = jb.at("gs").get<double>() * cf.base_mva;
            cf.buses.push_back(b);
        }
        for (const auto& je : j.at("branches")) {
            CaseBranch b;
            b.from = je.at("from").get<int>();
            b.to = je.at("to").get<int>();
            b.r = je.at("r").get<double>();
            b.x = je.at("x").get<double>();
            b.tap = je.at("tap").get<double>();
            if (b.tap == 0.0) b.tap = 1.0;
            cf.branches.push_back(b);
        }
        const int slack = j.at("slack").get<int>();
        bool found = false;
        for (const auto& b : cf.buses)
            if (b.id == slack) {
                found = true;
                if (b.type != BusType::REF)
                    throw ParseError("slack bus " + std::to_string(slack) + " is not type REF", 0);
            }
        if (!found) throw ParseError("slack bus " + std::to_string(slack) + " not in bus list", 0);
        return cf;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(e.what(), 0);
    }
}

}  // namespace

CaseFile parse_case(const std::string& text) {
    for (const char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) continue;
        if (ch == '{') return parse_json_case(text);
        break;
    }
    CaseFile cf = parse_matlab(text);

    int refs = 0;
    for (const auto& b : cf.buses)
        if (b.type == BusType::REF) ++refs;
    if (refs == 0) throw ParseError("case has no REF bus", 0);
    if (refs > 1) throw ParseError("case has multiple REF buses", 0);
    return cf;
}

CaseFile parse_case_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open case file: " + path, 0);
    std::ostringstream buf;
    buf << in.rdbuf();
    CaseFile cf = parse_case(buf.str());
    if (cf.name.empty()) {
        // derive a name from the file stem
        std::string stem = path;
        const size_t slash = stem.find_last_of("/\\");
        if (slash != std::string::npos) stem = stem.substr(slash + 1);
        const size_t dot = stem.find_last_of('.');
        if (dot != std::string::npos) stem = stem.substr(0, dot);
        cf.name = stem;
    }
    return cf;
}

std::string serialize_case_json(const CaseFile& cf) {
    std::unordered_map<int, double> pg;
    for (const auto& g : cf.gens)
        if (g.in_service) pg[g.bus] += g.pg;

    ordered_json j;
    if (!cf.name.empty()) j["name"] = cf.name;
    j["base_mva"] = cf.base_mva;
    j["buses"] = ordered_json::array();
    int slack = 0;
    for (const auto& b : cf.buses) {
        const auto it = pg.find(b.id);
        const double gen_mw = it == pg.end() ? 0.0 : it->second;
        j["buses"].push_back({{"id", b.id},
                              {"type", static_cast<int>(b.type)},
                              {"v", b.vm},
                              {"p", (gen_mw - b.pd) / cf.base_mva},
                              {"gs", b.gs / cf.base_mva}});
        if (b.type == BusType::REF) slack = b.id;
    }
    j["branches"] = ordered_json::array();
    for (const auto& b : cf.branches) {
        if (!b.in_service) continue;
        j["branches"].push_back({{"from", b.from},
                                 {"to", b.to},
                                 {"r", b.r},
                                 {"x", b.x},
                                 {"tap", b.tap == 0.0 ? 1.0 : b.tap}});
    }
    j["slack"] = slack;
    return j.dump(2) + "\n";
}

Network to_network(const CaseFile& cf, StartPolicy start) {
    std::unordered_map<int, double> pg;
    for (const auto& g : cf.gens)
        if (g.in_service) pg[g.bus] += g.pg;

    Network net;
    net.base_mva = cf.base_mva;
    int refs = 0;
    for (const auto& b : cf.buses) {
        Bus bus;
        bus.id = b.id;
        bus.voltage = start == StartPolicy::hot ? b.vm : 1.0;
        const auto it = pg.find(b.id);
        bus.injection = ((it == pg.end() ? 0.0 : it->second) - b.pd) / cf.base_mva;
        bus.shunt_conductance = b.gs / cf.base_mva;
        if (b.type == BusType::REF) {
            net.slack_bus = b.id;
            ++refs;
        }
        net.buses.push_back(bus);
    }
    if (refs != 1) throw ParseError("case must have exactly one REF bus", 0);

    for (const auto& b : cf.branches) {
        if (!b.in_service) continue;
        const double denom = b.r * b.r + b.x * b.x;
        if (denom == 0.0)
            throw NonInductiveBranchError("zero-impedance branch " + std::to_string(b.from) +
                                          "-" + std::to_string(b.to));
        const double g = b.r / denom;
        const double bb = b.x / denom;
        if (bb <= 0.0)
            throw NonInductiveBranchError("branch " + std::to_string(b.from) + "-" +
                                          std::to_string(b.to) +
                                          " is not inductive (b = " + std::to_string(bb) + ")");
        net.branches.push_back({b.from, b.to, g, bb, b.tap == 0.0 ? 1.0 : b.tap});
    }
    return net;
}

}  // namespace lossydc
