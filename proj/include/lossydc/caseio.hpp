#pragma once

#include <string>
#include <vector>

#include "lossydc/errors.hpp"
#include "lossydc/network.hpp"

namespace lossydc {

enum class BusType { PQ = 1, PV = 2, REF = 3 };

struct CaseBus {
    int id = 0;
    BusType type = BusType::PQ;
    double pd = 0.0;  // MW
    double gs = 0.0;  // MW at V=1, bus shunt conductance
    double vm = 1.0;  // p.u.
    double va = 0.0;  // degrees
};

struct CaseGen {
    int bus = 0;
    double pg = 0.0;  // MW
    bool in_service = true;
};

struct CaseBranch {
    int from = 0;
    int to = 0;
    double r = 0.0;   // p.u.
    double x = 0.0;   // p.u.
    double tap = 0.0; // 0 means nominal
    bool in_service = true;
};

struct CaseFile {
    std::string name;
    double base_mva = 100.0;
    std::vector<CaseBus> buses;
    std::vector<CaseGen> gens;
    std::vector<CaseBranch> branches;
};

// hot: case-file Vm as V_i; cold: V_i = 1 everywhere.
enum class StartPolicy { hot, cold };

// Accepts the MATPOWER .m subset (mpc.baseMVA / mpc.bus / mpc.gen /
// mpc.branch) or the canonical JSON schema (detected by a leading '{').
// Out-of-service branches and generators are dropped. Throws ParseError with
// a line number on malformed input.
CaseFile parse_case(const std::string& text);

// Reads the file at `path` and parses it.
CaseFile parse_case_file(const std::string& path);

// Canonical JSON form:
// {base_mva, buses:[{id,type,v,p,gs}], branches:[{from,to,r,x,tap}], slack}
// with p the net per-unit injection. parse(serialize(parse(j))) == parse(j).
std::string serialize_case_json(const CaseFile& cf);

// P_i = (sum Pg at bus - Pd)/base; y = 1/(r+jx) split into (g, b) with b > 0
// for inductive branches; REF bus becomes the slack. Throws
// NonInductiveBranchError if any branch has b <= 0.
Network to_network(const CaseFile& cf, StartPolicy start);

}  // namespace lossydc
