#pragma once

#include <string>
#include <vector>

namespace lossydc {

// All electrical quantities are per-unit on `base_mva`.
struct Bus {
    int id = 0;                     // external bus number (as in the case file)
    double voltage = 1.0;           // voltage magnitude V_i, p.u.
    double injection = 0.0;         // net active injection P_i, p.u.
    double shunt_conductance = 0.0; // G shunt folded into the bus diagonal, p.u.
};

// Series branch between two buses. `conductance`/`susceptance` are the series
// values g, b of y = g - jb with b > 0 for an inductive branch.
struct Branch {
    int from = 0;
    int to = 0;
    double conductance = 0.0;  // g, p.u.
    double susceptance = 0.0;  // b, p.u.
    double tap = 1.0;          // off-nominal tap ratio, 1 = nominal
};

// Immutable bus/branch description of the grid. One slack bus whose angle is
// fixed at zero; every other bus is treated as PV (P and V fixed, angle free).
struct Network {
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    int slack_bus = 0;       // external id
    double base_mva = 100.0;

    int bus_index(int id) const;       // position in `buses`, -1 if unknown
    int size() const { return static_cast<int>(buses.size()); }
};

// Checks the structural invariants: connected graph, exactly one valid slack,
// positive voltages, positive taps, no self-loops. Throws TopologyError.
void validate(const Network& net);

// True iff the branch graph is connected (ignores electrical data).
bool is_connected(const Network& net);

// Copy with all non-slack injections multiplied by lambda.
Network scale_loading(const Network& net, double lambda);

}  // namespace lossydc
