#include "lossydc/admittance.hpp"

#include <vector>

#include <Eigen/SparseCore>

#include "lossydc/errors.hpp"

namespace lossydc {

BusAdmittance build_admittance(const Network& net) {
    validate(net);
    const int nb = net.size();

    using T = Eigen::Triplet<double>;
    std::vector<T> gt, bt;
    gt.reserve(net.branches.size() * 4 + nb);
    bt.reserve(net.branches.size() * 4);

    for (const auto& br : net.branches) {
        const int i = net.bus_index(br.from);
        const int j = net.bus_index(br.to);
        const double t = br.tap;
        const double g = br.conductance;
        const double b = br.susceptance;
        // Off-diagonal: Y_ij = -y_ij/t with y = g - jb, so G_ij = -g/t and
        // B_ij = +b/t. Diagonal: each endpoint picks up the series part
        // scaled by 1/t^2, i.e. G_ii += g/t^2, B_ii += -b/t^2.
        gt.emplace_back(i, j, -g / t);
        gt.emplace_back(j, i, -g / t);
        bt.emplace_back(i, j, b / t);
        bt.emplace_back(j, i, b / t);
        gt.emplace_back(i, i, g / (t * t));
        gt.emplace_back(j, j, g / (t * t));
        bt.emplace_back(i, i, -b / (t * t));
        bt.emplace_back(j, j, -b / (t * t));
    }
    for (int i = 0; i < nb; ++i) {
        if (net.buses[i].shunt_conductance != 0.0)
            gt.emplace_back(i, i, net.buses[i].shunt_conductance);
    }

    BusAdmittance adm;
    adm.G.resize(nb, nb);
    adm.B.resize(nb, nb);
    adm.G.setFromTriplets(gt.begin(), gt.end());
    adm.B.setFromTriplets(bt.begin(), bt.end());
    return adm;
}

}  // namespace lossydc
