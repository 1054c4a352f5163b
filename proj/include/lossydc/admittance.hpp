#pragma once

#include <Eigen/SparseCore>

#include "lossydc/network.hpp"

namespace lossydc {

// Bus admittance Y = G + jB split into real and imaginary parts, including the
// slack row/column. Sign convention: for a branch with series y = g - jb
// (g, b > 0), the off-diagonals are G_ij = -g/t and B_ij = +b/t, and each
// endpoint diagonal picks up g/t^2 - jb/t^2 plus any bus shunt conductance.
struct BusAdmittance {
    Eigen::SparseMatrix<double> G;
    Eigen::SparseMatrix<double> B;
};

BusAdmittance build_admittance(const Network& net);

}  // namespace lossydc
