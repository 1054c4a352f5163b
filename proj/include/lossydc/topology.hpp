#pragma once

#include <Eigen/SparseCore>

#include "lossydc/admittance.hpp"
#include "lossydc/linsolve.hpp"
#include "lossydc/network.hpp"

namespace lossydc {

// Graph matrices and branch weights shared by every solver. Immutable once
// built; safe to share across concurrent solver runs.
//
// Edge order and orientation are canonical: input branch order, oriented
// from-bus -> to-bus. Reduced matrices drop the slack row. The cycle basis C
// comes from the fundamental cycles of a BFS spanning tree rooted at the
// slack bus (non-tree edge gets coefficient +1).
struct TopologyCache {
    int n = 0;  // non-slack bus count
    int m = 0;  // branch count
    int c = 0;  // cycle count, m - n for a connected graph; 0 iff radial

    Eigen::SparseMatrix<double> A_r;      // n x m reduced incidence
    Eigen::SparseMatrix<double> A_abs_r;  // unsigned |A|_r
    Eigen::SparseMatrix<double> C;        // m x c edge-cycle incidence

    Eigen::VectorXd d_b;     // branch weights V_i V_j B_ij  (> 0)
    Eigen::VectorXd d_g;     // branch weights V_i V_j |G_ij| (>= 0)
    Eigen::VectorXd g_diag;  // diagonal conductances G_ii, non-slack buses
    Eigen::VectorXd v_r;     // non-slack voltage magnitudes
    Eigen::VectorXd p_r;     // non-slack injections

    SpdOperator lap_b;    // A_r D_B A_r^T, factorized
    SpdOperator gram;     // A_r A_r^T, factorized (angle recovery)
    SpdOperator cyc_op;   // C^T D_B^{-1} C, factorized; only when c > 0

    // Bus bookkeeping: reduced index (0..n-1) per position in net.buses,
    // -1 for the slack; `edges` maps branches to bus positions.
    std::vector<int> reduced_index;
    std::vector<std::pair<int, int>> edges;  // (from,to) as positions in net.buses
    std::vector<bool> in_tree;               // spanning-tree membership per edge

    // Spanning-tree bookkeeping: BFS traversal order (root first) and, per
    // bus position, the edge to the parent; parent_sign is the incidence
    // coefficient of that edge at this bus (+1 when the edge leaves it).
    std::vector<int> bfs_order;
    std::vector<int> parent_edge;  // -1 for the root
    std::vector<int> parent_sign;

    bool radial() const { return c == 0; }
};

// Throws NonInductiveBranchError if any V_i V_j B_ij <= 0, TopologyError if
// disconnected.
TopologyCache build_topology(const Network& net, const BusAdmittance& adm);

// True iff A C == 0 exactly (integer arithmetic) and c == m - n.
bool cycle_basis_check(const TopologyCache& cache);

// Flow solve on a radial network: returns z with A_r z = w (unique since A_r
// is square and invertible on a tree). Linear time via leaf stripping.
Eigen::VectorXd tree_flow_solve(const TopologyCache& cache, const Eigen::VectorXd& w);

}  // namespace lossydc
