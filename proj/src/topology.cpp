#include "lossydc/topology.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <vector>

namespace lossydc {

namespace {

int other_end(const std::pair<int, int>& edge, int bus) {
    return edge.first == bus ? edge.second : edge.first;
}

}  // namespace

TopologyCache build_topology(const Network& net, const BusAdmittance& adm) {
    validate(net);
    const int nb = net.size();
    const int m = static_cast<int>(net.branches.size());
    if (adm.G.rows() != nb || adm.B.rows() != nb)
        throw DimensionError("admittance does not match network size");

    TopologyCache tc;
    tc.m = m;

    const int slack_pos = net.bus_index(net.slack_bus);
    tc.reduced_index.assign(nb, -1);
    int next = 0;
    for (int i = 0; i < nb; ++i)
        if (i != slack_pos) tc.reduced_index[i] = next++;
    tc.n = next;
    tc.c = m - tc.n;

    tc.edges.reserve(m);
    tc.d_b.resize(m);
    tc.d_g.resize(m);
    std::vector<Eigen::Triplet<double>> ta, tabs;
    for (int e = 0; e < m; ++e) {
        const Branch& br = net.branches[e];
        const int fp = net.bus_index(br.from);
        const int tp = net.bus_index(br.to);
        tc.edges.emplace_back(fp, tp);
        const double vv = net.buses[fp].voltage * net.buses[tp].voltage;
        if (vv * br.susceptance / br.tap <= 0.0)
            throw NonInductiveBranchError("branch " + std::to_string(br.from) + "-" +
                                          std::to_string(br.to) +
                                          " has non-positive V_i V_j B_ij");
        tc.d_b(e) = vv * br.susceptance / br.tap;
        tc.d_g(e) = vv * std::abs(br.conductance) / br.tap;
        const int rf = tc.reduced_index[fp];
        const int rt = tc.reduced_index[tp];
        if (rf >= 0) {
            ta.emplace_back(rf, e, 1.0);
            tabs.emplace_back(rf, e, 1.0);
        }
        if (rt >= 0) {
            ta.emplace_back(rt, e, -1.0);
            tabs.emplace_back(rt, e, 1.0);
        }
    }
    tc.A_r.resize(tc.n, m);
    tc.A_r.setFromTriplets(ta.begin(), ta.end());
    tc.A_abs_r.resize(tc.n, m);
    tc.A_abs_r.setFromTriplets(tabs.begin(), tabs.end());

    tc.v_r.resize(tc.n);
    tc.p_r.resize(tc.n);
    tc.g_diag.resize(tc.n);
    for (int i = 0; i < nb; ++i) {
        const int r = tc.reduced_index[i];
        if (r < 0) continue;
        tc.v_r(r) = net.buses[i].voltage;
        tc.p_r(r) = net.buses[i].injection;
        tc.g_diag(r) = adm.G.coeff(i, i);
    }

    std::vector<std::vector<std::pair<int, int>>> adj(nb);  // (neighbor, edge)
    for (int e = 0; e < m; ++e) {
        adj[tc.edges[e].first].emplace_back(tc.edges[e].second, e);
        adj[tc.edges[e].second].emplace_back(tc.edges[e].first, e);
    }

    tc.parent_edge.assign(nb, -1);
    tc.parent_sign.assign(nb, 0);
    tc.in_tree.assign(m, false);
    tc.bfs_order.reserve(nb);
    std::vector<int> depth(nb, -1);
    std::queue<int> q;
    q.push(slack_pos);
    depth[slack_pos] = 0;
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        tc.bfs_order.push_back(u);
        for (const auto& [v, e] : adj[u]) {
            if (depth[v] >= 0) continue;
            depth[v] = depth[u] + 1;
            tc.parent_edge[v] = e;
            tc.parent_sign[v] = tc.edges[e].first == v ? 1 : -1;
            tc.in_tree[e] = true;
            q.push(v);
        }
    }

    // Fundamental cycle per non-tree edge e=(u,v): coefficient +1 on e plus
    // the tree path v -> u, each tree edge signed by travel direction.
    std::vector<Eigen::Triplet<double>> tcyc;
    int col = 0;
    for (int e = 0; e < m; ++e) {
        if (tc.in_tree[e]) continue;
        tcyc.emplace_back(e, col, 1.0);
        int a = tc.edges[e].second;
        int b = tc.edges[e].first;
        while (a != b) {
            if (depth[a] >= depth[b]) {
                const int pe = tc.parent_edge[a];
                tcyc.emplace_back(pe, col, tc.parent_sign[a] > 0 ? 1.0 : -1.0);
                a = other_end(tc.edges[pe], a);
            } else {
                const int pe = tc.parent_edge[b];
                tcyc.emplace_back(pe, col, tc.parent_sign[b] > 0 ? -1.0 : 1.0);
                b = other_end(tc.edges[pe], b);
            }
        }
        ++col;
    }
    tc.C.resize(m, tc.c);
    tc.C.setFromTriplets(tcyc.begin(), tcyc.end());

    const Eigen::SparseMatrix<double> At = tc.A_r.transpose();
    const Eigen::SparseMatrix<double> weighted = tc.A_r * tc.d_b.asDiagonal();
    tc.lap_b = SpdOperator::factorize(weighted * At);
    tc.gram = SpdOperator::factorize(tc.A_r * At);
    if (tc.c > 0) {
        const Eigen::SparseMatrix<double> Ct = tc.C.transpose();
        const Eigen::SparseMatrix<double> scaled = tc.d_b.cwiseInverse().asDiagonal() * tc.C;
        tc.cyc_op = SpdOperator::factorize(Ct * scaled);
    }
    return tc;
}

bool cycle_basis_check(const TopologyCache& cache) {
    if (cache.c != cache.m - cache.n) return false;
    if (cache.C.rows() != cache.m || cache.C.cols() != cache.c) return false;
    // A C == 0 over all buses, slack row included, in exact integer arithmetic.
    const int nb = cache.n + 1;
    std::vector<std::vector<long long>> acc(cache.c, std::vector<long long>(nb, 0));
    for (int col = 0; col < cache.C.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(cache.C, col); it; ++it) {
            const long long k = std::llround(it.value());
            if (static_cast<double>(k) != it.value()) return false;
            const auto& [fp, tp] = cache.edges[static_cast<size_t>(it.row())];
            acc[col][fp] += k;
            acc[col][tp] -= k;
        }
    }
    for (const auto& row : acc)
        for (const long long v : row)
            if (v != 0) return false;
    return true;
}

Eigen::VectorXd tree_flow_solve(const TopologyCache& cache, const Eigen::VectorXd& w) {
    if (!cache.radial()) throw TopologyError("tree flow solve requires a radial network");
    if (w.size() != cache.n) throw DimensionError("flow right-hand side has wrong size");

    // Leaf stripping: reverse BFS order resolves every child edge before its
    // parent, so each bus row leaves a single unknown.
    Eigen::VectorXd r = w;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(cache.m);
    for (auto it = cache.bfs_order.rbegin(); it != cache.bfs_order.rend(); ++it) {
        const int bus = *it;
        const int e = cache.parent_edge[bus];
        if (e < 0) continue;
        const double ze = r(cache.reduced_index[bus]) / cache.parent_sign[bus];
        z(e) = ze;
        const int parent = other_end(cache.edges[e], bus);
        const int rp = cache.reduced_index[parent];
        if (rp >= 0) r(rp) += cache.parent_sign[bus] * ze;
    }
    return z;
}

}  // namespace lossydc
