#include "lossydc/network.hpp"

#include <queue>
#include <unordered_map>

#include "lossydc/errors.hpp"

namespace lossydc {

int Network::bus_index(int id) const {
    for (int i = 0; i < size(); ++i) {
        if (buses[i].id == id) return i;
    }
    return -1;
}

bool is_connected(const Network& net) {
    const int nb = net.size();
    if (nb == 0) return false;
    std::unordered_map<int, int> pos;
    pos.reserve(nb);
    for (int i = 0; i < nb; ++i) pos[net.buses[i].id] = i;

    std::vector<std::vector<int>> adj(nb);
    for (const auto& br : net.branches) {
        auto fi = pos.find(br.from);
        auto ti = pos.find(br.to);
        if (fi == pos.end() || ti == pos.end()) return false;
        adj[fi->second].push_back(ti->second);
        adj[ti->second].push_back(fi->second);
    }

    std::vector<char> seen(nb, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int count = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v : adj[u]) {
            if (!seen[v]) {
                seen[v] = 1;
                ++count;
                q.push(v);
            }
        }
    }
    return count == nb;
}

void validate(const Network& net) {
    if (net.buses.empty()) throw TopologyError("network has no buses");

    std::unordered_map<int, int> pos;
    for (int i = 0; i < net.size(); ++i) {
        auto [it, inserted] = pos.emplace(net.buses[i].id, i);
        if (!inserted) throw TopologyError("duplicate bus id " + std::to_string(net.buses[i].id));
    }
    if (!pos.count(net.slack_bus))
        throw TopologyError("slack bus " + std::to_string(net.slack_bus) + " not in bus list");

    for (const auto& b : net.buses) {
        if (!(b.voltage > 0.0))
            throw TopologyError("bus " + std::to_string(b.id) + " has non-positive voltage");
    }
    for (const auto& br : net.branches) {
        if (br.from == br.to)
            throw TopologyError("self-loop at bus " + std::to_string(br.from));
        if (!pos.count(br.from) || !pos.count(br.to))
            throw TopologyError("branch references unknown bus " +
                                std::to_string(pos.count(br.from) ? br.to : br.from));
        if (!(br.tap > 0.0))
            throw TopologyError("branch " + std::to_string(br.from) + "-" +
                                std::to_string(br.to) + " has non-positive tap");
    }
    if (!is_connected(net)) throw TopologyError("network graph is disconnected");
}

Network scale_loading(const Network& net, double lambda) {
    Network out = net;
    for (auto& b : out.buses) {
        if (b.id != net.slack_bus) b.injection *= lambda;
    }
    return out;
}

}  // namespace lossydc
