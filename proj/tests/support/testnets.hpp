#pragma once

// Shared fixtures for the test suite: tiny hand-built networks, seeded random
// network generators, and the scalar two-bus bisection oracle.

#include <Eigen/Dense>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lossydc/certificate.hpp"
#include "lossydc/experiments.hpp"
#include "lossydc/rng.hpp"

namespace testnets {

using lossydc::Branch;
using lossydc::Bus;
using lossydc::Network;
using lossydc::UniformRng;

inline Network two_bus(double g, double b, double v1, double v2, double p1) {
    Network net;
    net.buses = {{1, v1, p1, 0.0}, {2, v2, 0.0, 0.0}};
    net.branches = {{1, 2, g, b, 1.0}};
    net.slack_bus = 2;
    return net;
}

// Path 1-2-3 with slack at bus 3, unit susceptances, lossless by default.
inline Network path3(double p1, double p2, double g = 0.0) {
    Network net;
    net.buses = {{1, 1.0, p1, 0.0}, {2, 1.0, p2, 0.0}, {3, 1.0, 0.0, 0.0}};
    net.branches = {{1, 2, g, 1.0, 1.0}, {2, 3, g, 1.0, 1.0}};
    net.slack_bus = 3;
    return net;
}

inline Network triangle(double p1, double p2, double g12 = 0.0, double g23 = 0.0,
                        double g31 = 0.0) {
    Network net;
    net.buses = {{1, 1.0, p1, 0.0}, {2, 1.0, p2, 0.0}, {3, 1.0, 0.0, 0.0}};
    net.branches = {{1, 2, g12, 1.0, 1.0}, {2, 3, g23, 1.0, 1.0}, {3, 1, g31, 1.0, 1.0}};
    net.slack_bus = 3;
    return net;
}

// Root of P1 = g V1^2 - g V1 V2 cos(t) + b V1 V2 sin(t) on the monotone branch
// through the origin, restricted to (-pi/2, pi/2). The balance is strictly
// increasing on (-atan2(b,g), pi - atan2(b,g)), so bisection is exact here.
inline double two_bus_bisection(double g, double b, double v1, double v2, double p1) {
    const auto h = [&](double t) {
        return g * v1 * v1 - g * v1 * v2 * std::cos(t) + b * v1 * v2 * std::sin(t) - p1;
    };
    const double phi = std::atan2(b, g);
    double lo = std::max(-phi, -M_PI / 2) + 1e-14;
    double hi = M_PI / 2 - 1e-14;
    if (h(lo) > 0.0 || h(hi) < 0.0)
        throw std::runtime_error("two_bus_bisection: no root on the monotone branch");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (h(mid) <= 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Random tree on `n` buses (ids 1..n, slack 1), V = 1, no shunts or taps, so
// the certificate hypotheses hold. Injections are rescaled so that
// Gamma == gamma_scale * Gamma_crit exactly (psi_MDC is linear in P_r).
inline Network random_radial(UniformRng& rng, int n, double gamma_scale) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        Network net;
        net.slack_bus = 1;
        for (int i = 1; i <= n; ++i)
            net.buses.push_back({i, 1.0, i == 1 ? 0.0 : rng.range(-1.0, 1.0), 0.0});
        for (int i = 2; i <= n; ++i) {
            const int parent = 1 + static_cast<int>(rng.next() * (i - 1));
            const double b = rng.range(1.0, 10.0);
            const double g = rng.range(0.05, 1.0) * b;
            if (rng.next() < 0.5)
                net.branches.push_back({parent, i, g, b, 1.0});
            else
                net.branches.push_back({i, parent, g, b, 1.0});
        }
        const auto pc = lossydc::prepare_network(net, "random_radial");
        const auto cert = lossydc::certify_radial(pc.net, pc.cache);
        if (cert.gamma < 1e-6) continue;
        const double gamma_crit = std::sqrt(1.0 + cert.rho * cert.rho) - cert.rho;
        return lossydc::scale_loading(net, gamma_scale * gamma_crit / cert.gamma);
    }
    throw std::runtime_error("random_radial: failed to draw a usable instance");
}

// Random connected graph: a tree plus `extra` chords. Equal voltages and no
// shunts by default. Injections scaled so the DCPF slope stays moderate.
inline Network random_connected(UniformRng& rng, int n, int extra,
                                double target_slope = 0.3) {
    Network net;
    net.slack_bus = 1;
    for (int i = 1; i <= n; ++i)
        net.buses.push_back({i, 1.0, i == 1 ? 0.0 : rng.range(-1.0, 1.0), 0.0});
    for (int i = 2; i <= n; ++i) {
        const int parent = 1 + static_cast<int>(rng.next() * (i - 1));
        const double b = rng.range(1.0, 10.0);
        net.branches.push_back({parent, i, rng.range(0.0, 0.8) * b, b, 1.0});
    }
    for (int e = 0; e < extra; ++e) {
        const int u = 1 + static_cast<int>(rng.next() * n);
        const int v = 1 + static_cast<int>(rng.next() * n);
        if (u == v) continue;
        const double b = rng.range(1.0, 10.0);
        net.branches.push_back({u, v, rng.range(0.0, 0.8) * b, b, 1.0});
    }
    auto pc = lossydc::prepare_network(net, "random_connected");
    const Eigen::VectorXd slope =
        pc.cache.A_r.transpose() * lossydc::dcpf(pc.cache);
    const double s = slope.lpNorm<Eigen::Infinity>();
    return s > 1e-12 ? lossydc::scale_loading(net, target_slope / s) : net;
}

inline Eigen::MatrixXd dense(const Eigen::SparseMatrix<double>& a) {
    return Eigen::MatrixXd(a);
}

// Directory with the bundled case files, from the environment set by ctest.
inline std::string cases_dir() {
    const char* dir = std::getenv("LOSSYDC_CASES");
    return dir != nullptr ? std::string(dir) : std::string("cases");
}

}  // namespace testnets
