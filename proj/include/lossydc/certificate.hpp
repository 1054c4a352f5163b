#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lossydc/topology.hpp"

namespace lossydc {

// Existence/uniqueness/convergence certificate for radial networks with equal
// voltage magnitudes and nominal taps. `feasible` iff gamma^2 + 2*gamma*rho < 1;
// beta_minus/beta_plus bound the invariant set and the no-solution band, and
// contraction_c is the Lipschitz constant of the fixed-point map on it.
struct Certificate {
    double rho = 0.0;    // R/X measure ||D_B^{-1} A_r^{-1} |A|_r D_G||inf
    double gamma = 0.0;  // ||psi_MDC||inf
    double condition_value = 0.0;
    bool feasible = false;
    double beta_minus = 0.0;
    double beta_plus = 0.0;
    double contraction_c = 0.0;  // rho*beta_-/sqrt(1-beta_-^2)
    double angle_bound = 0.0;    // arcsin(beta_-), radians

    // Gamma/(1-c) * c^k; infinity when infeasible.
    double error_bound(int k) const;

    std::string to_json() const;
};

// Throws HypothesisViolationError unless the network is radial, all voltage
// magnitudes are equal, and all taps are nominal. rho is evaluated without
// forming a dense inverse (tree flow solves, column by column).
Certificate certify_radial(const Network& net, const TopologyCache& cache);

// The open exclusion interval (arcsin beta_-, arcsin beta_+) for |theta_i -
// theta_j| on every branch. Throws if the certificate is infeasible.
std::pair<double, double> no_solution_band(const Certificate& cert);

struct ProbeReport {
    int samples = 0;
    bool invariance_ok = true;       // f maps I(beta_-) into itself
    bool lipschitz_ok = true;        // empirical quotients <= c
    bool jacobian_ok = true;         // analytic vs central differences
    double max_quotient = 0.0;
    double max_jacobian_diff = 0.0;
    // First offending psi for each failed check, if any.
    std::vector<Eigen::VectorXd> counterexamples;
    bool ok() const { return invariance_ok && lipschitz_ok && jacobian_ok; }
};

// Samples the fixed-point map f(psi) = psi_MDC - H(1 - sqrt(1 - psi^2)) on
// I(beta_-) and checks invariance, Lipschitz quotients against contraction_c,
// and the analytic Jacobian -H (I-[psi]^2)^{-1/2} [psi] against central
// differences.
ProbeReport contraction_probe(const TopologyCache& cache, const Certificate& cert,
                              int samples, std::uint64_t seed = 12345);

// The map f itself (radial, certificate hypotheses assumed); its unique fixed
// point in I(beta_-) is the power flow solution's psi. Exposed for the
// probe's multi-start fixed-point tests.
Eigen::VectorXd contraction_map(const TopologyCache& cache, const Eigen::VectorXd& psi);

}  // namespace lossydc
