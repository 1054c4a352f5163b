#include "lossydc/certificate.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "lossydc/rng.hpp"
#include "lossydc/solvers.hpp"

namespace lossydc {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

// P_r - G_diag V_r^2 + |A|_r D_G 1; identical to P_r on the certificate's
// hypothesis set (no shunts), and the constant the fixed-point map actually
// sees otherwise.
Eigen::VectorXd effective_injections(const TopologyCache& cache) {
    return cache.p_r - cache.g_diag.cwiseProduct(cache.v_r.cwiseAbs2()) +
           cache.A_abs_r * cache.d_g;
}

Eigen::VectorXd psi_mdc_of(const TopologyCache& cache) {
    return cache.A_r.transpose() * cache.lap_b.solve(effective_injections(cache));
}

// Column j of H = D_B^{-1} A_r^{-1} |A|_r D_G via one tree flow solve.
Eigen::VectorXd h_column(const TopologyCache& cache, int j) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(cache.n);
    for (Eigen::SparseMatrix<double>::InnerIterator it(cache.A_abs_r, j); it; ++it)
        w(it.row()) = it.value() * cache.d_g(j);
    return tree_flow_solve(cache, w).cwiseQuotient(cache.d_b);
}

void require_hypotheses(const Network& net, const TopologyCache& cache, const char* what) {
    if (!cache.radial())
        throw HypothesisViolationError(std::string(what) + " requires a radial network");
    const double v0 = net.buses.empty() ? 1.0 : net.buses.front().voltage;
    for (const auto& bus : net.buses)
        if (std::abs(bus.voltage - v0) > 1e-12 * std::abs(v0))
            throw HypothesisViolationError(std::string(what) +
                                           " requires equal voltage magnitudes");
    for (const auto& br : net.branches)
        if (std::abs(br.tap - 1.0) > 1e-12)
            throw HypothesisViolationError(std::string(what) + " requires nominal tap ratios");
}

}  // namespace

double Certificate::error_bound(int k) const {
    if (!feasible) return std::numeric_limits<double>::infinity();
    return gamma / (1.0 - contraction_c) * std::pow(contraction_c, k);
}

std::string Certificate::to_json() const {
    nlohmann::ordered_json j;
    j["rho"] = rho;
    j["gamma"] = gamma;
    j["condition_value"] = condition_value;
    j["feasible"] = feasible;
    j["beta_minus"] = beta_minus;
    j["beta_plus"] = beta_plus;
    j["contraction_c"] = contraction_c;
    j["angle_bound"] = angle_bound;
    return j.dump(2);
}

Certificate certify_radial(const Network& net, const TopologyCache& cache) {
    require_hypotheses(net, cache, "certificate");
    if (cache.n + 1 != net.size() || cache.m != static_cast<int>(net.branches.size()))
        throw DimensionError("cache does not match network");

    Certificate cert;
    cert.gamma = psi_mdc_of(cache).lpNorm<Eigen::Infinity>();

    // ||H||inf accumulated column by column; never forms A_r^{-1}.
    Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(cache.m);
    for (int j = 0; j < cache.m; ++j) row_sums += h_column(cache, j).cwiseAbs();
    cert.rho = cache.m > 0 ? row_sums.maxCoeff() : 0.0;

    cert.condition_value = cert.gamma * cert.gamma + 2.0 * cert.gamma * cert.rho;
    cert.feasible = cert.condition_value < 1.0;

    double disc = 1.0 - cert.condition_value;
    if (disc < 0.0 && disc > -1e-14) disc = 0.0;  // boundary instances hit 0 up to rounding
    if (disc >= 0.0) {
        const double mid = (cert.gamma + cert.rho) / (1.0 + cert.rho * cert.rho);
        const double half = cert.rho / (1.0 + cert.rho * cert.rho) * std::sqrt(disc);
        cert.beta_minus = mid - half;
        cert.beta_plus = mid + half;
        cert.contraction_c =
            cert.rho * cert.beta_minus / std::sqrt(1.0 - cert.beta_minus * cert.beta_minus);
        cert.angle_bound = std::asin(cert.beta_minus);
    } else {
        cert.beta_minus = kNaN;
        cert.beta_plus = kNaN;
        cert.contraction_c = kNaN;
        cert.angle_bound = kNaN;
    }
    return cert;
}

std::pair<double, double> no_solution_band(const Certificate& cert) {
    if (!cert.feasible)
        throw HypothesisViolationError("no-solution band requires a feasible certificate");
    return {std::asin(cert.beta_minus), std::asin(cert.beta_plus)};
}

Eigen::VectorXd contraction_map(const TopologyCache& cache, const Eigen::VectorXd& psi) {
    if (!cache.radial()) throw TopologyError("contraction map requires a radial network");
    if (psi.size() != cache.m) throw DimensionError("psi has wrong size");
    if (psi.lpNorm<Eigen::Infinity>() > 1.0)
        throw PsiOutOfRangeError("psi outside [-1, 1]");

    const Eigen::VectorXd defect =
        cache.d_g.array() * (1.0 - (1.0 - psi.array().square()).sqrt());
    const Eigen::VectorXd correction =
        tree_flow_solve(cache, cache.A_abs_r * defect).cwiseQuotient(cache.d_b);
    return psi_mdc_of(cache) - correction;
}

ProbeReport contraction_probe(const TopologyCache& cache, const Certificate& cert,
                              int samples, std::uint64_t seed) {
    if (!cache.radial())
        throw HypothesisViolationError("contraction probe requires a radial network");
    if (!cert.feasible)
        throw HypothesisViolationError("contraction probe requires a feasible certificate");
    if (samples < 1) throw Error("samples must be at least 1");

    ProbeReport rep;
    rep.samples = samples;
    const double beta = cert.beta_minus;
    const double slack = 1e-12;

    UniformRng rng(seed);
    auto draw = [&]() {
        Eigen::VectorXd p(cache.m);
        for (int i = 0; i < cache.m; ++i) p(i) = rng.range(-beta, beta);
        return p;
    };

    Eigen::MatrixXd H(cache.m, cache.m);
    for (int j = 0; j < cache.m; ++j) H.col(j) = h_column(cache, j);

    const int jacobian_points = std::min(samples, 8);
    for (int s = 0; s < samples; ++s) {
        const Eigen::VectorXd psi1 = draw();
        const Eigen::VectorXd psi2 = draw();
        const Eigen::VectorXd f1 = contraction_map(cache, psi1);
        const Eigen::VectorXd f2 = contraction_map(cache, psi2);

        if (f1.lpNorm<Eigen::Infinity>() > beta + slack ||
            f2.lpNorm<Eigen::Infinity>() > beta + slack) {
            if (rep.invariance_ok) rep.counterexamples.push_back(psi1);
            rep.invariance_ok = false;
        }

        const double denom = (psi1 - psi2).lpNorm<Eigen::Infinity>();
        if (denom > 0.0) {
            const double quotient = (f1 - f2).lpNorm<Eigen::Infinity>() / denom;
            rep.max_quotient = std::max(rep.max_quotient, quotient);
            if (quotient > cert.contraction_c * (1.0 + 1e-9) + slack) {
                if (rep.lipschitz_ok) rep.counterexamples.push_back(psi1);
                rep.lipschitz_ok = false;
            }
        }

        if (s < jacobian_points) {
            const Eigen::ArrayXd scale =
                psi1.array() / (1.0 - psi1.array().square()).sqrt();
            const Eigen::MatrixXd analytic = -H * scale.matrix().asDiagonal();
            const double h = 1e-5;
            double diff = 0.0;
            for (int j = 0; j < cache.m; ++j) {
                Eigen::VectorXd hi = psi1, lo = psi1;
                hi(j) += h;
                lo(j) -= h;
                const Eigen::VectorXd col =
                    (contraction_map(cache, hi) - contraction_map(cache, lo)) / (2.0 * h);
                diff = std::max(diff, (col - analytic.col(j)).lpNorm<Eigen::Infinity>());
            }
            rep.max_jacobian_diff = std::max(rep.max_jacobian_diff, diff);
            if (diff > 1e-6) {
                if (rep.jacobian_ok) rep.counterexamples.push_back(psi1);
                rep.jacobian_ok = false;
            }
        }
    }
    return rep;
}

}  // namespace lossydc
