#include "lossydc/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/SparseLU>

namespace lossydc {

namespace {

constexpr double kDegPerRad = 180.0 / std::numbers::pi;
constexpr double kClampLimit = 1.0 - 1e-12;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_options(const SolveOptions& opts) {
    if (opts.tolerance <= 0.0) throw Error("tolerance must be positive");
    if (opts.max_iterations < 1) throw Error("max_iterations must be at least 1");
}

double theta_error_deg(const SolveOptions& opts, const Eigen::VectorXd& theta_r) {
    if (!opts.reference) return kNaN;
    if (opts.reference->size() != theta_r.size())
        throw DimensionError("reference angles have wrong size");
    return (*opts.reference - theta_r).lpNorm<Eigen::Infinity>() * kDegPerRad;
}

// Projected power injections at the current psi (Algorithm step before the
// Laplacian solve): P_r - G_diag V_r^2 + |A|_r D_G sqrt(1 - psi^2).
Eigen::VectorXd projected_injections(const TopologyCache& cache, const Eigen::VectorXd& psi) {
    const Eigen::ArrayXd cosines = (1.0 - psi.array().square()).sqrt();
    return cache.p_r - cache.g_diag.cwiseProduct(cache.v_r.cwiseAbs2()) +
           cache.A_abs_r * (cache.d_g.array() * cosines).matrix();
}

// True when some |psi_e| >= 1; clamps in place under PsiGuard::clamp.
bool guard_violation(Eigen::VectorXd& psi, PsiGuard guard, bool& clamped) {
    bool violated = false;
    clamped = false;
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
        if (std::abs(psi(i)) < 1.0) continue;
        violated = true;
        if (guard == PsiGuard::clamp) {
            psi(i) = std::copysign(kClampLimit, psi(i));
            clamped = true;
        }
    }
    return violated && guard == PsiGuard::fail;
}

}  // namespace

const char* to_string(Termination t) {
    switch (t) {
        case Termination::converged: return "converged";
        case Termination::max_iter: return "max_iter";
        case Termination::psi_out_of_range: return "psi_out_of_range";
        case Termination::linear_failure: return "linear_failure";
    }
    return "unknown";
}

Eigen::VectorXd active_residual(const TopologyCache& cache, const Eigen::VectorXd& theta_r) {
    if (theta_r.size() != cache.n) throw DimensionError("theta_r has wrong size");
    const Eigen::ArrayXd phi = (cache.A_r.transpose() * theta_r).array();
    const Eigen::VectorXd rhs =
        cache.A_r * (cache.d_b.array() * phi.sin()).matrix() +
        cache.g_diag.cwiseProduct(cache.v_r.cwiseAbs2()) -
        cache.A_abs_r * (cache.d_g.array() * phi.cos()).matrix();
    return cache.p_r - rhs;
}

double kvl_residual_of(const TopologyCache& cache, const Eigen::VectorXd& psi) {
    if (cache.c == 0) return 0.0;
    const Eigen::VectorXd sums =
        cache.C.transpose() * psi.array().asin().matrix();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < sums.size(); ++i)
        worst = std::max(worst, std::abs(std::remainder(sums(i), 2.0 * std::numbers::pi)));
    return worst;
}

Eigen::VectorXd dcpf(const TopologyCache& cache) { return cache.lap_b.solve(cache.p_r); }

MdcpfResult mdcpf(const TopologyCache& cache) {
    MdcpfResult out;
    out.psi_mdc = cache.A_r.transpose() * dcpf(cache);
    if (out.psi_mdc.lpNorm<Eigen::Infinity>() >= 1.0)
        throw PsiOutOfRangeError("|psi_MDC| reached 1; modified DC solution undefined");
    out.theta_r = recover_angles(cache.A_r, cache.gram, out.psi_mdc.array().asin().matrix());
    return out;
}

FixedPointResult lmdcpf(const TopologyCache& cache, const SolveOptions& opts,
                        const std::optional<Eigen::VectorXd>& psi0) {
    check_options(opts);

    Eigen::VectorXd psi = psi0 ? *psi0 : Eigen::VectorXd::Zero(cache.m);
    if (psi.size() != cache.m) throw DimensionError("psi0 has wrong size");
    if (psi.lpNorm<Eigen::Infinity>() >= 1.0)
        throw PsiOutOfRangeError("initial psi outside (-1, 1)");
    Eigen::VectorXd x = Eigen::VectorXd::Zero(cache.c);

    FixedPointResult out;
    out.trace.termination = Termination::max_iter;

    auto record = [&](int k, double step, bool clamped, const Eigen::VectorXd& theta) {
        SolverState& st = out.state;
        st.k = k;
        st.psi = psi;
        st.x = x;
        st.theta_r = theta;
        st.injection_residual = active_residual(cache, theta).lpNorm<Eigen::Infinity>();
        st.kvl_residual = kvl_residual_of(cache, psi);
        out.trace.records.push_back({k, theta_error_deg(opts, theta), step,
                                     st.injection_residual, st.kvl_residual, clamped});
        if (clamped) out.trace.clamped_anywhere = true;
    };

    try {
        record(0, kNaN, false,
               recover_angles(cache.A_r, cache.gram, psi.array().asin().matrix()));

        for (int k = 0; k < opts.max_iterations; ++k) {
            if (cache.c > 0 && !opts.freeze_cycle_update)
                x -= cache.cyc_op.solve(cache.C.transpose() * psi.array().asin().matrix());

            const Eigen::VectorXd delta = cache.lap_b.solve(projected_injections(cache, psi));
            Eigen::VectorXd next = cache.A_r.transpose() * delta;
            if (cache.c > 0) next += (cache.C * x).cwiseQuotient(cache.d_b);

            bool clamped = false;
            if (guard_violation(next, opts.psi_guard, clamped)) {
                out.trace.termination = Termination::psi_out_of_range;
                return out;
            }

            const double step = (next - psi).lpNorm<Eigen::Infinity>();
            psi = std::move(next);
            record(k + 1, step, clamped,
                   recover_angles(cache.A_r, cache.gram, psi.array().asin().matrix()));

            if (step <= opts.tolerance) {
                out.trace.termination = Termination::converged;
                return out;
            }
        }
    } catch (const LinearSolveError&) {
        out.trace.termination = Termination::linear_failure;
    }
    return out;
}

FixedPointResult ldcpf(const TopologyCache& cache, const SolveOptions& opts) {
    check_options(opts);

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(cache.n);
    FixedPointResult out;
    out.trace.termination = Termination::max_iter;

    auto record = [&](int k, double step, bool clamped) {
        SolverState& st = out.state;
        st.k = k;
        st.theta_r = theta;
        st.psi = (cache.A_r.transpose() * theta).array().sin();
        st.x = Eigen::VectorXd::Zero(cache.c);
        st.injection_residual = active_residual(cache, theta).lpNorm<Eigen::Infinity>();
        st.kvl_residual = kvl_residual_of(cache, st.psi);
        out.trace.records.push_back({k, theta_error_deg(opts, theta), step,
                                     st.injection_residual, st.kvl_residual, clamped});
        if (clamped) out.trace.clamped_anywhere = true;
    };

    record(0, kNaN, false);
    for (int k = 0; k < opts.max_iterations; ++k) {
        Eigen::VectorXd slope = cache.A_r.transpose() * theta;
        bool clamped = false;
        if (guard_violation(slope, opts.psi_guard, clamped)) {
            out.trace.termination = Termination::psi_out_of_range;
            return out;
        }

        const Eigen::VectorXd next = cache.lap_b.solve(projected_injections(cache, slope));
        const double step = (next - theta).lpNorm<Eigen::Infinity>();
        theta = next;
        record(k + 1, step, clamped);

        if (step <= opts.tolerance) {
            out.trace.termination = Termination::converged;
            return out;
        }
    }
    return out;
}

namespace {

NewtonResult newton_common(const TopologyCache& cache, const Eigen::VectorXd& theta0,
                           const SolveOptions& opts, bool chord) {
    check_options(opts);
    if (theta0.size() != cache.n) throw DimensionError("theta0 has wrong size");

    const Eigen::SparseMatrix<double> At = cache.A_r.transpose();
    auto jacobian = [&](const Eigen::VectorXd& theta) {
        const Eigen::ArrayXd phi = (At * theta).array();
        const Eigen::VectorXd wb = cache.d_b.array() * phi.cos();
        const Eigen::VectorXd wg = cache.d_g.array() * phi.sin();
        return Eigen::SparseMatrix<double>(cache.A_r * wb.asDiagonal() * At +
                                           cache.A_abs_r * wg.asDiagonal() * At);
    };

    NewtonResult out;
    out.theta_r = theta0;
    out.trace.termination = Termination::max_iter;

    auto record = [&](int k, double step) {
        out.trace.records.push_back(
            {k, theta_error_deg(opts, out.theta_r), step,
             active_residual(cache, out.theta_r).lpNorm<Eigen::Infinity>(), 0.0, false});
    };

    SparseLuOperator frozen;
    if (chord) {
        try {
            frozen = SparseLuOperator::factorize(jacobian(theta0));
        } catch (const LinearSolveError&) {
            out.trace.termination = Termination::linear_failure;
            return out;
        }
    }

    record(0, kNaN);
    for (int k = 0; k < opts.max_iterations; ++k) {
        const Eigen::VectorXd F = -active_residual(cache, out.theta_r);
        Eigen::VectorXd dtheta;
        try {
            dtheta = chord ? frozen.solve(F) : SparseLuOperator::factorize(jacobian(out.theta_r)).solve(F);
        } catch (const LinearSolveError&) {
            out.trace.termination = Termination::linear_failure;
            return out;
        }

        const Eigen::VectorXd next = out.theta_r - dtheta;
        if (!next.allFinite()) {
            out.trace.termination = Termination::linear_failure;
            return out;
        }

        const double step = dtheta.lpNorm<Eigen::Infinity>();
        out.theta_r = next;
        record(k + 1, step);

        if (step <= opts.tolerance) {
            out.trace.termination = Termination::converged;
            return out;
        }
    }
    return out;
}

}  // namespace

NewtonResult newton_raphson(const TopologyCache& cache, const Eigen::VectorXd& theta0,
                            const SolveOptions& opts) {
    return newton_common(cache, theta0, opts, false);
}

NewtonResult chord_newton(const TopologyCache& cache, const Eigen::VectorXd& theta0,
                          const SolveOptions& opts) {
    return newton_common(cache, theta0, opts, true);
}

std::vector<double> two_bus_closed_form(double g, double b, double v1, double v2, double p1) {
    if (b <= 0.0 || v1 <= 0.0 || v2 <= 0.0)
        throw Error("two-bus closed form requires b > 0 and positive voltages");

    std::vector<double> psis;
    if (g == 0.0) {
        psis.push_back(p1 / (b * v1 * v2));
    } else {
        // (g^2+b^2)V1^2V2^2 psi^2 + 2 b V1 V2 (g V1^2 - p1) psi
        //   + (g V1^2 - p1)^2 - g^2 V1^2 V2^2 = 0
        const double s = b * v1 * v2;
        const double u = g * v1 * v1 - p1;
        const double qa = s * s + g * g * v1 * v1 * v2 * v2;
        const double qb = 2.0 * s * u;
        const double qc = u * u - g * g * v1 * v1 * v2 * v2;
        double disc = qb * qb - 4.0 * qa * qc;
        if (disc < 0.0 && disc > -16.0 * 1e-16 * (qb * qb + std::abs(4.0 * qa * qc)))
            disc = 0.0;  // tangency instances land on 0 up to rounding
        if (disc < 0.0) return {};
        if (qb == 0.0) {
            const double r = std::sqrt(disc) / (2.0 * qa);
            psis.push_back(r);
            psis.push_back(-r);
        } else {
            const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
            psis.push_back(q / qa);
            psis.push_back(qc / q);
        }
    }

    std::vector<double> thetas;
    for (const double psi : psis) {
        if (!(std::abs(psi) < 1.0)) continue;
        // pre-squaring sign condition, then the original balance equation
        if (g > 0.0 &&
            g * v1 * v1 + b * v1 * v2 * psi - p1 < -1e-12 * std::max(1.0, std::abs(p1)))
            continue;
        const double residual =
            p1 - (g * v1 * v1 - g * v1 * v2 * std::sqrt(1.0 - psi * psi) + b * v1 * v2 * psi);
        if (std::abs(residual) > 1e-12) continue;
        thetas.push_back(std::asin(psi));
    }
    std::sort(thetas.begin(), thetas.end());
    thetas.erase(std::unique(thetas.begin(), thetas.end(),
                             [](double a, double c) { return std::abs(a - c) < 1e-12; }),
                 thetas.end());
    return thetas;
}

}  // namespace lossydc
