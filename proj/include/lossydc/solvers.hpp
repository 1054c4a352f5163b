#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lossydc/topology.hpp"

namespace lossydc {

enum class Termination {
    converged,
    max_iter,
    psi_out_of_range,
    linear_failure,
};

const char* to_string(Termination t);

enum class PsiGuard { fail, clamp };

struct SolveOptions {
    int max_iterations = 50;
    double tolerance = 1e-10;  // inf-norm on successive psi (or theta) steps
    PsiGuard psi_guard = PsiGuard::fail;
    bool freeze_cycle_update = false;  // keep x = 0 (Tables-style runs)
    // Reference angles for per-iteration error traces, radians.
    std::optional<Eigen::VectorXd> reference;
};

struct SolverState {
    int k = 0;
    Eigen::VectorXd psi;      // branch sines, m
    Eigen::VectorXd x;        // cycle variables, c
    Eigen::VectorXd theta_r;  // bus angles, n (slack excluded, fixed at 0)
    double injection_residual = 0.0;  // ||P_r - rhs(theta)||inf
    double kvl_residual = 0.0;        // ||C^T arcsin(psi)||inf, wrapped to (-pi,pi]
};

struct TraceRecord {
    int k = 0;
    double theta_err_deg = 0.0;  // ||theta_ref - theta[k]||inf, degrees; NaN if no reference
    double step = 0.0;           // ||psi[k]-psi[k-1]||inf (or theta step)
    double injection_residual = 0.0;
    double kvl_residual = 0.0;
    bool clamped = false;  // psi guard clamped this iterate
};

struct IterationTrace {
    std::vector<TraceRecord> records;
    Termination termination = Termination::max_iter;
    bool clamped_anywhere = false;
};

// P_r - [A_r D_B sin(A_r^T theta) + G_diag V_r^2 - |A|_r D_G cos(A_r^T theta)];
// the zero vector iff theta_r solves the lossy active power flow.
Eigen::VectorXd active_residual(const TopologyCache& cache, const Eigen::VectorXd& theta_r);

// theta = L_B^{-1} P_r, one SPD solve.
Eigen::VectorXd dcpf(const TopologyCache& cache);

struct MdcpfResult {
    Eigen::VectorXd theta_r;
    Eigen::VectorXd psi_mdc;
};

// theta = (A_r A_r^T)^{-1} A_r arcsin(psi_MDC) with psi_MDC = A_r^T L_B^{-1} P_r.
// Throws PsiOutOfRangeError if ||psi_MDC||inf >= 1.
MdcpfResult mdcpf(const TopologyCache& cache);

struct FixedPointResult {
    SolverState state;
    IterationTrace trace;
    bool converged() const { return trace.termination == Termination::converged; }
};

// Lossy modified DC power flow iteration. Flat start by default; psi0 (and
// x = 0) may be supplied to warm-start.
FixedPointResult lmdcpf(const TopologyCache& cache, const SolveOptions& opts = {},
                        const std::optional<Eigen::VectorXd>& psi0 = std::nullopt);

// Lossy DC power flow: theta[k+1] = L_B^{-1}(P_r - G_diag V_r^2
// + |A|_r D_G sqrt(1-(A_r^T theta[k])^2)); no arcsin, no cycle update.
FixedPointResult ldcpf(const TopologyCache& cache, const SolveOptions& opts = {});

struct NewtonResult {
    Eigen::VectorXd theta_r;
    IterationTrace trace;
    bool converged() const { return trace.termination == Termination::converged; }
};

// Full Newton on F(theta) = rhs(theta) - P_r with fixed voltage magnitudes;
// analytic sparse Jacobian. The exact-solution oracle for traces and tables.
NewtonResult newton_raphson(const TopologyCache& cache, const Eigen::VectorXd& theta0,
                            const SolveOptions& opts = {});

// Same residual, Jacobian frozen at theta0 and factorized once.
NewtonResult chord_newton(const TopologyCache& cache, const Eigen::VectorXd& theta0,
                          const SolveOptions& opts = {});

// All real solutions theta in (-pi/2, pi/2) of the two-bus lossy active power
// flow, by reduction to a quadratic in psi = sin(theta); spurious roots from
// the squaring step are filtered against the original equation.
std::vector<double> two_bus_closed_form(double g, double b, double v1, double v2, double p1);

// ||C^T arcsin(psi)||inf with each cycle sum wrapped to (-pi, pi].
double kvl_residual_of(const TopologyCache& cache, const Eigen::VectorXd& psi);

}  // namespace lossydc
