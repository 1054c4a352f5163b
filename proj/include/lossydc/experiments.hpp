#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lossydc/caseio.hpp"
#include "lossydc/certificate.hpp"
#include "lossydc/solvers.hpp"

namespace lossydc {

// One bag of knobs shared by all experiment commands; each command reads the
// subset it needs.
struct ExperimentConfig {
    std::string case_path;
    StartPolicy start = StartPolicy::hot;
    std::vector<std::string> methods;  // subset of {dcpf,mdcpf,ldcpf,lmdcpf,nr,cnr}
    std::optional<double> lambda;            // direct loading scale
    std::optional<double> stress_fraction;   // fraction of the insolvability lambda*
    std::vector<int> k_values = {1, 2, 3};
    std::vector<double> phi_degrees;
    int trials = 100;
    std::uint64_t seed = 1;
    double tolerance = 1e-10;
    int max_iterations = 50;
    std::string out_path;       // empty = stdout
    std::string format = "csv"; // csv | json
};

// Case assembled once per command: parse, per-unit conversion at the start
// policy, loading scale (direct lambda or fraction of bisected lambda*).
struct PreparedCase {
    CaseFile case_file;
    Network net;
    BusAdmittance adm;
    TopologyCache cache;
    std::vector<int> reduced_ids;  // bus id per reduced index
    double lambda = 1.0;
};

PreparedCase prepare_case(const ExperimentConfig& cfg);
PreparedCase prepare_network(const Network& net, const std::string& name, double lambda = 1.0);

// Newton-Raphson from flat start at oracle tolerances; throws on failure.
Eigen::VectorXd nr_reference(const TopologyCache& cache);

struct MethodSolve {
    std::string method;
    std::string termination;  // Termination name, or "direct" for dcpf/mdcpf
    int iterations = 0;
    double injection_residual = 0.0;
    double kvl_residual = 0.0;
    Eigen::VectorXd theta_r;  // radians
    bool ok = false;
};

struct SolveReport {
    std::string case_name;
    double lambda = 1.0;
    std::vector<int> bus_ids;
    std::vector<MethodSolve> runs;
    std::vector<int> k_values;
    bool has_certificate = false;
    Certificate certificate;

    bool all_ok() const;
    std::string text() const;
    std::string json() const;
};

struct CompareRow {
    std::string method;
    int k = 0;
    double theta_err_deg = 0.0;
    double psi_step = 0.0;
    double inj_residual = 0.0;
    double kvl_residual = 0.0;
};

struct CompareReport {
    std::string case_name;
    double lambda = 1.0;
    std::vector<CompareRow> rows;
    std::string csv() const;
    std::string json() const;
};

struct TableRow {
    std::string case_name;
    int k = 0;
    double theta_err_deg = 0.0;
};

struct TableReport {
    std::vector<TableRow> rows;
    std::string csv() const;
    std::string json() const;
};

struct StressReport {
    std::string case_name;
    double lambda_star = 0.0;
    double fraction = 0.9;
    double lambda_target = 0.0;
    bool nr_solvable_at_target = false;
    std::string metadata;
    std::string scaled_case_json;
    std::string csv() const;
    std::string json() const;
};

struct RobustnessRow {
    double phi_deg = 0.0;
    std::string method;
    double success_rate = 0.0;
};

struct RobustnessReport {
    std::string case_name;
    double lambda = 1.0;
    int trials = 0;
    std::vector<RobustnessRow> rows;
    std::string csv() const;
    std::string json() const;
};

SolveReport run_solve(const ExperimentConfig& cfg);
CompareReport run_compare(const ExperimentConfig& cfg);
TableReport run_table(const ExperimentConfig& cfg);
StressReport run_stress(const ExperimentConfig& cfg);
RobustnessReport run_robustness(const ExperimentConfig& cfg);

// Largest lambda (resolution 1e-3) at which Newton-Raphson from flat start
// still solves the scaled case; `net` is the unscaled network.
double bisect_lambda_star(const Network& net);

}  // namespace lossydc
