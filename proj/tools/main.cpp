#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lossydc/experiments.hpp"

namespace {

using lossydc::ExperimentConfig;

// Exit codes: 0 ok, 1 generic, 2 parse, 3 topology/model, 4 psi out of range,
// 5 divergence (max_iter), 6 linear algebra failure, 7 hypothesis violation.
enum ExitCode {
    kOk = 0,
    kGeneric = 1,
    kParse = 2,
    kTopology = 3,
    kPsiRange = 4,
    kDivergence = 5,
    kLinear = 6,
    kHypothesis = 7,
};

int exit_for_termination(const std::string& termination) {
    if (termination == "psi_out_of_range") return kPsiRange;
    if (termination == "max_iter") return kDivergence;
    if (termination == "linear_failure") return kLinear;
    return kOk;
}

void emit(const std::string& content, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw lossydc::Error("cannot open output file: " + out_path);
    f << content;
}

void add_common_options(CLI::App* sub, ExperimentConfig& cfg, std::string& start) {
    sub->add_option("--case", cfg.case_path, "case file (.m or canonical JSON)")
        ->required();
    sub->add_option("--start", start, "voltage start policy")
        ->check(CLI::IsMember({"hot", "cold"}))
        ->capture_default_str();
    sub->add_option("--methods", cfg.methods, "comma-separated method list")
        ->delimiter(',');
    auto* lam = sub->add_option("--lambda", cfg.lambda, "loading scale for non-slack injections");
    sub->add_option("--stress-fraction", cfg.stress_fraction,
                    "load to this fraction of the insolvability lambda*")
        ->excludes(lam);
    sub->add_option("--k", cfg.k_values, "iteration indices for tables/error bounds")
        ->delimiter(',');
    sub->add_option("--phi", cfg.phi_degrees, "random-init spreads in degrees")
        ->delimiter(',');
    sub->add_option("--trials", cfg.trials, "trials per phi")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    sub->add_option("--tol", cfg.tolerance, "successive-step tolerance")
        ->capture_default_str();
    sub->add_option("--max-iter", cfg.max_iterations, "iteration budget")
        ->capture_default_str();
    sub->add_option("--out", cfg.out_path, "output path (default stdout)");
    sub->add_option("--format", cfg.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lossy (modified) DC power flow toolkit"};
    app.require_subcommand(1);

    ExperimentConfig cfg;
    std::string start = "hot";

    CLI::App* solve = app.add_subcommand("solve", "run solvers on a case and report angles");
    CLI::App* compare = app.add_subcommand("compare", "per-iteration error traces vs the NR reference");
    CLI::App* table = app.add_subcommand("table", "frozen-x L-MDCPF error table at chosen k");
    CLI::App* stress = app.add_subcommand("stress", "bisect the insolvability loading lambda*");
    CLI::App* robustness = app.add_subcommand("robustness", "success rates from random initializations");
    for (CLI::App* sub : {solve, compare, table, stress, robustness})
        add_common_options(sub, cfg, start);

    CLI11_PARSE(app, argc, argv);
    cfg.start = start == "cold" ? lossydc::StartPolicy::cold : lossydc::StartPolicy::hot;
    if (cfg.phi_degrees.empty()) cfg.phi_degrees = {15, 20, 25, 30, 40, 70, 80};

    try {
        if (solve->parsed()) {
            const lossydc::SolveReport rep = lossydc::run_solve(cfg);
            emit(cfg.format == "json" ? rep.json() : rep.text(), cfg.out_path);
            for (const auto& run : rep.runs)
                if (!run.ok) {
                    std::cerr << "method " << run.method << " failed: " << run.termination
                              << "\n";
                    return exit_for_termination(run.termination);
                }
            return kOk;
        }
        if (compare->parsed()) {
            const lossydc::CompareReport rep = lossydc::run_compare(cfg);
            emit(cfg.format == "json" ? rep.json() : rep.csv(), cfg.out_path);
            return kOk;
        }
        if (table->parsed()) {
            const lossydc::TableReport rep = lossydc::run_table(cfg);
            emit(cfg.format == "json" ? rep.json() : rep.csv(), cfg.out_path);
            return kOk;
        }
        if (stress->parsed()) {
            const lossydc::StressReport rep = lossydc::run_stress(cfg);
            emit(cfg.format == "json" ? rep.json() : rep.csv(), cfg.out_path);
            return kOk;
        }
        const lossydc::RobustnessReport rep = lossydc::run_robustness(cfg);
        emit(cfg.format == "json" ? rep.json() : rep.csv(), cfg.out_path);
        return kOk;
    } catch (const lossydc::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kParse;
    } catch (const lossydc::NonInductiveBranchError& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return kTopology;
    } catch (const lossydc::TopologyError& e) {
        std::cerr << "topology error: " << e.what() << "\n";
        return kTopology;
    } catch (const lossydc::HypothesisViolationError& e) {
        std::cerr << "hypothesis violation: " << e.what() << "\n";
        return kHypothesis;
    } catch (const lossydc::PsiOutOfRangeError& e) {
        std::cerr << "psi out of range: " << e.what() << "\n";
        return kPsiRange;
    } catch (const lossydc::LinearSolveError& e) {
        std::cerr << "linear solve failure: " << e.what() << "\n";
        return kLinear;
    } catch (const lossydc::IndefiniteError& e) {
        std::cerr << "linear solve failure: " << e.what() << "\n";
        return kLinear;
    } catch (const lossydc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kGeneric;
    }
}
