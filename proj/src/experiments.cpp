#include "lossydc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "lossydc/admittance.hpp"
#include "lossydc/rng.hpp"

namespace lossydc {

namespace {

constexpr double kDegPerRad = 180.0 / std::numbers::pi;
constexpr double kRadPerDeg = std::numbers::pi / 180.0;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::string> kAllMethods = {"dcpf", "mdcpf", "ldcpf",
                                              "lmdcpf", "nr", "cnr"};

std::string num(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void check_methods(const std::vector<std::string>& methods) {
    if (methods.empty()) throw Error("method list must not be empty");
    for (const auto& m : methods)
        if (std::find(kAllMethods.begin(), kAllMethods.end(), m) == kAllMethods.end())
            throw Error("unknown method: " + m);
}

std::vector<std::string> methods_or(const ExperimentConfig& cfg,
                                    std::vector<std::string> fallback) {
    if (cfg.methods.empty()) return fallback;
    check_methods(cfg.methods);
    return cfg.methods;
}

bool nr_solves(const Network& net, double lambda) {
    try {
        const Network scaled = scale_loading(net, lambda);
        const BusAdmittance adm = build_admittance(scaled);
        const TopologyCache cache = build_topology(scaled, adm);
        const NewtonResult res = newton_raphson(
            cache, Eigen::VectorXd::Zero(cache.n),
            SolveOptions{.max_iterations = 100, .tolerance = 1e-10});
        return res.converged() &&
               active_residual(cache, res.theta_r).lpNorm<Eigen::Infinity>() <= 1e-6;
    } catch (const Error&) {
        return false;
    }
}

MethodSolve solve_one(const PreparedCase& pc, const std::string& method,
                      const SolveOptions& opts) {
    MethodSolve run;
    run.method = method;
    if (method == "dcpf" || method == "mdcpf") {
        run.termination = "direct";
        try {
            run.theta_r = method == "dcpf" ? dcpf(pc.cache) : mdcpf(pc.cache).theta_r;
            run.ok = true;
        } catch (const PsiOutOfRangeError&) {
            run.termination = to_string(Termination::psi_out_of_range);
            return run;
        }
        run.injection_residual =
            active_residual(pc.cache, run.theta_r).lpNorm<Eigen::Infinity>();
        return run;
    }
    if (method == "ldcpf" || method == "lmdcpf") {
        SolveOptions o = opts;
        const FixedPointResult res =
            method == "ldcpf" ? ldcpf(pc.cache, o) : lmdcpf(pc.cache, o);
        run.termination = to_string(res.trace.termination);
        run.iterations = res.state.k;
        run.theta_r = res.state.theta_r;
        run.injection_residual = res.state.injection_residual;
        run.kvl_residual = res.state.kvl_residual;
        run.ok = res.converged();
        return run;
    }
    const Eigen::VectorXd flat = Eigen::VectorXd::Zero(pc.cache.n);
    const NewtonResult res = method == "nr" ? newton_raphson(pc.cache, flat, opts)
                                            : chord_newton(pc.cache, flat, opts);
    run.termination = to_string(res.trace.termination);
    run.iterations = static_cast<int>(res.trace.records.size()) - 1;
    run.theta_r = res.theta_r;
    run.injection_residual =
        active_residual(pc.cache, res.theta_r).lpNorm<Eigen::Infinity>();
    run.ok = res.converged();
    return run;
}

void append_trace_rows(CompareReport& rep, const std::string& method,
                       const IterationTrace& trace) {
    for (const auto& rec : trace.records)
        rep.rows.push_back({method, rec.k, rec.theta_err_deg, rec.step,
                            rec.injection_residual, rec.kvl_residual});
}

void append_constant_rows(CompareReport& rep, const std::string& method, int upto,
                          double err, double inj) {
    for (int k = 0; k <= upto; ++k) rep.rows.push_back({method, k, err, kNaN, inj, 0.0});
}

}  // namespace

PreparedCase prepare_network(const Network& net, const std::string& name, double lambda) {
    PreparedCase pc;
    pc.case_file.name = name;
    pc.net = lambda == 1.0 ? net : scale_loading(net, lambda);
    pc.lambda = lambda;
    pc.adm = build_admittance(pc.net);
    pc.cache = build_topology(pc.net, pc.adm);
    pc.reduced_ids.resize(pc.cache.n);
    for (int pos = 0; pos < pc.net.size(); ++pos) {
        const int r = pc.cache.reduced_index[pos];
        if (r >= 0) pc.reduced_ids[r] = pc.net.buses[pos].id;
    }
    return pc;
}

PreparedCase prepare_case(const ExperimentConfig& cfg) {
    if (cfg.lambda && cfg.stress_fraction)
        throw Error("--lambda and --stress-fraction are mutually exclusive");
    const CaseFile cf = parse_case_file(cfg.case_path);
    const Network base = to_network(cf, cfg.start);

    double lambda = 1.0;
    if (cfg.lambda) {
        lambda = *cfg.lambda;
    } else if (cfg.stress_fraction) {
        lambda = *cfg.stress_fraction * bisect_lambda_star(base);
    }

    PreparedCase pc = prepare_network(base, cf.name, lambda);
    pc.case_file = cf;
    return pc;
}

Eigen::VectorXd nr_reference(const TopologyCache& cache) {
    const NewtonResult res =
        newton_raphson(cache, Eigen::VectorXd::Zero(cache.n),
                       SolveOptions{.max_iterations = 100, .tolerance = 1e-13});
    if (!res.converged() ||
        active_residual(cache, res.theta_r).lpNorm<Eigen::Infinity>() > 1e-9)
        throw Error("Newton-Raphson reference oracle did not converge from flat start");
    return res.theta_r;
}

double bisect_lambda_star(const Network& net) {
    if (!nr_solves(net, 1.0)) throw Error("base case is infeasible at lambda = 1");
    double lo = 1.0;
    double hi = 2.0;
    while (nr_solves(net, hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) return lo;  // injections too small to stress; report the cap
    }
    while (hi - lo > 1e-3) {
        const double mid = 0.5 * (lo + hi);
        (nr_solves(net, mid) ? lo : hi) = mid;
    }
    return lo;
}

bool SolveReport::all_ok() const {
    return std::all_of(runs.begin(), runs.end(), [](const MethodSolve& r) { return r.ok; });
}

std::string SolveReport::text() const {
    std::ostringstream os;
    os << "case " << case_name << " (lambda " << num(lambda) << ")\n";
    for (const auto& run : runs) {
        os << run.method << ": " << run.termination;
        if (run.termination != "direct") os << ", " << run.iterations << " iterations";
        os << ", injection residual " << num(run.injection_residual) << ", kvl residual "
           << num(run.kvl_residual);
        if (run.theta_r.size() > 0 && run.theta_r.size() <= 10) {
            os << ", theta_deg = [";
            for (Eigen::Index i = 0; i < run.theta_r.size(); ++i)
                os << (i ? ", " : "") << num(run.theta_r(i) * kDegPerRad);
            os << "]";
        } else if (run.theta_r.size() > 0) {
            os << ", max |theta| " << num(run.theta_r.lpNorm<Eigen::Infinity>() * kDegPerRad)
               << " deg over " << run.theta_r.size() << " buses";
        }
        os << "\n";
    }
    if (has_certificate) {
        os << "certificate: rho=" << num(certificate.rho) << " gamma=" << num(certificate.gamma)
           << " condition_value=" << num(certificate.condition_value)
           << " feasible=" << (certificate.feasible ? "true" : "false")
           << " beta_minus=" << num(certificate.beta_minus)
           << " beta_plus=" << num(certificate.beta_plus)
           << " contraction_c=" << num(certificate.contraction_c)
           << " angle_bound=" << num(certificate.angle_bound) << "\n";
        if (certificate.feasible) {
            os << "error_bound:";
            for (const int k : k_values)
                os << " k=" << k << " -> " << num(certificate.error_bound(k));
            os << "\n";
        }
    }
    return os.str();
}

std::string SolveReport::json() const {
    nlohmann::ordered_json j;
    j["case"] = case_name;
    j["lambda"] = lambda;
    j["bus_ids"] = bus_ids;
    j["methods"] = nlohmann::ordered_json::array();
    for (const auto& run : runs) {
        nlohmann::ordered_json r;
        r["method"] = run.method;
        r["termination"] = run.termination;
        r["iterations"] = run.iterations;
        r["injection_residual"] = run.injection_residual;
        r["kvl_residual"] = run.kvl_residual;
        std::vector<double> deg(run.theta_r.size());
        for (Eigen::Index i = 0; i < run.theta_r.size(); ++i)
            deg[i] = run.theta_r(i) * kDegPerRad;
        r["theta_deg"] = deg;
        r["ok"] = run.ok;
        j["methods"].push_back(r);
    }
    if (has_certificate) {
        j["certificate"] = nlohmann::ordered_json::parse(certificate.to_json());
        if (certificate.feasible) {
            nlohmann::ordered_json eb = nlohmann::ordered_json::array();
            for (const int k : k_values)
                eb.push_back({{"k", k}, {"bound", certificate.error_bound(k)}});
            j["error_bound"] = eb;
        }
    }
    return j.dump(2) + "\n";
}

SolveReport run_solve(const ExperimentConfig& cfg) {
    const PreparedCase pc = prepare_case(cfg);
    const auto methods = methods_or(cfg, {"lmdcpf"});

    SolveReport rep;
    rep.case_name = pc.case_file.name;
    rep.lambda = pc.lambda;
    rep.bus_ids = pc.reduced_ids;
    rep.k_values = cfg.k_values;

    const SolveOptions opts{.max_iterations = cfg.max_iterations, .tolerance = cfg.tolerance};
    for (const auto& m : methods) rep.runs.push_back(solve_one(pc, m, opts));

    if (pc.cache.radial()) {
        try {
            rep.certificate = certify_radial(pc.net, pc.cache);
            rep.has_certificate = true;
        } catch (const HypothesisViolationError&) {
        }
    }
    return rep;
}

std::string CompareReport::csv() const {
    std::ostringstream os;
    os << "method,k,theta_err_deg,psi_step,inj_residual,kvl_residual\n";
    for (const auto& r : rows)
        os << r.method << ',' << r.k << ',' << num(r.theta_err_deg) << ',' << num(r.psi_step)
           << ',' << num(r.inj_residual) << ',' << num(r.kvl_residual) << '\n';
    return os.str();
}

std::string CompareReport::json() const {
    nlohmann::ordered_json j;
    j["case"] = case_name;
    j["lambda"] = lambda;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows)
        j["rows"].push_back({{"method", r.method},
                             {"k", r.k},
                             {"theta_err_deg", r.theta_err_deg},
                             {"psi_step", r.psi_step},
                             {"inj_residual", r.inj_residual},
                             {"kvl_residual", r.kvl_residual}});
    return j.dump(2) + "\n";
}

CompareReport run_compare(const ExperimentConfig& cfg) {
    const PreparedCase pc = prepare_case(cfg);
    const auto methods = methods_or(cfg, kAllMethods);

    CompareReport rep;
    rep.case_name = pc.case_file.name;
    rep.lambda = pc.lambda;

    const Eigen::VectorXd ref = nr_reference(pc.cache);
    SolveOptions opts{.max_iterations = cfg.max_iterations,
                      .tolerance = cfg.tolerance,
                      .reference = ref};

    for (const auto& m : methods) {
        if (m == "dcpf" || m == "mdcpf") {
            Eigen::VectorXd theta;
            try {
                theta = m == "dcpf" ? dcpf(pc.cache) : mdcpf(pc.cache).theta_r;
            } catch (const PsiOutOfRangeError&) {
                rep.rows.push_back({m, 0, kNaN, kNaN, kNaN, kNaN});
                continue;
            }
            append_constant_rows(rep, m, cfg.max_iterations,
                                 (ref - theta).lpNorm<Eigen::Infinity>() * kDegPerRad,
                                 active_residual(pc.cache, theta).lpNorm<Eigen::Infinity>());
        } else if (m == "ldcpf") {
            SolveOptions o = opts;
            o.psi_guard = PsiGuard::clamp;  // keep a final error defined when it wanders
            append_trace_rows(rep, m, ldcpf(pc.cache, o).trace);
        } else if (m == "lmdcpf") {
            append_trace_rows(rep, m, lmdcpf(pc.cache, opts).trace);
        } else {
            const Eigen::VectorXd flat = Eigen::VectorXd::Zero(pc.cache.n);
            append_trace_rows(rep, m,
                              m == "nr" ? newton_raphson(pc.cache, flat, opts).trace
                                        : chord_newton(pc.cache, flat, opts).trace);
        }
    }
    return rep;
}

std::string TableReport::csv() const {
    std::ostringstream os;
    os << "case,k,theta_err_deg\n";
    for (const auto& r : rows)
        os << r.case_name << ',' << r.k << ',' << num(r.theta_err_deg) << '\n';
    return os.str();
}

std::string TableReport::json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& r : rows)
        j.push_back({{"case", r.case_name}, {"k", r.k}, {"theta_err_deg", r.theta_err_deg}});
    return j.dump(2) + "\n";
}

TableReport run_table(const ExperimentConfig& cfg) {
    const PreparedCase pc = prepare_case(cfg);
    if (cfg.k_values.empty()) throw Error("table needs at least one k value");

    const int max_k = *std::max_element(cfg.k_values.begin(), cfg.k_values.end());
    SolveOptions opts{.max_iterations = max_k,
                      .tolerance = 1e-300,  // run exactly max_k iterations
                      .freeze_cycle_update = true,
                      .reference = nr_reference(pc.cache)};
    const FixedPointResult res = lmdcpf(pc.cache, opts);

    TableReport rep;
    for (const int k : cfg.k_values) {
        const double err = k < static_cast<int>(res.trace.records.size())
                               ? res.trace.records[k].theta_err_deg
                               : kNaN;
        rep.rows.push_back({pc.case_file.name, k, err});
    }
    return rep;
}

std::string StressReport::csv() const {
    std::ostringstream os;
    os << "key,value\n";
    os << "case," << case_name << '\n';
    os << "lambda_star," << num(lambda_star) << '\n';
    os << "fraction," << num(fraction) << '\n';
    os << "lambda_target," << num(lambda_target) << '\n';
    os << "nr_solvable_at_target," << (nr_solvable_at_target ? 1 : 0) << '\n';
    os << "metadata," << metadata << '\n';
    return os.str();
}

std::string StressReport::json() const {
    nlohmann::ordered_json j;
    j["case"] = case_name;
    j["lambda_star"] = lambda_star;
    j["fraction"] = fraction;
    j["lambda_target"] = lambda_target;
    j["nr_solvable_at_target"] = nr_solvable_at_target;
    j["metadata"] = metadata;
    j["scaled_case"] = nlohmann::ordered_json::parse(scaled_case_json);
    return j.dump(2) + "\n";
}

StressReport run_stress(const ExperimentConfig& cfg) {
    const CaseFile cf = parse_case_file(cfg.case_path);
    const Network base = to_network(cf, cfg.start);

    StressReport rep;
    rep.case_name = cf.name;
    rep.lambda_star = bisect_lambda_star(base);
    rep.fraction = cfg.stress_fraction.value_or(0.9);
    rep.lambda_target = rep.fraction * rep.lambda_star;
    rep.nr_solvable_at_target = nr_solves(base, rep.lambda_target);
    rep.metadata =
        "uniform scaling of non-slack injections; fraction measured in lambda "
        "(approximates continuation loading)";

    CaseFile scaled = cf;
    for (auto& b : scaled.buses)
        if (b.type != BusType::REF) b.pd *= rep.lambda_target;
    for (auto& g : scaled.gens) {
        const auto bus = std::find_if(cf.buses.begin(), cf.buses.end(),
                                      [&](const CaseBus& b) { return b.id == g.bus; });
        if (bus != cf.buses.end() && bus->type != BusType::REF) g.pg *= rep.lambda_target;
    }
    rep.scaled_case_json = serialize_case_json(scaled);
    return rep;
}

std::string RobustnessReport::csv() const {
    std::ostringstream os;
    os << "phi_deg,method,success_rate\n";
    for (const auto& r : rows)
        os << num(r.phi_deg) << ',' << r.method << ',' << num(r.success_rate) << '\n';
    return os.str();
}

std::string RobustnessReport::json() const {
    nlohmann::ordered_json j;
    j["case"] = case_name;
    j["lambda"] = lambda;
    j["trials"] = trials;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows)
        j["rows"].push_back(
            {{"phi_deg", r.phi_deg}, {"method", r.method}, {"success_rate", r.success_rate}});
    return j.dump(2) + "\n";
}

RobustnessReport run_robustness(const ExperimentConfig& cfg) {
    if (cfg.trials < 1) throw Error("trials must be at least 1");
    for (const double phi : cfg.phi_degrees)
        if (phi < 0.0) throw Error("phi must be nonnegative");

    const PreparedCase pc = prepare_case(cfg);
    const auto methods = methods_or(cfg, {"nr", "cnr", "lmdcpf"});
    const Eigen::VectorXd ref = nr_reference(pc.cache);

    RobustnessReport rep;
    rep.case_name = pc.case_file.name;
    rep.lambda = pc.lambda;
    rep.trials = cfg.trials;

    const SolveOptions opts{.max_iterations = cfg.max_iterations, .tolerance = cfg.tolerance};
    const Eigen::SparseMatrix<double> At = pc.cache.A_r.transpose();

    for (size_t pi = 0; pi < cfg.phi_degrees.size(); ++pi) {
        const double phi = cfg.phi_degrees[pi];
        std::vector<int> successes(methods.size(), 0);

        for (int t = 0; t < cfg.trials; ++t) {
            UniformRng rng(mix_seed(mix_seed(cfg.seed, pi), static_cast<std::uint64_t>(t)));
            Eigen::VectorXd theta0(pc.cache.n);
            for (int i = 0; i < pc.cache.n; ++i)
                theta0(i) = rng.range(-phi, phi) * kRadPerDeg;

            for (size_t mi = 0; mi < methods.size(); ++mi) {
                Eigen::VectorXd theta;
                bool converged = false;
                try {
                    if (methods[mi] == "nr") {
                        const NewtonResult r = newton_raphson(pc.cache, theta0, opts);
                        converged = r.converged();
                        theta = r.theta_r;
                    } else if (methods[mi] == "cnr") {
                        const NewtonResult r = chord_newton(pc.cache, theta0, opts);
                        converged = r.converged();
                        theta = r.theta_r;
                    } else if (methods[mi] == "lmdcpf") {
                        // Random starts routinely push |psi| past 1 in early
                        // iterations at heavy loading; clamp instead of
                        // aborting. Success still demands convergence onto
                        // the reference, so clamping cannot manufacture wins.
                        SolveOptions lopts = opts;
                        lopts.psi_guard = PsiGuard::clamp;
                        const Eigen::VectorXd psi0 = (At * theta0).array().sin();
                        const FixedPointResult r = lmdcpf(pc.cache, lopts, psi0);
                        converged = r.converged();
                        theta = r.state.theta_r;
                    } else {
                        throw Error("method not supported in robustness runs: " + methods[mi]);
                    }
                } catch (const PsiOutOfRangeError&) {
                    converged = false;
                }
                if (converged &&
                    (theta - ref).lpNorm<Eigen::Infinity>() * kDegPerRad <= 1e-6)
                    ++successes[mi];
            }
        }
        for (size_t mi = 0; mi < methods.size(); ++mi)
            rep.rows.push_back(
                {phi, methods[mi], static_cast<double>(successes[mi]) / cfg.trials});
    }
    return rep;
}

}  // namespace lossydc
