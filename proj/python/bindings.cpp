#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lossydc/experiments.hpp"
#include "lossydc/rng.hpp"

namespace py = pybind11;
using namespace lossydc;

namespace {

StartPolicy start_of(const std::string& s) {
    if (s == "hot") return StartPolicy::hot;
    if (s == "cold") return StartPolicy::cold;
    throw Error("start must be 'hot' or 'cold'");
}

SolveOptions options_of(int max_iter, double tol, bool freeze_x, bool clamp,
                        const std::optional<Eigen::VectorXd>& reference) {
    SolveOptions o;
    o.max_iterations = max_iter;
    o.tolerance = tol;
    o.freeze_cycle_update = freeze_x;
    o.psi_guard = clamp ? PsiGuard::clamp : PsiGuard::fail;
    o.reference = reference;
    return o;
}

py::dict trace_dict(const IterationTrace& trace) {
    py::list records;
    for (const auto& r : trace.records) {
        py::dict d;
        d["k"] = r.k;
        d["theta_err_deg"] = r.theta_err_deg;
        d["step"] = r.step;
        d["injection_residual"] = r.injection_residual;
        d["kvl_residual"] = r.kvl_residual;
        d["clamped"] = r.clamped;
        records.append(d);
    }
    py::dict out;
    out["records"] = records;
    out["termination"] = std::string(to_string(trace.termination));
    out["clamped_anywhere"] = trace.clamped_anywhere;
    return out;
}

py::dict fixed_point_dict(const FixedPointResult& res) {
    py::dict out;
    out["k"] = res.state.k;
    out["psi"] = res.state.psi;
    out["x"] = res.state.x;
    out["theta"] = res.state.theta_r;
    out["injection_residual"] = res.state.injection_residual;
    out["kvl_residual"] = res.state.kvl_residual;
    out["converged"] = res.converged();
    out["trace"] = trace_dict(res.trace);
    return out;
}

py::dict newton_dict(const NewtonResult& res) {
    py::dict out;
    out["theta"] = res.theta_r;
    out["iterations"] = static_cast<int>(res.trace.records.size()) - 1;
    out["converged"] = res.converged();
    out["trace"] = trace_dict(res.trace);
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "lossy (modified) DC active power flow: solvers and certificates";

    py::register_exception<Error>(m, "LossyDcError");

    py::class_<Bus>(m, "Bus")
        .def(py::init<>())
        .def_readwrite("id", &Bus::id)
        .def_readwrite("voltage", &Bus::voltage)
        .def_readwrite("injection", &Bus::injection)
        .def_readwrite("shunt_conductance", &Bus::shunt_conductance);

    py::class_<Branch>(m, "Branch")
        .def(py::init<>())
        .def_readwrite("from_bus", &Branch::from)
        .def_readwrite("to_bus", &Branch::to)
        .def_readwrite("conductance", &Branch::conductance)
        .def_readwrite("susceptance", &Branch::susceptance)
        .def_readwrite("tap", &Branch::tap);

    py::class_<Network>(m, "Network")
        .def(py::init<>())
        .def_readwrite("buses", &Network::buses)
        .def_readwrite("branches", &Network::branches)
        .def_readwrite("slack_bus", &Network::slack_bus)
        .def_readwrite("base_mva", &Network::base_mva);

    py::class_<Certificate>(m, "Certificate")
        .def_readonly("rho", &Certificate::rho)
        .def_readonly("gamma", &Certificate::gamma)
        .def_readonly("condition_value", &Certificate::condition_value)
        .def_readonly("feasible", &Certificate::feasible)
        .def_readonly("beta_minus", &Certificate::beta_minus)
        .def_readonly("beta_plus", &Certificate::beta_plus)
        .def_readonly("contraction_c", &Certificate::contraction_c)
        .def_readonly("angle_bound", &Certificate::angle_bound)
        .def("error_bound", &Certificate::error_bound, py::arg("k"))
        .def("to_json", &Certificate::to_json);

    py::class_<PreparedCase>(m, "System")
        .def(py::init([](const Network& net) { return prepare_network(net, "network"); }),
             py::arg("network"))
        .def_static(
            "from_case",
            [](const std::string& path, const std::string& start, double lambda) {
                ExperimentConfig cfg;
                cfg.case_path = path;
                cfg.start = start_of(start);
                if (lambda != 1.0) cfg.lambda = lambda;
                return prepare_case(cfg);
            },
            py::arg("path"), py::arg("start") = "hot", py::arg("lambda") = 1.0)
        .def_property_readonly("n", [](const PreparedCase& pc) { return pc.cache.n; })
        .def_property_readonly("m", [](const PreparedCase& pc) { return pc.cache.m; })
        .def_property_readonly("cycles", [](const PreparedCase& pc) { return pc.cache.c; })
        .def_property_readonly("radial",
                               [](const PreparedCase& pc) { return pc.cache.radial(); })
        .def_property_readonly("bus_ids",
                               [](const PreparedCase& pc) { return pc.reduced_ids; })
        .def("dcpf", [](const PreparedCase& pc) { return dcpf(pc.cache); })
        .def("mdcpf",
             [](const PreparedCase& pc) {
                 const MdcpfResult r = mdcpf(pc.cache);
                 return py::make_tuple(r.theta_r, r.psi_mdc);
             })
        .def(
            "lmdcpf",
            [](const PreparedCase& pc, int max_iter, double tol, bool freeze_x, bool clamp,
               const std::optional<Eigen::VectorXd>& psi0,
               const std::optional<Eigen::VectorXd>& reference) {
                return fixed_point_dict(
                    lmdcpf(pc.cache, options_of(max_iter, tol, freeze_x, clamp, reference),
                           psi0));
            },
            py::arg("max_iter") = 50, py::arg("tol") = 1e-10, py::arg("freeze_x") = false,
            py::arg("clamp") = false, py::arg("psi0") = std::nullopt,
            py::arg("reference") = std::nullopt)
        .def(
            "ldcpf",
            [](const PreparedCase& pc, int max_iter, double tol, bool clamp,
               const std::optional<Eigen::VectorXd>& reference) {
                return fixed_point_dict(
                    ldcpf(pc.cache, options_of(max_iter, tol, false, clamp, reference)));
            },
            py::arg("max_iter") = 50, py::arg("tol") = 1e-10, py::arg("clamp") = false,
            py::arg("reference") = std::nullopt)
        .def(
            "newton",
            [](const PreparedCase& pc, const std::optional<Eigen::VectorXd>& theta0,
               int max_iter, double tol) {
                return newton_dict(newton_raphson(
                    pc.cache, theta0.value_or(Eigen::VectorXd::Zero(pc.cache.n)),
                    options_of(max_iter, tol, false, false, std::nullopt)));
            },
            py::arg("theta0") = std::nullopt, py::arg("max_iter") = 50,
            py::arg("tol") = 1e-10)
        .def(
            "chord_newton",
            [](const PreparedCase& pc, const std::optional<Eigen::VectorXd>& theta0,
               int max_iter, double tol) {
                return newton_dict(chord_newton(
                    pc.cache, theta0.value_or(Eigen::VectorXd::Zero(pc.cache.n)),
                    options_of(max_iter, tol, false, false, std::nullopt)));
            },
            py::arg("theta0") = std::nullopt, py::arg("max_iter") = 50,
            py::arg("tol") = 1e-10)
        .def("active_residual",
             [](const PreparedCase& pc, const Eigen::VectorXd& theta) {
                 return active_residual(pc.cache, theta);
             })
        .def("certificate",
             [](const PreparedCase& pc) { return certify_radial(pc.net, pc.cache); })
        .def("contraction_map", [](const PreparedCase& pc, const Eigen::VectorXd& psi) {
            return contraction_map(pc.cache, psi);
        });

    m.def("two_bus_closed_form", &two_bus_closed_form, py::arg("g"), py::arg("b"),
          py::arg("v1"), py::arg("v2"), py::arg("p1"),
          "all two-bus angle solutions in (-pi/2, pi/2)");
    m.def(
        "no_solution_band",
        [](const Certificate& cert) { return no_solution_band(cert); },
        py::arg("certificate"));
    m.def(
        "parse_case_json",
        [](const std::string& text) {
            const CaseFile cf = parse_case(text);
            return serialize_case_json(cf);
        },
        py::arg("text"), "parse a case (.m subset or canonical JSON), return canonical JSON");
    m.def(
        "load_network",
        [](const std::string& path, const std::string& start) {
            return to_network(parse_case_file(path), start_of(start));
        },
        py::arg("path"), py::arg("start") = "hot");
    m.def(
        "table_csv",
        [](const std::string& path, const std::vector<int>& k, const std::string& start) {
            ExperimentConfig cfg;
            cfg.case_path = path;
            cfg.start = start_of(start);
            cfg.k_values = k;
            return run_table(cfg).csv();
        },
        py::arg("path"), py::arg("k"), py::arg("start") = "hot",
        "frozen-x error table as CSV text");
}
