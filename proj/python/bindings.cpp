#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "irrlyap/irr.hpp"
#include "irrlyap/precond.hpp"
#include "irrlyap/tnewton.hpp"

namespace py = pybind11;
using namespace irrlyap;

namespace {

Metric to_metric(int metric) { return metric_from_int(metric); }

py::dict trace_to_dict(const SolveTrace& trace) {
  py::list k, p, f, gradnorm, relres, inner, nh, alpha, ms;
  for (const auto& r : trace.records) {
    k.append(r.k);
    p.append(r.p);
    f.append(r.f);
    gradnorm.append(r.gradnorm);
    relres.append(r.relres);
    inner.append(r.inner_iters);
    nh.append(r.nh);
    alpha.append(r.alpha);
    ms.append(r.ms);
  }
  py::dict out;
  out["k"] = k;
  out["p"] = p;
  out["f"] = f;
  out["gradnorm"] = gradnorm;
  out["relres"] = relres;
  out["inner_iters"] = inner;
  out["nH"] = nh;
  out["alpha"] = alpha;
  out["ms"] = ms;
  return out;
}

}  // namespace

PYBIND11_MODULE(_irrlyap, m) {
  m.doc() = "Low-rank solver for A X M + M X A = B B^T";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", error.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<ParseError>(m, "ParseError", error.ptr());

  py::class_<LyapunovProblem>(m, "LyapunovProblem")
      .def(py::init([](const SparseMatrix& a, const SparseMatrix& mass,
                       const Matrix& b) {
             return LyapunovProblem(SpdSparseMatrix(a), SpdSparseMatrix(mass), b);
           }),
           py::arg("a"), py::arg("m"), py::arg("b"))
      .def_property_readonly("n", &LyapunovProblem::n)
      .def_property_readonly("a", [](const LyapunovProblem& p) { return p.a().matrix(); })
      .def_property_readonly("m", [](const LyapunovProblem& p) { return p.m().matrix(); })
      .def_property_readonly("b", [](const LyapunovProblem& p) { return p.b(); })
      .def_property_readonly("rhs_norm", &LyapunovProblem::rhs_norm);

  m.def("gen_poisson",
        [](Index n, std::uint64_t seed, const std::string& mass) {
          if (mass != "random" && mass != "identity")
            throw ConfigError("mass must be 'random' or 'identity'");
          return gen_poisson(n, seed,
                             mass == "identity" ? MassKind::identity : MassKind::random);
        },
        py::arg("n"), py::arg("seed") = 0, py::arg("mass") = "random");
  m.def("load_manifest", &load_manifest, py::arg("path"));
  m.def("write_problem", &write_problem, py::arg("problem"), py::arg("directory"));

  m.def("residual_fro",
        py::overload_cast<const LyapunovProblem&, const Matrix&>(&residual_fro),
        py::arg("problem"), py::arg("y"));
  m.def("relative_residual",
        py::overload_cast<const LyapunovProblem&, const Matrix&>(&relative_residual),
        py::arg("problem"), py::arg("y"));
  m.def("dense_oracle_solve",
        [](const LyapunovProblem& problem, Index dense_limit) {
          DenseOracleOptions opts;
          opts.dense_limit = dense_limit;
          return dense_oracle_solve(problem, opts);
        },
        py::arg("problem"), py::arg("dense_limit") = 2000);

  m.def("cost", py::overload_cast<const LyapunovProblem&, const Matrix&>(&cost),
        py::arg("problem"), py::arg("y"));
  m.def("metric_inner",
        [](int metric, const Matrix& y, const Matrix& xi, const Matrix& eta) {
          return metric_inner(to_metric(metric), FactorPoint(y), xi, eta);
        },
        py::arg("metric"), py::arg("y"), py::arg("xi"), py::arg("eta"));
  m.def("project_horizontal",
        [](int metric, const Matrix& y, const Matrix& ambient) {
          return project_decompose(to_metric(metric), FactorPoint(y), ambient).horizontal;
        },
        py::arg("metric"), py::arg("y"), py::arg("ambient"));
  m.def("riemannian_gradient",
        [](int metric, const LyapunovProblem& problem, const Matrix& y) {
          return riemannian_gradient(to_metric(metric), problem, FactorPoint(y)).value;
        },
        py::arg("metric"), py::arg("problem"), py::arg("y"));
  m.def("hessian_action",
        [](int metric, const LyapunovProblem& problem, const Matrix& y,
           const Matrix& eta) {
          const Metric mt = to_metric(metric);
          return hessian_action(mt, problem, FactorPoint(y), HorizontalVector{eta, mt})
              .value;
        },
        py::arg("metric"), py::arg("problem"), py::arg("y"), py::arg("eta"));
  m.def("apply_preconditioner",
        [](int metric, const LyapunovProblem& problem, const Matrix& y,
           const Matrix& eta, const std::string& kind) {
          const Metric mt = to_metric(metric);
          const PointContext ctx(problem, FactorPoint(y));
          const Preconditioner pc(mt, ctx, precond_from_string(kind));
          return pc.apply(HorizontalVector{eta, mt}).value;
        },
        py::arg("metric"), py::arg("problem"), py::arg("y"), py::arg("eta"),
        py::arg("kind") = "proposed");

  m.def("solve_fixed_rank",
        [](const LyapunovProblem& problem, const Matrix& y0, int metric,
           const std::string& precond, double grad_tol_rel, Index max_outer) {
          TnewtonConfig cfg;
          cfg.grad_tol_rel = grad_tol_rel;
          cfg.max_outer = max_outer;
          const FixedRankResult r = [&] {
            py::gil_scoped_release release;
            return solve_fixed_rank(problem, to_metric(metric), FactorPoint(y0), cfg,
                                    precond_from_string(precond));
          }();
          py::dict out;
          out["y"] = r.point.y();
          out["converged"] = r.converged;
          out["outer_iterations"] = r.outer_iterations;
          out["total_nH"] = r.trace.total_nh();
          out["trace"] = trace_to_dict(r.trace);
          return out;
        },
        py::arg("problem"), py::arg("y0"), py::arg("metric") = 1,
        py::arg("precond") = "proposed", py::arg("grad_tol_rel") = 1e-6,
        py::arg("max_outer") = 500);

  m.def("solve",
        [](const LyapunovProblem& problem, int metric, const std::string& precond,
           double tol, Index p_min, Index p_max, Index p_inc, std::uint64_t seed) {
          IrrConfig irr;
          irr.p_min = p_min;
          irr.p_max = std::min<Index>(p_max, problem.n());
          irr.p_inc = p_inc;
          irr.tau = tol;
          irr.seed = seed;
          const IrrResult r = [&] {
            py::gil_scoped_release release;
            return solve_increasing_rank(problem, to_metric(metric), irr,
                                         TnewtonConfig{}, precond_from_string(precond));
          }();
          py::dict out;
          out["y"] = r.point.y();
          out["converged"] = r.converged;
          out["rel_res"] = r.rel_res;
          out["final_rank"] = r.final_rank();
          out["ranks_visited"] = r.ranks_visited();
          out["total_nH"] = r.trace.total_nh();
          out["trace"] = trace_to_dict(r.trace);
          return out;
        },
        py::arg("problem"), py::arg("metric") = 1, py::arg("precond") = "proposed",
        py::arg("tol") = 1e-6, py::arg("p_min") = 1, py::arg("p_max") = 40,
        py::arg("p_inc") = 1, py::arg("seed") = 0);
}
