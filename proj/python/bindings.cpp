#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "volfair/fairness.hpp"

namespace py = pybind11;
using namespace volfair;

namespace {

struct Options {
  double epsilon = 0.15;
  double timeout = 900;
  std::string adf = "nstep";
  int adf_steps = 5;
  double decay = 0.5;
  bool maximize = true;
  std::optional<std::size_t> max_rounds;
  double width = 0.01;
  std::string solver;
};

fairness::VerifyConfig to_config(const Options& o) {
  fairness::VerifyConfig c;
  c.sampler.adf = dist::parse_adf_kind(o.adf);
  c.sampler.adf_steps = o.adf_steps;
  c.sampler.decay = o.decay;
  c.sampler.maximize = o.maximize;
  if (o.max_rounds) c.max_rounds = *o.max_rounds;
  c.timeout_secs = o.timeout;
  c.target_width = o.width;
  return c;
}

smt::SolverConfig solver_of(const Options& o) {
  smt::SolverConfig s;
  s.path = o.solver.empty() ? smt::default_solver_path() : o.solver;
  return s;
}

py::dict verdict_dict(const fairness::Verdict& v, bool probability) {
  py::dict d;
  d["outcome"] = probability ? std::string("BOUNDS") : fairness::to_string(v.outcome);
  d["lo"] = v.ratio.lo;
  d["hi"] = v.ratio.hi;
  d["rounds"] = v.rounds;
  d["queries"] = v.queries;
  d["elapsed"] = v.elapsed;
  d["note"] = v.note;
  py::dict q;
  for (const auto& [name, b] : v.quantities) q[py::str(name)] = py::make_tuple(b.lower, b.upper);
  d["quantities"] = q;
  return d;
}

Options options(double epsilon, double timeout, const std::string& adf, int adf_steps, double decay, bool maximize,
                std::optional<std::size_t> max_rounds, double width, const std::string& solver) {
  return Options{epsilon, timeout, adf, adf_steps, decay, maximize, max_rounds, width, solver};
}

py::dict verify(const std::string& source, const Options& o) {
  auto problem = fairness::FairnessProblem::from_file(lang::parse_program(source), o.epsilon);
  fairness::Verdict v;
  {
    py::gil_scoped_release release;
    v = fairness::fair_verify(problem, to_config(o), solver_of(o));
  }
  return verdict_dict(v, problem.probability_only());
}

py::tuple probability(const std::string& source, const std::string& event, const Options& o) {
  fairness::FairnessProblem problem;
  problem.composed = pvc::compose_file(lang::parse_program(source));
  lang::ExprPtr e = lang::parse_expression(event);
  std::set<lang::Var> names;
  lang::collect_vars(*e, names);
  std::map<lang::Var, lang::Var> ren;
  for (const auto& n : names) {
    auto it = problem.composed.final_names.find(n);
    if (it == problem.composed.final_names.end()) throw lang::ParseError(e->loc, "unknown variable '" + n + "'");
    ren[n] = it->second;
  }
  problem.target = pvc::to_formula(problem.composed, *lang::rename(e, ren));
  fairness::Verdict v;
  {
    py::gil_scoped_release release;
    v = fairness::fair_verify(problem, to_config(o), solver_of(o));
  }
  return py::make_tuple(v.ratio.lo, v.ratio.hi);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Weighted-volume bounds and group-fairness verification";

  // The module keeps the type alive, so a borrowed pointer is enough here.
  static PyObject* parse_error_type = py::exception<lang::ParseError>(m, "ParseError", PyExc_ValueError).ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const lang::ParseError& e) {
      py::object err = py::handle(parse_error_type)(e.what());
      err.attr("line") = e.loc().line;
      err.attr("column") = e.loc().column;
      PyErr_SetObject(parse_error_type, err.ptr());
    }
  });
  py::register_exception<smt::SpawnError>(m, "SolverUnavailable", PyExc_RuntimeError);

  m.def("gaussian_cdf", [](double x, double mean, double stddev) {
    return dist::cdf(dist::Distribution{dist::Gaussian{mean, stddev}}, x);
  }, py::arg("x"), py::arg("mean") = 0.0, py::arg("stddev") = 1.0);

  m.def("ratio_bounds", [](std::pair<double, double> n1, std::pair<double, double> d1, std::pair<double, double> n2,
                           std::pair<double, double> d2) {
    auto bp = [](std::pair<double, double> p) { return volume::BoundPair{p.first, p.second}; };
    auto r = fairness::ratio_bounds(bp(n1), bp(d1), bp(n2), bp(d2));
    return std::make_pair(r.lo, r.hi);
  }, py::arg("n1"), py::arg("d1"), py::arg("n2"), py::arg("d2"));

  m.def("dump_pvc", [](const std::string& source) { return pvc::dump_smtlib(pvc::compose_file(lang::parse_program(source))); },
        py::arg("source"));

  m.def("monte_carlo", [](const std::string& source, const std::string& event, std::size_t n, std::uint64_t seed) {
    lang::SourceFile f = lang::parse_program(source);
    lang::ExprPtr e = lang::parse_expression(event);
    py::gil_scoped_release release;
    auto est = lang::monte_carlo(f, [&](const lang::State& s) { return lang::eval_bool(*e, s); }, n, seed);
    return std::make_pair(est.estimate, est.halfwidth95);
  }, py::arg("source"), py::arg("event"), py::arg("n") = 100000, py::arg("seed") = 1);

  m.def("verify", [](const std::string& source, double epsilon, double timeout, const std::string& adf, int adf_steps,
                     double decay, bool maximize, std::optional<std::size_t> max_rounds, double width,
                     const std::string& solver) {
    return verify(source, options(epsilon, timeout, adf, adf_steps, decay, maximize, max_rounds, width, solver));
  }, py::arg("source"), py::arg("epsilon") = 0.15, py::arg("timeout") = 900.0, py::arg("adf") = "nstep",
     py::arg("adf_steps") = 5, py::arg("decay") = 0.5, py::arg("maximize") = true, py::arg("max_rounds") = py::none(),
     py::arg("width") = 0.01, py::arg("solver") = "");

  m.def("probability", [](const std::string& source, const std::string& event, double width, double timeout,
                          const std::string& adf, bool maximize, const std::string& solver) {
    return probability(source, event, options(0.15, timeout, adf, 5, 0.5, maximize, std::nullopt, width, solver));
  }, py::arg("source"), py::arg("event"), py::arg("width") = 0.01, py::arg("timeout") = 900.0,
     py::arg("adf") = "nstep", py::arg("maximize") = true, py::arg("solver") = "");
}
