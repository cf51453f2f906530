#include "volfair/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "volfair/fairness.hpp"

namespace volfair::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
  double epsilon = 0.15;
  double timeout_secs = 900;
  std::string adf = "nstep";
  int adf_steps = 5;
  double decay = 0.5;
  bool no_maximize = false;
  std::size_t max_rounds = 100000;
  unsigned seed = 0;
  std::string solver_path;
  std::string trace_path;
  std::string csv_path;
  std::string event;
  double width = 0.01;
  bool dump_pvc = false;
  bool check_soundness = false;
  bool sequential = false;
};

std::string number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

json bound_json(double v) { return std::isinf(v) ? json(nullptr) : json(v); }

json record_json(const fairness::TraceRecord& r) {
  json q = json::array();
  for (const auto& [name, b] : r.quantities) q.push_back({{"name", name}, {"lower", b.lower}, {"upper", b.upper}});
  return {{"round", r.round},
          {"quantities", q},
          {"ratio", {{"lo", r.ratio.lo}, {"hi", bound_json(r.ratio.hi)}}},
          {"queries", r.queries},
          {"elapsed", r.elapsed}};
}

void add_run_options(CLI::App* app, RunConfig& c) {
  app->add_option("--epsilon", c.epsilon, "fairness tolerance")->check(CLI::Bound(0.0, 0.999999));
  app->add_option("--timeout", c.timeout_secs, "wall-clock limit in seconds")->check(CLI::PositiveNumber);
  app->add_option("--adf", c.adf, "sampling guidance: none, uniform or nstep")
      ->check(CLI::IsMember({"none", "uniform", "nstep", "step"}));
  app->add_option("--adf-steps", c.adf_steps, "segments per approximate density")->check(CLI::PositiveNumber);
  app->add_option("--decay", c.decay, "threshold decay rate")->check(CLI::Bound(1e-9, 0.999999));
  app->add_flag("--no-maximize", c.no_maximize, "keep solver boxes as returned");
  app->add_option("--max-rounds", c.max_rounds, "round limit");
  app->add_option("--seed", c.seed, "solver random seed");
  app->add_option("--solver", c.solver_path, "SMT solver binary (default: $VOLFAIR_SOLVER or z3)");
  app->add_option("--width", c.width, "target bound width for probability queries");
  app->add_flag("--check-soundness", c.check_soundness, "validate every sampled box with a second solver");
  app->add_flag("--sequential", c.sequential, "step samplers one after another");
}

fairness::VerifyConfig verify_config(const RunConfig& c) {
  fairness::VerifyConfig v;
  v.sampler.adf = dist::parse_adf_kind(c.adf);
  v.sampler.adf_steps = c.adf_steps;
  v.sampler.decay = c.decay;
  v.sampler.maximize = !c.no_maximize;
  v.sampler.check_soundness = c.check_soundness;
  v.max_rounds = c.max_rounds;
  v.timeout_secs = c.timeout_secs;
  v.target_width = c.width;
  v.parallel = !c.sequential;
  return v;
}

smt::SolverConfig solver_config(const RunConfig& c) {
  smt::SolverConfig s;
  s.path = c.solver_path.empty() ? smt::default_solver_path() : c.solver_path;
  s.seed = c.seed;
  return s;
}

/// Event condition over source names, resolved against the program's final state.
logic::Formula event_condition(const pvc::Pvc& composed, const std::string& text) {
  lang::ExprPtr e = lang::parse_expression(text);
  std::set<lang::Var> names;
  lang::collect_vars(*e, names);
  std::map<lang::Var, lang::Var> ren;
  for (const auto& n : names) {
    auto it = composed.final_names.find(n);
    if (it == composed.final_names.end()) throw lang::ParseError(e->loc, "unknown variable '" + n + "' in event");
    ren[n] = it->second;
  }
  return pvc::to_formula(composed, *lang::rename(e, ren));
}

struct Outcome {
  fairness::Verdict verdict;
  bool probability = false;
};

Outcome verify_file(const std::string& path, const RunConfig& c, const std::string& event,
                    const std::function<void(const fairness::TraceRecord&)>& on_round) {
  lang::SourceFile file = lang::parse_file(path);
  fairness::FairnessProblem problem;
  if (event.empty()) {
    problem = fairness::FairnessProblem::from_file(file, c.epsilon);
  } else {
    problem.composed = pvc::compose_file(file);
    problem.target = event_condition(problem.composed, event);
    problem.epsilon = c.epsilon;
  }
  fairness::VerifyConfig v = verify_config(c);
  v.on_round = on_round;
  smt::SolverConfig solver = solver_config(c);
  // Fail early and distinctly when the solver cannot be started.
  { smt::Session probe(solver); }
  return {fairness::fair_verify(problem, v, solver), problem.probability_only()};
}

std::string verdict_line(const Outcome& o) {
  const auto& v = o.verdict;
  if (o.probability) return "BOUNDS lo=" + number(v.ratio.lo) + " hi=" + number(v.ratio.hi);
  if (v.outcome == fairness::Outcome::Unknown) return "UNKNOWN lo=" + number(v.ratio.lo) + " hi=" + number(v.ratio.hi);
  return fairness::to_string(v.outcome);
}

int exit_status(const Outcome& o) {
  if (o.probability) return kFair;
  switch (o.verdict.outcome) {
    case fairness::Outcome::Fair: return kFair;
    case fairness::Outcome::Unfair: return kUnfair;
    case fairness::Outcome::Unknown: return kUnknown;
  }
  return kUnknown;
}

int run_verify(const std::string& path, const RunConfig& c, std::ostream& out, std::ostream& err) {
  try {
    if (c.dump_pvc) {
      out << pvc::dump_smtlib(pvc::compose_file(lang::parse_file(path)));
      return kFair;
    }
    std::ofstream trace, csv;
    if (!c.trace_path.empty()) {
      trace.open(c.trace_path);
      if (!trace) throw std::runtime_error("cannot write " + c.trace_path);
    }
    if (!c.csv_path.empty()) {
      csv.open(c.csv_path);
      if (!csv) throw std::runtime_error("cannot write " + c.csv_path);
    }
    bool header = false;
    auto on_round = [&](const fairness::TraceRecord& r) {
      if (trace.is_open()) trace << record_json(r).dump() << "\n" << std::flush;
      if (!csv.is_open()) return;
      if (!header) {
        csv << "round,elapsed,queries,ratio_lo,ratio_hi";
        for (const auto& [name, b] : r.quantities) csv << "," << name << " lower," << name << " upper";
        csv << "\n";
        header = true;
      }
      csv << r.round << "," << r.elapsed << "," << r.queries << "," << number(r.ratio.lo) << ","
          << number(r.ratio.hi);
      for (const auto& [name, b] : r.quantities) csv << "," << b.lower << "," << b.upper;
      csv << "\n";
    };
    Outcome o = verify_file(path, c, c.event, on_round);
    out << verdict_line(o) << "\n";
    if (!o.verdict.note.empty() && o.verdict.outcome == fairness::Outcome::Unknown && !o.probability) {
      err << "stopped: " << o.verdict.note << "\n";
    }
    return exit_status(o);
  } catch (const lang::ParseError& e) {
    err << path << ": " << e.what() << "\n";
    return kUsage;
  } catch (const smt::SpawnError& e) {
    err << "error: " << e.what() << "\n";
    return kUnavailable;
  } catch (const std::invalid_argument& e) {
    err << path << ": " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUnavailable;
  }
}

int run_bench(const std::string& dir, const RunConfig& c, std::ostream& out, std::ostream& err) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".dsl") files.push_back(entry.path());
  }
  if (ec) {
    err << "cannot read " << dir << ": " << ec.message() << "\n";
    return kUsage;
  }
  std::sort(files.begin(), files.end());
  std::ostringstream table;
  table << "fixture,result,rounds,queries,seconds,lo,hi,note\n";
  for (const auto& f : files) {
    std::string name = f.filename().string();
    try {
      Outcome o = verify_file(f.string(), c, "", {});
      std::string result = o.probability ? "BOUNDS" : fairness::to_string(o.verdict.outcome);
      char secs[32];
      std::snprintf(secs, sizeof secs, "%.2f", o.verdict.elapsed);
      table << name << "," << result << "," << o.verdict.rounds << "," << o.verdict.queries << "," << secs << ","
            << number(o.verdict.ratio.lo) << "," << number(o.verdict.ratio.hi) << "," << o.verdict.note << "\n";
    } catch (const smt::SpawnError& e) {
      err << "error: " << e.what() << "\n";
      return kUnavailable;
    } catch (const std::exception& e) {
      std::string msg = e.what();
      std::replace(msg.begin(), msg.end(), ',', ';');
      table << name << ",ERROR,0,0,0,,," << msg << "\n";
    }
  }
  out << table.str();
  if (!c.csv_path.empty()) {
    std::ofstream csv(c.csv_path);
    csv << table.str();
  }
  return 0;
}

double as_bound(const json& v) { return v.is_null() ? fairness::kInfinity : v.get<double>(); }

}  // namespace

std::vector<std::string> lint_trace(std::istream& in) {
  std::vector<std::string> problems;
  std::string line;
  json prev;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json r;
    try {
      r = json::parse(line);
      std::string where = "line " + std::to_string(lineno) + ": ";
      double lo = r.at("ratio").at("lo").get<double>();
      double hi = as_bound(r.at("ratio").at("hi"));
      if (lo > hi) problems.push_back(where + "ratio lower bound exceeds upper bound");
      for (const auto& q : r.at("quantities")) {
        if (q.at("lower").get<double>() > q.at("upper").get<double>()) {
          problems.push_back(where + q.at("name").get<std::string>() + " lower bound exceeds upper bound");
        }
      }
      if (!prev.is_null()) {
        if (r.at("round").get<std::size_t>() <= prev.at("round").get<std::size_t>()) {
          problems.push_back(where + "round index does not increase");
        }
        if (lo < prev.at("ratio").at("lo").get<double>()) problems.push_back(where + "ratio lower bound decreased");
        if (hi > as_bound(prev.at("ratio").at("hi"))) problems.push_back(where + "ratio upper bound increased");
        const auto& qs = r.at("quantities");
        const auto& ps = prev.at("quantities");
        if (qs.size() != ps.size()) {
          problems.push_back(where + "quantity count changed");
        } else {
          for (std::size_t i = 0; i < qs.size(); ++i) {
            std::string name = qs[i].at("name").get<std::string>();
            if (qs[i].at("lower").get<double>() < ps[i].at("lower").get<double>()) {
              problems.push_back(where + name + " lower bound decreased");
            }
            if (qs[i].at("upper").get<double>() > ps[i].at("upper").get<double>()) {
              problems.push_back(where + name + " upper bound increased");
            }
          }
        }
      }
    } catch (const json::exception& e) {
      problems.push_back("line " + std::to_string(lineno) + ": malformed record (" + e.what() + ")");
      continue;
    }
    prev = std::move(r);
  }
  return problems;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Anytime probability bounds and group-fairness verification for straight-line programs", "volfair"};
  app.require_subcommand(1);
  RunConfig c;
  std::string target;

  CLI::App* verify = app.add_subcommand("verify", "verify one program");
  verify->add_option("program", target, "program file")->required();
  add_run_options(verify, c);
  verify->add_option("--trace", c.trace_path, "JSON-lines trace output");
  verify->add_option("--csv", c.csv_path, "CSV trace output");
  verify->add_option("--event", c.event, "bound Pr[event] instead of checking fairness");
  verify->add_flag("--dump-pvc", c.dump_pvc, "print the verification condition as SMT-LIB and exit");

  CLI::App* bench = app.add_subcommand("bench", "verify every .dsl file in a directory");
  bench->add_option("directory", target, "fixture directory")->required();
  add_run_options(bench, c);
  bench->add_option("--csv", c.csv_path, "also write the table here");

  CLI::App* lint = app.add_subcommand("trace-lint", "check a trace file for monotone bounds");
  lint->add_option("trace", target, "trace file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : kUsage;
  }

  if (verify->parsed()) return run_verify(target, c, out, err);
  if (bench->parsed()) return run_bench(target, c, out, err);
  std::ifstream in(target);
  if (!in) {
    err << "cannot open " << target << "\n";
    return kUsage;
  }
  std::vector<std::string> problems = lint_trace(in);
  for (const auto& p : problems) out << p << "\n";
  if (problems.empty()) out << "ok\n";
  return problems.empty() ? 0 : 1;
}

}  // namespace volfair::cli
