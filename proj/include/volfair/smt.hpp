#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "volfair/box.hpp"
#include "volfair/formula.hpp"

namespace volfair::smt {

using logic::Formula;
using logic::Var;

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The solver binary could not be started.
class SpawnError : public SolverError {
 public:
  using SolverError::SolverError;
};

/// Child process connected through a pair of pipes.
class Process {
 public:
  explicit Process(const std::vector<std::string>& argv);
  ~Process();
  Process(const Process&) = delete;
  Process& operator=(const Process&) = delete;

  void write(std::string_view text);
  /// Next complete s-expression or atom from the child's stdout.
  std::string read_sexpr();
  bool alive();

 private:
  int get();

  int pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string buffer_;
  std::size_t pos_ = 0;
};

struct SExpr {
  std::string atom;
  std::vector<SExpr> items;
  bool is_list = false;
};

SExpr parse_sexpr(std::string_view text);
/// Real numeral in solver output syntax: decimals, (- x), (/ x y).
std::optional<Rational> parse_value(const SExpr& e);

enum class Result { Sat, Unsat, Unknown };
std::string to_string(Result r);

struct SolverConfig {
  std::string path;
  std::vector<std::string> args{"-in", "-smt2"};
  /// Per check-sat limit; 0 disables.
  unsigned timeout_ms = 0;
  std::optional<std::string> logic;
  std::optional<unsigned> seed;
};

/// Solver binary: VOLFAIR_SOLVER if set, otherwise `z3` on PATH.
std::string default_solver_path();

struct Stats {
  std::size_t queries = 0;
  std::size_t restarts = 0;
  double seconds = 0.0;
};

struct Answer {
  Result result = Result::Unknown;
  std::map<Var, Rational> model;
  std::string reason;
};

/// Incremental SMT-LIB 2 conversation with one solver process.
/// Every command and declaration is journaled per scope so that a crashed
/// solver can be restarted into the same state.
class Session {
 public:
  explicit Session(SolverConfig config);

  void declare(const Var& v);
  void add(const Formula& f);
  void push();
  void pop();
  std::size_t depth() const { return scopes_.size() - 1; }

  Result check();
  /// check-sat on the current assertions; on SAT, values for `wanted`.
  Answer check_and_model(const std::vector<Var>& wanted);
  /// Same, with `extra` asserted in a temporary scope.
  Answer check_and_model(const Formula& extra, const std::vector<Var>& wanted);

  void restart();
  const Stats& stats() const { return stats_; }
  const SolverConfig& config() const { return config_; }

 private:
  struct Scope {
    std::vector<std::string> commands;
    std::set<Var> declared;
    bool quantified = false;
  };

  void start();
  void send(const std::string& command, bool journal);
  std::string command(const std::string& text);
  bool is_declared(const Var& v) const;
  Answer run_check(const std::vector<Var>& wanted);

  SolverConfig config_;
  std::unique_ptr<Process> process_;
  std::vector<Scope> scopes_;
  Stats stats_;
};

enum class Direction { Lower, Upper };

/// Furthest endpoint for `dim` in `dir` such that the box still satisfies
/// `psi` with every other endpoint fixed. Quantifier-free `psi` is handled
/// exactly without the solver; otherwise the solver is probed with an
/// exponential then binary search to 2⁻²⁰. UNKNOWN keeps the current endpoint.
logic::ExtValue extend_bound(Session* session, const Formula& psi, const logic::Hyperrectangle& box,
                             const logic::BoxVars& vars, const Var& dim, Direction dir);

/// Greedy maximization over all dimensions in declaration order, lower then
/// upper, repeated until nothing moves or `passes` is reached. `blocked` are
/// boxes the result must stay disjoint from; `psi` must not mention them.
logic::Hyperrectangle maximize_box(Session* session, const Formula& psi,
                                   const std::vector<logic::Hyperrectangle>& blocked,
                                   const logic::Hyperrectangle& box, const logic::BoxVars& vars, int passes = 4);

}  // namespace volfair::smt
