#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>

#include "volfair/smt.hpp"

namespace volfair::smt {

namespace {

void skip_space(std::string_view text, std::size_t& i) {
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
}

SExpr parse_at(std::string_view text, std::size_t& i) {
  skip_space(text, i);
  if (i >= text.size()) throw SolverError("unexpected end of s-expression");
  SExpr e;
  if (text[i] == '(') {
    e.is_list = true;
    ++i;
    while (true) {
      skip_space(text, i);
      if (i >= text.size()) throw SolverError("unbalanced s-expression");
      if (text[i] == ')') {
        ++i;
        return e;
      }
      e.items.push_back(parse_at(text, i));
    }
  }
  if (text[i] == ')') throw SolverError("unexpected ')' in s-expression");
  std::size_t start = i;
  if (text[i] == '|' || text[i] == '"') {
    char close = text[i];
    ++i;
    while (i < text.size() && text[i] != close) ++i;
    if (i >= text.size()) throw SolverError("unterminated quoted token");
    ++i;
  } else {
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && text[i] != '(' &&
           text[i] != ')') {
      ++i;
    }
  }
  e.atom = std::string(text.substr(start, i - start));
  return e;
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '|' && s.back() == '|') return s.substr(1, s.size() - 2);
  return s;
}

bool is_error(const std::string& response) { return response.rfind("(error", 0) == 0; }

}  // namespace

SExpr parse_sexpr(std::string_view text) {
  std::size_t i = 0;
  SExpr e = parse_at(text, i);
  skip_space(text, i);
  if (i != text.size()) throw SolverError("trailing input after s-expression");
  return e;
}

std::optional<Rational> parse_value(const SExpr& e) {
  if (!e.is_list) {
    try {
      return parse_rational(e.atom);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  if (e.items.empty() || e.items[0].is_list) return std::nullopt;
  const std::string& op = e.items[0].atom;
  if (op == "-" && e.items.size() == 2) {
    auto v = parse_value(e.items[1]);
    if (!v) return std::nullopt;
    return Rational(-*v);
  }
  if (op == "/" && e.items.size() == 3) {
    auto a = parse_value(e.items[1]);
    auto b = parse_value(e.items[2]);
    if (!a || !b || *b == 0) return std::nullopt;
    return Rational(*a / *b);
  }
  return std::nullopt;
}

std::string to_string(Result r) {
  switch (r) {
    case Result::Sat: return "sat";
    case Result::Unsat: return "unsat";
    case Result::Unknown: return "unknown";
  }
  return "?";
}

std::string default_solver_path() {
  if (const char* env = std::getenv("VOLFAIR_SOLVER"); env && *env) return env;
  return "z3";
}

Session::Session(SolverConfig config) : config_(std::move(config)) {
  if (config_.path.empty()) config_.path = default_solver_path();
  scopes_.emplace_back();
  start();
}

void Session::start() {
  std::vector<std::string> argv{config_.path};
  argv.insert(argv.end(), config_.args.begin(), config_.args.end());
  process_ = std::make_unique<Process>(argv);
  process_->write("(set-option :print-success true)\n");
  std::string first = process_->read_sexpr();
  if (first != "success") throw SolverError("solver did not acknowledge print-success: " + first);
  command("(set-option :produce-models true)");
  if (config_.timeout_ms > 0) command("(set-option :timeout " + std::to_string(config_.timeout_ms) + ")");
  if (config_.seed) command("(set-option :random-seed " + std::to_string(*config_.seed) + ")");
  if (config_.logic) command("(set-logic " + *config_.logic + ")");
}

std::string Session::command(const std::string& text) {
  process_->write(text);
  process_->write("\n");
  std::string response = process_->read_sexpr();
  if (is_error(response)) throw SolverError("solver rejected `" + text.substr(0, 200) + "`: " + response);
  return response;
}

void Session::send(const std::string& text, bool journal) {
  std::string response = command(text);
  if (response != "success") throw SolverError("unexpected solver response: " + response);
  if (journal) scopes_.back().commands.push_back(text);
}

bool Session::is_declared(const Var& v) const {
  for (const auto& s : scopes_) {
    if (s.declared.count(v)) return true;
  }
  return false;
}

void Session::declare(const Var& v) {
  if (is_declared(v)) return;
  send("(declare-const " + logic::smt_symbol(v) + " Real)", true);
  scopes_.back().declared.insert(v);
}

void Session::add(const Formula& f) {
  for (const auto& v : logic::free_vars(f)) declare(v);
  send("(assert " + logic::to_smtlib(f) + ")", true);
  if (!logic::is_quantifier_free(f)) scopes_.back().quantified = true;
}

void Session::push() {
  send("(push 1)", false);
  scopes_.emplace_back();
}

void Session::pop() {
  if (scopes_.size() <= 1) throw std::logic_error("pop without matching push");
  send("(pop 1)", false);
  scopes_.pop_back();
}

void Session::restart() {
  ++stats_.restarts;
  process_.reset();
  start();
  for (std::size_t i = 0; i < scopes_.size(); ++i) {
    if (i > 0) send("(push 1)", false);
    for (const auto& c : scopes_[i].commands) send(c, false);
  }
}

Answer Session::run_check(const std::vector<Var>& wanted) {
  for (const auto& v : wanted) declare(v);
  Answer answer;
  auto t0 = std::chrono::steady_clock::now();
  ++stats_.queries;
  // The incremental core handles quantifiers poorly after push/pop; run
  // quantifier elimination as a tactic whenever quantified assertions are live.
  bool quantified = std::any_of(scopes_.begin(), scopes_.end(), [](const Scope& sc) { return sc.quantified; });
  std::string r = command(quantified ? "(check-sat-using (then qe smt))" : "(check-sat)");
  stats_.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (r == "unsat") {
    answer.result = Result::Unsat;
    return answer;
  }
  if (r != "sat") {
    answer.result = Result::Unknown;
    SExpr reason = parse_sexpr(command("(get-info :reason-unknown)"));
    answer.reason = reason.is_list && reason.items.size() == 2 ? reason.items[1].atom : r;
    return answer;
  }
  answer.result = Result::Sat;
  if (wanted.empty()) return answer;
  std::string request = "(get-value (";
  for (const auto& v : wanted) request += logic::smt_symbol(v) + " ";
  request += "))";
  SExpr values = parse_sexpr(command(request));
  for (const auto& pair : values.items) {
    if (!pair.is_list || pair.items.size() != 2 || pair.items[0].is_list) {
      throw SolverError("malformed get-value entry");
    }
    auto v = parse_value(pair.items[1]);
    if (!v) throw SolverError("non-rational model value for " + pair.items[0].atom);
    answer.model.emplace(unquote(pair.items[0].atom), *v);
  }
  return answer;
}

Result Session::check() { return check_and_model({}).result; }

Answer Session::check_and_model(const std::vector<Var>& wanted) {
  try {
    return run_check(wanted);
  } catch (const SolverError&) {
    // One restart with the journaled state, then give up.
    restart();
    return run_check(wanted);
  }
}

Answer Session::check_and_model(const Formula& extra, const std::vector<Var>& wanted) {
  for (const auto& v : logic::free_vars(extra)) declare(v);
  for (const auto& v : wanted) declare(v);
  push();
  Answer a;
  try {
    add(extra);
    a = check_and_model(wanted);
  } catch (...) {
    pop();
    throw;
  }
  pop();
  return a;
}

}  // namespace volfair::smt
