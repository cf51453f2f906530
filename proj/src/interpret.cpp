#include <cmath>
#include <random>

#include "volfair/lang.hpp"

namespace volfair::lang {

namespace {

double lookup(const State& s, const Var& v) {
  auto it = s.find(v);
  return it == s.end() ? 0.0 : it->second;
}

void collect_sites(const std::vector<Stmt>& body, std::vector<const DistSpec*>& sites) {
  for (const auto& s : body) {
    if (s.kind == Stmt::Kind::ProbAssign) {
      if (static_cast<std::size_t>(s.site) >= sites.size()) sites.resize(s.site + 1, nullptr);
      sites[s.site] = &*s.dist;
    }
    collect_sites(s.then_body, sites);
    collect_sites(s.else_body, sites);
  }
}

std::vector<const DistSpec*> all_sites(const SourceFile& f) {
  std::vector<const DistSpec*> sites(f.site_count, nullptr);
  collect_sites(f.pop.body, sites);
  if (f.dec) collect_sites(f.dec->body, sites);
  return sites;
}

void exec(const Program& p, const std::vector<Stmt>& body, OmegaSequences& omega, State& s) {
  for (const auto& st : body) {
    switch (st.kind) {
      case Stmt::Kind::Assign:
        s[st.var] = p.bool_vars.count(st.var) ? (eval_bool(*st.expr, s) ? 1.0 : 0.0) : eval_real(*st.expr, s);
        break;
      case Stmt::Kind::ProbAssign: {
        if (static_cast<std::size_t>(st.site) >= omega.queues.size() || omega.queues[st.site].empty()) {
          throw OmegaUnderflow("no pre-drawn value left for '" + st.var + "' (site " + std::to_string(st.site) + ")");
        }
        auto& q = omega.queues[st.site];
        s[st.var] = q.front();
        q.pop_front();
        break;
      }
      case Stmt::Kind::Cond:
        exec(p, eval_bool(*st.expr, s) ? st.then_body : st.else_body, omega, s);
        break;
    }
  }
}

}  // namespace

double eval_real(const Expr& e, const State& s) {
  switch (e.op) {
    case Expr::Op::Num: return to_double(e.num);
    case Expr::Op::Var: return lookup(s, e.name);
    case Expr::Op::Bool: return e.truth ? 1.0 : 0.0;
    case Expr::Op::Neg: return -eval_real(*e.args[0], s);
    case Expr::Op::Add: return eval_real(*e.args[0], s) + eval_real(*e.args[1], s);
    case Expr::Op::Sub: return eval_real(*e.args[0], s) - eval_real(*e.args[1], s);
    case Expr::Op::Mul: return eval_real(*e.args[0], s) * eval_real(*e.args[1], s);
    case Expr::Op::Div: return eval_real(*e.args[0], s) / eval_real(*e.args[1], s);
    default: return eval_bool(e, s) ? 1.0 : 0.0;
  }
}

bool eval_bool(const Expr& e, const State& s) {
  switch (e.op) {
    case Expr::Op::Bool: return e.truth;
    case Expr::Op::Var: return lookup(s, e.name) != 0.0;
    case Expr::Op::Lt: return eval_real(*e.args[0], s) < eval_real(*e.args[1], s);
    case Expr::Op::Le: return eval_real(*e.args[0], s) <= eval_real(*e.args[1], s);
    case Expr::Op::Gt: return eval_real(*e.args[0], s) > eval_real(*e.args[1], s);
    case Expr::Op::Ge: return eval_real(*e.args[0], s) >= eval_real(*e.args[1], s);
    case Expr::Op::Eq: return eval_real(*e.args[0], s) == eval_real(*e.args[1], s);
    case Expr::Op::Ne: return eval_real(*e.args[0], s) != eval_real(*e.args[1], s);
    case Expr::Op::And: return eval_bool(*e.args[0], s) && eval_bool(*e.args[1], s);
    case Expr::Op::Or: return eval_bool(*e.args[0], s) || eval_bool(*e.args[1], s);
    case Expr::Op::Not: return !eval_bool(*e.args[0], s);
    default: return eval_real(e, s) != 0.0;
  }
}

OmegaSequences OmegaSequences::draw(const SourceFile& f, std::size_t per_site, std::uint64_t seed) {
  OmegaSequences omega;
  omega.seed = seed;
  std::mt19937_64 rng(seed);
  auto sites = all_sites(f);
  omega.queues.resize(sites.size());
  for (std::size_t k = 0; k < per_site; ++k) {
    for (std::size_t i = 0; i < sites.size(); ++i) {
      if (sites[i]) omega.queues[i].push_back(dist::sample(sites[i]->dist, rng));
    }
  }
  return omega;
}

State interpret(const Program& p, OmegaSequences& omega, State initial) {
  State s = std::move(initial);
  exec(p, p.body, omega, s);
  return s;
}

State link_inputs(const SourceFile& f, const State& pop_state) {
  State init;
  if (!f.dec) return init;
  const Program& dec = *f.dec;
  bool positional = f.pop.explicit_outputs && dec.declared_inputs;
  for (std::size_t i = 0; i < dec.inputs.size(); ++i) {
    Var source = positional && i < f.pop.outputs.size() ? f.pop.outputs[i] : dec.inputs[i];
    auto name = f.pop.final_names.find(source);
    init[dec.inputs[i]] = lookup(pop_state, name == f.pop.final_names.end() ? source : name->second);
  }
  return init;
}

State interpret(const SourceFile& f, OmegaSequences& omega) {
  State pop = interpret(f.pop, omega);
  if (!f.dec) return pop;
  State dec = interpret(*f.dec, omega, link_inputs(f, pop));
  for (const auto& [k, v] : dec) pop[k] = v;
  return pop;
}

Estimate monte_carlo(const SourceFile& f, const std::function<bool(const State&)>& event, std::size_t n,
                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto sites = all_sites(f);
  OmegaSequences omega;
  omega.seed = seed;
  omega.queues.resize(sites.size());
  std::size_t hits = 0;
  for (std::size_t run = 0; run < n; ++run) {
    for (std::size_t i = 0; i < sites.size(); ++i) {
      omega.queues[i].clear();
      if (sites[i]) omega.queues[i].push_back(dist::sample(sites[i]->dist, rng));
    }
    if (event(interpret(f, omega))) ++hits;
  }
  Estimate e;
  e.estimate = n ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
  e.halfwidth95 = n ? 1.96 * std::sqrt(e.estimate * (1.0 - e.estimate) / static_cast<double>(n)) : 0.0;
  return e;
}

Estimate monte_carlo(const SourceFile& f, const logic::Formula& event, std::size_t n, std::uint64_t seed) {
  CompiledFormula compiled(event);
  return monte_carlo(f, [&](const State& s) { return compiled(s); }, n, seed);
}

CompiledFormula::CompiledFormula(const logic::Formula& f) { build(f); }

int CompiledFormula::build(const logic::Formula& f) {
  int index = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{f.kind(), {}, 0.0, logic::Rel::Le, {}});
  switch (f.kind()) {
    case logic::Kind::Atom:
      for (const auto& [v, c] : f.atom().term.coeffs()) nodes_[index].coeffs.emplace_back(v, to_double(c));
      nodes_[index].constant = to_double(f.atom().term.constant());
      nodes_[index].rel = f.atom().rel;
      break;
    case logic::Kind::Exists:
    case logic::Kind::Forall: throw std::invalid_argument("cannot evaluate a quantified event numerically");
    default:
      for (const auto& c : f.children()) {
        int child = build(c);
        nodes_[index].children.push_back(child);
      }
  }
  return index;
}

bool CompiledFormula::eval(int i, const State& s) const {
  const Node& n = nodes_[i];
  switch (n.kind) {
    case logic::Kind::True: return true;
    case logic::Kind::False: return false;
    case logic::Kind::Atom: {
      double t = n.constant;
      for (const auto& [v, c] : n.coeffs) t += c * lookup(s, v);
      switch (n.rel) {
        case logic::Rel::Lt: return t < 0;
        case logic::Rel::Le: return t <= 0;
        case logic::Rel::Eq: return t == 0;
      }
      return false;
    }
    case logic::Kind::Not: return !eval(n.children[0], s);
    case logic::Kind::And:
      for (int c : n.children) {
        if (!eval(c, s)) return false;
      }
      return true;
    case logic::Kind::Or:
      for (int c : n.children) {
        if (eval(c, s)) return true;
      }
      return false;
    default: return false;
  }
}

bool CompiledFormula::operator()(const State& s) const { return eval(0, s); }

}  // namespace volfair::lang
