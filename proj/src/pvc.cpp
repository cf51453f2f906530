#include "volfair/pvc.hpp"

#include <algorithm>
#include <sstream>

namespace volfair::pvc {

using lang::Expr;
using logic::LinearTerm;

Formula Pvc::phi() const {
  std::vector<Formula> parts;
  for (const auto& c : constraints) parts.push_back(c.formula);
  return logic::mk_and(std::move(parts));
}

std::set<Var> Pvc::vars() const {
  std::set<Var> out(det_vars.begin(), det_vars.end());
  out.insert(prob_order.begin(), prob_order.end());
  for (const auto& [b, f] : bool_defs) out.insert(b);
  out.insert(inputs.begin(), inputs.end());
  return out;
}

LinearTerm linearize(const Expr& e) {
  switch (e.op) {
    case Expr::Op::Num: return LinearTerm(e.num);
    case Expr::Op::Var: return LinearTerm::var(e.name);
    case Expr::Op::Neg: return -linearize(*e.args[0]);
    case Expr::Op::Add: return linearize(*e.args[0]) + linearize(*e.args[1]);
    case Expr::Op::Sub: return linearize(*e.args[0]) - linearize(*e.args[1]);
    case Expr::Op::Mul: {
      LinearTerm a = linearize(*e.args[0]);
      LinearTerm b = linearize(*e.args[1]);
      if (a.is_constant()) return b * a.constant();
      if (b.is_constant()) return a * b.constant();
      throw NonlinearError(e.loc, "non-linear product " + lang::to_string(e));
    }
    case Expr::Op::Div: {
      LinearTerm b = linearize(*e.args[1]);
      if (!b.is_constant()) throw NonlinearError(e.loc, "division by a non-constant in " + lang::to_string(e));
      if (b.constant() == 0) throw NonlinearError(e.loc, "division by zero");
      return linearize(*e.args[0]) * Rational(1 / b.constant());
    }
    default: throw NonlinearError(e.loc, "expected an arithmetic expression, found " + lang::to_string(e));
  }
}

Formula to_formula(const Pvc& pvc, const Expr& e) {
  using namespace logic;
  auto side = [&](int i) { return linearize(*e.args[i]); };
  switch (e.op) {
    case Expr::Op::Bool: return mk_bool(e.truth);
    case Expr::Op::Var: {
      auto it = pvc.bool_defs.find(e.name);
      if (it == pvc.bool_defs.end()) throw NonlinearError(e.loc, "'" + e.name + "' is not a Boolean variable");
      return it->second;
    }
    case Expr::Op::Lt: return lt(side(0), side(1));
    case Expr::Op::Le: return le(side(0), side(1));
    case Expr::Op::Gt: return gt(side(0), side(1));
    case Expr::Op::Ge: return ge(side(0), side(1));
    case Expr::Op::Eq: return eq(side(0), side(1));
    case Expr::Op::Ne: return ne(side(0), side(1));
    case Expr::Op::And: return mk_and(to_formula(pvc, *e.args[0]), to_formula(pvc, *e.args[1]));
    case Expr::Op::Or: return mk_or(to_formula(pvc, *e.args[0]), to_formula(pvc, *e.args[1]));
    case Expr::Op::Not: return mk_not(to_formula(pvc, *e.args[0]));
    default: throw NonlinearError(e.loc, "expected a condition, found " + lang::to_string(e));
  }
}

namespace {

struct Generator {
  const lang::Program& prog;
  Pvc out;

  std::vector<Constraint> walk(const std::vector<lang::Stmt>& body, const Formula& guard) {
    std::vector<Constraint> cs;
    for (const auto& s : body) {
      switch (s.kind) {
        case lang::Stmt::Kind::Assign: {
          if (prog.bool_vars.count(s.var)) {
            Formula value = logic::mk_and(guard, to_formula(out, *s.expr));
            auto it = out.bool_defs.find(s.var);
            out.bool_defs[s.var] = it == out.bool_defs.end() ? value : logic::mk_or(it->second, value);
            break;
          }
          cs.push_back({logic::eq(LinearTerm::var(s.var), linearize(*s.expr)), {s.var}});
          out.det_vars.insert(s.var);
          break;
        }
        case lang::Stmt::Kind::ProbAssign:
          out.densities.emplace(s.var, s.dist->dist);
          out.prob_order.push_back(s.var);
          break;
        case lang::Stmt::Kind::Cond: {
          Formula b = to_formula(out, *s.expr);
          std::vector<Constraint> a = walk(s.then_body, logic::mk_and(guard, b));
          std::vector<Constraint> c = walk(s.else_body, logic::mk_and(guard, logic::mk_not(b)));
          if (a.empty() && c.empty()) break;
          Constraint merged;
          std::vector<Formula> fa, fc;
          for (auto& k : a) {
            fa.push_back(k.formula);
            merged.defines.insert(k.defines.begin(), k.defines.end());
          }
          for (auto& k : c) {
            fc.push_back(k.formula);
            merged.defines.insert(k.defines.begin(), k.defines.end());
          }
          merged.formula = logic::mk_ite(b, logic::mk_and(std::move(fa)), logic::mk_and(std::move(fc)));
          cs.push_back(std::move(merged));
          break;
        }
      }
    }
    return cs;
  }
};

std::optional<Formula> marker(const Pvc& pvc, const lang::ExprPtr& e) {
  if (!e) return std::nullopt;
  return to_formula(pvc, *e);
}

}  // namespace

Pvc generate_pvc(const lang::Program& source) {
  lang::Program p = lang::to_ssa(source);
  Generator g{p, {}};
  for (const auto& in : p.inputs) g.out.inputs.push_back(in);
  g.out.constraints = g.walk(p.body, logic::mk_true());
  g.out.outputs = p.outputs;
  g.out.final_names = p.final_names;
  g.out.sensitive = marker(g.out, p.markers.sensitive);
  g.out.qualified = marker(g.out, p.markers.qualified);
  g.out.target = marker(g.out, p.markers.target);
  return g.out;
}

Pvc rename_apart(const Pvc& p, const std::set<Var>& taken) {
  std::set<Var> used = taken;
  std::set<Var> mine = p.vars();
  used.insert(mine.begin(), mine.end());
  std::map<Var, Var> ren;
  for (const auto& v : mine) {
    if (!taken.count(v)) continue;
    Var fresh = v + "^i";
    while (used.count(fresh)) fresh += "'";
    used.insert(fresh);
    ren[v] = fresh;
  }
  if (ren.empty()) return p;
  auto r = [&](const Var& v) {
    auto it = ren.find(v);
    return it == ren.end() ? v : it->second;
  };
  Pvc out;
  for (const auto& c : p.constraints) {
    Constraint k{logic::rename(c.formula, ren), {}};
    for (const auto& d : c.defines) k.defines.insert(r(d));
    out.constraints.push_back(std::move(k));
  }
  for (const auto& [v, d] : p.densities) out.densities.emplace(r(v), d);
  for (const auto& v : p.prob_order) out.prob_order.push_back(r(v));
  for (const auto& v : p.det_vars) out.det_vars.insert(r(v));
  for (const auto& [v, f] : p.bool_defs) out.bool_defs.emplace(r(v), logic::rename(f, ren));
  for (const auto& v : p.inputs) out.inputs.push_back(r(v));
  for (const auto& v : p.outputs) out.outputs.push_back(r(v));
  for (const auto& [s, v] : p.final_names) out.final_names.emplace(s, r(v));
  for (auto [dst, src] : {std::pair{&out.sensitive, &p.sensitive}, std::pair{&out.qualified, &p.qualified},
                          std::pair{&out.target, &p.target}}) {
    if (*src) *dst = logic::rename(**src, ren);
  }
  return out;
}

Pvc compose(const Pvc& pre, const Pvc& dec, const std::vector<Var>& pre_outputs, const std::vector<Var>& dec_inputs) {
  if (pre_outputs.size() != dec_inputs.size()) {
    throw std::invalid_argument("cannot compose: " + std::to_string(pre_outputs.size()) + " outputs for " +
                                std::to_string(dec_inputs.size()) + " inputs");
  }
  std::set<Var> a = pre.vars();
  for (const auto& v : dec.vars()) {
    if (a.count(v)) throw std::invalid_argument("cannot compose: variable '" + v + "' occurs in both programs");
  }
  Pvc out = pre;
  out.constraints.insert(out.constraints.end(), dec.constraints.begin(), dec.constraints.end());
  for (const auto& [v, d] : dec.densities) out.densities.emplace(v, d);
  out.prob_order.insert(out.prob_order.end(), dec.prob_order.begin(), dec.prob_order.end());
  out.det_vars.insert(dec.det_vars.begin(), dec.det_vars.end());
  for (std::size_t i = 0; i < dec_inputs.size(); ++i) {
    auto b = pre.bool_defs.find(pre_outputs[i]);
    if (b != pre.bool_defs.end()) {
      out.bool_defs[dec_inputs[i]] = b->second;
      continue;
    }
    out.constraints.push_back(
        {logic::eq(logic::LinearTerm::var(dec_inputs[i]), logic::LinearTerm::var(pre_outputs[i])), {dec_inputs[i]}});
    out.det_vars.insert(dec_inputs[i]);
  }
  // Definitions in dec referring to its Boolean inputs are resolved against pre.
  for (const auto& [v, f] : dec.bool_defs) out.bool_defs[v] = f;
  out.inputs.clear();
  out.outputs = dec.outputs;
  out.final_names = dec.final_names;
  if (dec.target) out.target = dec.target;
  if (dec.sensitive) out.sensitive = dec.sensitive;
  if (dec.qualified) out.qualified = dec.qualified;
  return out;
}

Pvc compose_file(const lang::SourceFile& f) {
  Pvc pre = generate_pvc(f.pop);
  if (!f.dec) return pre;
  Pvc dec = rename_apart(generate_pvc(*f.dec), pre.vars());
  lang::Program pop_ssa = lang::to_ssa(f.pop);
  bool positional = f.pop.explicit_outputs && f.dec->declared_inputs;
  std::vector<Var> outs;
  for (std::size_t i = 0; i < f.dec->inputs.size(); ++i) {
    Var source = positional ? (i < f.pop.outputs.size() ? f.pop.outputs[i] : Var()) : f.dec->inputs[i];
    if (source.empty()) {
      throw std::invalid_argument("cannot compose: decision program takes " + std::to_string(f.dec->inputs.size()) +
                                  " inputs but the population model returns " +
                                  std::to_string(f.pop.outputs.size()));
    }
    auto it = pop_ssa.final_names.find(source);
    if (it == pop_ssa.final_names.end()) throw std::invalid_argument("cannot compose: no population variable " + source);
    outs.push_back(it->second);
  }
  if (positional && f.pop.outputs.size() != f.dec->inputs.size()) {
    throw std::invalid_argument("cannot compose: arity mismatch between returned values and parameters");
  }
  Pvc out = compose(pre, dec, outs, dec.inputs);
  // Source names resolve to the decision program's versions first.
  for (const auto& [s, v] : pre.final_names) out.final_names.emplace(s, v);
  return out;
}

Formula final_state(const Pvc& pvc, const Formula& phi) {
  std::map<Var, Var> ren;
  for (const auto& v : logic::free_vars(phi)) {
    auto it = pvc.final_names.find(v);
    if (it != pvc.final_names.end() && it->second != v) ren[v] = it->second;
  }
  return ren.empty() ? phi : logic::rename(phi, ren);
}

Formula event_formula(const Pvc& pvc, const Formula& phi) {
  std::vector<Var> hidden(pvc.det_vars.begin(), pvc.det_vars.end());
  Formula body = logic::mk_and(pvc.phi(), phi);
  return hidden.empty() ? body : logic::mk_exists(hidden, body);
}

Formula Region::projected() const {
  Formula body = logic::mk_and(frame, cond);
  return hidden.empty() ? body : logic::mk_exists(hidden, body);
}

Region Region::negated() const { return Region{frame, hidden, logic::mk_not(cond), dims}; }

Region event_region(const Pvc& pvc, const Formula& phi, bool slice) {
  std::set<Var> needed = logic::free_vars(phi);
  std::vector<bool> keep(pvc.constraints.size(), !slice);
  if (slice) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t i = 0; i < pvc.constraints.size(); ++i) {
        if (keep[i]) continue;
        const auto& d = pvc.constraints[i].defines;
        if (std::none_of(d.begin(), d.end(), [&](const Var& v) { return needed.count(v) != 0; })) continue;
        keep[i] = true;
        changed = true;
        auto fv = logic::free_vars(pvc.constraints[i].formula);
        needed.insert(fv.begin(), fv.end());
      }
    }
  }
  Region r;
  std::vector<Formula> parts;
  std::set<Var> mentioned = logic::free_vars(phi);
  for (std::size_t i = 0; i < pvc.constraints.size(); ++i) {
    if (!keep[i]) continue;
    parts.push_back(pvc.constraints[i].formula);
    auto fv = logic::free_vars(pvc.constraints[i].formula);
    mentioned.insert(fv.begin(), fv.end());
  }
  r.frame = logic::mk_and(std::move(parts));
  r.cond = phi;
  for (const auto& v : pvc.det_vars) {
    if (mentioned.count(v)) r.hidden.push_back(v);
  }
  for (const auto& v : pvc.prob_order) {
    if (mentioned.count(v)) r.dims.push_back(v);
  }
  for (const auto& v : mentioned) {
    if (!pvc.det_vars.count(v) && !pvc.densities.count(v)) {
      throw std::invalid_argument("event mentions '" + v + "', which is neither computed nor sampled");
    }
  }
  return r;
}

std::string dump_smtlib(const Pvc& pvc) {
  std::ostringstream out;
  out << "; probabilistic variables and their densities\n";
  for (const auto& v : pvc.prob_order) {
    out << "; " << v << " ~ " << dist::describe(pvc.densities.at(v)) << "\n";
  }
  out << "(set-logic QF_LRA)\n";
  std::set<Var> decl(pvc.prob_order.begin(), pvc.prob_order.end());
  decl.insert(pvc.det_vars.begin(), pvc.det_vars.end());
  for (const auto& c : pvc.constraints) {
    auto fv = logic::free_vars(c.formula);
    decl.insert(fv.begin(), fv.end());
  }
  for (const auto& v : decl) out << "(declare-const " << logic::smt_symbol(v) << " Real)\n";
  for (const auto& c : pvc.constraints) out << "(assert " << logic::to_smtlib(c.formula) << ")\n";
  for (const auto& [name, f] : {std::pair{"sensitive", pvc.sensitive}, std::pair{"qualified", pvc.qualified},
                                std::pair{"target", pvc.target}}) {
    if (f) out << "; " << name << ": " << logic::to_smtlib(*f) << "\n";
  }
  for (const auto& [b, f] : pvc.bool_defs) out << "; " << b << " := " << logic::to_smtlib(f) << "\n";
  return out.str();
}

}  // namespace volfair::pvc
