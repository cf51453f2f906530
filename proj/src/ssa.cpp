#include "volfair/lang.hpp"

namespace volfair::lang {

namespace {

class SsaBuilder {
 public:
  explicit SsaBuilder(const Program& src) : src_(src) {
    taken_ = src.all_vars;
  }

  Program run() {
    Program out;
    out.name = src_.name;
    out.ssa = true;
    out.explicit_outputs = src_.explicit_outputs;
    out.declared_inputs = src_.declared_inputs;
    out.warnings = src_.warnings;
    for (const auto& in : src_.inputs) {
      Var v = version(in);
      current_[in] = v;
      out.inputs.push_back(v);
      out.all_vars.insert(v);
      if (src_.bool_vars.count(in)) out.bool_vars.insert(v);
    }
    out.body = walk(src_.body, out);
    for (const auto& o : src_.outputs) out.outputs.push_back(current_.at(o));
    out.final_names = current_;
    out.markers.sensitive = src_.markers.sensitive ? rename(src_.markers.sensitive, current_) : nullptr;
    out.markers.qualified = src_.markers.qualified ? rename(src_.markers.qualified, current_) : nullptr;
    out.markers.target = src_.markers.target ? rename(src_.markers.target, current_) : nullptr;
    for (const auto& v : out.all_vars) {
      if (!out.prob_vars.count(v)) out.det_vars.insert(v);
    }
    return out;
  }

 private:
  Var version(const Var& source) {
    if (!used_.count(source)) {
      used_.insert(source);
      return source;
    }
    int& k = counter_[source];
    Var candidate;
    do {
      candidate = source + "_" + std::to_string(++k);
    } while (taken_.count(candidate) || used_.count(candidate));
    used_.insert(candidate);
    return candidate;
  }

  Stmt identity(const Var& target, const Var& from, SourceLoc loc) {
    Stmt s;
    s.kind = Stmt::Kind::Assign;
    s.var = target;
    s.expr = make_var(from, loc);
    s.loc = loc;
    return s;
  }

  std::vector<Stmt> walk(const std::vector<Stmt>& body, Program& out) {
    std::vector<Stmt> result;
    for (const auto& s : body) {
      switch (s.kind) {
        case Stmt::Kind::Assign:
        case Stmt::Kind::ProbAssign: {
          Stmt t = s;
          if (s.expr) t.expr = rename(s.expr, current_);
          t.var = version(s.var);
          current_[s.var] = t.var;
          out.all_vars.insert(t.var);
          if (s.kind == Stmt::Kind::ProbAssign) out.prob_vars.insert(t.var);
          if (src_.bool_vars.count(s.var)) out.bool_vars.insert(t.var);
          result.push_back(std::move(t));
          break;
        }
        case Stmt::Kind::Cond: {
          Stmt t = s;
          t.expr = rename(s.expr, current_);
          std::map<Var, Var> before = current_;
          t.then_body = walk(s.then_body, out);
          std::map<Var, Var> after_then = current_;
          current_ = before;
          t.else_body = walk(s.else_body, out);
          std::map<Var, Var> after_else = current_;
          current_ = merge(before, after_then, after_else, t, out);
          result.push_back(std::move(t));
          break;
        }
      }
    }
    return result;
  }

  std::map<Var, Var> merge(const std::map<Var, Var>& before, const std::map<Var, Var>& a,
                           const std::map<Var, Var>& b, Stmt& cond, Program& out) {
    std::map<Var, Var> merged = a;
    for (const auto& [src, vb] : b) {
      auto ia = a.find(src);
      if (ia == a.end()) {
        merged[src] = vb;  // defined on one path only; never read afterwards
        continue;
      }
      const Var& va = ia->second;
      if (va == vb) continue;
      auto ib = before.find(src);
      std::optional<Var> v0 = ib == before.end() ? std::nullopt : std::optional<Var>(ib->second);
      Var m;
      if (va != v0 && !out.prob_vars.count(va)) {
        m = va;
        cond.else_body.push_back(identity(m, vb, cond.loc));
      } else if (vb != v0 && !out.prob_vars.count(vb)) {
        m = vb;
        cond.then_body.push_back(identity(m, va, cond.loc));
      } else {
        m = version(src);
        out.all_vars.insert(m);
        cond.then_body.push_back(identity(m, va, cond.loc));
        cond.else_body.push_back(identity(m, vb, cond.loc));
      }
      if (src_.bool_vars.count(src)) out.bool_vars.insert(m);
      merged[src] = m;
    }
    return merged;
  }

  const Program& src_;
  std::set<Var> taken_;
  std::set<Var> used_;
  std::map<Var, int> counter_;
  std::map<Var, Var> current_;
};

}  // namespace

Program to_ssa(const Program& p) {
  if (p.ssa) return p;
  return SsaBuilder(p).run();
}

}  // namespace volfair::lang
