#pragma once

// Goal terms of the constrained-clause logic, their sorting discipline, and
// programs (one definition per relational variable). Goal terms are
// immutable and shared; all operations are pure.

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "horseq/sorts.hpp"
#include "horseq/trees.hpp"

namespace horseq {

struct GoalTerm;
using GoalPtr = std::shared_ptr<const GoalTerm>;

struct GoalTerm {
  enum class Kind {
    True,    // constraint literal
    False,   // constraint literal
    Eq,      // t1 = t2 between first-order terms
    Diseq,   // t1 != t2
    Var,     // relational variable
    And,
    Or,
    Exists,  // binder over iota or a relational sort
    Lambda,
    AppRel,  // goal applied to a relational goal
    AppInd   // goal applied to a first-order term
  };

  Kind kind = Kind::True;
  TreeTerm t1, t2;    // Eq/Diseq; AppInd argument lives in t1
  std::string name;   // Var name or binder name
  Sort binder_sort;   // Exists/Lambda
  GoalPtr a, b;       // And/Or: a,b; Exists/Lambda: body in a; AppRel: fun a, arg b; AppInd: fun a

  static GoalPtr gtrue() { return make(Kind::True); }
  static GoalPtr gfalse() { return make(Kind::False); }
  static GoalPtr eq(TreeTerm l, TreeTerm r) {
    auto g = make(Kind::Eq);
    g->t1 = std::move(l);
    g->t2 = std::move(r);
    return g;
  }
  static GoalPtr diseq(TreeTerm l, TreeTerm r) {
    auto g = make(Kind::Diseq);
    g->t1 = std::move(l);
    g->t2 = std::move(r);
    return g;
  }
  static GoalPtr var(std::string n) {
    auto g = make(Kind::Var);
    g->name = std::move(n);
    return g;
  }
  static GoalPtr conj(GoalPtr l, GoalPtr r) {
    auto g = make(Kind::And);
    g->a = std::move(l);
    g->b = std::move(r);
    return g;
  }
  static GoalPtr disj(GoalPtr l, GoalPtr r) {
    auto g = make(Kind::Or);
    g->a = std::move(l);
    g->b = std::move(r);
    return g;
  }
  static GoalPtr exists(std::string n, Sort s, GoalPtr body) {
    auto g = make(Kind::Exists);
    g->name = std::move(n);
    g->binder_sort = std::move(s);
    g->a = std::move(body);
    return g;
  }
  static GoalPtr lambda(std::string n, Sort s, GoalPtr body) {
    auto g = make(Kind::Lambda);
    g->name = std::move(n);
    g->binder_sort = std::move(s);
    g->a = std::move(body);
    return g;
  }
  static GoalPtr app_rel(GoalPtr fun, GoalPtr arg) {
    auto g = make(Kind::AppRel);
    g->a = std::move(fun);
    g->b = std::move(arg);
    return g;
  }
  static GoalPtr app_ind(GoalPtr fun, TreeTerm arg) {
    auto g = make(Kind::AppInd);
    g->a = std::move(fun);
    g->t1 = std::move(arg);
    return g;
  }

 private:
  static std::shared_ptr<GoalTerm> make(Kind k) {
    auto g = std::make_shared<GoalTerm>();
    g->kind = k;
    return g;
  }
};

using SortEnv = std::map<std::string, Sort>;

struct Program {
  RankedAlphabet alphabet;
  SortEnv env;                       // relational variables and their sorts
  std::map<std::string, GoalPtr> defs;
  bool from_encoder = false;         // enables definitive refutations
};

// First-order terms: variables of the individual sort from the environment,
// alphabet symbols at their arity, literal trees over the alphabet plus
// bottom (carrier elements are ordinary trees).
inline void sort_check_tree_term(const SortEnv& env, const RankedAlphabet& alpha,
                                 const TreeTerm& t) {
  switch (t.kind) {
    case TreeTerm::Kind::Var: {
      auto it = env.find(t.name);
      if (it == env.end())
        throw SortError("unbound first-order variable " + t.name);
      if (!it->second.is_iota())
        throw SortError("variable " + t.name +
                        " used as a first-order term but has sort " +
                        it->second.str());
      return;
    }
    case TreeTerm::Kind::App: {
      if (!alpha.contains(t.name, static_cast<int>(t.args.size())) &&
          !(t.name == kBotSymbol && t.args.empty()))
        throw SortError("symbol not in alphabet at this arity: " + t.name + "/" +
                        std::to_string(t.args.size()));
      for (const TreeTerm& a : t.args) sort_check_tree_term(env, alpha, a);
      return;
    }
    default: {
      for (auto& [s, ar] : t.tree->occurring_symbols())
        if (s != kBotSymbol && !alpha.contains(s, ar))
          throw SortError("tree literal uses symbol outside alphabet: " + s);
      return;
    }
  }
}

// The sorting rules. Bare variables are goal terms only at relational sort;
// conjunction and disjunction work at o; existentials range over iota or a
// relational sort; abstraction requires a relational body.
inline Sort sort_check_goal(const SortEnv& env, const RankedAlphabet& alpha,
                            const GoalPtr& g) {
  switch (g->kind) {
    case GoalTerm::Kind::True:
    case GoalTerm::Kind::False:
      return Sort::o();
    case GoalTerm::Kind::Eq:
    case GoalTerm::Kind::Diseq:
      sort_check_tree_term(env, alpha, g->t1);
      sort_check_tree_term(env, alpha, g->t2);
      return Sort::o();
    case GoalTerm::Kind::Var: {
      auto it = env.find(g->name);
      if (it == env.end()) throw SortError("unbound variable " + g->name);
      if (!it->second.is_relational())
        throw SortError("variable " + g->name + " has sort " +
                        it->second.str() + ", which is not relational");
      return it->second;
    }
    case GoalTerm::Kind::And:
    case GoalTerm::Kind::Or: {
      Sort l = sort_check_goal(env, alpha, g->a);
      Sort r = sort_check_goal(env, alpha, g->b);
      if (!l.is_o() || !r.is_o())
        throw SortError("conjunction/disjunction requires both sides at o");
      return Sort::o();
    }
    case GoalTerm::Kind::Exists: {
      if (!g->binder_sort.is_iota() && !g->binder_sort.is_relational())
        throw SortError("existential binder must have sort iota or relational");
      SortEnv inner = env;
      inner[g->name] = g->binder_sort;
      Sort body = sort_check_goal(inner, alpha, g->a);
      if (!body.is_o()) throw SortError("existential body must have sort o");
      return Sort::o();
    }
    case GoalTerm::Kind::Lambda: {
      if (!g->binder_sort.is_iota() && !g->binder_sort.is_relational())
        throw SortError("lambda binder must have sort iota or relational");
      SortEnv inner = env;
      inner[g->name] = g->binder_sort;
      Sort body = sort_check_goal(inner, alpha, g->a);
      if (!body.is_relational())
        throw SortError("lambda body must have relational sort");
      return Sort::arrow(g->binder_sort, body);
    }
    case GoalTerm::Kind::AppRel: {
      Sort f = sort_check_goal(env, alpha, g->a);
      if (!f.is_arrow() || !f.arg().is_relational())
        throw SortError("relational application to a non-relational position");
      Sort arg = sort_check_goal(env, alpha, g->b);
      if (arg != f.arg())
        throw SortError("argument sort mismatch: expected " + f.arg().str() +
                        ", got " + arg.str());
      return f.res();
    }
    default: {  // AppInd
      Sort f = sort_check_goal(env, alpha, g->a);
      if (!f.is_arrow() || !f.arg().is_iota())
        throw SortError("first-order application to a non-iota position");
      sort_check_tree_term(env, alpha, g->t1);
      return f.res();
    }
  }
}

inline void sort_check_program(const Program& p) {
  for (const auto& [name, sort] : p.env) {
    if (!sort.is_relational())
      throw SortError("declared variable " + name + " is not relational");
    if (!p.defs.count(name))
      throw SortError("declared variable " + name + " has no definition");
  }
  for (const auto& [name, def] : p.defs) {
    auto it = p.env.find(name);
    if (it == p.env.end())
      throw SortError("definition for undeclared variable " + name);
    Sort got = sort_check_goal(p.env, p.alphabet, def);
    if (got != it->second)
      throw SortError("definition of " + name + " has sort " + got.str() +
                      ", declared " + it->second.str());
  }
}

// Alpha-equivalence of goal terms (bound names ignored, free names literal).
inline bool alpha_equal(const GoalPtr& g1, const GoalPtr& g2,
                        std::map<std::string, std::string> l2r = {},
                        std::map<std::string, std::string> r2l = {}) {
  auto tt_eq = [&](const TreeTerm& a, const TreeTerm& b) {
    auto rec = [&](auto&& self, const TreeTerm& x, const TreeTerm& y) -> bool {
      if (x.kind != y.kind) return false;
      switch (x.kind) {
        case TreeTerm::Kind::Var: {
          auto it = l2r.find(x.name);
          auto jt = r2l.find(y.name);
          // bound occurrences must map to each other both ways, or the
          // shadowing binder on one side breaks the correspondence
          if (it != l2r.end() || jt != r2l.end())
            return it != l2r.end() && jt != r2l.end() &&
                   it->second == y.name && jt->second == x.name;
          return x.name == y.name;
        }
        case TreeTerm::Kind::App:
          if (x.name != y.name || x.args.size() != y.args.size()) return false;
          for (size_t i = 0; i < x.args.size(); ++i)
            if (!self(self, x.args[i], y.args[i])) return false;
          return true;
        default:
          return *x.tree == *y.tree;
      }
    };
    return rec(rec, a, b);
  };
  if (g1->kind != g2->kind) return false;
  switch (g1->kind) {
    case GoalTerm::Kind::True:
    case GoalTerm::Kind::False:
      return true;
    case GoalTerm::Kind::Eq:
    case GoalTerm::Kind::Diseq:
      return tt_eq(g1->t1, g2->t1) && tt_eq(g1->t2, g2->t2);
    case GoalTerm::Kind::Var: {
      auto it = l2r.find(g1->name);
      auto jt = r2l.find(g2->name);
      if (it != l2r.end() || jt != r2l.end())
        return it != l2r.end() && jt != r2l.end() &&
               it->second == g2->name && jt->second == g1->name;
      return g1->name == g2->name;
    }
    case GoalTerm::Kind::And:
    case GoalTerm::Kind::Or:
      return alpha_equal(g1->a, g2->a, l2r, r2l) &&
             alpha_equal(g1->b, g2->b, l2r, r2l);
    case GoalTerm::Kind::Exists:
    case GoalTerm::Kind::Lambda: {
      if (g1->binder_sort != g2->binder_sort) return false;
      auto l = l2r, r = r2l;
      l[g1->name] = g2->name;
      r[g2->name] = g1->name;
      return alpha_equal(g1->a, g2->a, std::move(l), std::move(r));
    }
    case GoalTerm::Kind::AppRel:
      return alpha_equal(g1->a, g2->a, l2r, r2l) &&
             alpha_equal(g1->b, g2->b, l2r, r2l);
    default:
      return alpha_equal(g1->a, g2->a, l2r, r2l) && tt_eq(g1->t1, g2->t1);
  }
}

}  // namespace horseq
