#pragma once

// Encoding a deterministic scheme as definite clauses over equations between
// first-order terms. Each nonterminal F becomes a relational variable R_F
// that relates encoded arguments to a result variable: R_F a1 .. ak r holds
// exactly of the tree r produced by unfolding F on matching arguments.
//
// Shape of one clause, for rule F p1 .. pk = e:
//   R_F = \p1' .. pk' r. exists r1 .. rn. C1 /\ ... /\ Cm
// where the body translation clones every ground argument position into a
// fresh existential variable with a defining conjunct, and arrow-sorted
// arguments are passed as relational terms. Cleanup passes keep the result
// readable and canonical: clone equations x' = ri vanish by substitution
// when ri never reaches a predicate argument, lifted arguments that are a
// bare parameter collapse back to the parameter, existential prefixes sit
// at the top of the clause body, and the survivors are numbered r1, r2, ..
// in order of creation.

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "horseq/hochc.hpp"
#include "horseq/hors.hpp"
#include "horseq/sorts.hpp"
#include "horseq/trees.hpp"

namespace horseq {

inline std::string rel_name(const std::string& nonterminal) {
  return "R_" + nonterminal;
}

// Sort translation. A scheme sort s1 -> .. -> sk -> i becomes the relation
// sort over the translated arguments plus the result:
//   rel_sort(s) = arg(s1) -> .. -> arg(sk) -> i -> o
// and argument sorts translate as arg(i) = i, arg(arrow) = rel_sort(arrow).
inline Sort rel_sort(const Sort& s);

inline Sort rel_arg_sort(const Sort& s) {
  return s.is_iota() ? s : rel_sort(s);
}

inline Sort rel_sort(const Sort& s) {
  std::vector<Sort> as;
  for (const Sort& a : s.args()) as.push_back(rel_arg_sort(a));
  as.push_back(Sort::iota());
  return Sort::arrows(as, Sort::o());
}

namespace detail {

inline bool tt_mentions(const TreeTerm& t, const std::string& v) {
  if (t.kind == TreeTerm::Kind::Var) return t.name == v;
  if (t.kind == TreeTerm::Kind::App)
    for (const TreeTerm& a : t.args)
      if (tt_mentions(a, v)) return true;
  return false;
}

inline TreeTerm tt_subst(const TreeTerm& t, const std::string& v,
                         const TreeTerm& r) {
  if (t.kind == TreeTerm::Kind::Var) return t.name == v ? r : t;
  if (t.kind != TreeTerm::Kind::App) return t;
  std::vector<TreeTerm> as;
  as.reserve(t.args.size());
  for (const TreeTerm& a : t.args) as.push_back(tt_subst(a, v, r));
  return TreeTerm::app(t.name, std::move(as));
}

// Does v occur anywhere a substitution could not reach: as (part of) a
// predicate argument, or inside a lifted argument goal?
inline bool occurs_guarded(const GoalPtr& g, const std::string& v) {
  switch (g->kind) {
    case GoalTerm::Kind::Eq:
    case GoalTerm::Kind::Diseq:
    case GoalTerm::Kind::True:
    case GoalTerm::Kind::False:
    case GoalTerm::Kind::Var:
      return false;
    case GoalTerm::Kind::AppInd:
      return tt_mentions(g->t1, v) || occurs_guarded(g->a, v);
    case GoalTerm::Kind::AppRel: {
      // conservatively treat any mention inside the lifted argument as
      // guarded; by construction outer clones never appear there
      std::function<bool(const GoalPtr&)> any = [&](const GoalPtr& x) -> bool {
        switch (x->kind) {
          case GoalTerm::Kind::Eq:
          case GoalTerm::Kind::Diseq:
            return tt_mentions(x->t1, v) || tt_mentions(x->t2, v);
          case GoalTerm::Kind::Var:
            return x->name == v;
          case GoalTerm::Kind::AppInd:
            return tt_mentions(x->t1, v) || any(x->a);
          case GoalTerm::Kind::AppRel:
          case GoalTerm::Kind::And:
          case GoalTerm::Kind::Or:
            return any(x->a) || any(x->b);
          case GoalTerm::Kind::Exists:
          case GoalTerm::Kind::Lambda:
            return x->name != v && any(x->a);
          default:
            return false;
        }
      };
      return any(g->b) || occurs_guarded(g->a, v);
    }
    case GoalTerm::Kind::And:
    case GoalTerm::Kind::Or:
      return occurs_guarded(g->a, v) || occurs_guarded(g->b, v);
    case GoalTerm::Kind::Exists:
    case GoalTerm::Kind::Lambda:
      return g->name != v && occurs_guarded(g->a, v);
  }
  return false;
}

// Substitute a first-order variable by a term, over equation sides and
// predicate arguments alike. Binders in lifted goals shadow as usual.
inline GoalPtr goal_subst_tt(const GoalPtr& g, const std::string& v,
                             const TreeTerm& r) {
  switch (g->kind) {
    case GoalTerm::Kind::Eq:
      return GoalTerm::eq(tt_subst(g->t1, v, r), tt_subst(g->t2, v, r));
    case GoalTerm::Kind::Diseq:
      return GoalTerm::diseq(tt_subst(g->t1, v, r), tt_subst(g->t2, v, r));
    case GoalTerm::Kind::AppInd:
      return GoalTerm::app_ind(goal_subst_tt(g->a, v, r), tt_subst(g->t1, v, r));
    case GoalTerm::Kind::AppRel:
      return GoalTerm::app_rel(goal_subst_tt(g->a, v, r),
                               goal_subst_tt(g->b, v, r));
    case GoalTerm::Kind::And:
      return GoalTerm::conj(goal_subst_tt(g->a, v, r), goal_subst_tt(g->b, v, r));
    case GoalTerm::Kind::Or:
      return GoalTerm::disj(goal_subst_tt(g->a, v, r), goal_subst_tt(g->b, v, r));
    case GoalTerm::Kind::Exists:
      if (g->name == v) return g;
      return GoalTerm::exists(g->name, g->binder_sort, goal_subst_tt(g->a, v, r));
    case GoalTerm::Kind::Lambda:
      if (g->name == v) return g;
      return GoalTerm::lambda(g->name, g->binder_sort, goal_subst_tt(g->a, v, r));
    default:
      return g;
  }
}

class Encoder {
 public:
  explicit Encoder(const Hors& h) : h_(h) {}

  Program run() {
    sort_check_hors(h_);
    Program p;
    p.alphabet = h_.alphabet;
    p.from_encoder = true;
    for (const auto& [f, s] : h_.nts) p.env[rel_name(f)] = rel_sort(s);
    for (const auto& [f, r] : h_.rules) p.defs[rel_name(f)] = clause(f, r);
    return p;
  }

 private:
  struct Ctx {
    std::vector<std::string> exvars;  // creation order, temporary names
    std::vector<GoalPtr> conj;
    int next = 1;
    std::string fresh() {
      std::string n = "~" + std::to_string(next++);
      exvars.push_back(n);
      return n;
    }
  };

  const Hors& h_;
  std::map<std::string, Sort> params_;  // current clause, scheme sorts

  GoalPtr clause(const std::string& f, const Rule& r) {
    const Sort& sigma = h_.nts.at(f);
    std::vector<Sort> args = sigma.args();
    params_.clear();
    for (size_t i = 0; i < r.params.size(); ++i) params_[r.params[i]] = args[i];
    Ctx cx;
    ground(r.body, "r", cx, 0);
    GoalPtr out = GoalTerm::lambda("r", Sort::iota(), finish(cx));
    for (size_t i = r.params.size(); i-- > 0;)
      out = GoalTerm::lambda(r.params[i] + "'", rel_arg_sort(args[i]), out);
    return out;
  }

  // Clause translation of a ground-sorted scheme term: conjuncts pinning
  // res to the denoted tree.
  void ground(const AppTerm& t, const std::string& res, Ctx& cx, int depth) {
    if (auto pit = params_.find(t.head); pit != params_.end()) {
      if (pit->second.is_iota()) {
        cx.conj.push_back(
            GoalTerm::eq(TreeTerm::var(t.head + "'"), TreeTerm::var(res)));
        return;
      }
      pred(t, res, cx, depth, {});  // parameters shadow alphabet symbols
      return;
    }
    if (h_.alphabet.contains(t.head, static_cast<int>(t.args.size()))) {
      // constructor equation first, then one conjunct per cloned argument
      std::vector<TreeTerm> kids;
      std::vector<std::string> rs;
      for (size_t i = 0; i < t.args.size(); ++i) {
        rs.push_back(cx.fresh());
        kids.push_back(TreeTerm::var(rs.back()));
      }
      cx.conj.push_back(
          GoalTerm::eq(TreeTerm::app(t.head, std::move(kids)), TreeTerm::var(res)));
      for (size_t i = 0; i < t.args.size(); ++i) ground(t.args[i], rs[i], cx, depth);
      return;
    }
    pred(t, res, cx, depth, {});
  }

  // Predicate-call conjunct for a term with relational head, with optional
  // directly-passed trailing arguments (the binders of a lifted goal).
  void pred(const AppTerm& t, const std::string& res, Ctx& cx, int depth,
            const std::vector<std::pair<std::string, Sort>>& fillers) {
    Sort hs;
    GoalPtr g;
    if (auto pit = params_.find(t.head); pit != params_.end()) {
      hs = pit->second;
      g = GoalTerm::var(t.head + "'");
    } else if (auto nit = h_.nts.find(t.head); nit != h_.nts.end()) {
      hs = nit->second;
      g = GoalTerm::var(rel_name(t.head));
    } else {
      throw HorsError("unknown head in rule body: " + t.head);
    }
    std::vector<std::pair<AppTerm, std::string>> cloned;
    for (const AppTerm& a : t.args) {
      Sort as = hs.arg();
      hs = hs.res();
      if (as.is_iota()) {
        std::string rc = cx.fresh();
        cloned.emplace_back(a, rc);
        g = GoalTerm::app_ind(std::move(g), TreeTerm::var(rc));
      } else {
        g = GoalTerm::app_rel(std::move(g), lift(a, as, depth));
      }
    }
    for (const auto& [fn, fs] : fillers) {
      if (fs.is_iota())
        g = GoalTerm::app_ind(std::move(g), TreeTerm::var(fn));
      else
        g = GoalTerm::app_rel(std::move(g), GoalTerm::var(fn));
    }
    g = GoalTerm::app_ind(std::move(g), TreeTerm::var(res));
    cx.conj.push_back(std::move(g));
    for (const auto& [a, rc] : cloned) ground(a, rc, cx, depth);
  }

  // Relational translation of an arrow-sorted argument. A bare parameter
  // passes through; anything else is wrapped in binders for the missing
  // arguments and a result, which are handed on directly.
  GoalPtr lift(const AppTerm& t, const Sort& tau, int depth) {
    if (params_.count(t.head) && t.args.empty()) return GoalTerm::var(t.head + "'");
    std::vector<Sort> taus = tau.args();
    size_t m = taus.size();
    std::vector<std::pair<std::string, Sort>> fillers;
    for (size_t j = 0; j < m; ++j)
      fillers.emplace_back(m == 1 ? "y" : "y" + std::to_string(j + 1),
                           rel_arg_sort(taus[j]));
    std::string res = "r" + std::string(depth + 1, '\'');
    Ctx inner;
    if (!params_.count(t.head) && h_.alphabet.symbols.count(t.head)) {
      // partially applied constructor: clone the given arguments, binders
      // fill the rest of the equation left-hand side
      std::vector<TreeTerm> kids;
      std::vector<std::pair<AppTerm, std::string>> cloned;
      for (const AppTerm& a : t.args) {
        std::string rc = inner.fresh();
        cloned.emplace_back(a, rc);
        kids.push_back(TreeTerm::var(rc));
      }
      for (const auto& [fn, fs] : fillers) kids.push_back(TreeTerm::var(fn));
      inner.conj.push_back(
          GoalTerm::eq(TreeTerm::app(t.head, std::move(kids)), TreeTerm::var(res)));
      for (const auto& [a, rc] : cloned) ground(a, rc, inner, depth + 1);
    } else {
      pred(t, res, inner, depth + 1, fillers);
    }
    GoalPtr body = finish(inner);
    body = GoalTerm::lambda(res, Sort::iota(), std::move(body));
    for (size_t j = m; j-- > 0;)
      body = GoalTerm::lambda(fillers[j].first, fillers[j].second, std::move(body));
    return body;
  }

  GoalPtr finish(Ctx& cx) {
    // substitute away clone equations whose clone stays inside equations
    bool changed = true;
    while (changed) {
      changed = false;
      for (size_t i = 0; i < cx.conj.size(); ++i) {
        const GoalPtr& g = cx.conj[i];
        if (g->kind != GoalTerm::Kind::Eq) continue;
        if (g->t1.kind != TreeTerm::Kind::Var ||
            g->t2.kind != TreeTerm::Kind::Var)
          continue;
        auto w = std::find(cx.exvars.begin(), cx.exvars.end(), g->t2.name);
        if (w == cx.exvars.end()) continue;
        bool guarded = false;
        for (size_t j = 0; j < cx.conj.size() && !guarded; ++j)
          if (j != i) guarded = occurs_guarded(cx.conj[j], g->t2.name);
        if (guarded) continue;
        TreeTerm repl = g->t1;
        std::string v = g->t2.name;
        cx.conj.erase(cx.conj.begin() + static_cast<long>(i));
        for (GoalPtr& c : cx.conj) c = goal_subst_tt(c, v, repl);
        cx.exvars.erase(w);
        changed = true;
        break;
      }
    }
    // survivors get canonical names in creation order
    for (size_t i = 0; i < cx.exvars.size(); ++i) {
      std::string nn = "r" + std::to_string(i + 1);
      for (GoalPtr& c : cx.conj)
        c = goal_subst_tt(c, cx.exvars[i], TreeTerm::var(nn));
      cx.exvars[i] = nn;
    }
    GoalPtr body = cx.conj.front();
    for (size_t i = 1; i < cx.conj.size(); ++i)
      body = GoalTerm::conj(std::move(body), cx.conj[i]);
    for (size_t i = cx.exvars.size(); i-- > 0;)
      body = GoalTerm::exists(cx.exvars[i], Sort::iota(), std::move(body));
    return body;
  }
};

}  // namespace detail

inline Program encode(const Hors& h) { return detail::Encoder(h).run(); }

}  // namespace horseq
