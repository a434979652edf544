#pragma once

// Denotational side at desk scale: finite structures for the individual
// sort, monotone function spaces as explicit tables, clause-by-clause goal
// evaluation, and both fixpoints of the one-step consequence operator.

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "horseq/hochc.hpp"
#include "horseq/sorts.hpp"
#include "horseq/trees.hpp"

namespace horseq {

struct EvalError : std::runtime_error {
  explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

// A finite interpretation of the individual sort: carrier elements are
// canonical trees treated as opaque individuals, and every alphabet symbol
// gets a total function table (flat index, first argument least significant).
struct FiniteStructure {
  RankedAlphabet alphabet;
  std::vector<Tree> carrier;
  std::map<std::string, std::vector<size_t>> tables;

  void validate() const {
    if (carrier.empty()) throw EvalError("carrier must be nonempty");
    for (size_t i = 0; i < carrier.size(); ++i)
      for (size_t j = i + 1; j < carrier.size(); ++j)
        if (carrier[i] == carrier[j])
          throw EvalError("carrier elements must be distinct");
    size_t n = carrier.size();
    for (const auto& [sym, arity] : alphabet.symbols) {
      auto it = tables.find(sym);
      if (it == tables.end())
        throw EvalError("no function table for symbol " + sym);
      size_t want = 1;
      for (int i = 0; i < arity; ++i) want *= n;
      if (it->second.size() != want)
        throw EvalError("function table for " + sym + " is not total");
      for (size_t e : it->second)
        if (e >= n) throw EvalError("function table for " + sym +
                                    " leaves the carrier");
    }
  }

  size_t elem_of(const Tree& t) const {
    for (size_t i = 0; i < carrier.size(); ++i)
      if (bisimilar(carrier[i], t)) return i;
    throw EvalError("tree literal is not a carrier element");
  }

  size_t apply_symbol(const std::string& sym,
                      const std::vector<size_t>& args) const {
    auto it = tables.find(sym);
    if (it == tables.end()) throw EvalError("no function table for " + sym);
    size_t n = carrier.size(), idx = 0, mul = 1;
    for (size_t a : args) {
      idx += a * mul;
      mul *= n;
    }
    return it->second.at(idx);
  }
};

// Finite monotone domain for one sort. The individual sort is the discrete
// carrier, o is the two-point lattice, arrows are the monotone function
// space enumerated as explicit tables.
struct Dom {
  Sort sort;
  size_t size = 0;
  const Dom* arg = nullptr;
  const Dom* res = nullptr;
  std::vector<std::vector<size_t>> tables;           // arrow elements
  std::map<std::vector<size_t>, size_t> table_index;  // table -> element id

  bool leq(size_t x, size_t y) const {
    if (sort.is_iota()) return x == y;
    if (sort.is_o()) return x <= y;
    const auto& tx = tables[x];
    const auto& ty = tables[y];
    for (size_t i = 0; i < tx.size(); ++i)
      if (!res->leq(tx[i], ty[i])) return false;
    return true;
  }
  size_t apply(size_t f, size_t x) const { return tables[f][x]; }
  size_t top() const {
    if (sort.is_o()) return 1;
    if (sort.is_iota()) throw EvalError("the individual domain has no top");
    return table_index.at(std::vector<size_t>(arg->size, res->top()));
  }
  size_t bot() const {
    if (sort.is_o()) return 0;
    if (sort.is_iota()) throw EvalError("the individual domain has no bottom");
    return table_index.at(std::vector<size_t>(arg->size, res->bot()));
  }
};

// Lazily materialized domains for a fixed carrier size.
// Capacity guard: order at most 2, carrier at most 3 for arrow sorts, and a
// hard cap on enumerated elements; beyond that the demand is rejected.
class Domains {
 public:
  explicit Domains(size_t carrier_size, size_t max_elems = 200000)
      : n_(carrier_size), cap_(max_elems) {}

  const Dom& get(const Sort& s) {
    auto it = cache_.find(s);
    if (it != cache_.end()) return *it->second;
    auto d = std::make_unique<Dom>();
    d->sort = s;
    if (s.is_iota()) {
      d->size = n_;
    } else if (s.is_o()) {
      d->size = 2;
    } else {
      if (s.order() > 2)
        throw CapacityError("function tables materialized only up to order 2, got " +
                            s.str());
      if (n_ > 3)
        throw CapacityError("function tables materialized only for carriers of size <= 3");
      const Dom& da = get(s.arg());
      const Dom& dr = get(s.res());
      d->arg = &da;
      d->res = &dr;
      enumerate_monotone(da, dr, *d);
      d->size = d->tables.size();
    }
    auto [pos, _] = cache_.emplace(s, std::move(d));
    return *pos->second;
  }

  size_t carrier_size() const { return n_; }

 private:
  void enumerate_monotone(const Dom& da, const Dom& dr, Dom& out) {
    std::vector<size_t> t(da.size, 0);
    // Backtracking over argument positions; prune on violated pairs early.
    auto rec = [&](auto&& self, size_t i) -> void {
      if (i == da.size) {
        if (out.tables.size() >= cap_)
          throw CapacityError("monotone function space exceeds capacity for " +
                              out.sort.str());
        out.table_index.emplace(t, out.tables.size());
        out.tables.push_back(t);
        return;
      }
      for (size_t v = 0; v < dr.size; ++v) {
        t[i] = v;
        bool ok = true;
        for (size_t j = 0; j < i && ok; ++j) {
          if (da.leq(j, i) && !dr.leq(t[j], v)) ok = false;
          if (da.leq(i, j) && !dr.leq(v, t[j])) ok = false;
        }
        if (ok) self(self, i + 1);
      }
    };
    rec(rec, 0);
  }

  size_t n_, cap_;
  std::map<Sort, std::unique_ptr<Dom>> cache_;
};

struct Value {
  Sort sort;
  size_t idx = 0;
};
using Valuation = std::map<std::string, Value>;

inline size_t eval_tree_term(const FiniteStructure& st, const Valuation& beta,
                             const TreeTerm& t) {
  switch (t.kind) {
    case TreeTerm::Kind::Var: {
      auto it = beta.find(t.name);
      if (it == beta.end()) throw EvalError("unbound variable " + t.name);
      if (!it->second.sort.is_iota())
        throw EvalError("variable " + t.name + " is not first-order");
      return it->second.idx;
    }
    case TreeTerm::Kind::App: {
      std::vector<size_t> args;
      args.reserve(t.args.size());
      for (const TreeTerm& a : t.args)
        args.push_back(eval_tree_term(st, beta, a));
      return st.apply_symbol(t.name, args);
    }
    default:
      return st.elem_of(*t.tree);
  }
}

// Literal clause-by-clause evaluation: constraints through the structure,
// conjunction as min, disjunction and existentials as max, abstraction as
// table formation, application as table lookup.
inline Value eval_goal(const FiniteStructure& st, Domains& doms,
                       const GoalPtr& g, const Valuation& beta) {
  switch (g->kind) {
    case GoalTerm::Kind::True:
      return {Sort::o(), 1};
    case GoalTerm::Kind::False:
      return {Sort::o(), 0};
    case GoalTerm::Kind::Eq: {
      size_t l = eval_tree_term(st, beta, g->t1);
      size_t r = eval_tree_term(st, beta, g->t2);
      return {Sort::o(), l == r ? size_t{1} : size_t{0}};
    }
    case GoalTerm::Kind::Diseq: {
      size_t l = eval_tree_term(st, beta, g->t1);
      size_t r = eval_tree_term(st, beta, g->t2);
      return {Sort::o(), l != r ? size_t{1} : size_t{0}};
    }
    case GoalTerm::Kind::Var: {
      auto it = beta.find(g->name);
      if (it == beta.end()) throw EvalError("unbound variable " + g->name);
      return it->second;
    }
    case GoalTerm::Kind::And: {
      Value l = eval_goal(st, doms, g->a, beta);
      Value r = eval_goal(st, doms, g->b, beta);
      return {Sort::o(), std::min(l.idx, r.idx)};
    }
    case GoalTerm::Kind::Or: {
      Value l = eval_goal(st, doms, g->a, beta);
      Value r = eval_goal(st, doms, g->b, beta);
      return {Sort::o(), std::max(l.idx, r.idx)};
    }
    case GoalTerm::Kind::Exists: {
      const Dom& d = doms.get(g->binder_sort);
      Valuation inner = beta;
      for (size_t v = 0; v < d.size; ++v) {
        inner[g->name] = {g->binder_sort, v};
        if (eval_goal(st, doms, g->a, inner).idx == 1) return {Sort::o(), 1};
      }
      return {Sort::o(), 0};
    }
    case GoalTerm::Kind::Lambda: {
      const Dom& d = doms.get(g->binder_sort);
      std::vector<size_t> table;
      table.reserve(d.size);
      Valuation inner = beta;
      Sort body_sort;
      for (size_t v = 0; v < d.size; ++v) {
        inner[g->name] = {g->binder_sort, v};
        Value bv = eval_goal(st, doms, g->a, inner);
        body_sort = bv.sort;
        table.push_back(bv.idx);
      }
      if (d.size == 0) throw EvalError("empty binder domain");
      Sort mine = Sort::arrow(g->binder_sort, body_sort);
      const Dom& dm = doms.get(mine);
      auto it = dm.table_index.find(table);
      if (it == dm.table_index.end())
        throw EvalError("abstraction produced a non-monotone table");
      return {mine, it->second};
    }
    case GoalTerm::Kind::AppRel: {
      Value f = eval_goal(st, doms, g->a, beta);
      Value x = eval_goal(st, doms, g->b, beta);
      const Dom& df = doms.get(f.sort);
      return {f.sort.res(), df.apply(f.idx, x.idx)};
    }
    default: {  // AppInd
      Value f = eval_goal(st, doms, g->a, beta);
      size_t x = eval_tree_term(st, beta, g->t1);
      const Dom& df = doms.get(f.sort);
      return {f.sort.res(), df.apply(f.idx, x)};
    }
  }
}

// One application of the consequence operator: re-evaluate every definition
// under the given valuation.
inline Valuation one_step(const Program& p, const FiniteStructure& st,
                          Domains& doms, const Valuation& beta) {
  Valuation out;
  for (const auto& [name, def] : p.defs) {
    Value v = eval_goal(st, doms, def, beta);
    if (v.sort != p.env.at(name))
      throw EvalError("definition of " + name + " evaluated at wrong sort");
    out[name] = v;
  }
  return out;
}

inline bool valuation_equal(const Valuation& a, const Valuation& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    if (it == b.end() || it->second.idx != v.idx || it->second.sort != v.sort)
      return false;
  }
  return true;
}

inline bool valuation_leq(Domains& doms, const Valuation& a, const Valuation& b) {
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    if (it == b.end()) return false;
    if (!doms.get(v.sort).leq(v.idx, it->second.idx)) return false;
  }
  return true;
}

inline Valuation top_valuation(const Program& p, Domains& doms) {
  Valuation out;
  for (const auto& [name, sort] : p.env) out[name] = {sort, doms.get(sort).top()};
  return out;
}

inline Valuation bot_valuation(const Program& p, Domains& doms) {
  Valuation out;
  for (const auto& [name, sort] : p.env) out[name] = {sort, doms.get(sort).bot()};
  return out;
}

// Kleene iteration in a finite lattice; terminates by finiteness.
inline Valuation gfp(const Program& p, const FiniteStructure& st, Domains& doms) {
  Valuation cur = top_valuation(p, doms);
  for (;;) {
    Valuation next = one_step(p, st, doms, cur);
    if (valuation_equal(cur, next)) return cur;
    cur = std::move(next);
  }
}

inline Valuation lfp(const Program& p, const FiniteStructure& st, Domains& doms) {
  Valuation cur = bot_valuation(p, doms);
  for (;;) {
    Valuation next = one_step(p, st, doms, cur);
    if (valuation_equal(cur, next)) return cur;
    cur = std::move(next);
  }
}

// A closed goal holds coinductively iff it evaluates to 1 at the greatest
// model.
inline bool solve_coinductive(const Program& p, const GoalPtr& goal,
                              const FiniteStructure& st) {
  st.validate();
  sort_check_program(p);
  Sort s = sort_check_goal(p.env, p.alphabet, goal);
  if (!s.is_o()) throw SortError("goal must have sort o");
  Domains doms(st.carrier.size());
  Valuation g = gfp(p, st, doms);
  return eval_goal(st, doms, goal, g).idx == 1;
}

}  // namespace horseq
