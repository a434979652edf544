#pragma once

// Canonical text for the objects the tool reads and writes. Each printer
// pairs with a parser in parse.hpp and round-trips through it:
//   trees      rec X. cons(succ(zero), X)     comma style, rec for cycles
//   grammars   terminals:/start:/rules:       curried rule bodies
//   programs   terminals:/env:/defs:/goal:    \ exists /\ \/ = != true false
// Lambda and exists binders carry a ": sort" annotation only away from the
// individual sort; sorts print through Sort::str (i, o, right-assoc ->).

#include <map>
#include <set>
#include <string>
#include <vector>

#include "horseq/hochc.hpp"
#include "horseq/hors.hpp"
#include "horseq/trees.hpp"

namespace horseq {

namespace detail {

inline void tree_symbols(const Tree& t, std::set<std::string>& out) {
  // raw node scan, not occurring_symbols(): binder naming only needs the
  // names, and guarded trees legitimately mix _bot arities (guard vs cut)
  for (size_t n = 0; n < t.size(); ++n) out.insert(t.symbol(static_cast<int>(n)));
}

}  // namespace detail

// Cycles print as rec-bound references; shared acyclic subtrees are simply
// repeated. Binder names X, X1, X2, ... skip symbols occurring in the tree.
inline std::string print_tree(const Tree& t) {
  std::set<std::string> used;
  detail::tree_symbols(t, used);
  int next_name = 0;
  auto fresh = [&]() {
    for (;;) {
      std::string c = next_name ? "X" + std::to_string(next_name) : "X";
      ++next_name;
      if (!used.count(c)) return c;
    }
  };
  // nodes on the current spine get a binder lazily, on the first back-edge
  // into this particular visit; shared acyclic subtrees are just reprinted
  struct Open {
    std::string name;
    bool referenced = false;
  };
  std::map<int, Open> open;
  auto rec = [&](auto&& self, int n) -> std::string {
    if (t.is_bot(n)) return std::string(kBotSymbol);
    if (auto it = open.find(n); it != open.end()) {
      if (it->second.name.empty()) it->second.name = fresh();
      it->second.referenced = true;
      return it->second.name;
    }
    open[n] = Open{};
    std::string body = t.symbol(n);
    if (!t.kids(n).empty()) {
      body += "(";
      for (size_t i = 0; i < t.kids(n).size(); ++i) {
        if (i) body += ", ";
        body += self(self, t.kids(n)[i]);
      }
      body += ")";
    }
    Open o = open.at(n);
    open.erase(n);
    if (o.referenced) return "rec " + o.name + ". " + body;
    return body;
  };
  return rec(rec, t.root());
}

// Tree terms in goal syntax are curried: cons r1 r2, succ (succ x'), zero.
// Literal trees embed in brackets so both syntaxes can meet in one goal.
inline std::string print_tree_term(const TreeTerm& t, bool atomic = false) {
  switch (t.kind) {
    case TreeTerm::Kind::Var: return t.name;
    case TreeTerm::Kind::App: {
      if (t.args.empty()) return t.name;
      std::string s = t.name;
      for (const TreeTerm& a : t.args) s += " " + print_tree_term(a, true);
      return atomic ? "(" + s + ")" : s;
    }
    default: return "[" + print_tree(*t.tree) + "]";
  }
}

namespace detail {

// precedence: 0 binders, 1 \/, 2 /\, 3 = != true false, 4 application
inline std::string goal_str(const GoalPtr& g, int min_level) {
  auto wrap = [&](int level, std::string s) {
    return level < min_level ? "(" + std::move(s) + ")" : s;
  };
  switch (g->kind) {
    case GoalTerm::Kind::True: return wrap(3, "true");
    case GoalTerm::Kind::False: return wrap(3, "false");
    case GoalTerm::Kind::Eq:
      return wrap(3, print_tree_term(g->t1) + " = " + print_tree_term(g->t2));
    case GoalTerm::Kind::Diseq:
      return wrap(3, print_tree_term(g->t1) + " != " + print_tree_term(g->t2));
    case GoalTerm::Kind::Var: return g->name;
    case GoalTerm::Kind::And:
      return wrap(2, goal_str(g->a, 2) + " /\\ " + goal_str(g->b, 3));
    case GoalTerm::Kind::Or:
      return wrap(1, goal_str(g->a, 1) + " \\/ " + goal_str(g->b, 2));
    case GoalTerm::Kind::Exists: {
      std::string b = "exists " + g->name;
      if (!g->binder_sort.is_iota()) b += ": " + g->binder_sort.str();
      return wrap(0, b + ". " + goal_str(g->a, 0));
    }
    case GoalTerm::Kind::Lambda: {
      std::string b = "\\" + g->name;
      if (!g->binder_sort.is_iota()) b += ": " + g->binder_sort.str();
      return wrap(0, b + ". " + goal_str(g->a, 0));
    }
    case GoalTerm::Kind::AppRel:
      return wrap(4, goal_str(g->a, 4) + " " + goal_str(g->b, 5));
    default:  // AppInd
      return wrap(4, goal_str(g->a, 4) + " " + print_tree_term(g->t1, true));
  }
}

inline std::string app_term_str(const AppTerm& t, bool atomic) {
  if (t.args.empty()) return t.head;
  std::string s = t.head;
  for (const AppTerm& a : t.args) s += " " + app_term_str(a, true);
  return atomic ? "(" + s + ")" : s;
}

inline std::string terminals_block(const RankedAlphabet& a) {
  std::string out = "terminals:\n";
  for (const auto& [name, arity] : a.symbols)
    out += "  " + name + ": " + std::to_string(arity) + "\n";
  if (a.has_bot) out += std::string("  ") + kBotSymbol + ": 0\n";
  return out;
}

}  // namespace detail

inline std::string print_goal(const GoalPtr& g) { return detail::goal_str(g, 0); }

inline std::string print_hors(const Hors& h) {
  std::string out = detail::terminals_block(h.alphabet);
  out += "\nstart: " + h.start + "\n\nrules:\n";
  auto rule_line = [&](const std::string& name) {
    const Rule& r = h.rules.at(name);
    std::string s = "  " + name;
    for (const std::string& p : r.params) s += " " + p;
    s += " = " + detail::app_term_str(r.body, false) + "\n";
    return s;
  };
  out += rule_line(h.start);
  for (const auto& [name, r] : h.rules)
    if (name != h.start) out += rule_line(name);
  return out;
}

inline std::string print_program(const Program& p, const GoalPtr& goal = nullptr) {
  std::string out = detail::terminals_block(p.alphabet);
  out += "\nenv:\n";
  for (const auto& [name, sort] : p.env)
    out += "  " + name + ": " + sort.str() + "\n";
  out += "\ndefs:\n";
  for (const auto& [name, def] : p.defs)
    out += "  " + name + " = " + print_goal(def) + "\n";
  if (goal) out += "\ngoal:\n  " + print_goal(goal) + "\n";
  return out;
}

}  // namespace horseq
