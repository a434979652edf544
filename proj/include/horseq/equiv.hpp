#pragma once

// Tree equality of two schemes, decided as far as honesty allows. Three
// routes, cheapest first:
//   1. structural isomorphism: the schemes (or their transformed copies)
//      coincide up to nonterminal renaming;
//   2. bounded prefix comparison on a widening depth schedule: a position
//      where both generated prefixes carry a symbol and the symbols differ
//      refutes equality, and complete bot-free prefixes that agree settle
//      it for finite trees;
//   3. a coinductive certificate on the merged encodings: a shared result
//      accepted by both relations via loop closure proves equality of the
//      (rational) trees, and a constructor-clash refutation disproves it.
// Anything else stays Unknown: equal non-rational trees have no finite
// witness in this fragment, and the result says so rather than guessing.

#include <chrono>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "horseq/botfree.hpp"
#include "horseq/coengine.hpp"
#include "horseq/encode.hpp"
#include "horseq/hochc.hpp"
#include "horseq/hors.hpp"
#include "horseq/sorts.hpp"
#include "horseq/trees.hpp"

namespace horseq {

// Nonterminal-renaming isomorphism. Parameters pair positionally, the
// nonterminal bijection grows from the start pair, terminals must match by
// name. Unreachable rules are ignored.
inline bool isomorphic(const Hors& a, const Hors& b) {
  Hors ca = a, cb = b;
  prune_unreachable(ca);
  prune_unreachable(cb);
  if (ca.rules.size() != cb.rules.size()) return false;
  std::map<std::string, std::string> m, minv;
  std::deque<std::pair<std::string, std::string>> work;
  auto pair_nts = [&](const std::string& x, const std::string& y) {
    auto it = m.find(x);
    auto jt = minv.find(y);
    if (it != m.end() || jt != minv.end())
      return it != m.end() && jt != minv.end() && it->second == y &&
             jt->second == x;
    m[x] = y;
    minv[y] = x;
    work.emplace_back(x, y);
    return true;
  };
  if (!pair_nts(ca.start, cb.start)) return false;
  while (!work.empty()) {
    auto [fa, fb] = work.front();
    work.pop_front();
    if (ca.nts.at(fa) != cb.nts.at(fb)) return false;
    const Rule& ra = ca.rules.at(fa);
    const Rule& rb = cb.rules.at(fb);
    if (ra.params.size() != rb.params.size()) return false;
    std::map<std::string, std::string> pm;
    std::set<std::string> bparams;
    for (size_t i = 0; i < ra.params.size(); ++i) {
      pm[ra.params[i]] = rb.params[i];
      bparams.insert(rb.params[i]);
    }
    auto rec = [&](auto&& self, const AppTerm& x, const AppTerm& y) -> bool {
      if (x.args.size() != y.args.size()) return false;
      if (auto it = pm.find(x.head); it != pm.end()) {
        if (y.head != it->second) return false;
      } else if (ca.nts.count(x.head)) {
        if (!cb.nts.count(y.head) || !pair_nts(x.head, y.head)) return false;
      } else {
        if (x.head != y.head || bparams.count(y.head) || cb.nts.count(y.head))
          return false;
      }
      for (size_t i = 0; i < x.args.size(); ++i)
        if (!self(self, x.args[i], y.args[i])) return false;
      return true;
    };
    if (!rec(rec, ra.body, rb.body)) return false;
  }
  return true;
}

// The merged query instance: both schemes made guard-explicit, renamed
// apart where nonterminals collide, encoded, and joined over one alphabet.
struct EquivInstance {
  Hors left, right;
  std::string left_start, right_start;
  Program program;
  GoalPtr eq_shared;  // R_left r /\ R_right r
  GoalPtr eq_apart;   // R_left r /\ R_right q /\ r != q
};

inline EquivInstance build_instances(const Hors& a, const Hors& b,
                                     bool transform = true,
                                     size_t max_variants = 512,
                                     size_t flag_cap = size_t{1} << 20) {
  EquivInstance inst;
  inst.left = transform ? botfree_transform(a, max_variants, flag_cap).result
                        : a;
  inst.right = transform ? botfree_transform(b, max_variants, flag_cap).result
                         : b;

  // rename colliding nonterminals on the right; everything else keeps its
  // name so small examples read exactly like their sources
  std::set<std::string> taken;
  for (const auto& [n, s] : inst.left.nts) taken.insert(n);
  for (const auto& [n, s] : inst.right.nts) taken.insert(n);
  for (const auto& [s, ar] : inst.left.alphabet.symbols) taken.insert(s);
  for (const auto& [s, ar] : inst.right.alphabet.symbols) taken.insert(s);
  std::map<std::string, std::string> ren;
  for (const auto& [n, s] : inst.right.nts) {
    if (!inst.left.nts.count(n)) continue;
    std::string cand = n + "_2";
    for (int i = 3; taken.count(cand); ++i)
      cand = n + "_" + std::to_string(i);
    taken.insert(cand);
    ren[n] = cand;
  }
  if (!ren.empty()) {
    Hors r;
    r.alphabet = inst.right.alphabet;
    auto nm = [&](const std::string& n) {
      auto it = ren.find(n);
      return it != ren.end() ? it->second : n;
    };
    for (const auto& [n, s] : inst.right.nts) r.nts[nm(n)] = s;
    for (const auto& [n, rl] : inst.right.rules) {
      std::set<std::string> params(rl.params.begin(), rl.params.end());
      auto rw = [&](auto&& self, const AppTerm& t) -> AppTerm {
        AppTerm o;
        o.head = params.count(t.head) ? t.head : nm(t.head);
        for (const AppTerm& x : t.args) o.args.push_back(self(self, x));
        return o;
      };
      r.rules[nm(n)] = Rule{rl.params, rw(rw, rl.body)};
    }
    r.start = nm(inst.right.start);
    inst.right = std::move(r);
  }
  inst.left_start = inst.left.start;
  inst.right_start = inst.right.start;

  Program pl = encode(inst.left);
  Program pr = encode(inst.right);
  inst.program = pl;
  for (const auto& [s, ar] : pr.alphabet.symbols)
    inst.program.alphabet.add(s, ar);
  inst.program.alphabet.has_bot =
      pl.alphabet.has_bot || pr.alphabet.has_bot;
  for (const auto& [k, v] : pr.env) inst.program.env[k] = v;
  for (const auto& [k, v] : pr.defs) inst.program.defs[k] = v;
  inst.program.from_encoder = true;

  GoalPtr lr = GoalTerm::app_ind(GoalTerm::var(rel_name(inst.left_start)),
                                 TreeTerm::var("r"));
  GoalPtr rr = GoalTerm::app_ind(GoalTerm::var(rel_name(inst.right_start)),
                                 TreeTerm::var("r"));
  GoalPtr rq = GoalTerm::app_ind(GoalTerm::var(rel_name(inst.right_start)),
                                 TreeTerm::var("q"));
  inst.eq_shared = GoalTerm::conj(lr, rr);
  inst.eq_apart = GoalTerm::conj(
      GoalTerm::conj(lr, rq),
      GoalTerm::diseq(TreeTerm::var("r"), TreeTerm::var("q")));
  return inst;
}

enum class EquivVerdict { Equivalent, Inequivalent, Unknown };

inline const char* verdict_str(EquivVerdict v) {
  switch (v) {
    case EquivVerdict::Equivalent: return "equivalent";
    case EquivVerdict::Inequivalent: return "inequivalent";
    default: return "unknown";
  }
}

struct EquivOptions {
  std::vector<int> depth_schedule = {2, 4, 8, 16, 32, 64};
  size_t prefix_fuel = 1'000'000;
  SolveOptions engine = {512, 1024};
  size_t max_variants = 512;
  size_t flag_cap = size_t{1} << 20;
};

struct EquivResult {
  EquivVerdict verdict = EquivVerdict::Unknown;
  std::string reason;
  int depth = 0;          // deciding depth, or deepest agreed depth if unknown
  std::vector<int> path;  // 1-based child indices to the differing position
  std::string label_left, label_right;  // symbols at that position
  bool certified = false; // backed by isomorphism, closure, or refutation
  SolveResult engine;     // populated when the certificate route ran
  long ms_prefix = 0, ms_engine = 0;
};

inline std::string path_str(const std::vector<int>& p) {
  if (p.empty()) return "root";
  std::string s;
  for (size_t i = 0; i < p.size(); ++i)
    s += (i ? "." : "") + std::to_string(p[i]);
  return s;
}

namespace detail {

struct PrefixDiff {
  std::vector<int> path;
  std::string left, right;
};

// first position where both prefixes carry a symbol and disagree; holes
// are silent because either side could still grow anything there
inline std::optional<PrefixDiff> first_diff(const Tree& x, const Tree& y) {
  std::optional<PrefixDiff> out;
  std::vector<int> path;
  auto label = [](const Tree& t, int n) {
    std::string s = t.symbol(n);
    return s + "/" + std::to_string(t.kids(n).size());
  };
  auto rec = [&](auto&& self, int nx, int ny) -> bool {
    if (x.is_bot(nx) || y.is_bot(ny)) return false;
    if (x.symbol(nx) != y.symbol(ny) ||
        x.kids(nx).size() != y.kids(ny).size()) {
      std::string ll = x.symbol(nx), rl = y.symbol(ny);
      if (ll == rl) {  // same name, different arity across the two alphabets
        ll = label(x, nx);
        rl = label(y, ny);
      }
      out = PrefixDiff{path, ll, rl};
      return true;
    }
    for (size_t i = 0; i < x.kids(nx).size(); ++i) {
      path.push_back(static_cast<int>(i) + 1);
      if (self(self, x.kids(nx)[i], y.kids(ny)[i])) return true;
      path.pop_back();
    }
    return false;
  };
  rec(rec, x.root(), y.root());
  return out;
}

inline bool contains_bot(const Tree& t) {
  for (size_t i = 0; i < t.size(); ++i)
    if (t.is_bot(static_cast<int>(i))) return true;
  return false;
}

}  // namespace detail

inline EquivResult decide_equiv(const Hors& a, const Hors& b,
                                EquivOptions opt = {}) {
  EquivResult res;
  sort_check_hors(a);
  sort_check_hors(b);

  if (isomorphic(a, b)) {
    res.verdict = EquivVerdict::Equivalent;
    res.reason = "schemes are identical up to renaming";
    res.certified = true;
    return res;
  }

  std::optional<EquivInstance> inst;
  std::string capacity_note;
  try {
    inst = build_instances(a, b, true, opt.max_variants, opt.flag_cap);
  } catch (const CapacityError& e) {
    capacity_note = e.what();
  }

  if (inst && isomorphic(inst->left, inst->right)) {
    res.verdict = EquivVerdict::Equivalent;
    res.reason = "transformed schemes are identical up to renaming";
    res.certified = true;
    return res;
  }

  using clock = std::chrono::steady_clock;
  auto ms_since = [](clock::time_point t0) {
    return static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                 clock::now() - t0)
                                 .count());
  };

  bool sat_a = false, sat_b = false;
  int deepest_agreed = 0;
  std::string fuel_note;
  auto t_prefix = clock::now();
  for (int d : opt.depth_schedule) {
    if (sat_a && sat_b) break;
    std::optional<Tree> ta, tb;
    if (!sat_a) {
      try {
        ta = generate_prefix(a, d, opt.prefix_fuel);
      } catch (const HorsError& e) {
        sat_a = true;
        fuel_note = "left generation gave out at depth " + std::to_string(d);
      }
    }
    if (!sat_b) {
      try {
        tb = generate_prefix(b, d, opt.prefix_fuel);
      } catch (const HorsError& e) {
        sat_b = true;
        fuel_note = "right generation gave out at depth " + std::to_string(d);
      }
    }
    if (!ta || !tb) continue;
    if (auto diff = detail::first_diff(*ta, *tb)) {
      res.verdict = EquivVerdict::Inequivalent;
      res.depth = d;
      res.path = diff->path;
      res.label_left = diff->left;
      res.label_right = diff->right;
      res.reason = "prefixes differ at depth " + std::to_string(d) +
                   " at position " + path_str(diff->path);
      res.certified = true;
      res.ms_prefix = ms_since(t_prefix);
      return res;
    }
    deepest_agreed = d;
    if (!detail::contains_bot(*ta) && !detail::contains_bot(*tb)) {
      res.verdict = EquivVerdict::Equivalent;
      res.depth = d;
      res.reason = "complete finite trees agree";
      res.certified = true;
      res.ms_prefix = ms_since(t_prefix);
      return res;
    }
  }
  res.ms_prefix = ms_since(t_prefix);

  if (inst) {
    auto t_engine = clock::now();
    SolveResult sr = solve_goal(inst->program, inst->eq_shared, opt.engine);
    res.ms_engine = ms_since(t_engine);
    res.engine = sr;
    if (sr.outcome == Outcome::Sat) {
      // cross-check the closed witness against a generated prefix of the
      // transformed schemes before trusting it
      Tree wit = var_leaves_to_bot(resolve_graph(sr.answer, TreeTerm::var("r")));
      bool valid = true;
      try {
        int dv = 4;
        Tree gl = generate_prefix(inst->left, dv, opt.prefix_fuel);
        valid = bisimilar(prefix(wit, dv), gl);
      } catch (const HorsError&) {
        // generation too heavy to validate; the closure itself stands
      }
      if (valid) {
        res.verdict = EquivVerdict::Equivalent;
        res.reason = "both encodings accept a shared rational tree";
        res.certified = true;
        return res;
      }
      res.reason = "closure produced a witness that fails prefix validation";
      return res;
    }
    if (sr.outcome == Outcome::Unsat) {
      res.verdict = EquivVerdict::Inequivalent;
      res.reason = "encodings admit no common tree: " + sr.note;
      res.certified = true;
      return res;
    }
  }

  res.depth = deepest_agreed;
  res.reason = "no difference up to depth " + std::to_string(deepest_agreed);
  if (!fuel_note.empty()) res.reason += "; " + fuel_note;
  if (!capacity_note.empty()) res.reason += "; " + capacity_note;
  if (inst) res.reason += "; no rational certificate within budget";
  return res;
}

}  // namespace horseq
