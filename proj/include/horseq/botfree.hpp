#pragma once

// Rewriting a deterministic scheme so that its tree has no bottom subtrees.
// Three stages. Stage 1 guards every rule whose body is not headed by a
// terminal with a fresh unary terminal b, which makes every unfolding step
// emit a symbol. Stage 2 runs the divergence-flag analysis with b treated
// as transparent and splits each nonterminal into variants indexed by the
// abstract values of its arguments; at a guard site b e the guard stays b
// exactly when the abstract value says e never reaches a constructor, and
// turns into a step marker s otherwise. Stage 3 replaces s by an identity
// nonterminal, so the surviving b's are precisely the silently divergent
// positions and everything else is genuine output.
//
// The driver botfree_transform additionally cleans the final grammar:
// identity applications are inlined, unreachable rules are pruned, and
// guard terminals that no rule uses any more are dropped, so a scheme
// that was bottom-free to begin with comes back unchanged.

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "horseq/hors.hpp"
#include "horseq/sorts.hpp"
#include "horseq/trees.hpp"

namespace horseq {

inline bool app_uses(const AppTerm& t, const std::string& name) {
  if (t.head == name) return true;
  for (const AppTerm& a : t.args)
    if (app_uses(a, name)) return true;
  return false;
}

inline bool grammar_uses(const Hors& h, const std::string& name) {
  for (const auto& [f, r] : h.rules)
    if (app_uses(r.body, name)) return true;
  return false;
}

// Smallest decorated name not used as a terminal, nonterminal or parameter.
inline std::string fresh_global(const Hors& h, const std::string& base) {
  std::set<std::string> used;
  for (const auto& [n, a] : h.alphabet.symbols) used.insert(n);
  for (const auto& [n, s] : h.nts) used.insert(n);
  for (const auto& [f, r] : h.rules)
    for (const std::string& p : r.params) used.insert(p);
  if (!used.count(base)) return base;
  for (int i = 1;; ++i) {
    std::string cand = base + std::to_string(i);
    if (!used.count(cand)) return cand;
  }
}

// Drop every nonterminal not reachable from the start symbol.
inline void prune_unreachable(Hors& h) {
  std::set<std::string> live;
  std::vector<std::string> work{h.start};
  live.insert(h.start);
  auto visit = [&](const AppTerm& t, auto&& self) -> void {
    if (h.nts.count(t.head) && !live.count(t.head)) {
      live.insert(t.head);
      work.push_back(t.head);
    }
    for (const AppTerm& a : t.args) self(a, self);
  };
  while (!work.empty()) {
    std::string f = work.back();
    work.pop_back();
    auto it = h.rules.find(f);
    if (it != h.rules.end()) visit(it->second.body, visit);
  }
  for (auto it = h.nts.begin(); it != h.nts.end();)
    it = live.count(it->first) ? std::next(it) : h.nts.erase(it);
  for (auto it = h.rules.begin(); it != h.rules.end();)
    it = live.count(it->first) ? std::next(it) : h.rules.erase(it);
}

struct Stage1Out {
  Hors grammar;
  std::string b_name;
};

// Guard every rule body that is not terminal-headed. The guarded grammar is
// productive: each unfolding step exposes a symbol, with b standing in for
// steps the original scheme spent without output.
inline Stage1Out stage1_guard(const Hors& h) {
  sort_check_hors(h);
  if (h.alphabet.has_bot)
    throw HorsError("guard stage expects a scheme without explicit " +
                    std::string(kBotSymbol) + " leaves");
  Stage1Out out{h, fresh_global(h, kBotSymbol)};
  out.grammar.alphabet.add(out.b_name, 1);
  for (auto& [f, r] : out.grammar.rules) {
    if (!h.alphabet.symbols.count(r.body.head))
      r.body = AppTerm{out.b_name, {r.body}};
  }
  return out;
}

struct Stage2Out {
  Hors grammar;
  std::string b_name;
  std::string s_name;
};

namespace detail {

// Specialization of a guarded grammar by abstract argument values. Each
// reachable pair (nonterminal, value tuple) becomes a variant; a parameter
// of arrow sort is split into one copy per abstract tuple its occurrences
// may consume, so call sites can hand over the matching specialization of
// the actual argument.
class Specializer {
 public:
  Specializer(const Hors& g, std::string b, size_t max_variants, size_t flag_cap)
      : h_(g), b_(std::move(b)), fa_(g, {b_}, flag_cap), max_(max_variants) {}

  Stage2Out run() {
    note(h_.start, {});
    while (!work_.empty()) {
      Key k = work_.back();
      work_.pop_back();
      build_rule(k);  // discovery: output discarded, reachable keys recorded
    }
    assign_names();
    Stage2Out out;
    out.b_name = b_;
    out.s_name = s_;
    out.grammar.alphabet = h_.alphabet;
    out.grammar.alphabet.add(s_, 1);
    out.grammar.start = names_.at({h_.start, {}});
    discovering_ = false;
    for (const auto& [key, name] : names_) {
      Rule r = build_rule(key);
      out.grammar.nts[name] = spec_sort(h_.nts.at(key.first));
      out.grammar.rules[name] = std::move(r);
    }
    return out;
  }

 private:
  using Key = std::pair<std::string, std::vector<size_t>>;

  struct RuleCtx {
    std::map<std::string, std::pair<Sort, size_t>> env;  // original params
    std::map<std::string, std::string> ground_name;
    std::map<std::string, std::vector<std::string>> copy_name;
  };

  const Hors& h_;
  std::string b_, s_;
  FlagAnalysis fa_;
  size_t max_;
  std::set<Key> seen_;
  std::vector<Key> work_;
  std::map<Key, std::string> names_;
  std::map<Sort, std::vector<std::vector<size_t>>> tuples_;
  bool discovering_ = true;

  void note(const std::string& f, const std::vector<size_t>& vals) {
    Key k{f, vals};
    if (seen_.count(k)) return;
    if (seen_.size() >= max_)
      throw CapacityError("nonterminal specialization exceeds " +
                          std::to_string(max_) + " variants");
    seen_.insert(k);
    work_.push_back(k);
  }

  // All abstract argument tuples of an arrow sort, first argument slowest.
  const std::vector<std::vector<size_t>>& copy_tuples(const Sort& t) {
    auto it = tuples_.find(t);
    if (it != tuples_.end()) return it->second;
    std::vector<std::vector<size_t>> out{{}};
    for (const Sort& a : t.args()) {
      size_t n = fa_.space().size(a);
      std::vector<std::vector<size_t>> next;
      next.reserve(out.size() * n);
      for (const auto& pre : out)
        for (size_t v = 0; v < n; ++v) {
          next.push_back(pre);
          next.back().push_back(v);
        }
      out = std::move(next);
    }
    return tuples_.emplace(t, std::move(out)).first->second;
  }

  size_t tuple_index(const Sort& t, const std::vector<size_t>& vals) {
    size_t idx = 0, i = 0;
    for (const Sort& a : t.args()) idx = idx * fa_.space().size(a) + vals[i++];
    return idx;
  }

  // Sort of a specialized entity: ground arguments stay, each arrow
  // argument becomes one copy per abstract tuple it may consume.
  Sort spec_sort(const Sort& t) {
    if (t.is_iota()) return t;
    std::vector<Sort> ps;
    for (const Sort& a : t.args()) {
      if (a.is_iota()) {
        ps.push_back(a);
      } else {
        Sort sa = spec_sort(a);
        for (size_t i = 0; i < copy_tuples(a).size(); ++i) ps.push_back(sa);
      }
    }
    return Sort::arrows(ps, Sort::iota());
  }

  // Variants of one base nonterminal get the base name when unique, or the
  // base name plus the variant's rank otherwise; the step marker comes last.
  void assign_names() {
    std::map<std::string, std::vector<Key>> by_base;
    for (const Key& k : seen_) by_base[k.first].push_back(k);
    std::set<std::string> used;
    for (const auto& [n, a] : h_.alphabet.symbols) used.insert(n);
    auto claim = [&](std::string n) {
      while (used.count(n)) n += "_";
      used.insert(n);
      return n;
    };
    for (auto& [base, keys] : by_base) {
      if (keys.size() == 1) {
        names_[keys[0]] = claim(base);
      } else {
        for (size_t i = 0; i < keys.size(); ++i)
          names_[keys[i]] = claim(base + std::to_string(i));
      }
    }
    std::string s = "_step";
    while (used.count(s)) s += "_";
    s_ = s;
  }

  Rule build_rule(const Key& key) {
    const Rule& orig = h_.rules.at(key.first);
    const Sort& sigma = h_.nts.at(key.first);
    std::vector<Sort> args = sigma.args();
    RuleCtx ctx;
    Rule out;
    std::set<std::string> taken;
    if (!discovering_) {
      for (const auto& [n, a] : h_.alphabet.symbols) taken.insert(n);
      taken.insert(s_);
      for (const auto& [k, n] : names_) taken.insert(n);
    }
    auto local = [&](std::string n) {
      while (taken.count(n)) n += "_";
      taken.insert(n);
      return n;
    };
    for (size_t i = 0; i < orig.params.size(); ++i) {
      const std::string& p = orig.params[i];
      ctx.env[p] = {args[i], key.second[i]};
      if (args[i].is_iota()) {
        ctx.ground_name[p] = local(p);
        out.params.push_back(ctx.ground_name[p]);
      } else {
        size_t n = copy_tuples(args[i]).size();
        for (size_t c = 0; c < n; ++c) {
          ctx.copy_name[p].push_back(local(p + std::to_string(c)));
          out.params.push_back(ctx.copy_name[p].back());
        }
      }
    }
    out.body = transform(orig.body, {}, ctx);
    return out;
  }

  // Specialize a body term. rest carries the abstract values of the
  // arguments an enclosing call will still supply, so |args| + |rest|
  // always covers the head's full arity for parameters and nonterminals.
  AppTerm transform(const AppTerm& t, const std::vector<size_t>& rest,
                    const RuleCtx& ctx) {
    if (auto it = ctx.env.find(t.head); it != ctx.env.end()) {
      const Sort& ps = it->second.first;
      if (ps.is_iota()) return AppTerm{ctx.ground_name.at(t.head), {}};
      std::vector<size_t> full = arg_values(t.args, ctx);
      full.insert(full.end(), rest.begin(), rest.end());
      if (full.size() != static_cast<size_t>(ps.arity()))
        throw HorsError("under-applied parameter " + t.head +
                        " during specialization");
      std::string head = discovering_
                             ? t.head
                             : ctx.copy_name.at(t.head)[tuple_index(ps, full)];
      return AppTerm{head, expand_args(t.args, ctx)};
    }
    if (auto it = h_.nts.find(t.head); it != h_.nts.end()) {
      const Sort& ns = it->second;
      std::vector<size_t> full = arg_values(t.args, ctx);
      full.insert(full.end(), rest.begin(), rest.end());
      if (full.size() != static_cast<size_t>(ns.arity()))
        throw HorsError("under-applied nonterminal " + t.head +
                        " during specialization");
      note(t.head, full);
      std::string head = discovering_ ? t.head : names_.at({t.head, full});
      return AppTerm{head, expand_args(t.args, ctx)};
    }
    if (t.head == b_) {
      size_t v = fa_.eval(ctx.env, t.args[0]);
      AppTerm out{v == 0 ? s_ : b_, {transform(t.args[0], {}, ctx)}};
      return out;
    }
    // other terminals keep their name; one version serves every pattern
    AppTerm out{t.head, {}};
    for (const AppTerm& a : t.args) out.args.push_back(transform(a, {}, ctx));
    return out;
  }

  std::vector<size_t> arg_values(const std::vector<AppTerm>& args,
                                 const RuleCtx& ctx) {
    std::vector<size_t> out;
    out.reserve(args.size());
    for (const AppTerm& a : args) out.push_back(fa_.eval(ctx.env, a));
    return out;
  }

  // An argument of arrow sort fans out into one specialization per tuple
  // its copies stand for; ground arguments pass through untouched.
  std::vector<AppTerm> expand_args(const std::vector<AppTerm>& args,
                                   const RuleCtx& ctx) {
    std::vector<AppTerm> out;
    for (const AppTerm& a : args) {
      Sort s;
      fa_.eval(ctx.env, a, &s);
      if (s.is_iota()) {
        out.push_back(transform(a, {}, ctx));
      } else {
        for (const auto& c : copy_tuples(s)) out.push_back(transform(a, c, ctx));
      }
    }
    return out;
  }
};

}  // namespace detail

inline Stage2Out stage2_reflect(const Stage1Out& s1, size_t max_variants = 512,
                                size_t flag_cap = size_t{1} << 20) {
  return detail::Specializer(s1.grammar, s1.b_name, max_variants, flag_cap).run();
}

struct Stage3Out {
  Hors grammar;
  std::string b_name;
  std::string i_name;  // empty when no step marker occurred
};

// Replace the step marker by an identity nonterminal and drop it from the
// alphabet; what remains of b is exactly the divergent positions.
inline Stage3Out stage3_erase(const Stage2Out& s2) {
  Stage3Out out{s2.grammar, s2.b_name, ""};
  out.grammar.alphabet.symbols.erase(s2.s_name);
  if (!grammar_uses(s2.grammar, s2.s_name)) {
    prune_unreachable(out.grammar);
    return out;
  }
  out.i_name = fresh_global(out.grammar, "I");
  auto rewrite = [&](const AppTerm& t, auto&& self) -> AppTerm {
    AppTerm r{t.head == s2.s_name ? out.i_name : t.head, {}};
    for (const AppTerm& a : t.args) r.args.push_back(self(a, self));
    return r;
  };
  for (auto& [f, r] : out.grammar.rules) r.body = rewrite(r.body, rewrite);
  std::string x = "x";
  while (out.grammar.alphabet.symbols.count(x) || out.grammar.nts.count(x))
    x += "_";
  out.grammar.nts[out.i_name] = Sort::arrow(Sort::iota(), Sort::iota());
  out.grammar.rules[out.i_name] = Rule{{x}, AppTerm{x, {}}};
  prune_unreachable(out.grammar);
  return out;
}

struct BotfreeStages {
  Hors stage1, stage2, stage3, result;
  std::string b_name, s_name, i_name;
};

inline BotfreeStages botfree_transform(const Hors& h, size_t max_variants = 512,
                                       size_t flag_cap = size_t{1} << 20) {
  Stage1Out s1 = stage1_guard(h);
  Stage2Out s2 = stage2_reflect(s1, max_variants, flag_cap);
  Stage3Out s3 = stage3_erase(s2);
  BotfreeStages out;
  out.stage1 = s1.grammar;
  out.stage2 = s2.grammar;
  out.stage3 = s3.grammar;
  out.b_name = s1.b_name;
  out.s_name = s2.s_name;
  out.i_name = s3.i_name;

  Hors res = s3.grammar;
  if (!s3.i_name.empty()) {
    auto inl = [&](const AppTerm& t, auto&& self) -> AppTerm {
      AppTerm r{t.head, {}};
      for (const AppTerm& a : t.args) r.args.push_back(self(a, self));
      if (r.head == s3.i_name && r.args.size() == 1) return r.args[0];
      return r;
    };
    for (auto& [f, r] : res.rules) r.body = inl(r.body, inl);
    if (!grammar_uses(res, s3.i_name)) {
      res.nts.erase(s3.i_name);
      res.rules.erase(s3.i_name);
    }
  }
  prune_unreachable(res);
  if (!grammar_uses(res, s1.b_name)) res.alphabet.symbols.erase(s1.b_name);
  out.result = std::move(res);
  return out;
}

}  // namespace horseq
