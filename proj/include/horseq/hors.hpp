#pragma once

// Deterministic recursion schemes over a ranked alphabet: one rule per
// nonterminal, applicative bodies, a ground start symbol. The value of a
// scheme is the (possibly infinite) tree its reduction unfolds to; here live
// the finite approximations of that tree and the productivity analysis that
// tells bottomless subtrees apart from slow ones.

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "horseq/sorts.hpp"
#include "horseq/trees.hpp"

namespace horseq {

struct HorsError : std::runtime_error {
  explicit HorsError(const std::string& msg) : std::runtime_error(msg) {}
};

struct AppTerm {
  std::string head;
  std::vector<AppTerm> args;

  bool operator==(const AppTerm& o) const {
    return head == o.head && args == o.args;
  }
};

inline std::string app_str(const AppTerm& t) {
  if (t.args.empty()) return t.head;
  std::string out = t.head;
  for (const AppTerm& a : t.args) {
    out += ' ';
    if (a.args.empty()) {
      out += a.head;
    } else {
      out += '(';
      out += app_str(a);
      out += ')';
    }
  }
  return out;
}

struct Rule {
  std::vector<std::string> params;
  AppTerm body;
  bool operator==(const Rule&) const = default;
};

struct Hors {
  RankedAlphabet alphabet;
  std::map<std::string, Sort> nts;  // nonterminal sorts
  std::map<std::string, Rule> rules;
  std::string start;
  bool operator==(const Hors&) const = default;
};

// Sort of an applicative term under parameter/nonterminal/terminal lookup.
inline Sort app_term_sort(const Hors& h, const std::map<std::string, Sort>& params,
                          const AppTerm& t) {
  Sort s;
  if (auto it = params.find(t.head); it != params.end()) {
    s = it->second;
  } else if (auto it2 = h.nts.find(t.head); it2 != h.nts.end()) {
    s = it2->second;
  } else if (h.alphabet.symbols.count(t.head)) {
    int ar = h.alphabet.symbols.at(t.head);
    s = Sort::arrows(std::vector<Sort>(ar, Sort::iota()), Sort::iota());
  } else if (t.head == kBotSymbol && h.alphabet.has_bot) {
    s = Sort::iota();
  } else {
    throw HorsError("unknown name in rule body: " + t.head);
  }
  for (const AppTerm& a : t.args) {
    if (!s.is_arrow())
      throw HorsError("over-applied term headed by " + t.head);
    Sort as = app_term_sort(h, params, a);
    if (!(as == s.arg()))
      throw HorsError("argument sort mismatch under " + t.head + ": expected " +
                      s.arg().str() + ", got " + as.str());
    s = s.res();
  }
  return s;
}

inline void sort_check_hors(const Hors& h) {
  if (!h.nts.count(h.start))
    throw HorsError("start symbol " + h.start + " has no rule");
  if (!h.nts.at(h.start).is_iota())
    throw HorsError("start symbol must be ground");
  for (const auto& [f, s] : h.nts) {
    if (!s.is_tree_sort())
      throw HorsError("nonterminal " + f + " has a non-tree sort " + s.str());
    if (!h.rules.count(f)) throw HorsError("nonterminal " + f + " has no rule");
    if (h.alphabet.symbols.count(f))
      throw HorsError(f + " is both a terminal and a nonterminal");
  }
  for (const auto& [f, r] : h.rules) {
    if (!h.nts.count(f)) throw HorsError("rule for undeclared nonterminal " + f);
    Sort s = h.nts.at(f);
    std::map<std::string, Sort> env;
    for (const std::string& p : r.params) {
      if (!s.is_arrow())
        throw HorsError("rule for " + f + " has too many parameters");
      if (h.nts.count(p) || h.alphabet.symbols.count(p))
        throw HorsError("parameter " + p + " of " + f + " shadows a global name");
      if (!env.emplace(p, s.arg()).second)
        throw HorsError("duplicate parameter " + p + " in rule for " + f);
      s = s.res();
    }
    if (!s.is_iota())
      throw HorsError("rule for " + f + " leaves it under-applied; " +
                      std::to_string(r.params.size()) + " parameters given");
    Sort bs = app_term_sort(h, env, r.body);
    if (!bs.is_iota())
      throw HorsError("body of " + f + " has sort " + bs.str() +
                      ", expected ground");
  }
}

// ---------------------------------------------------------------------------
// Productivity flags. Abstract value of a ground configuration: 1 when its
// unfolding never reaches a productive terminal (the subtree is bottomless),
// 0 otherwise. A value of arrow sort is a finite table indexed by the flat
// rank of the argument value. Only argument sorts ever get their value space
// enumerated, so a single table stays materializable even when the ambient
// function space is astronomically large. Terminals denote the constant 0,
// except designated transparent unary symbols which pass their argument's
// value through.

class FlagValue {
 public:
  FlagValue() = default;
  explicit FlagValue(size_t leaf) : leaf_(leaf) {}
  explicit FlagValue(std::vector<FlagValue> table)
      : table_(std::make_shared<const std::vector<FlagValue>>(std::move(table))) {}

  bool ground() const { return table_ == nullptr; }
  size_t leaf() const { return leaf_; }
  const std::vector<FlagValue>& table() const { return *table_; }

  bool operator==(const FlagValue& o) const {
    if (ground() != o.ground()) return false;
    if (ground()) return leaf_ == o.leaf_;
    return table_ == o.table_ || *table_ == *o.table_;
  }

 private:
  size_t leaf_ = 0;
  std::shared_ptr<const std::vector<FlagValue>> table_;
};

class FlagSpace {
 public:
  explicit FlagSpace(size_t cap = size_t{1} << 20) : cap_(cap) {}

  // Number of values at a sort. Demanded for argument sorts, whose values
  // are ranked and enumerated digit by digit.
  size_t size(const Sort& s) {
    auto it = size_cache_.find(s);
    if (it != size_cache_.end()) return it->second;
    size_t n;
    if (s.is_iota()) {
      n = 2;
    } else if (s.is_arrow()) {
      n = checked_pow(size(s.res()), size(s.arg()));
    } else {
      throw HorsError("flag space for non-tree sort " + s.str());
    }
    size_cache_.emplace(s, n);
    return n;
  }

  // Cells of one table at a sort; guards table construction, so wide sorts
  // with a modest per-value footprint stay usable.
  size_t cells(const Sort& s) {
    auto it = cells_cache_.find(s);
    if (it != cells_cache_.end()) return it->second;
    size_t n = 1;
    if (s.is_arrow()) {
      unsigned __int128 acc =
          static_cast<unsigned __int128>(size(s.arg())) * cells(s.res());
      if (acc > cap_)
        throw CapacityError("abstract value table exceeds capacity");
      n = static_cast<size_t>(acc);
    }
    cells_cache_.emplace(s, n);
    return n;
  }

  FlagValue top(const Sort& s) {
    if (s.is_iota()) return FlagValue(1);
    return make(s, [&](size_t) { return top(s.res()); });
  }

  FlagValue zero(const Sort& s) {
    if (s.is_iota()) return FlagValue(0);
    return make(s, [&](size_t) { return zero(s.res()); });
  }

  // Flat rank of a value, digit j weighted by |res|^j. Sensible only where
  // size() is, i.e. for argument sorts.
  size_t index(const Sort& s, const FlagValue& v) {
    if (s.is_iota()) return v.leaf();
    size_t base = size(s.res()), out = 0, mul = 1;
    size_t digits = size(s.arg());
    for (size_t j = 0; j < digits; ++j) {
      out += index(s.res(), v.table()[j]) * mul;
      if (j + 1 < digits) mul *= base;
    }
    return out;
  }

  FlagValue from_index(const Sort& s, size_t idx) {
    if (s.is_iota()) return FlagValue(idx);
    size_t base = size(s.res());
    size_t digits = size(s.arg());
    std::vector<FlagValue> t;
    t.reserve(digits);
    for (size_t j = 0; j < digits; ++j) {
      t.push_back(from_index(s.res(), idx % base));
      idx /= base;
    }
    return FlagValue(std::move(t));
  }

  FlagValue apply(const Sort& fn_sort, const FlagValue& f, const FlagValue& a) {
    return f.table()[index(fn_sort.arg(), a)];
  }

  FlagValue make(const Sort& fn_sort, const std::function<FlagValue(size_t)>& g) {
    cells(fn_sort);
    size_t digits = size(fn_sort.arg());
    std::vector<FlagValue> t;
    t.reserve(digits);
    for (size_t j = 0; j < digits; ++j) t.push_back(g(j));
    return FlagValue(std::move(t));
  }

 private:
  size_t checked_pow(size_t base, size_t exp) {
    unsigned __int128 acc = 1;
    for (size_t i = 0; i < exp; ++i) {
      acc *= base;
      if (acc > cap_)
        throw CapacityError("abstract function space exceeds capacity");
    }
    return static_cast<size_t>(acc);
  }

  size_t cap_;
  std::map<Sort, size_t> size_cache_;
  std::map<Sort, size_t> cells_cache_;
};

using FlagTable = std::map<std::string, FlagValue>;

class FlagAnalysis {
 public:
  explicit FlagAnalysis(const Hors& h, std::set<std::string> transparent = {},
                        size_t cap = size_t{1} << 20)
      : h_(h), transparent_(std::move(transparent)), sp_(cap) {
    for (const std::string& t : transparent_) {
      auto it = h.alphabet.symbols.find(t);
      if (it == h.alphabet.symbols.end() || it->second != 1)
        throw HorsError("transparent symbol " + t + " must be a unary terminal");
    }
    for (const auto& [f, s] : h.nts) flags_[f] = sp_.top(s);
    // Descending iteration from the everywhere-divergent assumption; the
    // interpretation is monotone in the table, so the values only go down
    // and the finite spaces force arrival.
    for (int iter = 0;; ++iter) {
      if (iter > 100000)
        throw HorsError("productivity analysis did not stabilize");
      FlagTable next;
      for (const auto& [f, r] : h.rules) next[f] = rule_value(f, r);
      if (next == flags_) break;
      flags_ = std::move(next);
    }
  }

  const FlagTable& flags() const { return flags_; }
  FlagSpace& space() { return sp_; }

  // Flat rank of a term's abstract value; parameters come from env as
  // (sort, rank). Fit for ground terms and argument positions, which is
  // where ranks exist.
  size_t eval(const std::map<std::string, std::pair<Sort, size_t>>& env,
              const AppTerm& t, Sort* out_sort = nullptr) {
    Sort s;
    FlagValue v = eval_value(env, t, &s);
    if (out_sort) *out_sort = s;
    return s.is_iota() ? v.leaf() : sp_.index(s, v);
  }

  size_t config_value(const AppTerm& ground) { return eval({}, ground); }

 private:
  FlagValue eval_value(const std::map<std::string, std::pair<Sort, size_t>>& env,
                       const AppTerm& t, Sort* out_sort) {
    Sort s;
    FlagValue v;
    if (auto it = env.find(t.head); it != env.end()) {
      s = it->second.first;
      v = sp_.from_index(s, it->second.second);
    } else if (auto it2 = h_.nts.find(t.head); it2 != h_.nts.end()) {
      s = it2->second;
      v = flags_.at(t.head);
    } else if (h_.alphabet.symbols.count(t.head)) {
      int ar = h_.alphabet.symbols.at(t.head);
      s = Sort::arrows(std::vector<Sort>(ar, Sort::iota()), Sort::iota());
      v = transparent_.count(t.head)
              ? sp_.make(s, [](size_t j) { return FlagValue(j); })
              : sp_.zero(s);
    } else {
      throw HorsError("unknown name in configuration: " + t.head);
    }
    for (const AppTerm& a : t.args) {
      FlagValue av = eval_value(env, a, nullptr);
      v = sp_.apply(s, v, av);
      s = s.res();
    }
    if (out_sort) *out_sort = s;
    return v;
  }

  FlagValue rule_value(const std::string& f, const Rule& r) {
    std::map<std::string, std::pair<Sort, size_t>> env;
    return curry(h_.nts.at(f), r, 0, env);
  }

  FlagValue curry(const Sort& s, const Rule& r, size_t i,
                  std::map<std::string, std::pair<Sort, size_t>>& env) {
    if (i == r.params.size()) return eval_value(env, r.body, nullptr);
    return sp_.make(s, [&](size_t j) {
      env[r.params[i]] = {s.arg(), j};
      FlagValue out = curry(s.res(), r, i + 1, env);
      env.erase(r.params[i]);
      return out;
    });
  }

  const Hors& h_;
  std::set<std::string> transparent_;
  FlagSpace sp_;
  FlagTable flags_;
};

inline FlagTable divergence_flags(const Hors& h,
                                  const std::set<std::string>& transparent = {},
                                  size_t cap = size_t{1} << 20) {
  return FlagAnalysis(h, transparent, cap).flags();
}

// ---------------------------------------------------------------------------
// Ground reduction.

inline AppTerm subst_app(const AppTerm& t,
                         const std::map<std::string, AppTerm>& s) {
  std::vector<AppTerm> args;
  args.reserve(t.args.size());
  for (const AppTerm& a : t.args) args.push_back(subst_app(a, s));
  auto it = s.find(t.head);
  if (it == s.end()) return AppTerm{t.head, std::move(args)};
  AppTerm out = it->second;
  out.args.insert(out.args.end(), args.begin(), args.end());
  return out;
}

inline size_t app_size(const AppTerm& t) {
  size_t n = 1;
  for (const AppTerm& a : t.args) n += app_size(a);
  return n;
}

// Leftmost reduction of a ground configuration until a terminal surfaces.
// Fuel is a work budget covering steps and constructed nodes both, so
// schemes whose configurations blow up exponentially fail fast instead of
// thrashing the allocator.
inline AppTerm head_reduce(const Hors& h, AppTerm cfg, size_t& fuel) {
  while (h.rules.count(cfg.head)) {
    if (fuel == 0) throw HorsError("reduction fuel exhausted near " + cfg.head);
    --fuel;
    const Rule& r = h.rules.at(cfg.head);
    if (r.params.size() != cfg.args.size())
      throw HorsError("under-applied nonterminal in ground configuration: " +
                      app_str(cfg));
    std::map<std::string, AppTerm> s;
    for (size_t i = 0; i < r.params.size(); ++i)
      s.emplace(r.params[i], cfg.args[i]);
    cfg = subst_app(r.body, s);
    size_t sz = app_size(cfg);
    if (sz > fuel) {
      fuel = 0;
      throw HorsError("reduction fuel exhausted near " + cfg.head);
    }
    fuel -= sz;
  }
  return cfg;
}

// Depth-d prefix of the value tree, with the productivity flags standing in
// for subtrees that would never surface a symbol.
inline FinitePrefix generate_prefix(const Hors& h, int depth,
                                    size_t fuel = 1'000'000) {
  sort_check_hors(h);
  FlagAnalysis fa(h);
  auto rec = [&](auto&& self, AppTerm cfg, int d) -> Tree {
    if (d == 0) return Tree::bot();
    if (fa.config_value(cfg) == 1) return Tree::bot();
    cfg = head_reduce(h, std::move(cfg), fuel);
    std::vector<Tree> kids;
    kids.reserve(cfg.args.size());
    for (AppTerm& a : cfg.args) kids.push_back(self(self, std::move(a), d - 1));
    return kids.empty() ? Tree::leaf(cfg.head) : Tree::node(cfg.head, kids);
  };
  return rec(rec, AppTerm{h.start, {}}, depth);
}

// When the whole value tree revisits only finitely many configurations it is
// rational; rebuild it as a graph by keying nodes on reduced configurations.
inline std::optional<Tree> rational_tree_of(const Hors& h,
                                            size_t max_configs = 4096,
                                            size_t fuel = 1'000'000) {
  sort_check_hors(h);
  FlagAnalysis fa(h);
  struct Bail {};
  TreeBuilder b;
  std::map<std::string, int> seen;
  try {
    auto rec = [&](auto&& self, AppTerm cfg) -> int {
      if (fa.config_value(cfg) == 1) return b.add(kBotSymbol, 0);
      size_t step_fuel = fuel;
      cfg = head_reduce(h, std::move(cfg), step_fuel);
      std::string key = app_str(cfg);
      auto it = seen.find(key);
      if (it != seen.end()) return it->second;
      if (seen.size() >= max_configs) throw Bail{};
      int id = b.add(cfg.head, static_cast<int>(cfg.args.size()));
      seen.emplace(std::move(key), id);
      for (size_t i = 0; i < cfg.args.size(); ++i)
        b.set_kid(id, static_cast<int>(i), self(self, cfg.args[i]));
      return id;
    };
    return b.build(rec(rec, AppTerm{h.start, {}}));
  } catch (const Bail&) {
    return std::nullopt;
  } catch (const HorsError&) {
    return std::nullopt;  // fuel ran dry: not usably rational
  }
}

// ---------------------------------------------------------------------------
// Simultaneous fixpoint approximation. The n-th approximant substitutes every
// nonterminal by its abstracted rule n times, normalizes, and reads the
// result off as a finite prefix with bottoms at nonterminal-headed positions.
// Partial applications make genuine beta-redexes, hence a small lambdaogram.

namespace detail {

struct LTerm;
using LPtr = std::shared_ptr<const LTerm>;

struct LTerm {
  enum class Kind { Var, Sym, Ref, Lam, App };
  Kind kind;
  std::string name;  // Var, Sym, Ref, Lam binder
  LPtr f, a;         // App parts; Lam body in f
};

inline LPtr lmk(LTerm::Kind k, std::string n, LPtr f = nullptr, LPtr a = nullptr) {
  auto t = std::make_shared<LTerm>();
  t->kind = k;
  t->name = std::move(n);
  t->f = std::move(f);
  t->a = std::move(a);
  return t;
}
inline LPtr lvar(std::string n) { return lmk(LTerm::Kind::Var, std::move(n)); }
inline LPtr lsym(std::string n) { return lmk(LTerm::Kind::Sym, std::move(n)); }
inline LPtr lref(std::string n) { return lmk(LTerm::Kind::Ref, std::move(n)); }
inline LPtr llam(std::string p, LPtr b) {
  return lmk(LTerm::Kind::Lam, std::move(p), std::move(b));
}
inline LPtr lapp(LPtr f, LPtr a) {
  return lmk(LTerm::Kind::App, "", std::move(f), std::move(a));
}

inline bool lfree(const LPtr& t, const std::string& x) {
  switch (t->kind) {
    case LTerm::Kind::Var:
      return t->name == x;
    case LTerm::Kind::Sym:
    case LTerm::Kind::Ref:
      return false;
    case LTerm::Kind::Lam:
      return t->name != x && lfree(t->f, x);
    default:
      return lfree(t->f, x) || lfree(t->a, x);
  }
}

inline LPtr lsubst(const LPtr& t, const std::string& x, const LPtr& v,
                   int& fresh) {
  switch (t->kind) {
    case LTerm::Kind::Var:
      return t->name == x ? v : t;
    case LTerm::Kind::Sym:
    case LTerm::Kind::Ref:
      return t;
    case LTerm::Kind::Lam: {
      if (t->name == x) return t;
      if (lfree(v, t->name)) {
        std::string np = t->name + "$" + std::to_string(++fresh);
        LPtr body = lsubst(t->f, t->name, lvar(np), fresh);
        return llam(np, lsubst(body, x, v, fresh));
      }
      return llam(t->name, lsubst(t->f, x, v, fresh));
    }
    default:
      return lapp(lsubst(t->f, x, v, fresh), lsubst(t->a, x, v, fresh));
  }
}

// Simply-sorted terms normalize under any strategy; fuel is a backstop.
inline LPtr lnormalize(const LPtr& t, size_t& fuel, int& fresh) {
  switch (t->kind) {
    case LTerm::Kind::Var:
    case LTerm::Kind::Sym:
    case LTerm::Kind::Ref:
      return t;
    case LTerm::Kind::Lam:
      return llam(t->name, lnormalize(t->f, fuel, fresh));
    default: {
      LPtr f = lnormalize(t->f, fuel, fresh);
      if (f->kind == LTerm::Kind::Lam) {
        if (fuel == 0) throw HorsError("normalization fuel exhausted");
        --fuel;
        return lnormalize(lsubst(f->f, f->name, t->a, fresh), fuel, fresh);
      }
      return lapp(f, lnormalize(t->a, fuel, fresh));
    }
  }
}

inline LPtr lterm_of_app(const AppTerm& t, const std::set<std::string>& bound,
                         const Hors& h) {
  LPtr head;
  if (bound.count(t.head))
    head = lvar(t.head);
  else if (h.nts.count(t.head))
    head = lref(t.head);
  else
    head = lsym(t.head);
  for (const AppTerm& a : t.args) head = lapp(head, lterm_of_app(a, bound, h));
  return head;
}

// Replace every nonterminal reference by its abstracted rule. The closures
// are closed terms, so no capture can occur here.
inline LPtr lexpand(const LPtr& t, const Hors& h) {
  switch (t->kind) {
    case LTerm::Kind::Var:
    case LTerm::Kind::Sym:
      return t;
    case LTerm::Kind::Ref: {
      const Rule& r = h.rules.at(t->name);
      std::set<std::string> bound(r.params.begin(), r.params.end());
      LPtr body = lterm_of_app(r.body, bound, h);
      for (auto it = r.params.rbegin(); it != r.params.rend(); ++it)
        body = llam(*it, body);
      return body;
    }
    case LTerm::Kind::Lam:
      return llam(t->name, lexpand(t->f, h));
    default:
      return lapp(lexpand(t->f, h), lexpand(t->a, h));
  }
}

inline Tree lterm_to_prefix(const LPtr& t, const Hors& h) {
  LPtr head = t;
  std::vector<LPtr> args;
  while (head->kind == LTerm::Kind::App) {
    args.push_back(head->a);
    head = head->f;
  }
  std::reverse(args.begin(), args.end());
  if (head->kind == LTerm::Kind::Ref) return Tree::bot();
  if (head->kind != LTerm::Kind::Sym)
    throw HorsError("approximant did not reduce to a tree");
  if (!h.alphabet.contains(head->name, static_cast<int>(args.size())))
    throw HorsError("approximant grew an unknown symbol: " + head->name);
  std::vector<Tree> kids;
  kids.reserve(args.size());
  for (const LPtr& a : args) kids.push_back(lterm_to_prefix(a, h));
  return kids.empty() ? Tree::leaf(head->name) : Tree::node(head->name, kids);
}

}  // namespace detail

inline FinitePrefix kleene_approximant(const Hors& h, int n,
                                       size_t fuel = 10'000'000) {
  sort_check_hors(h);
  detail::LPtr t = detail::lref(h.start);
  int fresh = 0;
  for (int i = 0; i < n; ++i) {
    t = detail::lexpand(t, h);
    t = detail::lnormalize(t, fuel, fresh);
  }
  return detail::lterm_to_prefix(t, h);
}

}  // namespace horseq
