#pragma once

// Rational trees over a ranked alphabet, represented as canonical minimal
// term graphs, plus the first-order machinery over them: the subtree order
// with bottom as least element, depth-d prefixes, unification without
// occurs-check (solved forms may be cyclic), disequation checking, and the
// embeddings between trees and predicates over a finite carrier.

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "horseq/sorts.hpp"

namespace horseq {

inline constexpr const char* kBotSymbol = "_bot";
// Free variables appear as leaves labelled "?name" in resolved graphs.
inline constexpr char kVarLeafPrefix = '?';

struct TreeError : std::runtime_error {
  explicit TreeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct RankedAlphabet {
  std::map<std::string, int> symbols;  // name -> arity, names unique
  bool has_bot = false;                // bottom as ordinary nullary symbol

  bool contains(const std::string& name, int arity) const {
    if (has_bot && name == kBotSymbol && arity == 0) return true;
    auto it = symbols.find(name);
    return it != symbols.end() && it->second == arity;
  }
  void add(const std::string& name, int arity) {
    auto it = symbols.find(name);
    if (it != symbols.end() && it->second != arity)
      throw TreeError("conflicting arity for symbol " + name);
    symbols[name] = arity;
  }
  RankedAlphabet with_bot() const {
    RankedAlphabet a = *this;
    a.has_bot = true;
    return a;
  }
  bool operator==(const RankedAlphabet&) const = default;
};

// Canonical minimal term graph. After construction: only nodes reachable
// from the root remain, no two distinct nodes are bisimilar, and nodes are
// numbered in DFS preorder from the root (root is node 0). Consequently
// structural equality coincides with bisimilarity for canonical trees.
class Tree {
 public:
  struct Node {
    std::string symbol;
    std::vector<int> kids;
    bool operator==(const Node& o) const {
      return symbol == o.symbol && kids == o.kids;
    }
    bool operator<(const Node& o) const {
      if (symbol != o.symbol) return symbol < o.symbol;
      return kids < o.kids;
    }
  };

  Tree() { nodes_.push_back(Node{kBotSymbol, {}}); }

  static Tree bot() { return Tree(); }
  static Tree leaf(const std::string& symbol) {
    Tree t;
    t.nodes_[0].symbol = symbol;
    return t;
  }
  static Tree node(const std::string& symbol, const std::vector<Tree>& kids) {
    std::vector<Node> ns;
    ns.push_back(Node{symbol, {}});
    for (const Tree& k : kids) {
      int off = static_cast<int>(ns.size());
      ns[0].kids.push_back(off + k.root_);
      for (const Node& n : k.nodes_) {
        Node m = n;
        for (int& c : m.kids) c += off;
        ns.push_back(std::move(m));
      }
    }
    return Tree(std::move(ns), 0);
  }

  int root() const { return root_; }
  size_t size() const { return nodes_.size(); }
  const std::string& symbol(int n) const { return nodes_[n].symbol; }
  const std::vector<int>& kids(int n) const { return nodes_[n].kids; }
  bool is_bot(int n) const {
    return nodes_[n].symbol == kBotSymbol && nodes_[n].kids.empty();
  }
  bool root_is_bot() const { return is_bot(root_); }
  bool is_var_leaf(int n) const {
    return !nodes_[n].symbol.empty() && nodes_[n].symbol[0] == kVarLeafPrefix;
  }

  bool operator==(const Tree& o) const {
    return root_ == o.root_ && nodes_ == o.nodes_;
  }
  bool operator!=(const Tree& o) const { return !(*this == o); }
  bool operator<(const Tree& o) const {
    if (root_ != o.root_) return root_ < o.root_;
    return nodes_ < o.nodes_;
  }

  // True when no node reaches itself (every path is finite).
  bool acyclic() const {
    std::vector<int> state(nodes_.size(), 0);  // 0 new, 1 open, 2 done
    std::vector<std::pair<int, size_t>> stack{{root_, 0}};
    state[root_] = 1;
    while (!stack.empty()) {
      auto& [n, i] = stack.back();
      if (i == nodes_[n].kids.size()) {
        state[n] = 2;
        stack.pop_back();
        continue;
      }
      int k = nodes_[n].kids[i++];
      if (state[k] == 1) return false;
      if (state[k] == 0) {
        state[k] = 1;
        stack.emplace_back(k, 0);
      }
    }
    return true;
  }

  // name -> arity of every symbol occurring in the graph (bottom included).
  std::map<std::string, int> occurring_symbols() const {
    std::map<std::string, int> out;
    for (const Node& n : nodes_) {
      auto it = out.find(n.symbol);
      int ar = static_cast<int>(n.kids.size());
      if (it != out.end() && it->second != ar)
        throw TreeError("inconsistent arity inside tree for " + n.symbol);
      out[n.symbol] = ar;
    }
    return out;
  }

  friend class TreeBuilder;

 private:
  Tree(std::vector<Node> nodes, int root)
      : nodes_(std::move(nodes)), root_(root) {
    canonicalize();
  }

  // Collapse to bisimilarity classes, quotient, then renumber by DFS
  // preorder so equal trees get identical representations. Acyclic graphs
  // take a single bottom-up pass; only genuine loops need refinement.
  void canonicalize() {
    size_t n = nodes_.size();
    std::vector<int> color(n, -1);
    if (!acyclic_classes(color)) refine_classes(color);
    // Quotient + DFS renumber from the root's class.
    std::vector<Node> out;
    std::vector<int> class_rep(n, -1);
    for (size_t i = 0; i < n; ++i) {
      if (color[i] < 0) continue;  // unreachable, dropped
      if (class_rep[color[i]] < 0) class_rep[color[i]] = static_cast<int>(i);
    }
    std::vector<int> stack{root_};
    std::vector<std::pair<int, int>> patches;  // (new node, class) per kid slot
    // Iterative preorder: allocate ids on first visit, patch kids after.
    std::map<int, int> seen;
    std::vector<int> order;
    while (!stack.empty()) {
      int cur = stack.back();
      stack.pop_back();
      int c = color[cur];
      if (seen.count(c)) continue;
      seen[c] = static_cast<int>(order.size());
      order.push_back(class_rep[c]);
      const Node& rep = nodes_[class_rep[c]];
      for (auto it = rep.kids.rbegin(); it != rep.kids.rend(); ++it)
        stack.push_back(*it);
    }
    out.reserve(order.size());
    for (int repn : order) {
      Node m{nodes_[repn].symbol, {}};
      for (int k : nodes_[repn].kids) m.kids.push_back(seen[color[k]]);
      out.push_back(std::move(m));
    }
    nodes_ = std::move(out);
    root_ = 0;
  }

  // Bottom-up hash-consing over the part reachable from the root; false when
  // a cycle turns up (then colors are left for the refinement pass).
  bool acyclic_classes(std::vector<int>& color) {
    size_t n = nodes_.size();
    std::vector<int> state(n, 0);
    std::vector<int> topo;
    std::vector<std::pair<int, size_t>> stack{{root_, 0}};
    state[root_] = 1;
    while (!stack.empty()) {
      auto& [u, i] = stack.back();
      if (i == nodes_[u].kids.size()) {
        state[u] = 2;
        topo.push_back(u);
        stack.pop_back();
        continue;
      }
      int k = nodes_[u].kids[i++];
      if (state[k] == 1) return false;
      if (state[k] == 0) {
        state[k] = 1;
        stack.emplace_back(k, 0);
      }
    }
    std::map<std::pair<std::string, std::vector<int>>, int> ids;
    for (int u : topo) {  // postorder: kids precede parents
      std::vector<int> kc;
      kc.reserve(nodes_[u].kids.size());
      for (int k : nodes_[u].kids) kc.push_back(color[k]);
      auto [it, _] = ids.emplace(std::make_pair(nodes_[u].symbol, std::move(kc)),
                                 static_cast<int>(ids.size()));
      color[u] = it->second;
    }
    return true;
  }

  // Partition refinement to bisimilarity classes; handles back-edges.
  void refine_classes(std::vector<int>& color) {
    size_t n = nodes_.size();
    {
      std::map<std::pair<std::string, size_t>, int> ids;
      for (size_t i = 0; i < n; ++i) {
        auto key = std::make_pair(nodes_[i].symbol, nodes_[i].kids.size());
        auto [it, _] = ids.emplace(key, static_cast<int>(ids.size()));
        color[i] = it->second;
      }
    }
    for (;;) {
      std::map<std::vector<int>, int> ids;
      std::vector<int> next(n);
      for (size_t i = 0; i < n; ++i) {
        std::vector<int> sig{color[i]};
        for (int k : nodes_[i].kids) sig.push_back(color[k]);
        auto [it, _] = ids.emplace(std::move(sig), static_cast<int>(ids.size()));
        next[i] = it->second;
      }
      bool same = ids.size() ==
                  static_cast<size_t>(
                      *std::max_element(color.begin(), color.end()) + 1);
      color = std::move(next);
      if (same) break;
    }
  }

  std::vector<Node> nodes_;
  int root_ = 0;
};

// Builder for graphs with back-edges (rec binders, unification output).
class TreeBuilder {
 public:
  int add(const std::string& symbol, int arity) {
    nodes_.push_back(Tree::Node{symbol, std::vector<int>(arity, -1)});
    return static_cast<int>(nodes_.size()) - 1;
  }
  void set_kid(int node, int slot, int kid) { nodes_[node].kids[slot] = kid; }
  Tree build(int root) const {
    for (const auto& n : nodes_)
      for (int k : n.kids)
        if (k < 0) throw TreeError("tree builder: unset child slot");
    return Tree(nodes_, root);
  }

 private:
  std::vector<Tree::Node> nodes_;
};

// Bisimilarity on raw graphs: joint partition refinement, compare root colors.
inline bool bisimilar(const Tree& t1, const Tree& t2) {
  size_t n1 = t1.size(), n = n1 + t2.size();
  auto sym = [&](size_t i) -> const std::string& {
    return i < n1 ? t1.symbol(static_cast<int>(i))
                  : t2.symbol(static_cast<int>(i - n1));
  };
  auto kids = [&](size_t i) {
    std::vector<size_t> out;
    if (i < n1)
      for (int k : t1.kids(static_cast<int>(i))) out.push_back(k);
    else
      for (int k : t2.kids(static_cast<int>(i - n1))) out.push_back(k + n1);
    return out;
  };
  std::vector<int> color(n);
  {
    std::map<std::pair<std::string, size_t>, int> ids;
    for (size_t i = 0; i < n; ++i) {
      auto [it, _] = ids.emplace(std::make_pair(sym(i), kids(i).size()),
                                 static_cast<int>(ids.size()));
      color[i] = it->second;
    }
  }
  size_t prev = 0;
  for (;;) {
    std::map<std::vector<int>, int> ids;
    std::vector<int> next(n);
    for (size_t i = 0; i < n; ++i) {
      std::vector<int> sig{color[i]};
      for (size_t k : kids(i)) sig.push_back(color[k]);
      auto [it, _] = ids.emplace(std::move(sig), static_cast<int>(ids.size()));
      next[i] = it->second;
    }
    color = std::move(next);
    if (ids.size() == prev) break;
    prev = ids.size();
  }
  return color[t1.root()] == color[t2.root() + static_cast<int>(n1)];
}

// A finite prefix is an acyclic tree (bottom marks the cut positions).
using FinitePrefix = Tree;

inline bool is_finite_prefix(const Tree& t) { return t.acyclic(); }

/// t1 <= t2 in the subtree order: t1 is obtained from t2 by pruning subtrees
// to bottom. t1 must be a finite prefix. Symbols of t1 must occur in t2
// unless an explicit common alphabet is supplied (then both are checked
// against it); inconsistent arities are rejected either way.
inline bool subtree_order(const FinitePrefix& t1, const Tree& t2,
                          const RankedAlphabet* common = nullptr) {
  if (!t1.acyclic()) throw TreeError("subtree_order: left side is not a finite prefix");
  auto syms1 = t1.occurring_symbols();
  auto syms2 = t2.occurring_symbols();
  if (common) {
    for (auto& [s, ar] : syms1)
      if (s != kBotSymbol && !common->contains(s, ar))
        throw TreeError("subtree_order: symbol outside alphabet: " + s);
    for (auto& [s, ar] : syms2)
      if (s != kBotSymbol && !common->contains(s, ar))
        throw TreeError("subtree_order: symbol outside alphabet: " + s);
  } else {
    for (auto& [s, ar] : syms1) {
      if (s == kBotSymbol) continue;
      auto it = syms2.find(s);
      if (it == syms2.end())
        throw TreeError("subtree_order: symbol not in right side's alphabet: " + s);
      if (it->second != ar)
        throw TreeError("subtree_order: conflicting arity for symbol " + s);
    }
  }
  // Memoized simultaneous descent; recursion depth bounded by depth of t1.
  std::map<std::pair<int, int>, bool> memo;
  auto rec = [&](auto&& self, int a, int b) -> bool {
    if (t1.is_bot(a)) return true;
    auto key = std::make_pair(a, b);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    bool ok = t1.symbol(a) == t2.symbol(b) &&
              t1.kids(a).size() == t2.kids(b).size();
    if (ok)
      for (size_t i = 0; i < t1.kids(a).size(); ++i)
        if (!self(self, t1.kids(a)[i], t2.kids(b)[i])) {
          ok = false;
          break;
        }
    memo[key] = ok;
    return ok;
  };
  return rec(rec, t1.root(), t2.root());
}

// Depth-d prefix: every node at depth d is replaced by bottom.
inline FinitePrefix prefix(const Tree& t, int d) {
  auto rec = [&](auto&& self, int n, int depth) -> Tree {
    if (depth == d) return Tree::bot();
    std::vector<Tree> kids;
    kids.reserve(t.kids(n).size());
    for (int k : t.kids(n)) kids.push_back(self(self, k, depth + 1));
    return kids.empty() ? Tree::leaf(t.symbol(n)) : Tree::node(t.symbol(n), kids);
  };
  return rec(rec, t.root(), 0);
}

inline int prefix_depth(const FinitePrefix& t) {
  if (!t.acyclic()) throw TreeError("prefix_depth: cyclic tree");
  auto rec = [&](auto&& self, int n) -> int {
    int d = 0;
    for (int k : t.kids(n)) d = std::max(d, 1 + self(self, k));
    return d;
  };
  return rec(rec, t.root());
}

/// Deterministic total order on finite trees: root symbol name, then arity,
// then children left to right. Used only to break ties.
inline int cmp_total(const FinitePrefix& t1, const FinitePrefix& t2) {
  auto rec = [&](auto&& self, int a, int b) -> int {
    if (t1.symbol(a) != t2.symbol(b)) return t1.symbol(a) < t2.symbol(b) ? -1 : 1;
    if (t1.kids(a).size() != t2.kids(b).size())
      return t1.kids(a).size() < t2.kids(b).size() ? -1 : 1;
    for (size_t i = 0; i < t1.kids(a).size(); ++i)
      if (int c = self(self, t1.kids(a)[i], t2.kids(b)[i])) return c;
    return 0;
  };
  return rec(rec, t1.root(), t2.root());
}

// ---------------------------------------------------------------------------
// First-order terms over trees, solved forms, unification, disequations.

struct TreeTerm {
  enum class Kind { Var, App, Lit };
  Kind kind = Kind::Var;
  std::string name;            // variable name or applied symbol
  std::vector<TreeTerm> args;  // App only
  std::shared_ptr<const Tree> tree;  // Lit only

  static TreeTerm var(std::string n) {
    TreeTerm t;
    t.kind = Kind::Var;
    t.name = std::move(n);
    return t;
  }
  static TreeTerm app(std::string sym, std::vector<TreeTerm> as) {
    TreeTerm t;
    t.kind = Kind::App;
    t.name = std::move(sym);
    t.args = std::move(as);
    return t;
  }
  static TreeTerm lit(Tree tr) {
    TreeTerm t;
    t.kind = Kind::Lit;
    t.tree = std::make_shared<Tree>(std::move(tr));
    return t;
  }

  bool operator==(const TreeTerm& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
      case Kind::Var: return name == o.name;
      case Kind::App: return name == o.name && args == o.args;
      default: return *tree == *o.tree;
    }
  }
  bool operator!=(const TreeTerm& o) const { return !(*this == o); }
};

// Rational solved form plus a set of pending disequations. Each bound
// variable occurs exactly once on a left-hand side; right-hand sides may
// mention bound variables, which is how cyclic (rational) solutions appear.
struct ConstraintState {
  std::map<std::string, TreeTerm> bindings;
  std::vector<std::pair<TreeTerm, TreeTerm>> diseqs;

  ConstraintState with_diseq(TreeTerm l, TreeTerm r) const {
    ConstraintState s = *this;
    s.diseqs.emplace_back(std::move(l), std::move(r));
    return s;
  }
};

namespace detail {

// Union-find over term/tree nodes; no occurs-check, so cyclic classes are
// legal and produce rational solved forms.
class Unifier {
 public:
  int build(const TreeTerm& t) {
    switch (t.kind) {
      case TreeTerm::Kind::Var: {
        auto it = var_node_.find(t.name);
        if (it != var_node_.end()) return it->second;
        int id = add_node(true, t.name, 0);
        var_node_.emplace(t.name, id);
        return id;
      }
      case TreeTerm::Kind::App: {
        int id = add_node(false, t.name, t.args.size());
        for (size_t i = 0; i < t.args.size(); ++i)
          nodes_[id].kids[i] = build(t.args[i]);
        return id;
      }
      default: {
        const Tree& tr = *t.tree;
        auto it = tree_base_.find(t.tree.get());
        if (it != tree_base_.end()) return it->second + tr.root();
        int base = static_cast<int>(nodes_.size());
        tree_base_.emplace(t.tree.get(), base);
        for (size_t i = 0; i < tr.size(); ++i)
          add_node(false, tr.symbol(static_cast<int>(i)),
                   tr.kids(static_cast<int>(i)).size());
        for (size_t i = 0; i < tr.size(); ++i) {
          const auto& ks = tr.kids(static_cast<int>(i));
          for (size_t j = 0; j < ks.size(); ++j)
            nodes_[base + static_cast<int>(i)].kids[j] = base + ks[j];
        }
        return base + tr.root();
      }
    }
  }

  void queue(int a, int b) { work_.emplace_back(a, b); }

  // false on constructor clash.
  bool solve() {
    while (!work_.empty()) {
      auto [a, b] = work_.back();
      work_.pop_back();
      a = find(a);
      b = find(b);
      if (a == b) continue;
      Node& na = nodes_[a];
      Node& nb = nodes_[b];
      if (!na.is_var && !nb.is_var) {
        if (na.label != nb.label || na.kids.size() != nb.kids.size())
          return false;
        parent_[b] = a;  // keep a as constructor representative
        for (size_t i = 0; i < na.kids.size(); ++i)
          work_.emplace_back(na.kids[i], nb.kids[i]);
      } else if (na.is_var) {
        parent_[a] = b;
      } else {
        parent_[b] = a;
      }
    }
    return true;
  }

  // Rebuild the solved form. Canonical variable of a class is its least
  // original variable; constructor classes without one get fresh _t names in
  // a deterministic traversal order.
  ConstraintState extract(std::vector<std::pair<TreeTerm, TreeTerm>> diseqs) {
    std::map<int, std::string> canon;
    for (const auto& [name, id] : var_node_) {
      int r = find(id);
      auto it = canon.find(r);
      if (it == canon.end() || name < it->second) canon[r] = name;
    }
    ConstraintState out;
    out.diseqs = std::move(diseqs);
    int fresh = 0;
    // Bind every class reachable from an original variable that has a
    // constructor; pure var classes map non-canonical names to the canonical.
    auto class_var = [&](int r) -> std::string {
      auto it = canon.find(r);
      if (it != canon.end()) return it->second;
      std::string n;
      do {
        n = "_t" + std::to_string(++fresh);
      } while (var_node_.count(n));  // a prior solve may have minted this name
      canon[r] = n;
      return n;
    };
    std::set<int> emitted;
    auto emit = [&](auto&& self, int r) -> void {
      r = find(r);
      if (emitted.count(r)) return;
      emitted.insert(r);
      const Node& n = nodes_[r];
      if (n.is_var) return;  // free class, nothing to bind
      std::string lhs = class_var(r);
      std::vector<TreeTerm> args;
      std::vector<int> todo;
      for (int k : n.kids) {
        int kr = find(k);
        const Node& kn = nodes_[kr];
        if (kn.is_var && !canon.count(kr)) {
          // free variable leaf
          args.push_back(TreeTerm::var(class_var(kr)));
        } else {
          args.push_back(TreeTerm::var(class_var(kr)));
          todo.push_back(kr);
        }
      }
      out.bindings[lhs] =
          n.kids.empty() ? TreeTerm::app(n.label, {}) : TreeTerm::app(n.label, args);
      for (int kr : todo) self(self, kr);
    };
    for (const auto& [name, id] : var_node_) {
      int r = find(id);
      const Node& n = nodes_[r];
      if (!n.is_var) {
        emit(emit, r);
      } else if (canon[r] != name) {
        out.bindings[name] = TreeTerm::var(canon[r]);
      }
      // var equal to its class canon and no constructor: stays free
      if (!n.is_var && canon[r] != name)
        out.bindings[name] = TreeTerm::var(canon[r]);
    }
    return out;
  }

 private:
  struct Node {
    bool is_var;
    std::string label;
    std::vector<int> kids;
  };

  int add_node(bool is_var, const std::string& label, size_t arity) {
    nodes_.push_back(Node{is_var, label, std::vector<int>(arity, -1)});
    parent_.push_back(static_cast<int>(nodes_.size()) - 1);
    return static_cast<int>(nodes_.size()) - 1;
  }

  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  std::vector<Node> nodes_;
  std::vector<int> parent_;
  std::map<std::string, int> var_node_;
  std::map<const Tree*, int> tree_base_;
  std::vector<std::pair<int, int>> work_;
};

}  // namespace detail

// Extend a solved form with new equations. nullopt on constructor clash.
// Idempotent on already-solved input; no occurs-check (rational solutions).
inline std::optional<ConstraintState> unify(
    const std::vector<std::pair<TreeTerm, TreeTerm>>& eqs,
    const ConstraintState& state) {
  detail::Unifier u;
  for (const auto& [v, t] : state.bindings)
    u.queue(u.build(TreeTerm::var(v)), u.build(t));
  for (const auto& [l, r] : eqs) u.queue(u.build(l), u.build(r));
  if (!u.solve()) return std::nullopt;
  return u.extract(state.diseqs);
}

// Resolve a term through the solved form into a graph; free variables become
// "?name" leaves, so graph bisimilarity is equality-forced-ness.
inline Tree resolve_graph(const ConstraintState& state, const TreeTerm& t) {
  TreeBuilder b;
  std::map<std::string, int> var_nodes;
  auto canon = [&](std::string v) {
    // follow var-to-var links to the class canon
    std::set<std::string> seen;
    for (;;) {
      auto it = state.bindings.find(v);
      if (it == state.bindings.end() || it->second.kind != TreeTerm::Kind::Var)
        return v;
      if (!seen.insert(v).second) return v;
      v = it->second.name;
    }
  };
  auto rec = [&](auto&& self, const TreeTerm& term) -> int {
    switch (term.kind) {
      case TreeTerm::Kind::Var: {
        std::string v = canon(term.name);
        auto it = var_nodes.find(v);
        if (it != var_nodes.end()) return it->second;
        auto bit = state.bindings.find(v);
        if (bit == state.bindings.end() ||
            bit->second.kind == TreeTerm::Kind::Var) {
          int id = b.add(std::string(1, kVarLeafPrefix) + v, 0);
          var_nodes.emplace(v, id);
          return id;
        }
        const TreeTerm& bound = bit->second;
        if (bound.kind == TreeTerm::Kind::Lit) {
          int id = self(self, bound);
          var_nodes.emplace(v, id);
          return id;
        }
        int id = b.add(bound.name, static_cast<int>(bound.args.size()));
        var_nodes.emplace(v, id);
        for (size_t i = 0; i < bound.args.size(); ++i)
          b.set_kid(id, static_cast<int>(i), self(self, bound.args[i]));
        return id;
      }
      case TreeTerm::Kind::App: {
        int id = b.add(term.name, static_cast<int>(term.args.size()));
        for (size_t i = 0; i < term.args.size(); ++i)
          b.set_kid(id, static_cast<int>(i), self(self, term.args[i]));
        return id;
      }
      default: {
        const Tree& tr = *term.tree;
        std::vector<int> ids(tr.size());
        for (size_t i = 0; i < tr.size(); ++i)
          ids[i] = b.add(tr.symbol(static_cast<int>(i)),
                         static_cast<int>(tr.kids(static_cast<int>(i)).size()));
        for (size_t i = 0; i < tr.size(); ++i) {
          const auto& ks = tr.kids(static_cast<int>(i));
          for (size_t j = 0; j < ks.size(); ++j)
            b.set_kid(ids[i], static_cast<int>(j), ids[ks[j]]);
        }
        return ids[tr.root()];
      }
    }
  };
  int root = rec(rec, t);
  return b.build(root);
}

// Decide satisfiability of the disequations under the solved form.
// A disequation is forced false exactly when both sides resolve to bisimilar
// graphs (free variables as opaque leaves): then every valuation equates
// them. Otherwise some position differs or is free, and since the alphabet
// always offers at least two trees (bottom plus any symbol), a separating
// valuation exists; disequations are independent, so SAT iff none is forced.
inline bool check_diseqs(const ConstraintState& state) {
  for (const auto& [l, r] : state.diseqs)
    if (bisimilar(resolve_graph(state, l), resolve_graph(state, r)))
      return false;
  return true;
}

/// Replace free-variable leaves by bottom: the least tree consistent with the
// solved form.
inline Tree var_leaves_to_bot(const Tree& t) {
  TreeBuilder b;
  std::vector<int> ids(t.size());
  for (size_t i = 0; i < t.size(); ++i) {
    int n = static_cast<int>(i);
    ids[i] = t.is_var_leaf(n) ? b.add(kBotSymbol, 0)
                              : b.add(t.symbol(n), static_cast<int>(t.kids(n).size()));
  }
  for (size_t i = 0; i < t.size(); ++i) {
    if (t.is_var_leaf(static_cast<int>(i))) continue;
    const auto& ks = t.kids(static_cast<int>(i));
    for (size_t j = 0; j < ks.size(); ++j)
      b.set_kid(ids[i], static_cast<int>(j), ids[ks[j]]);
  }
  return b.build(ids[t.root()]);
}

// ---------------------------------------------------------------------------
// Ground embeddings between trees and predicates over a finite carrier.

// i(t) = the predicate "t lies below" over the carrier.
inline std::vector<bool> i_iota(const FinitePrefix& t,
                                const std::vector<FinitePrefix>& carrier) {
  RankedAlphabet common;
  common.has_bot = true;
  for (auto& [s, ar] : t.occurring_symbols())
    if (s != kBotSymbol) common.add(s, ar);
  for (const auto& c : carrier)
    for (auto& [s, ar] : c.occurring_symbols())
      if (s != kBotSymbol) common.add(s, ar);
  std::vector<bool> out;
  out.reserve(carrier.size());
  for (const auto& c : carrier) out.push_back(subtree_order(t, c, &common));
  return out;
}

// j(p) = bottom if p is empty, else the least selected element, taking the
// deterministic tie-break order on incomparable minimal elements.
inline Tree j_iota(const std::vector<bool>& p,
                   const std::vector<FinitePrefix>& carrier) {
  if (p.size() != carrier.size())
    throw TreeError("j_iota: predicate and carrier sizes differ");
  RankedAlphabet common;
  common.has_bot = true;
  for (const auto& c : carrier)
    for (auto& [s, ar] : c.occurring_symbols())
      if (s != kBotSymbol) common.add(s, ar);
  std::vector<const FinitePrefix*> sel;
  for (size_t i = 0; i < p.size(); ++i)
    if (p[i]) sel.push_back(&carrier[i]);
  if (sel.empty()) return Tree::bot();
  std::vector<const FinitePrefix*> minimal;
  for (const FinitePrefix* m : sel) {
    bool is_min = true;
    for (const FinitePrefix* s : sel) {
      if (*s == *m) continue;
      if (subtree_order(*s, *m, &common)) {
        is_min = false;
        break;
      }
    }
    if (is_min) minimal.push_back(m);
  }
  const FinitePrefix* best = minimal.front();
  for (const FinitePrefix* m : minimal)
    if (cmp_total(*m, *best) < 0) best = m;
  return *best;
}

}  // namespace horseq
