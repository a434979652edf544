#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "horseq/trees.hpp"

using namespace horseq;

namespace {

Tree rec_loop(const std::string& sym) {
  // X = sym(X)
  TreeBuilder b;
  int n = b.add(sym, 1);
  b.set_kid(n, 0, n);
  return b.build(n);
}

// --- reference unifier: textbook substitution-based, with occurs check.
// Independent of the union-find solver; used to cross-check solvability and
// solutions on the acyclic fragment.
using Subst = std::map<std::string, TreeTerm>;

TreeTerm walk(const Subst& s, TreeTerm t) {
  while (t.kind == TreeTerm::Kind::Var) {
    auto it = s.find(t.name);
    if (it == s.end()) break;
    t = it->second;
  }
  return t;
}

bool occurs(const Subst& s, const std::string& v, const TreeTerm& t0) {
  TreeTerm t = walk(s, t0);
  if (t.kind == TreeTerm::Kind::Var) return t.name == v;
  for (const TreeTerm& a : t.args)
    if (occurs(s, v, a)) return true;
  return false;
}

enum class RefOut { Solved, Clash, Cyclic };

RefOut ref_unify(const TreeTerm& l, const TreeTerm& r, Subst& s) {
  TreeTerm a = walk(s, l), b = walk(s, r);
  if (a.kind == TreeTerm::Kind::Var && b.kind == TreeTerm::Kind::Var &&
      a.name == b.name)
    return RefOut::Solved;
  if (a.kind == TreeTerm::Kind::Var) {
    if (occurs(s, a.name, b)) return RefOut::Cyclic;
    s[a.name] = b;
    return RefOut::Solved;
  }
  if (b.kind == TreeTerm::Kind::Var) {
    if (occurs(s, b.name, a)) return RefOut::Cyclic;
    s[b.name] = a;
    return RefOut::Solved;
  }
  if (a.name != b.name || a.args.size() != b.args.size()) return RefOut::Clash;
  bool cyclic = false;
  for (size_t i = 0; i < a.args.size(); ++i) {
    RefOut o = ref_unify(a.args[i], b.args[i], s);
    if (o == RefOut::Clash) return RefOut::Clash;
    if (o == RefOut::Cyclic) cyclic = true;
  }
  return cyclic ? RefOut::Cyclic : RefOut::Solved;
}

Tree ref_render(const Subst& s, const TreeTerm& t0) {
  TreeTerm t = walk(s, t0);
  if (t.kind == TreeTerm::Kind::Var) return Tree::leaf("?" + t.name);
  std::vector<Tree> kids;
  kids.reserve(t.args.size());
  for (const TreeTerm& a : t.args) kids.push_back(ref_render(s, a));
  return kids.empty() ? Tree::leaf(t.name) : Tree::node(t.name, kids);
}

// Rename free-variable leaves positionally (canonical node order), so two
// solved forms can be compared up to a consistent bijection of free names.
Tree relabel_free(const Tree& t) {
  std::map<std::string, std::string> ren;
  TreeBuilder b;
  for (size_t i = 0; i < t.size(); ++i) {
    int n = static_cast<int>(i);
    std::string sym = t.symbol(n);
    if (t.is_var_leaf(n)) {
      auto [it, ins] = ren.emplace(sym, "?" + std::to_string(ren.size()));
      sym = it->second;
    }
    b.add(sym, static_cast<int>(t.kids(n).size()));
  }
  for (size_t i = 0; i < t.size(); ++i)
    for (size_t j = 0; j < t.kids(static_cast<int>(i)).size(); ++j)
      b.set_kid(static_cast<int>(i), static_cast<int>(j),
                t.kids(static_cast<int>(i))[j]);
  return b.build(t.root());
}

TreeTerm random_term(std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 3);
  static const char* vars[] = {"w", "x", "y", "z"};
  switch (pick(rng)) {
    case 0: {
      std::uniform_int_distribution<int> pv(0, 3);
      return TreeTerm::var(vars[pv(rng)]);
    }
    case 1:
      return TreeTerm::app("zero", {});
    case 2:
      return TreeTerm::app("succ", {random_term(rng, depth - 1)});
    default:
      return TreeTerm::app(
          "cons", {random_term(rng, depth - 1), random_term(rng, depth - 1)});
  }
}

Tree random_prefix(std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 3);
  switch (pick(rng)) {
    case 0:
      return Tree::bot();
    case 1:
      return Tree::leaf("zero");
    case 2:
      return Tree::node("succ", {random_prefix(rng, depth - 1)});
    default:
      return Tree::node(
          "cons", {random_prefix(rng, depth - 1), random_prefix(rng, depth - 1)});
  }
}

}  // namespace

TEST_CASE("canonical forms identify bisimilar graphs") {
  Tree one = rec_loop("a");

  TreeBuilder b2;  // X = a(a(X)), same unfolding
  int p = b2.add("a", 1);
  int q = b2.add("a", 1);
  b2.set_kid(p, 0, q);
  b2.set_kid(q, 0, p);
  Tree two = b2.build(p);

  CHECK(one == two);
  CHECK(one.size() == 1);
  CHECK(bisimilar(one, two));
  CHECK_FALSE(one.acyclic());

  Tree fin = Tree::node("a", {Tree::node("a", {Tree::bot()})});
  CHECK(fin.acyclic());
  CHECK_FALSE(one == fin);
  CHECK_FALSE(bisimilar(one, fin));
}

TEST_CASE("leaves, bottom, ordering basics") {
  CHECK(Tree::bot().root_is_bot());
  CHECK(Tree::bot() == Tree::leaf(kBotSymbol));
  CHECK_FALSE(Tree::leaf("zero").root_is_bot());
  CHECK(Tree::leaf("zero") != Tree::leaf("succ"));

  Tree t = Tree::node("cons", {Tree::leaf("zero"), Tree::bot()});
  auto syms = t.occurring_symbols();
  CHECK(syms.at("cons") == 2);
  CHECK(syms.at("zero") == 0);
  CHECK(syms.count(kBotSymbol) == 1);
}

TEST_CASE("prefixes of rational trees") {
  Tree aw = rec_loop("a");
  CHECK(prefix(aw, 0) == Tree::bot());
  CHECK(prefix(aw, 1) == Tree::node("a", {Tree::bot()}));
  CHECK(prefix(aw, 2) == Tree::node("a", {Tree::node("a", {Tree::bot()})}));
  CHECK(prefix_depth(prefix(aw, 2)) == 2);
  CHECK(is_finite_prefix(prefix(aw, 5)));
  CHECK_FALSE(is_finite_prefix(aw));
}

TEST_CASE("subtree order") {
  Tree aw = rec_loop("a");
  CHECK(subtree_order(Tree::bot(), aw));
  CHECK(subtree_order(prefix(aw, 3), aw));
  CHECK(subtree_order(prefix(aw, 3), prefix(aw, 3)));
  CHECK_FALSE(subtree_order(prefix(aw, 3), prefix(aw, 2)));

  Tree l = Tree::node("cons", {Tree::leaf("zero"), Tree::bot()});
  Tree r = Tree::node("cons", {Tree::bot(), Tree::leaf("zero")});
  CHECK_FALSE(subtree_order(l, r));
  CHECK_FALSE(subtree_order(r, l));

  // left side must be a finite prefix
  CHECK_THROWS_AS(subtree_order(aw, aw), TreeError);
  // symbols outside the right side's alphabet are rejected, not "false"
  CHECK_THROWS_AS(subtree_order(Tree::leaf("foo"), Tree::leaf("zero")),
                  TreeError);
  RankedAlphabet common;
  common.add("foo", 0);
  common.add("zero", 0);
  CHECK_FALSE(subtree_order(Tree::leaf("foo"), Tree::leaf("zero"), &common));
}

TEST_CASE("total tie-break order") {
  CHECK(cmp_total(Tree::leaf("succ"), Tree::leaf("zero")) < 0);
  CHECK(cmp_total(Tree::leaf("zero"), Tree::leaf("zero")) == 0);
  Tree l = Tree::node("cons", {Tree::leaf("zero"), Tree::bot()});
  Tree r = Tree::node("cons", {Tree::bot(), Tree::leaf("zero")});
  // kid 0: "_bot" sorts before "zero"
  CHECK(cmp_total(r, l) < 0);
}

TEST_CASE("rational unification: frozen cases") {
  TreeTerm x = TreeTerm::var("x");
  TreeTerm y = TreeTerm::var("y");

  SECTION("x = a(x) closes into the rational loop") {
    auto st = unify({{x, TreeTerm::app("a", {x})}}, ConstraintState{});
    REQUIRE(st.has_value());
    Tree g = resolve_graph(*st, x);
    CHECK(g == rec_loop("a"));
  }

  SECTION("constructor clash") {
    auto st = unify({{TreeTerm::app("a", {x}), TreeTerm::app("b", {y})}},
                    ConstraintState{});
    CHECK_FALSE(st.has_value());
  }

  SECTION("arity clash") {
    auto st = unify({{TreeTerm::app("a", {x}), TreeTerm::app("a", {x, y})}},
                    ConstraintState{});
    CHECK_FALSE(st.has_value());
  }

  SECTION("clash hidden behind a cyclic binding still fails") {
    // x = cons(x, zero) and x = cons(x, succ(y)): second kids clash
    auto st = unify({{x, TreeTerm::app("cons", {x, TreeTerm::app("zero", {})})},
                     {x, TreeTerm::app("cons", {x, TreeTerm::app("succ", {y})})}},
                    ConstraintState{});
    CHECK_FALSE(st.has_value());
  }

  SECTION("literal graphs unify against terms") {
    auto st = unify({{x, TreeTerm::lit(rec_loop("a"))},
                     {x, TreeTerm::app("a", {y})}},
                    ConstraintState{});
    REQUIRE(st.has_value());
    CHECK(resolve_graph(*st, y) == rec_loop("a"));
  }
}

TEST_CASE("unification is idempotent and deterministic") {
  TreeTerm x = TreeTerm::var("x");
  TreeTerm y = TreeTerm::var("y");
  TreeTerm z = TreeTerm::var("z");
  auto st = unify({{x, TreeTerm::app("cons", {y, x})},
                   {y, TreeTerm::app("succ", {z})}},
                  ConstraintState{});
  REQUIRE(st.has_value());

  auto again = unify({}, *st);
  REQUIRE(again.has_value());
  CHECK(st->bindings == again->bindings);

  auto st2 = unify({{x, TreeTerm::app("cons", {y, x})},
                    {y, TreeTerm::app("succ", {z})}},
                   ConstraintState{});
  REQUIRE(st2.has_value());
  CHECK(st->bindings == st2->bindings);
}

TEST_CASE("solved forms agree with the reference unifier") {
  std::mt19937 rng(20260822);
  int solved = 0, clashed = 0, cyclic = 0;
  for (int trial = 0; trial < 600; ++trial) {
    TreeTerm l = random_term(rng, 3);
    TreeTerm r = random_term(rng, 3);
    Subst sub;
    RefOut out = ref_unify(l, r, sub);
    auto st = unify({{l, r}}, ConstraintState{});
    INFO("trial " << trial);
    switch (out) {
      case RefOut::Clash:
        ++clashed;
        CHECK_FALSE(st.has_value());
        break;
      case RefOut::Solved: {
        ++solved;
        REQUIRE(st.has_value());
        // one composite term over every variable, so the free-name bijection
        // is forced to be consistent across the whole solution
        TreeTerm all = TreeTerm::app(
            "cons", {TreeTerm::app("cons", {TreeTerm::var("w"), TreeTerm::var("x")}),
                     TreeTerm::app("cons", {TreeTerm::var("y"), TreeTerm::var("z")})});
        CHECK(relabel_free(resolve_graph(*st, all)) ==
              relabel_free(ref_render(sub, all)));
        break;
      }
      case RefOut::Cyclic:
        // outside the reference unifier's fragment; only soundness checked
        ++cyclic;
        break;
    }
    if (st.has_value())
      CHECK(bisimilar(resolve_graph(*st, l), resolve_graph(*st, r)));
  }
  // the generator must actually exercise all three outcomes
  CHECK(solved > 50);
  CHECK(clashed > 50);
  CHECK(cyclic > 5);
}

TEST_CASE("disequation independence") {
  TreeTerm x = TreeTerm::var("x");
  TreeTerm y = TreeTerm::var("y");
  TreeTerm z = TreeTerm::var("z");

  SECTION("free variables can always be separated") {
    ConstraintState st = ConstraintState{}.with_diseq(x, y);
    CHECK(check_diseqs(st));
  }

  SECTION("x != x is forced false") {
    ConstraintState st = ConstraintState{}.with_diseq(x, x);
    CHECK_FALSE(check_diseqs(st));
  }

  SECTION("bindings force both sides together") {
    auto st = unify({{x, TreeTerm::app("succ", {z})},
                     {y, TreeTerm::app("succ", {z})}},
                    ConstraintState{}.with_diseq(x, y));
    REQUIRE(st.has_value());
    CHECK_FALSE(check_diseqs(*st));
  }

  SECTION("distinct free leaves keep a separating valuation") {
    TreeTerm w = TreeTerm::var("w");
    auto st = unify({{x, TreeTerm::app("succ", {z})},
                     {y, TreeTerm::app("succ", {w})}},
                    ConstraintState{}.with_diseq(x, y));
    REQUIRE(st.has_value());
    CHECK(check_diseqs(*st));
  }

  SECTION("ground unequal sides are fine") {
    auto st = unify({{x, TreeTerm::app("zero", {})},
                     {y, TreeTerm::app("succ", {TreeTerm::app("zero", {})})}},
                    ConstraintState{}.with_diseq(x, y));
    REQUIRE(st.has_value());
    CHECK(check_diseqs(*st));
  }
}

TEST_CASE("free leaves resolve to bottom") {
  TreeTerm x = TreeTerm::var("x");
  TreeTerm y = TreeTerm::var("y");
  auto st = unify({{x, TreeTerm::app("cons", {y, x})}}, ConstraintState{});
  REQUIRE(st.has_value());
  Tree g = var_leaves_to_bot(resolve_graph(*st, x));
  TreeBuilder b;  // X = cons(_bot, X)
  int n = b.add("cons", 2);
  int bot = b.add(kBotSymbol, 0);
  b.set_kid(n, 0, bot);
  b.set_kid(n, 1, n);
  CHECK(g == b.build(n));
}

TEST_CASE("carrier embeddings") {
  Tree zero = Tree::leaf("zero");
  Tree c1 = Tree::node("cons", {zero, Tree::bot()});
  Tree c2 = Tree::node("cons", {Tree::bot(), zero});
  Tree cb = Tree::node("cons", {Tree::bot(), Tree::bot()});

  SECTION("frozen membership vector") {
    std::vector<Tree> carrier{zero, c1, cb};
    std::vector<bool> got = i_iota(cb, carrier);
    CHECK(got == std::vector<bool>{false, true, true});
  }

  SECTION("empty selection maps to bottom") {
    std::vector<Tree> carrier{zero, c1};
    CHECK(j_iota({false, false}, carrier) == Tree::bot());
  }

  SECTION("tie-break between incomparable minimal elements") {
    std::vector<Tree> carrier{c1, c2};
    // both selected, both minimal; cons(_bot, zero) sorts first
    CHECK(j_iota({true, true}, carrier) == c2);
  }

  SECTION("round trip on carrier elements") {
    std::vector<Tree> carrier{zero, c1, c2, cb, Tree::bot()};
    for (const Tree& t : carrier)
      CHECK(j_iota(i_iota(t, carrier), carrier) == t);
  }

  SECTION("round trip on random carriers") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<Tree> carrier;
      std::uniform_int_distribution<int> nsize(1, 6);
      int n = nsize(rng);
      for (int i = 0; i < n; ++i) {
        Tree t = random_prefix(rng, 3);
        bool dup = false;
        for (const Tree& u : carrier) dup = dup || u == t;
        if (!dup) carrier.push_back(t);
      }
      for (const Tree& t : carrier)
        CHECK(j_iota(i_iota(t, carrier), carrier) == t);
    }
  }

  SECTION("selection is minimal and selected") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<Tree> carrier;
      for (int i = 0; i < 4; ++i) {
        Tree t = random_prefix(rng, 2);
        bool dup = false;
        for (const Tree& u : carrier) dup = dup || u == t;
        if (!dup) carrier.push_back(t);
      }
      std::vector<bool> p;
      std::uniform_int_distribution<int> coin(0, 1);
      bool any = false;
      for (size_t i = 0; i < carrier.size(); ++i) {
        p.push_back(coin(rng) == 1);
        any = any || p.back();
      }
      Tree j = j_iota(p, carrier);
      if (!any) {
        CHECK(j == Tree::bot());
        continue;
      }
      RankedAlphabet common;
      common.has_bot = true;
      for (const Tree& c : carrier)
        for (auto& [s, ar] : c.occurring_symbols())
          if (s != kBotSymbol) common.add(s, ar);
      bool in_selection = false;
      for (size_t i = 0; i < carrier.size(); ++i) {
        if (!p[i]) continue;
        if (carrier[i] == j) in_selection = true;
        // nothing selected sits strictly below the result
        if (carrier[i] != j) CHECK_FALSE(subtree_order(carrier[i], j, &common));
      }
      CHECK(in_selection);
    }
  }
}
