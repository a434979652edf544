#include <catch2/catch_amalgamated.hpp>

#include <functional>

#include "horseq/hors.hpp"

using namespace horseq;

namespace {

AppTerm ap(std::string h, std::vector<AppTerm> as = {}) {
  return AppTerm{std::move(h), std::move(as)};
}

// S1 = G zero; G x = cons (succ x) (G (succ x))
// Produces the stream succ^1 zero, succ^2 zero, succ^3 zero, ...
Hors stream_by_steps() {
  Hors h;
  h.alphabet.add("cons", 2);
  h.alphabet.add("succ", 1);
  h.alphabet.add("zero", 0);
  h.nts["S1"] = Sort::iota();
  h.nts["G"] = Sort::arrow(Sort::iota(), Sort::iota());
  h.rules["S1"] = Rule{{}, ap("G", {ap("zero")})};
  h.rules["G"] = Rule{{"x"},
                      ap("cons", {ap("succ", {ap("x")}),
                                  ap("G", {ap("succ", {ap("x")})})})};
  h.start = "S1";
  return h;
}

// S2 = F succ; F phi = cons (phi zero) (F (B phi phi)); B phi psi x = phi (psi x)
// Produces succ^1 zero, succ^2 zero, succ^4 zero, ... by repeated composition.
Hors stream_by_doubling() {
  Hors h;
  h.alphabet.add("cons", 2);
  h.alphabet.add("succ", 1);
  h.alphabet.add("zero", 0);
  Sort i = Sort::iota();
  Sort ii = Sort::arrow(i, i);
  h.nts["S2"] = i;
  h.nts["F"] = Sort::arrow(ii, i);
  h.nts["B"] = Sort::arrow(ii, Sort::arrow(ii, ii));
  h.rules["S2"] = Rule{{}, ap("F", {ap("succ")})};
  h.rules["F"] = Rule{{"phi"},
                      ap("cons", {ap("phi", {ap("zero")}),
                                  ap("F", {ap("B", {ap("phi"), ap("phi")})})})};
  h.rules["B"] = Rule{{"phi", "psi", "x"}, ap("phi", {ap("psi", {ap("x")})})};
  h.start = "S2";
  return h;
}

// S = F zero; F x = cons (G x) (F (succ x)); G x = G (succ x)
// Every list element diverges, the spine does not.
Hors bottomless_elements() {
  Hors h;
  h.alphabet.add("cons", 2);
  h.alphabet.add("succ", 1);
  h.alphabet.add("zero", 0);
  Sort i = Sort::iota();
  h.nts["S"] = i;
  h.nts["F"] = Sort::arrow(i, i);
  h.nts["G"] = Sort::arrow(i, i);
  h.rules["S"] = Rule{{}, ap("F", {ap("zero")})};
  h.rules["F"] = Rule{{"x"},
                      ap("cons", {ap("G", {ap("x")}),
                                  ap("F", {ap("succ", {ap("x")})})})};
  h.rules["G"] = Rule{{"x"}, ap("G", {ap("succ", {ap("x")})})};
  h.start = "S";
  return h;
}

Hors tight_loop() {  // S = a S
  Hors h;
  h.alphabet.add("a", 1);
  h.nts["S"] = Sort::iota();
  h.rules["S"] = Rule{{}, ap("a", {ap("S")})};
  h.start = "S";
  return h;
}

// Depth-limited succ tower: succ^k zero with nodes at the cutoff depth
// replaced by bottom.
Tree tower(int k, int depth) {
  if (depth == 0) return Tree::bot();
  if (k == 0) return Tree::leaf("zero");
  return Tree::node("succ", {tower(k - 1, depth - 1)});
}

// Depth-limited cons spine whose element at position j (0-based) is
// succ^elem(j) zero.
Tree spine(const std::function<int(int)>& elem, int depth) {
  std::function<Tree(int, int)> rec = [&](int j, int d) -> Tree {
    if (d == 0) return Tree::bot();
    return Tree::node("cons", {tower(elem(j), d - 1), rec(j + 1, d - 1)});
  };
  return rec(0, depth);
}

RankedAlphabet with_bot(const Hors& h) {
  RankedAlphabet a = h.alphabet;
  a.has_bot = true;
  return a;
}

}  // namespace

TEST_CASE("scheme sort checking") {
  CHECK_NOTHROW(sort_check_hors(stream_by_steps()));
  CHECK_NOTHROW(sort_check_hors(stream_by_doubling()));
  CHECK_NOTHROW(sort_check_hors(bottomless_elements()));

  SECTION("over-applied body") {
    Hors h = stream_by_steps();
    h.rules["S1"] = Rule{{}, ap("zero", {ap("zero")})};
    CHECK_THROWS_AS(sort_check_hors(h), HorsError);
  }
  SECTION("under-applied rule") {
    Hors h = stream_by_steps();
    h.rules["G"] = Rule{{}, ap("S1")};
    CHECK_THROWS_AS(sort_check_hors(h), HorsError);
  }
  SECTION("argument sort mismatch") {
    Hors h = stream_by_doubling();
    h.rules["S2"] = Rule{{}, ap("F", {ap("zero")})};
    CHECK_THROWS_AS(sort_check_hors(h), HorsError);
  }
  SECTION("parameter shadowing a global") {
    Hors h = stream_by_steps();
    h.rules["G"] = Rule{{"zero"}, ap("zero")};
    CHECK_THROWS_AS(sort_check_hors(h), HorsError);
  }
  SECTION("missing rule") {
    Hors h = stream_by_steps();
    h.nts["H"] = Sort::iota();
    CHECK_THROWS_AS(sort_check_hors(h), HorsError);
  }
  SECTION("ground start required") {
    Hors h = stream_by_steps();
    h.start = "G";
    CHECK_THROWS_AS(sort_check_hors(h), HorsError);
  }
}

TEST_CASE("generated prefixes match the closed forms") {
  Hors g1 = stream_by_steps();
  Hors g2 = stream_by_doubling();
  // closed forms read off the recurrences: position j holds succ^(j+1) zero
  // for the step stream and succ^(2^j) zero for the doubling stream
  auto towers1 = [](int j) { return j + 1; };
  auto towers2 = [](int j) { return 1 << j; };

  for (int d = 1; d <= 8; ++d) {
    INFO("depth " << d);
    CHECK(generate_prefix(g1, d) == spine(towers1, d));
    CHECK(generate_prefix(g2, d) == spine(towers2, d));
  }
}

TEST_CASE("the two streams agree to depth 6 and split at depth 7") {
  Hors g1 = stream_by_steps();
  Hors g2 = stream_by_doubling();
  CHECK(generate_prefix(g1, 6) == generate_prefix(g2, 6));
  CHECK(generate_prefix(g1, 7) != generate_prefix(g2, 7));
}

TEST_CASE("prefixes grow monotonically") {
  for (const Hors& h : {stream_by_steps(), stream_by_doubling(),
                        bottomless_elements(), tight_loop()}) {
    RankedAlphabet common = with_bot(h);
    for (int d = 1; d <= 6; ++d)
      CHECK(subtree_order(generate_prefix(h, d), generate_prefix(h, d + 1),
                          &common));
  }
}

TEST_CASE("fixpoint approximants") {
  Hors g1 = stream_by_steps();

  SECTION("frozen small steps") {
    CHECK(kleene_approximant(g1, 0) == Tree::bot());
    CHECK(kleene_approximant(g1, 1) == Tree::bot());  // G zero, still blocked
    CHECK(kleene_approximant(g1, 2) ==
          Tree::node("cons", {Tree::node("succ", {Tree::leaf("zero")}),
                              Tree::bot()}));
  }

  SECTION("approximants form a chain below the tree") {
    for (const Hors& h : {stream_by_steps(), stream_by_doubling()}) {
      RankedAlphabet common = with_bot(h);
      std::vector<Tree> approx;
      for (int n = 0; n <= 7; ++n) approx.push_back(kleene_approximant(h, n));
      for (int n = 0; n <= 6; ++n)
        CHECK(subtree_order(approx[n], approx[n + 1], &common));
      for (int d = 2; d <= 6; d += 2) {
        Tree gen = generate_prefix(h, d);
        for (int n = 0; n <= 6; ++n)
          CHECK(subtree_order(prefix(approx[n], d), gen, &common));
      }
    }
  }

  SECTION("approximants converge to every finite depth") {
    for (const Hors& h : {stream_by_steps(), stream_by_doubling()}) {
      std::vector<Tree> approx;
      for (int n = 0; n <= 10; ++n) approx.push_back(kleene_approximant(h, n));
      for (int d = 1; d <= 4; ++d) {
        Tree want = generate_prefix(h, d);
        bool reached = false;
        for (const Tree& a : approx) reached = reached || prefix(a, d) == want;
        CHECK(reached);
      }
    }
  }
}

TEST_CASE("productivity flags") {
  SECTION("bottomless elements are flagged, the spine is not") {
    Hors h = bottomless_elements();
    FlagAnalysis fa(h);
    // G: both inputs map to 1, rank with digits (1,1) base 2
    CHECK(fa.space().index(h.nts.at("G"), fa.flags().at("G")) == 3);
    // F: productive for both inputs
    CHECK(fa.space().index(h.nts.at("F"), fa.flags().at("F")) == 0);
    CHECK(fa.flags().at("S").leaf() == 0);
  }

  SECTION("productive grammars are all-zero up to first order") {
    // higher-order combinators keep their honest function value, so only
    // nonterminals of order <= 1 must collapse to the constant 0
    for (const Hors& h : {stream_by_steps(), stream_by_doubling()}) {
      FlagAnalysis fa(h);
      for (const auto& [nt, s] : h.nts) {
        if (s.order() > 1) continue;
        INFO(nt);
        CHECK(fa.space().index(s, fa.flags().at(nt)) == 0);
      }
    }
    // the composer maps productive transformers to a productive transformer
    Hors g2 = stream_by_doubling();
    FlagAnalysis fa(g2);
    CHECK(fa.config_value(ap("B", {ap("succ"), ap("succ"), ap("zero")})) == 0);
  }

  SECTION("a transparent wrapper hides productivity") {
    // S = a S with a transparent: the tree is a^w, which counts as bottomless
    Hors h = tight_loop();
    CHECK(divergence_flags(h).at("S").leaf() == 0);
    CHECK(divergence_flags(h, {"a"}).at("S").leaf() == 1);
  }

  SECTION("flags agree with the operational view") {
    // every ground subconfiguration of small prefixes: flag 1 iff the
    // generated subtree is bottom at unlimited depth budget
    Hors h = bottomless_elements();
    FlagAnalysis fa(h);
    size_t fuel = 500;  // enough to show it spins, small enough to stay cheap
    // G zero diverges silently; F zero produces; succ-headed is immediate
    CHECK(fa.config_value(ap("G", {ap("zero")})) == 1);
    CHECK(fa.config_value(ap("F", {ap("zero")})) == 0);
    CHECK(fa.config_value(ap("succ", {ap("zero")})) == 0);
    // the reducer would spin on the flagged one
    CHECK_THROWS_AS(head_reduce(h, ap("G", {ap("zero")}), fuel), HorsError);
  }

  SECTION("transparent symbols must be unary terminals") {
    CHECK_THROWS_AS(divergence_flags(stream_by_steps(), {"cons"}), HorsError);
    CHECK_THROWS_AS(divergence_flags(stream_by_steps(), {"nope"}), HorsError);
  }
}

TEST_CASE("rational reconstruction") {
  SECTION("tight loop gives the one-node stream") {
    auto t = rational_tree_of(tight_loop());
    REQUIRE(t.has_value());
    TreeBuilder b;
    int n = b.add("a", 1);
    b.set_kid(n, 0, n);
    CHECK(*t == b.build(n));
  }

  SECTION("finite values come out whole") {
    Hors h;
    h.alphabet.add("cons", 2);
    h.alphabet.add("zero", 0);
    h.nts["S"] = Sort::iota();
    h.rules["S"] = Rule{{}, ap("cons", {ap("zero"), ap("zero")})};
    h.start = "S";
    auto t = rational_tree_of(h);
    REQUIRE(t.has_value());
    CHECK(*t == Tree::node("cons", {Tree::leaf("zero"), Tree::leaf("zero")}));
  }

  SECTION("bottomless subtrees become bottoms") {
    auto t = rational_tree_of(bottomless_elements(), 64);
    // configurations F (succ^k zero) never repeat: not rational
    CHECK_FALSE(t.has_value());
  }

  SECTION("ever-growing streams are refused") {
    CHECK_FALSE(rational_tree_of(stream_by_steps(), 256).has_value());
            }

  SECTION("a loop below a constructor") {
    // S = cons zero S
    Hors h;
    h.alphabet.add("cons", 2);
    h.alphabet.add("zero", 0);
    h.nts["S"] = Sort::iota();
    h.rules["S"] = Rule{{}, ap("cons", {ap("zero"), ap("S")})};
    h.start = "S";
    auto t = rational_tree_of(h);
    REQUIRE(t.has_value());
    TreeBuilder b;
    int c = b.add("cons", 2);
    int z = b.add("zero", 0);
    b.set_kid(c, 0, z);
    b.set_kid(c, 1, c);
    CHECK(*t == b.build(c));
  }
}

TEST_CASE("reduction plumbing") {
  Hors g1 = stream_by_steps();
  size_t fuel = 1000;
  AppTerm r = head_reduce(g1, ap("S1"), fuel);
  CHECK(r.head == "cons");
  CHECK(app_str(r) == "cons (succ zero) (G (succ zero))");

  SECTION("under-application is an error") {
    size_t f2 = 10;
    CHECK_THROWS_AS(head_reduce(g1, ap("G"), f2), HorsError);
  }
}
