#pragma once

// Text front end. One lexer feeds four little recursive-descent parsers:
// trees, sorts, grammars, programs. Files are line-structured: a section
// header (terminals:/start:/rules:/env:/defs:/goal:) sits at column 1, an
// entry starts on its own line, and an entry continues over lines indented
// past its first token. `#` starts a comment.
//
// Grammars declare no nonterminal sorts; they are inferred by unification
// from the rules, and any position left unconstrained defaults to the
// individual sort. Programs declare sorts in env:, so goal elaboration is
// sort-directed: it is what splits an application into first-order and
// relational arguments, and what sorts unannotated lambda binders.

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "horseq/hochc.hpp"
#include "horseq/hors.hpp"
#include "horseq/sorts.hpp"
#include "horseq/trees.hpp"

namespace horseq {

struct ParseError : std::runtime_error {
  int line, col;
  ParseError(int l, int c, const std::string& msg)
      : std::runtime_error(std::to_string(l) + ":" + std::to_string(c) + ": " +
                           msg),
        line(l),
        col(c) {}
};

namespace detail {

struct Token {
  enum Kind {
    Ident, Num, LParen, RParen, LBrack, RBrack, Comma, Dot, Colon,
    Assign, NeOp, LamOp, AndOp, OrOp, ArrowOp, End
  };
  Kind kind = End;
  std::string text;
  int line = 0, col = 0;
  bool line_head = false;  // first token on its line
};

inline bool ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '?';
}
inline bool ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_' || c == '~' || c == '@';
}

inline std::vector<Token> lex(const std::string& text) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  int last_line = 0;
  auto push = [&](Token::Kind k, std::string s, int l, int c) {
    Token t;
    t.kind = k;
    t.text = std::move(s);
    t.line = l;
    t.col = c;
    t.line_head = l != last_line;
    last_line = l;
    out.push_back(std::move(t));
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == '\n') { ++line; col = 1; ++i; continue; }
    if (c == ' ' || c == '\t' || c == '\r') { ++col; ++i; continue; }
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
      continue;
    }
    int l = line, cl = col;
    auto two = [&](char a, char b) {
      return c == a && i + 1 < text.size() && text[i + 1] == b;
    };
    if (two('!', '=')) { push(Token::NeOp, "!=", l, cl); i += 2; col += 2; continue; }
    if (two('/', '\\')) { push(Token::AndOp, "/\\", l, cl); i += 2; col += 2; continue; }
    if (two('\\', '/')) { push(Token::OrOp, "\\/", l, cl); i += 2; col += 2; continue; }
    if (two('-', '>')) { push(Token::ArrowOp, "->", l, cl); i += 2; col += 2; continue; }
    switch (c) {
      case '(': push(Token::LParen, "(", l, cl); ++i; ++col; continue;
      case ')': push(Token::RParen, ")", l, cl); ++i; ++col; continue;
      case '[': push(Token::LBrack, "[", l, cl); ++i; ++col; continue;
      case ']': push(Token::RBrack, "]", l, cl); ++i; ++col; continue;
      case ',': push(Token::Comma, ",", l, cl); ++i; ++col; continue;
      case '.': push(Token::Dot, ".", l, cl); ++i; ++col; continue;
      case ':': push(Token::Colon, ":", l, cl); ++i; ++col; continue;
      case '=': push(Token::Assign, "=", l, cl); ++i; ++col; continue;
      case '\\': push(Token::LamOp, "\\", l, cl); ++i; ++col; continue;
      default: break;
    }
    if (c >= '0' && c <= '9') {
      std::string s;
      while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
        s += text[i++];
        ++col;
      }
      push(Token::Num, s, l, cl);
      continue;
    }
    if (ident_start(c)) {
      std::string s(1, c);
      ++i; ++col;
      while (i < text.size() && ident_char(text[i])) { s += text[i++]; ++col; }
      while (i < text.size() && text[i] == '\'') { s += text[i++]; ++col; }
      push(Token::Ident, s, l, cl);
      continue;
    }
    throw ParseError(l, cl, std::string("stray character '") + c + "'");
  }
  Token end;
  end.kind = Token::End;
  end.line = line;
  end.col = col;
  end.line_head = true;
  out.push_back(end);
  return out;
}

inline const std::set<std::string>& section_names() {
  static const std::set<std::string> names = {"terminals", "start", "rules",
                                             "env",       "defs",  "goal"};
  return names;
}

// Cursor over a token span. Expression parsers run inside [pos, limit).
struct Cursor {
  const std::vector<Token>* toks;
  size_t pos, limit;

  const Token& peek() const {
    if (pos < limit) return (*toks)[pos];
    static thread_local Token e;
    e = Token{};
    e.kind = Token::End;
    if (limit > 0) {
      const Token& last = (*toks)[limit - 1];
      e.line = last.line;
      e.col = last.col + static_cast<int>(last.text.size());
    }
    return e;
  }
  bool at_end() const { return pos >= limit || (*toks)[pos].kind == Token::End; }
  const Token& take() { return (*toks)[pos++]; }
  const Token& expect(Token::Kind k, const std::string& what) {
    const Token& t = peek();
    if (t.kind != k || at_end())
      throw ParseError(t.line, t.col, "expected " + what);
    return take();
  }
  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = peek();
    throw ParseError(t.line, t.col, msg);
  }
};

// --- trees: rec X. cons(succ(zero), X) ------------------------------------

struct RecFrame {
  std::vector<std::pair<int, int>> patches;  // (node, slot) awaiting the body
};

inline int tree_node(Cursor& cur, TreeBuilder& b,
                     std::map<std::string, std::vector<RecFrame*>>& bound,
                     std::string* ref_out);

inline int tree_rec(Cursor& cur, TreeBuilder& b,
                    std::map<std::string, std::vector<RecFrame*>>& bound) {
  const Token& kw = cur.take();  // 'rec'
  const Token& name = cur.expect(Token::Ident, "a rec-bound name");
  cur.expect(Token::Dot, "'.' after the rec binder");
  RecFrame frame;
  bound[name.text].push_back(&frame);
  std::string ref;
  int id = tree_node(cur, b, bound, &ref);
  bound[name.text].pop_back();
  if (id < 0)
    throw ParseError(kw.line, kw.col,
                     "rec body reduces to a bare variable");
  for (auto [n, s] : frame.patches) b.set_kid(n, s, id);
  return id;
}

// returns a node id, or -1 with *ref_out set when the term is a rec-bound
// variable (the caller owns the kid slot to patch)
inline int tree_node(Cursor& cur, TreeBuilder& b,
                     std::map<std::string, std::vector<RecFrame*>>& bound,
                     std::string* ref_out) {
  const Token& t = cur.peek();
  if (t.kind == Token::Ident && t.text == "rec")
    return tree_rec(cur, b, bound);
  const Token& head = cur.expect(Token::Ident, "a tree symbol");
  if (auto it = bound.find(head.text); it != bound.end() && !it->second.empty()) {
    if (!ref_out)
      throw ParseError(head.line, head.col,
                       "rec variable cannot take arguments");
    *ref_out = head.text;
    return -1;
  }
  std::vector<int> kid_ids;
  std::vector<std::pair<int, std::string>> kid_refs;  // slot -> name
  if (cur.peek().kind == Token::LParen) {
    cur.take();
    for (;;) {
      std::string ref;
      int id = tree_node(cur, b, bound, &ref);
      if (id < 0) kid_refs.emplace_back(static_cast<int>(kid_ids.size()), ref);
      kid_ids.push_back(id);
      if (cur.peek().kind == Token::Comma) { cur.take(); continue; }
      cur.expect(Token::RParen, "',' or ')' in a tree");
      break;
    }
  }
  int id = b.add(head.text, static_cast<int>(kid_ids.size()));
  for (size_t i = 0; i < kid_ids.size(); ++i)
    if (kid_ids[i] >= 0) b.set_kid(id, static_cast<int>(i), kid_ids[i]);
  for (auto& [slot, name] : kid_refs)
    bound.at(name).back()->patches.emplace_back(id, slot);
  return id;
}

inline Tree tree_expr(Cursor& cur) {
  TreeBuilder b;
  std::map<std::string, std::vector<RecFrame*>> bound;
  int root = tree_node(cur, b, bound, nullptr);
  return b.build(root);
}

// --- sorts: i, o, (i -> i) -> o -------------------------------------------

inline Sort sort_expr(Cursor& cur) {
  Sort left;
  const Token& t = cur.peek();
  if (t.kind == Token::LParen) {
    cur.take();
    left = sort_expr(cur);
    cur.expect(Token::RParen, "')' in a sort");
  } else {
    const Token& id = cur.expect(Token::Ident, "a sort (i, o, or parentheses)");
    if (id.text == "i") left = Sort::iota();
    else if (id.text == "o") left = Sort::o();
    else throw ParseError(id.line, id.col, "unknown sort " + id.text);
  }
  if (cur.peek().kind == Token::ArrowOp) {
    cur.take();
    return Sort::arrow(left, sort_expr(cur));
  }
  return left;
}

// --- applicative grammar bodies -------------------------------------------

inline AppTerm hors_atom(Cursor& cur);

inline AppTerm hors_expr(Cursor& cur) {
  AppTerm t = hors_atom(cur);
  for (;;) {
    Token::Kind k = cur.peek().kind;
    if (k != Token::Ident && k != Token::LParen) break;
    t.args.push_back(hors_atom(cur));
  }
  return t;
}

inline AppTerm hors_atom(Cursor& cur) {
  if (cur.peek().kind == Token::LParen) {
    cur.take();
    AppTerm t = hors_expr(cur);
    cur.expect(Token::RParen, "')'");
    return t;
  }
  const Token& id = cur.expect(Token::Ident, "a name or '('");
  AppTerm t;
  t.head = id.text;
  return t;
}

// --- sort inference for grammars ------------------------------------------

struct IType;
using ITypePtr = std::shared_ptr<IType>;
struct IType {
  enum K { Meta, Ground, Arr } k = Ground;
  int meta = -1;
  ITypePtr a, b;
  static ITypePtr ground() {
    auto t = std::make_shared<IType>();
    t->k = Ground;
    return t;
  }
  static ITypePtr arr(ITypePtr x, ITypePtr y) {
    auto t = std::make_shared<IType>();
    t->k = Arr;
    t->a = std::move(x);
    t->b = std::move(y);
    return t;
  }
};

struct Infer {
  std::map<int, ITypePtr> subst;
  int next = 0;

  ITypePtr fresh() {
    auto t = std::make_shared<IType>();
    t->k = IType::Meta;
    t->meta = next++;
    return t;
  }
  ITypePtr resolve(ITypePtr t) {
    while (t->k == IType::Meta) {
      auto it = subst.find(t->meta);
      if (it == subst.end()) break;
      t = it->second;
    }
    return t;
  }
  bool occurs(int m, ITypePtr t) {
    t = resolve(std::move(t));
    if (t->k == IType::Meta) return t->meta == m;
    if (t->k == IType::Arr) return occurs(m, t->a) || occurs(m, t->b);
    return false;
  }
  bool unify(ITypePtr x, ITypePtr y) {
    x = resolve(std::move(x));
    y = resolve(std::move(y));
    if (x->k == IType::Meta && y->k == IType::Meta && x->meta == y->meta)
      return true;
    if (x->k == IType::Meta) {
      if (occurs(x->meta, y)) return false;
      subst[x->meta] = y;
      return true;
    }
    if (y->k == IType::Meta) return unify(y, x);
    if (x->k != y->k) return false;
    if (x->k == IType::Ground) return true;
    return unify(x->a, y->a) && unify(x->b, y->b);
  }
  Sort to_sort(ITypePtr t) {
    t = resolve(std::move(t));
    if (t->k == IType::Arr) return Sort::arrow(to_sort(t->a), to_sort(t->b));
    return Sort::iota();  // ground, or a position nothing constrained
  }
};

}  // namespace detail

// --- file-level parsing -----------------------------------------------------

namespace detail {

struct Section {
  std::string name;
  int line = 0, col = 0;
  size_t begin = 0, end = 0;  // token span of the body
};

inline bool is_section_header(const std::vector<Token>& toks, size_t i) {
  return toks[i].kind == Token::Ident && toks[i].line_head &&
         toks[i].col == 1 && section_names().count(toks[i].text) &&
         toks[i + 1].kind == Token::Colon;
}

inline std::vector<Section> split_sections(const std::vector<Token>& toks) {
  std::vector<Section> out;
  size_t i = 0;
  if (toks[i].kind != Token::End && !is_section_header(toks, i))
    throw ParseError(toks[i].line, toks[i].col,
                     "expected a section header (terminals:, start:, ...)");
  while (toks[i].kind != Token::End) {
    Section s;
    s.name = toks[i].text;
    s.line = toks[i].line;
    s.col = toks[i].col;
    i += 2;  // name and colon
    s.begin = i;
    while (toks[i].kind != Token::End && !is_section_header(toks, i)) ++i;
    s.end = i;
    out.push_back(std::move(s));
  }
  return out;
}

// an entry runs from its first token to the next line whose first token is
// not indented past the entry's own column
inline size_t entry_end(const std::vector<Token>& toks, size_t begin,
                        size_t limit) {
  int guard = toks[begin].col;
  size_t i = begin + 1;
  while (i < limit && !(toks[i].line_head && toks[i].col <= guard)) ++i;
  return i;
}

inline RankedAlphabet parse_terminals(const std::vector<Token>& toks,
                                      const Section& s) {
  RankedAlphabet a;
  size_t i = s.begin;
  while (i < s.end) {
    const Token& name = toks[i];
    if (name.kind != Token::Ident)
      throw ParseError(name.line, name.col, "expected a terminal name");
    if (i + 2 >= s.end || toks[i + 1].kind != Token::Colon ||
        toks[i + 2].kind != Token::Num)
      throw ParseError(name.line, name.col,
                       "terminal entries read name: arity");
    int arity = 0;
    try {
      arity = std::stoi(toks[i + 2].text);
    } catch (const std::exception&) {
      throw ParseError(toks[i + 2].line, toks[i + 2].col,
                       "arity out of range");
    }
    if (name.text == kBotSymbol && arity == 0) {
      a.has_bot = true;
    } else {
      if (a.symbols.count(name.text))
        throw ParseError(name.line, name.col,
                         "terminal declared twice: " + name.text);
      a.add(name.text, arity);
    }
    i += 3;
  }
  return a;
}

}  // namespace detail

inline Tree parse_tree(const std::string& text) {
  auto toks = detail::lex(text);
  detail::Cursor cur{&toks, 0, toks.size()};
  if (cur.at_end()) cur.fail("empty tree");
  Tree t = detail::tree_expr(cur);
  if (!cur.at_end()) cur.fail("trailing input after the tree");
  return t;
}

inline Sort parse_sort(const std::string& text) {
  auto toks = detail::lex(text);
  detail::Cursor cur{&toks, 0, toks.size()};
  Sort s = detail::sort_expr(cur);
  if (!cur.at_end()) cur.fail("trailing input after the sort");
  return s;
}

inline Hors parse_hors(const std::string& text) {
  auto toks = detail::lex(text);
  auto sections = detail::split_sections(toks);

  Hors h;
  bool saw_terminals = false, saw_start = false, saw_rules = false;
  struct RawRule {
    std::vector<std::string> params;
    AppTerm body;
    int line, col;
  };
  std::map<std::string, RawRule> raw;
  std::vector<std::string> rule_order;

  for (const auto& s : sections) {
    if (s.name == "terminals") {
      if (saw_terminals)
        throw ParseError(s.line, s.col, "duplicate terminals section");
      saw_terminals = true;
      h.alphabet = detail::parse_terminals(toks, s);
    } else if (s.name == "start") {
      if (saw_start) throw ParseError(s.line, s.col, "duplicate start section");
      saw_start = true;
      detail::Cursor cur{&toks, s.begin, s.end};
      h.start = cur.expect(detail::Token::Ident, "the start nonterminal").text;
      if (!cur.at_end()) cur.fail("trailing input after the start symbol");
    } else if (s.name == "rules") {
      if (saw_rules) throw ParseError(s.line, s.col, "duplicate rules section");
      saw_rules = true;
      size_t i = s.begin;
      while (i < s.end) {
        size_t end = detail::entry_end(toks, i, s.end);
        detail::Cursor cur{&toks, i, end};
        const detail::Token& name =
            cur.expect(detail::Token::Ident, "a rule head");
        RawRule r;
        r.line = name.line;
        r.col = name.col;
        while (cur.peek().kind == detail::Token::Ident)
          r.params.push_back(cur.take().text);
        cur.expect(detail::Token::Assign, "'=' in a rule");
        r.body = detail::hors_expr(cur);
        if (!cur.at_end()) cur.fail("trailing input after the rule body");
        if (raw.count(name.text))
          throw ParseError(name.line, name.col,
                           "two rules for nonterminal " + name.text);
        std::set<std::string> seen(r.params.begin(), r.params.end());
        if (seen.size() != r.params.size())
          throw ParseError(name.line, name.col,
                           "repeated parameter in rule for " + name.text);
        raw[name.text] = std::move(r);
        rule_order.push_back(name.text);
        i = end;
      }
    } else {
      throw ParseError(s.line, s.col,
                       "section " + s.name + " does not belong in a grammar");
    }
  }
  if (!saw_terminals) throw ParseError(1, 1, "missing terminals section");
  if (!saw_start) throw ParseError(1, 1, "missing start section");
  if (!saw_rules || raw.empty()) throw ParseError(1, 1, "missing rules");
  if (!raw.count(h.start))
    throw ParseError(1, 1, "start symbol " + h.start + " has no rule");

  // infer nonterminal sorts: one type per rule head built from parameter
  // metavariables, every body constrained to the individual sort
  detail::Infer inf;
  std::map<std::string, detail::ITypePtr> nt_type;
  std::map<std::string, std::vector<detail::ITypePtr>> param_types;
  for (const std::string& n : rule_order) {
    auto& pts = param_types[n];
    for (size_t k = 0; k < raw[n].params.size(); ++k) pts.push_back(inf.fresh());
    detail::ITypePtr t = detail::IType::ground();
    for (auto it = pts.rbegin(); it != pts.rend(); ++it)
      t = detail::IType::arr(*it, t);
    nt_type[n] = t;
  }
  for (const std::string& n : rule_order) {
    const RawRule& r = raw[n];
    std::map<std::string, detail::ITypePtr> env;
    for (size_t k = 0; k < r.params.size(); ++k)
      env[r.params[k]] = param_types[n][k];
    auto infer_term = [&](auto&& self, const AppTerm& t) -> detail::ITypePtr {
      detail::ITypePtr ht;
      if (auto it = env.find(t.head); it != env.end()) {
        ht = it->second;
      } else if (auto jt = nt_type.find(t.head); jt != nt_type.end()) {
        ht = jt->second;
      } else if (auto st = h.alphabet.symbols.find(t.head);
                 st != h.alphabet.symbols.end()) {
        ht = detail::IType::ground();
        for (int k = 0; k < st->second; ++k)
          ht = detail::IType::arr(detail::IType::ground(), ht);
      } else if (t.head == kBotSymbol && h.alphabet.has_bot) {
        ht = detail::IType::ground();
      } else {
        throw ParseError(r.line, r.col,
                         "unknown name " + t.head + " in rule for " + n);
      }
      for (const AppTerm& a : t.args) {
        detail::ITypePtr at = self(self, a);
        detail::ITypePtr res = inf.fresh();
        if (!inf.unify(ht, detail::IType::arr(at, res)))
          throw ParseError(r.line, r.col,
                           "sorts do not fit in rule for " + n + " at " +
                               t.head);
        ht = res;
      }
      return ht;
    };
    if (!inf.unify(infer_term(infer_term, r.body), detail::IType::ground()))
      throw ParseError(r.line, r.col,
                       "rule body for " + n + " is not of the individual sort");
  }
  for (const std::string& n : rule_order) {
    h.nts[n] = inf.to_sort(nt_type[n]);
    h.rules[n] = Rule{raw[n].params, raw[n].body};
  }
  sort_check_hors(h);
  return h;
}

// --- programs ---------------------------------------------------------------

namespace detail {

// surface goal expressions, before sorts split the application forms
struct SNode;
using SPtr = std::shared_ptr<SNode>;
struct SNode {
  enum K { Id, TrueL, FalseL, App, Lam, Ex, And, Or, Eq, Ne, Lit } k = Id;
  std::string name;
  std::optional<Sort> ann;
  SPtr a, b;
  std::vector<SPtr> args;
  std::shared_ptr<Tree> lit;
  int line = 0, col = 0;
};

inline SPtr snode(SNode::K k, const Token& at) {
  auto n = std::make_shared<SNode>();
  n->k = k;
  n->line = at.line;
  n->col = at.col;
  return n;
}

inline SPtr goal_expr(Cursor& cur);

inline SPtr goal_atom(Cursor& cur) {
  const Token& t = cur.peek();
  if (t.kind == Token::LParen) {
    cur.take();
    SPtr g = goal_expr(cur);
    cur.expect(Token::RParen, "')'");
    return g;
  }
  if (t.kind == Token::LBrack) {
    cur.take();
    SPtr g = snode(SNode::Lit, t);
    g->lit = std::make_shared<Tree>(tree_expr(cur));
    cur.expect(Token::RBrack, "']' after a tree literal");
    return g;
  }
  const Token& id = cur.expect(Token::Ident, "a name, '(' or '['");
  if (id.text == "true" || id.text == "false")
    throw ParseError(id.line, id.col, id.text + " cannot be applied");
  SPtr g = snode(SNode::Id, id);
  g->name = id.text;
  return g;
}

inline SPtr goal_app(Cursor& cur) {
  SPtr head = goal_atom(cur);
  std::vector<SPtr> args;
  for (;;) {
    Token::Kind k = cur.peek().kind;
    if (k != Token::Ident && k != Token::LParen && k != Token::LBrack) break;
    if (k == Token::Ident &&
        (cur.peek().text == "true" || cur.peek().text == "false" ||
         cur.peek().text == "exists"))
      break;
    args.push_back(goal_atom(cur));
  }
  if (args.empty()) return head;
  SPtr g = std::make_shared<SNode>();
  g->k = SNode::App;
  g->line = head->line;
  g->col = head->col;
  g->a = std::move(head);
  g->args = std::move(args);
  return g;
}

inline SPtr goal_cmp(Cursor& cur) {
  const Token& t = cur.peek();
  if (t.kind == Token::Ident && (t.text == "true" || t.text == "false")) {
    cur.take();
    return snode(t.text == "true" ? SNode::TrueL : SNode::FalseL, t);
  }
  SPtr l = goal_app(cur);
  Token::Kind k = cur.peek().kind;
  if (k == Token::Assign || k == Token::NeOp) {
    const Token& op = cur.take();
    SPtr g = snode(k == Token::Assign ? SNode::Eq : SNode::Ne, op);
    g->a = std::move(l);
    g->b = goal_app(cur);
    return g;
  }
  return l;
}

inline bool at_binder(const Cursor& cur) {
  const Token& t = cur.peek();
  return t.kind == Token::LamOp ||
         (t.kind == Token::Ident && t.text == "exists");
}

inline SPtr goal_conj(Cursor& cur) {
  SPtr l = goal_cmp(cur);
  while (cur.peek().kind == Token::AndOp) {
    const Token& op = cur.take();
    SPtr g = snode(SNode::And, op);
    g->a = std::move(l);
    if (at_binder(cur)) {  // a binder on the right scopes over the rest
      g->b = goal_expr(cur);
      return g;
    }
    g->b = goal_cmp(cur);
    l = std::move(g);
  }
  return l;
}

inline SPtr goal_disj(Cursor& cur) {
  SPtr l = goal_conj(cur);
  while (cur.peek().kind == Token::OrOp) {
    const Token& op = cur.take();
    SPtr g = snode(SNode::Or, op);
    g->a = std::move(l);
    if (at_binder(cur)) {
      g->b = goal_expr(cur);
      return g;
    }
    g->b = goal_conj(cur);
    l = std::move(g);
  }
  return l;
}

inline SPtr goal_expr(Cursor& cur) {
  const Token& t = cur.peek();
  if (t.kind == Token::LamOp ||
      (t.kind == Token::Ident && t.text == "exists")) {
    bool lam = t.kind == Token::LamOp;
    cur.take();
    const Token& name = cur.expect(Token::Ident, "a binder name");
    SPtr g = snode(lam ? SNode::Lam : SNode::Ex, t);
    g->name = name.text;
    if (cur.peek().kind == Token::Colon) {
      cur.take();
      g->ann = sort_expr(cur);
    }
    cur.expect(Token::Dot, "'.' after the binder");
    g->a = goal_expr(cur);
    return g;
  }
  return goal_disj(cur);
}

struct GoalCtx {
  const SortEnv* env;
  const RankedAlphabet* alpha;
  std::map<std::string, Sort> bound;
};

inline TreeTerm elab_tt(const SPtr& n, const GoalCtx& cx) {
  switch (n->k) {
    case SNode::Id: {
      if (auto it = cx.bound.find(n->name); it != cx.bound.end()) {
        if (!it->second.is_iota())
          throw ParseError(n->line, n->col,
                           n->name + " is relational, not a first-order term");
        return TreeTerm::var(n->name);
      }
      if (auto st = cx.alpha->symbols.find(n->name);
          st != cx.alpha->symbols.end()) {
        if (st->second != 0)
          throw ParseError(n->line, n->col,
                           n->name + " needs " + std::to_string(st->second) +
                               " arguments");
        return TreeTerm::app(n->name, {});
      }
      if (n->name == kBotSymbol && cx.alpha->has_bot)
        return TreeTerm::app(kBotSymbol, {});
      if (auto it = cx.env->find(n->name); it != cx.env->end()) {
        if (!it->second.is_iota())
          throw ParseError(n->line, n->col,
                           n->name + " is relational, not a first-order term");
        return TreeTerm::var(n->name);
      }
      return TreeTerm::var(n->name);  // free, sorted by the caller
    }
    case SNode::App: {
      if (n->a->k != SNode::Id)
        throw ParseError(n->line, n->col, "a term must be symbol-headed");
      const std::string& h = n->a->name;
      bool shadowed = cx.bound.count(h) != 0;
      int arity = -1;
      if (!shadowed) {
        if (auto st = cx.alpha->symbols.find(h); st != cx.alpha->symbols.end())
          arity = st->second;
        else if (h == kBotSymbol && cx.alpha->has_bot)
          arity = 0;
      }
      if (arity != static_cast<int>(n->args.size()))
        throw ParseError(n->line, n->col,
                         "unknown symbol in a term: " + h + "/" +
                             std::to_string(n->args.size()));
      std::vector<TreeTerm> args;
      for (const SPtr& a : n->args) args.push_back(elab_tt(a, cx));
      return TreeTerm::app(h, std::move(args));
    }
    case SNode::Lit: return TreeTerm::lit(*n->lit);
    default:
      throw ParseError(n->line, n->col, "goal syntax where a term is expected");
  }
}

inline std::pair<GoalPtr, Sort> elab_goal(const SPtr& n, GoalCtx& cx,
                                          const Sort* expected) {
  switch (n->k) {
    case SNode::TrueL: return {GoalTerm::gtrue(), Sort::o()};
    case SNode::FalseL: return {GoalTerm::gfalse(), Sort::o()};
    case SNode::Eq:
    case SNode::Ne: {
      TreeTerm l = elab_tt(n->a, cx), r = elab_tt(n->b, cx);
      return {n->k == SNode::Eq ? GoalTerm::eq(std::move(l), std::move(r))
                                : GoalTerm::diseq(std::move(l), std::move(r)),
              Sort::o()};
    }
    case SNode::And:
    case SNode::Or: {
      Sort o = Sort::o();
      GoalPtr a = elab_goal(n->a, cx, &o).first;
      GoalPtr b = elab_goal(n->b, cx, &o).first;
      return {n->k == SNode::And ? GoalTerm::conj(a, b) : GoalTerm::disj(a, b),
              Sort::o()};
    }
    case SNode::Ex: {
      Sort bs = n->ann.value_or(Sort::iota());
      auto saved = cx.bound;
      cx.bound[n->name] = bs;
      Sort o = Sort::o();
      GoalPtr body = elab_goal(n->a, cx, &o).first;
      cx.bound = std::move(saved);
      return {GoalTerm::exists(n->name, bs, body), Sort::o()};
    }
    case SNode::Lam: {
      Sort bs = n->ann ? *n->ann
                       : (expected && expected->is_arrow() ? expected->arg()
                                                           : Sort::iota());
      auto saved = cx.bound;
      cx.bound[n->name] = bs;
      const Sort* bexp = nullptr;
      Sort bexp_store;
      if (expected && expected->is_arrow()) {
        bexp_store = expected->res();
        bexp = &bexp_store;
      }
      auto [body, body_sort] = elab_goal(n->a, cx, bexp);
      cx.bound = std::move(saved);
      return {GoalTerm::lambda(n->name, bs, body), Sort::arrow(bs, body_sort)};
    }
    case SNode::Id: {
      Sort s;
      if (auto it = cx.bound.find(n->name); it != cx.bound.end()) s = it->second;
      else if (auto jt = cx.env->find(n->name); jt != cx.env->end())
        s = jt->second;
      else
        throw ParseError(n->line, n->col,
                         "unknown relational name " + n->name);
      if (s.is_iota())
        throw ParseError(n->line, n->col,
                         n->name + " is a first-order term, not a goal");
      return {GoalTerm::var(n->name), s};
    }
    case SNode::App: {
      auto [g, gs] = elab_goal(n->a, cx, nullptr);
      for (const SPtr& arg : n->args) {
        if (!gs.is_arrow())
          throw ParseError(arg->line, arg->col, "too many arguments");
        if (gs.arg().is_iota()) {
          g = GoalTerm::app_ind(g, elab_tt(arg, cx));
        } else {
          Sort want = gs.arg();
          g = GoalTerm::app_rel(g, elab_goal(arg, cx, &want).first);
        }
        gs = gs.res();
      }
      return {g, gs};
    }
    default:
      throw ParseError(n->line, n->col, "tree literal where a goal is expected");
  }
}

}  // namespace detail

struct ParsedProgram {
  Program program;
  GoalPtr goal;  // null when the file has no goal section
};

inline ParsedProgram parse_program(const std::string& text) {
  auto toks = detail::lex(text);
  auto sections = detail::split_sections(toks);

  ParsedProgram out;
  bool saw_terminals = false, saw_env = false, saw_defs = false;
  struct RawDef {
    detail::SPtr body;
    int line, col;
  };
  std::map<std::string, RawDef> raw;
  detail::SPtr raw_goal;

  for (const auto& s : sections) {
    if (s.name == "terminals") {
      if (saw_terminals)
        throw ParseError(s.line, s.col, "duplicate terminals section");
      saw_terminals = true;
      out.program.alphabet = detail::parse_terminals(toks, s);
    } else if (s.name == "env") {
      if (saw_env) throw ParseError(s.line, s.col, "duplicate env section");
      saw_env = true;
      size_t i = s.begin;
      while (i < s.end) {
        size_t end = detail::entry_end(toks, i, s.end);
        detail::Cursor cur{&toks, i, end};
        const detail::Token& name =
            cur.expect(detail::Token::Ident, "a relational variable");
        cur.expect(detail::Token::Colon, "':' in an env entry");
        Sort sort = detail::sort_expr(cur);
        if (!cur.at_end()) cur.fail("trailing input after the sort");
        if (out.program.env.count(name.text))
          throw ParseError(name.line, name.col,
                           "env declares " + name.text + " twice");
        out.program.env[name.text] = sort;
        i = end;
      }
    } else if (s.name == "defs") {
      if (saw_defs) throw ParseError(s.line, s.col, "duplicate defs section");
      saw_defs = true;
      size_t i = s.begin;
      while (i < s.end) {
        size_t end = detail::entry_end(toks, i, s.end);
        detail::Cursor cur{&toks, i, end};
        const detail::Token& name =
            cur.expect(detail::Token::Ident, "a definition head");
        cur.expect(detail::Token::Assign, "'=' in a definition");
        RawDef d;
        d.line = name.line;
        d.col = name.col;
        d.body = detail::goal_expr(cur);
        if (!cur.at_end()) cur.fail("trailing input after the definition");
        if (raw.count(name.text))
          throw ParseError(name.line, name.col,
                           "two definitions for " + name.text);
        raw[name.text] = std::move(d);
        i = end;
      }
    } else if (s.name == "goal") {
      if (raw_goal) throw ParseError(s.line, s.col, "duplicate goal section");
      detail::Cursor cur{&toks, s.begin, s.end};
      raw_goal = detail::goal_expr(cur);
      if (!cur.at_end()) cur.fail("trailing input after the goal");
    } else {
      throw ParseError(s.line, s.col,
                       "section " + s.name + " does not belong in a program");
    }
  }
  if (!saw_terminals) throw ParseError(1, 1, "missing terminals section");
  if (!saw_env) throw ParseError(1, 1, "missing env section");
  if (!saw_defs) throw ParseError(1, 1, "missing defs section");

  for (const auto& [name, d] : raw) {
    auto it = out.program.env.find(name);
    if (it == out.program.env.end())
      throw ParseError(d.line, d.col, "definition of " + name +
                                          " has no env sort");
    detail::GoalCtx cx{&out.program.env, &out.program.alphabet, {}};
    out.program.defs[name] = detail::elab_goal(d.body, cx, &it->second).first;
  }
  for (const auto& [name, sort] : out.program.env)
    if (!raw.count(name))
      throw ParseError(1, 1, "env entry " + name + " has no definition");
  if (raw_goal) {
    detail::GoalCtx cx{&out.program.env, &out.program.alphabet, {}};
    Sort o = Sort::o();
    out.goal = detail::elab_goal(raw_goal, cx, &o).first;
  }
  sort_check_program(out.program);
  return out;
}

}  // namespace horseq
