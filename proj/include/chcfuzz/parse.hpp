/// \file parse.hpp
/// \brief SMT-LIB2 front end for the HORN fragment.
///
/// Accepted clause surfaces: implication form, the disjunctive form
/// (or (not b1) ... h), bare facts, (forall V (not body)) and
/// (not (exists V body)) queries. Every assertion is normalized to
/// forall bound. body -> head with the surface form remembered so the
/// printer can reproduce it.
///
/// `let` bindings are expanded at parse time, `(! t :attr ...)`
/// annotations are stripped, and bound variables that shadow an outer
/// binding are renamed apart.

#pragma once

#include <cctype>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "print.hpp"
#include "system.hpp"

namespace chcfuzz {

struct Position {
  int line = 1;
  int col = 1;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(Position pos, const std::string& msg)
      : std::runtime_error("line " + std::to_string(pos.line) + " column " +
                           std::to_string(pos.col) + ": " + msg),
        position(pos) {}
  Position position;
};

// ---------------------------------------------------------------------------
// S-expressions
// ---------------------------------------------------------------------------

struct SExpr {
  bool is_atom = true;
  std::string atom;  // token text, symbols unquoted
  std::vector<SExpr> items;
  Position pos;

  bool is_sym(const char* s) const { return is_atom && atom == s; }
};

namespace detail {

class SExprReader {
 public:
  explicit SExprReader(const std::string& text) : text_(text) {}

  std::vector<SExpr> read_all() {
    std::vector<SExpr> out;
    skip_ws();
    while (pos_ < text_.size()) {
      out.push_back(read());
      skip_ws();
    }
    return out;
  }

 private:
  SExpr read() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError(here(), "unexpected end of input");
    if (text_[pos_] == '(') {
      SExpr e;
      e.is_atom = false;
      e.pos = here();
      advance();
      skip_ws();
      while (pos_ < text_.size() && text_[pos_] != ')') {
        e.items.push_back(read());
        skip_ws();
      }
      if (pos_ >= text_.size()) throw ParseError(e.pos, "unbalanced '('");
      advance();  // ')'
      return e;
    }
    if (text_[pos_] == ')') throw ParseError(here(), "unexpected ')'");
    return read_atom();
  }

  SExpr read_atom() {
    SExpr e;
    e.pos = here();
    char c = text_[pos_];
    if (c == '|') {
      advance();
      std::string sym;
      while (pos_ < text_.size() && text_[pos_] != '|') {
        sym += text_[pos_];
        advance();
      }
      if (pos_ >= text_.size()) throw ParseError(e.pos, "unterminated quoted symbol");
      advance();
      e.atom = sym;
      return e;
    }
    if (c == '"') {
      std::string lit = "\"";
      advance();
      while (pos_ < text_.size()) {
        if (text_[pos_] == '"') {
          if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '"') {
            lit += "\"\"";
            advance();
            advance();
            continue;
          }
          break;
        }
        lit += text_[pos_];
        advance();
      }
      if (pos_ >= text_.size()) throw ParseError(e.pos, "unterminated string literal");
      advance();
      e.atom = lit + "\"";
      return e;
    }
    std::string tok;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != ';') {
      tok += text_[pos_];
      advance();
    }
    e.atom = tok;
    return e;
  }

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  Position here() const { return {line_, col_}; }

  const std::string& text_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

inline bool is_numeral_token(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

inline bool is_decimal_token(const std::string& s) {
  auto dot = s.find('.');
  if (dot == std::string::npos || dot == 0) return false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (i == dot) continue;
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Term parsing environment
// ---------------------------------------------------------------------------

/// Resolves symbols while parsing terms: lexical scopes first (quantifier
/// bindings and expanded lets), then system declarations.
class TermEnv {
 public:
  explicit TermEnv(const ChcSystem& sys) : sys_(sys) {}

  void push_scope() { scopes_.emplace_back(); }
  void pop_scope() { scopes_.pop_back(); }

  void bind(const std::string& name, TermPtr value) {
    scopes_.back()[name] = std::move(value);
  }

  const TermPtr* lookup(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return &f->second;
    }
    return nullptr;
  }

  bool name_in_scope(const std::string& name) const { return lookup(name) != nullptr; }

  /// A name not visible in any scope and not declared in the system.
  std::string fresh(const std::string& base) const {
    auto taken = [&](const std::string& n) {
      return name_in_scope(n) || sys_.declares_symbol(n);
    };
    if (!taken(base)) return base;
    for (unsigned k = 0;; ++k) {
      std::string cand = base + "!" + std::to_string(k);
      if (!taken(cand)) return cand;
    }
  }

  const ChcSystem& system() const { return sys_; }

 private:
  const ChcSystem& sys_;
  std::vector<std::map<std::string, TermPtr>> scopes_;
};

// ---------------------------------------------------------------------------
// Term parsing (shared by the script, model, and tactic-goal readers)
// ---------------------------------------------------------------------------

class TermParser {
 public:
  explicit TermParser(const ChcSystem& sys) : sys_(sys) {}

  SortPtr parse_sort(const SExpr& e) const {
    if (e.is_atom) {
      if (e.atom == "Bool") return bool_sort();
      if (e.atom == "Int") return int_sort();
      if (e.atom == "Real") return real_sort();
      for (const auto& s : sys_.sort_decls)
        if (s == e.atom) return uninterpreted_sort(e.atom);
      throw ParseError(e.pos, "unsupported or undeclared sort '" + e.atom +
                                  "' (supported: Bool, Int, Real, BitVec, Array, "
                                  "declared uninterpreted sorts)");
    }
    if (e.items.size() == 3 && e.items[0].is_sym("_") && e.items[1].is_sym("BitVec")) {
      if (!detail::is_numeral_token(e.items[2].atom))
        throw ParseError(e.items[2].pos, "expected a bit-width");
      unsigned w = static_cast<unsigned>(std::stoul(e.items[2].atom));
      if (w == 0) throw ParseError(e.items[2].pos, "BitVec width must be >= 1");
      return bitvec_sort(w);
    }
    if (e.items.size() == 3 && e.items[0].is_sym("Array"))
      return array_sort(parse_sort(e.items[1]), parse_sort(e.items[2]));
    throw ParseError(e.pos, "unsupported sort expression");
  }

  TermPtr parse_term(const SExpr& e, TermEnv& env) const {
    if (e.is_atom) return parse_atom(e, env);
    if (e.items.empty()) throw ParseError(e.pos, "empty application");

    // ((as const (Array ...)) v) and other qualified heads.
    if (!e.items[0].is_atom) {
      const SExpr& head = e.items[0];
      if (head.items.size() == 3 && head.items[0].is_sym("as") &&
          head.items[1].is_sym("const")) {
        SortPtr s = parse_sort(head.items[2]);
        if (e.items.size() != 2)
          throw ParseError(e.pos, "as-const expects one argument");
        return mk_const_array(s, parse_term(e.items[1], env));
      }
      if (!head.items.empty() && head.items[0].is_sym("_"))
        return parse_indexed_app(e, env);
      throw ParseError(head.pos, "unsupported qualified application head");
    }

    const std::string& op = e.items[0].atom;

    if (op == "!") {
      if (e.items.size() < 2) throw ParseError(e.pos, "malformed annotation");
      return parse_term(e.items[1], env);  // attributes dropped
    }
    if (op == "let") return parse_let(e, env);
    if (op == "forall" || op == "exists") return parse_quant(e, env);
    if (op == "_") {
      // (_ bvN w) bit-vector literal
      if (e.items.size() == 3 && e.items[1].is_atom && e.items[1].atom.size() > 2 &&
          e.items[1].atom.rfind("bv", 0) == 0 &&
          detail::is_numeral_token(e.items[2].atom)) {
        unsigned w = static_cast<unsigned>(std::stoul(e.items[2].atom));
        return mk_const("(_ " + e.items[1].atom + " " + e.items[2].atom + ")",
                        bitvec_sort(w));
      }
      throw ParseError(e.pos, "unsupported indexed term");
    }

    std::vector<TermPtr> args;
    args.reserve(e.items.size() - 1);
    for (size_t i = 1; i < e.items.size(); ++i) args.push_back(parse_term(e.items[i], env));

    // Shadowing: a bound variable may hide a declared predicate or function,
    // but applications with arguments always refer to the declaration.
    if (const PredDecl* p = sys_.find_predicate(op)) {
      check_signature(e.pos, op, p->params, args);
      return mk_pred_app(op, std::move(args));
    }
    if (const FuncDecl* f = sys_.find_function(op)) {
      check_signature(e.pos, op, f->params, args);
      return mk_func_app(op, std::move(args), f->ret);
    }
    try {
      return mk_app(op, std::move(args));
    } catch (const SortError& err) {
      throw ParseError(e.pos, err.what());
    }
  }

 private:
  TermPtr parse_atom(const SExpr& e, TermEnv& env) const {
    const std::string& a = e.atom;
    if (a == "true") return mk_true();
    if (a == "false") return mk_false();
    if (detail::is_numeral_token(a)) return mk_const(a, int_sort());
    if (detail::is_decimal_token(a)) return mk_const(a, real_sort());
    if (a.size() > 2 && a[0] == '#' && a[1] == 'b')
      return mk_const(a, bitvec_sort(static_cast<unsigned>(a.size() - 2)));
    if (a.size() > 2 && a[0] == '#' && a[1] == 'x')
      return mk_const(a, bitvec_sort(static_cast<unsigned>(4 * (a.size() - 2))));
    if (const TermPtr* v = env.lookup(a)) return *v;
    if (const PredDecl* p = sys_.find_predicate(a)) {
      if (!p->params.empty())
        throw ParseError(e.pos, "predicate '" + a + "' used without arguments");
      return mk_pred_app(a, {});
    }
    if (const FuncDecl* f = sys_.find_function(a)) {
      if (!f->params.empty())
        throw ParseError(e.pos, "function '" + a + "' used without arguments");
      return mk_func_app(a, {}, f->ret);
    }
    throw ParseError(e.pos, "unknown symbol '" + a + "'");
  }

  TermPtr parse_let(const SExpr& e, TermEnv& env) const {
    if (e.items.size() != 3 || e.items[1].is_atom)
      throw ParseError(e.pos, "malformed let");
    std::vector<std::pair<std::string, TermPtr>> bindings;
    for (const auto& b : e.items[1].items) {
      if (b.is_atom || b.items.size() != 2 || !b.items[0].is_atom)
        throw ParseError(b.pos, "malformed let binding");
      bindings.emplace_back(b.items[0].atom, parse_term(b.items[1], env));
    }
    env.push_scope();
    for (auto& [name, value] : bindings) env.bind(name, std::move(value));
    TermPtr body = parse_term(e.items[2], env);
    env.pop_scope();
    return body;
  }

  TermPtr parse_quant(const SExpr& e, TermEnv& env) const {
    if (e.items.size() != 3 || e.items[1].is_atom)
      throw ParseError(e.pos, "malformed quantifier");
    QuantKind q = e.items[0].atom == "forall" ? QuantKind::Forall : QuantKind::Exists;
    std::vector<Binding> bound;
    env.push_scope();
    for (const auto& b : e.items[1].items) {
      if (b.is_atom || b.items.size() != 2 || !b.items[0].is_atom)
        throw ParseError(b.pos, "malformed sorted variable");
      SortPtr s = parse_sort(b.items[1]);
      std::string name = b.items[0].atom;
      // Rename apart anything that shadows an enclosing binding or repeats
      // within this prefix.
      bool repeats = std::any_of(bound.begin(), bound.end(),
                                 [&](const Binding& x) { return x.name == name; });
      if (env.name_in_scope(name) || repeats) name = env.fresh(name);
      env.bind(b.items[0].atom, mk_var(name, s));
      if (name != b.items[0].atom) env.bind(name, mk_var(name, s));
      bound.push_back({name, s});
    }
    TermPtr body = parse_term(e.items[2], env);
    env.pop_scope();
    if (bound.empty()) return body;  // empty prefixes collapse
    return mk_quant(q, std::move(bound), std::move(body));
  }

  TermPtr parse_indexed_app(const SExpr& e, TermEnv& env) const {
    const SExpr& head = e.items[0];
    auto idx_text = [&]() {
      std::string s = "(";
      for (size_t i = 0; i < head.items.size(); ++i)
        s += (i ? " " : "") + head.items[i].atom;
      return s + ")";
    };
    std::vector<TermPtr> args;
    for (size_t i = 1; i < e.items.size(); ++i) args.push_back(parse_term(e.items[i], env));
    const std::string& iop = head.items.size() > 1 ? head.items[1].atom : "";
    auto num = [&](size_t i) -> unsigned {
      if (i >= head.items.size() || !detail::is_numeral_token(head.items[i].atom))
        throw ParseError(head.pos, "expected a numeral index");
      return static_cast<unsigned>(std::stoul(head.items[i].atom));
    };
    if (iop == "extract" && args.size() == 1 &&
        args[0]->sort->kind == Sort::Kind::BitVec) {
      unsigned hi = num(2), lo = num(3);
      if (hi < lo || hi >= args[0]->sort->width)
        throw ParseError(head.pos, "extract indices out of range");
      return mk_func_app(idx_text(), std::move(args), bitvec_sort(hi - lo + 1));
    }
    if ((iop == "zero_extend" || iop == "sign_extend") && args.size() == 1 &&
        args[0]->sort->kind == Sort::Kind::BitVec) {
      unsigned k = num(2);
      return mk_func_app(idx_text(), std::move(args),
                         bitvec_sort(args[0]->sort->width + k));
    }
    throw ParseError(head.pos, "unsupported indexed operator");
  }

  void check_signature(Position pos, const std::string& name,
                       const std::vector<SortPtr>& params, std::vector<TermPtr>& args) const {
    if (params.size() != args.size())
      throw ParseError(pos, "'" + name + "' expects " + std::to_string(params.size()) +
                                " argument(s), got " + std::to_string(args.size()));
    for (size_t i = 0; i < args.size(); ++i) {
      if (params[i]->kind == Sort::Kind::Real && args[i]->sort->kind == Sort::Kind::Int &&
          is_numeral(args[i])) {
        std::vector<TermPtr> one = {args[i]};
        args[i] = detail::promote_numerals(one)[0];
      }
      if (!sorts_equal(params[i], args[i]->sort))
        throw ParseError(pos, "'" + name + "' argument " + std::to_string(i) +
                                  " has sort " + sort_to_string(args[i]->sort) +
                                  ", expected " + sort_to_string(params[i]));
    }
  }

  const ChcSystem& sys_;
};

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

class ScriptParser {
 public:
  ChcSystem parse(const std::string& text) {
    sys_ = ChcSystem{};
    detail::SExprReader reader(text);
    auto exprs = reader.read_all();
    size_t assertion_index = 0;
    for (const auto& e : exprs) {
      if (e.is_atom || e.items.empty() || !e.items[0].is_atom)
        throw ParseError(e.pos, "expected a command");
      const std::string& cmd = e.items[0].atom;
      if (cmd == "set-logic") {
        require_arity(e, 2);
        sys_.logic = e.items[1].atom;
      } else if (cmd == "set-option") {
        require_arity(e, 3);
        std::string key = e.items[1].atom;
        if (key.empty() || key[0] != ':')
          throw ParseError(e.items[1].pos, "expected a keyword");
        if (!e.items[2].is_atom)
          throw ParseError(e.items[2].pos, "expected an option value token");
        sys_.options.push_back({key.substr(1), e.items[2].atom});
      } else if (cmd == "set-info" || cmd == "exit" || cmd == "echo" ||
                 cmd == "get-info" || cmd == "get-model" || cmd == "check-sat" ||
                 cmd == "reset") {
        // check-sat/get-model are regenerated on print; the rest are dropped.
      } else if (cmd == "declare-sort") {
        parse_declare_sort(e);
      } else if (cmd == "declare-fun") {
        parse_declare_fun(e);
      } else if (cmd == "declare-const") {
        parse_declare_const(e);
      } else if (cmd == "assert") {
        require_arity(e, 2);
        try {
          sys_.clauses.push_back(normalize_assertion(e.items[1]));
        } catch (const SortError& err) {
          throw ParseError(e.items[1].pos, std::string(err.what()) + " (assertion " +
                                               std::to_string(assertion_index) + ")");
        }
        ++assertion_index;
      } else {
        throw ParseError(e.pos, "unsupported command '" + cmd + "'");
      }
    }
    if (auto err = validate_system(sys_))
      throw ParseError(Position{}, "invalid system: " + *err);
    return sys_;
  }

 private:
  ChcSystem sys_;

  static void require_arity(const SExpr& e, size_t n) {
    if (e.items.size() != n)
      throw ParseError(e.pos, "command '" + e.items[0].atom + "' expects " +
                                  std::to_string(n - 1) + " argument(s)");
  }

  // -- declarations ---------------------------------------------------------

  void parse_declare_sort(const SExpr& e) {
    require_arity(e, 3);
    if (!detail::is_numeral_token(e.items[2].atom) || e.items[2].atom != "0")
      throw ParseError(e.items[2].pos, "only arity-0 uninterpreted sorts are supported");
    check_fresh_symbol(e.items[1]);
    sys_.sort_decls.push_back(e.items[1].atom);
  }

  void parse_declare_fun(const SExpr& e) {
    require_arity(e, 4);
    check_fresh_symbol(e.items[1]);
    if (e.items[2].is_atom)
      throw ParseError(e.items[2].pos, "expected a sort list");
    std::vector<SortPtr> params;
    for (const auto& s : e.items[2].items) params.push_back(parse_sort(s));
    SortPtr ret = parse_sort(e.items[3]);
    if (ret->kind == Sort::Kind::Bool)
      sys_.predicates.push_back({e.items[1].atom, std::move(params)});
    else
      sys_.functions.push_back({e.items[1].atom, std::move(params), std::move(ret)});
  }

  void parse_declare_const(const SExpr& e) {
    require_arity(e, 3);
    check_fresh_symbol(e.items[1]);
    SortPtr ret = parse_sort(e.items[2]);
    if (ret->kind == Sort::Kind::Bool)
      sys_.predicates.push_back({e.items[1].atom, {}});
    else
      sys_.functions.push_back({e.items[1].atom, {}, std::move(ret)});
  }

  void check_fresh_symbol(const SExpr& name) {
    if (!name.is_atom) throw ParseError(name.pos, "expected a symbol");
    if (sys_.declares_symbol(name.atom))
      throw ParseError(name.pos, "symbol '" + name.atom + "' already declared");
  }

  SortPtr parse_sort(const SExpr& e) { return TermParser(sys_).parse_sort(e); }

  // -- clause normalization ---------------------------------------------------

  ChcClause normalize_assertion(const SExpr& e) {
    TermEnv env(sys_);
    env.push_scope();
    TermPtr t = TermParser(sys_).parse_term(e, env);
    if (t->sort->kind != Sort::Kind::Bool)
      throw ParseError(e.pos, "assertion must be Bool");

    ChcClause cl;

    // Peel the universal prefix (consecutive foralls merge).
    while (t->kind == TermKind::Quant && t->quant == QuantKind::Forall) {
      cl.bound.insert(cl.bound.end(), t->bound.begin(), t->bound.end());
      t = t->args[0];
    }

    auto is_not = [](const TermPtr& u) {
      return u->kind == TermKind::App && u->sym == "not" && u->args.size() == 1;
    };

    if (is_not(t) && t->args[0]->kind == TermKind::Quant &&
        t->args[0]->quant == QuantKind::Exists) {
      // (not (exists V body)) query; nested exists under the negation merge.
      TermPtr inner = t->args[0];
      while (inner->kind == TermKind::Quant && inner->quant == QuantKind::Exists) {
        cl.bound.insert(cl.bound.end(), inner->bound.begin(), inner->bound.end());
        inner = inner->args[0];
      }
      cl.body = inner;
      cl.head = mk_false();
      cl.form = ClauseForm::NegatedExists;
    } else if (is_not(t)) {
      cl.body = t->args[0];
      cl.head = mk_false();
      cl.form = ClauseForm::NegatedBody;
    } else if (t->kind == TermKind::App && t->sym == "=>") {
      std::vector<TermPtr> premises(t->args.begin(), t->args.end() - 1);
      TermPtr head = t->args.back();
      while (head->kind == TermKind::App && head->sym == "=>") {
        premises.insert(premises.end(), head->args.begin(), head->args.end() - 1);
        head = head->args.back();
      }
      TermPtr body = premises.size() == 1 ? premises[0] : mk_and(std::move(premises));
      if (head->kind != TermKind::PredApp && !is_false(head)) {
        // B -> phi  ==  B and (not phi) -> false
        TermPtr neg = is_not(head) ? head->args[0] : mk_not(head);
        body = mk_and({body, neg});
        head = mk_false();
      }
      cl.body = body;
      cl.head = head;
      cl.form = ClauseForm::Implication;
    } else if (t->kind == TermKind::App && t->sym == "or") {
      normalize_disjunction(e.pos, t, cl);
    } else if (t->kind == TermKind::PredApp || is_false(t)) {
      cl.body = mk_true();
      cl.head = t;
      cl.form = ClauseForm::BareHead;
    } else {
      throw ParseError(e.pos, "assertion cannot be normalized to CHC shape");
    }
    return cl;
  }

  void normalize_disjunction(Position pos, const TermPtr& t, ChcClause& cl) {
    // Flatten the or-spine, pick the single positive predicate literal as
    // head, negate everything else into the body.
    std::vector<TermPtr> leaves;
    std::vector<TermPtr> stack = {t};
    while (!stack.empty()) {
      TermPtr u = stack.back();
      stack.pop_back();
      if (u->kind == TermKind::App && u->sym == "or")
        for (auto it = u->args.rbegin(); it != u->args.rend(); ++it) stack.push_back(*it);
      else
        leaves.push_back(u);
    }
    TermPtr head;
    std::vector<TermPtr> conjuncts;
    for (const auto& leaf : leaves) {
      if (leaf->kind == TermKind::PredApp) {
        if (head)
          throw ParseError(pos,
                           "assertion cannot be normalized to CHC shape: "
                           "two positive predicate literals in a disjunction");
        head = leaf;
      } else if (leaf->kind == TermKind::App && leaf->sym == "not" &&
                 leaf->args.size() == 1) {
        conjuncts.push_back(leaf->args[0]);
      } else {
        conjuncts.push_back(mk_not(leaf));
      }
    }
    cl.body = mk_and(std::move(conjuncts));
    cl.head = head ? head : mk_false();
    cl.form = ClauseForm::Disjunction;
  }
};

inline ChcSystem parse_script(const std::string& text) {
  ScriptParser p;
  return p.parse(text);
}

}  // namespace chcfuzz
