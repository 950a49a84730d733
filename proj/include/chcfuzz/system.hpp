/// \file system.hpp
/// \brief CHC systems: clauses in implication form plus declarations.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ast.hpp"

namespace chcfuzz {

struct PredDecl {
  std::string name;
  std::vector<SortPtr> params;
};

struct FuncDecl {
  std::string name;
  std::vector<SortPtr> params;
  SortPtr ret;
};

struct OptionSetting {
  std::string key;    // without leading ':'
  std::string value;  // verbatim token, e.g. "false"
};

/// Surface form the assertion had in the input; printing reproduces it.
enum class ClauseForm {
  Implication,    // (forall V (=> body head))
  Disjunction,    // (forall V (or (not b1) ... head))
  BareHead,       // (forall V (P ...)) or ground (P ...)
  NegatedExists,  // (not (exists V body))            [head = false]
  NegatedBody,    // (forall V (not body))            [head = false]
};

/// One clause, normalized to: forall bound. body -> head.
/// head is a PredApp or the false literal; body is Bool (true when absent).
struct ChcClause {
  std::vector<Binding> bound;
  TermPtr body;
  TermPtr head;
  ClauseForm form = ClauseForm::Implication;
};

struct ClauseClass {
  enum class Role { Fact, Rule, Query };
  Role role;
  bool linear;
};

struct ChcSystem {
  std::string logic = "HORN";
  std::vector<OptionSetting> options;
  std::vector<std::string> sort_decls;  // uninterpreted sorts, arity 0
  std::vector<FuncDecl> functions;      // non-Bool return
  std::vector<PredDecl> predicates;     // Bool return
  std::vector<ChcClause> clauses;

  const PredDecl* find_predicate(const std::string& name) const {
    for (const auto& p : predicates)
      if (p.name == name) return &p;
    return nullptr;
  }
  const FuncDecl* find_function(const std::string& name) const {
    for (const auto& f : functions)
      if (f.name == name) return &f;
    return nullptr;
  }
  bool has_option(const std::string& key) const {
    return std::any_of(options.begin(), options.end(),
                       [&](const OptionSetting& o) { return o.key == key; });
  }
  bool declares_symbol(const std::string& name) const {
    return find_predicate(name) || find_function(name) ||
           std::find(sort_decls.begin(), sort_decls.end(), name) != sort_decls.end();
  }
};

inline size_t count_body_pred_apps(const TermPtr& body) {
  size_t n = 0;
  walk_term(body, [&](const TermPtr& t, const std::vector<int>&) {
    if (t->kind == TermKind::PredApp) ++n;
    return true;
  });
  return n;
}

inline ClauseClass classify(const ChcClause& clause) {
  ClauseClass c{};
  size_t body_preds = count_body_pred_apps(clause.body);
  c.linear = body_preds <= 1;
  if (clause.head->kind == TermKind::PredApp)
    c.role = body_preds == 0 ? ClauseClass::Role::Fact : ClauseClass::Role::Rule;
  else
    c.role = ClauseClass::Role::Query;
  return c;
}

inline bool clauses_equal(const ChcClause& a, const ChcClause& b) {
  if (a.bound.size() != b.bound.size()) return false;
  for (size_t i = 0; i < a.bound.size(); ++i)
    if (a.bound[i].name != b.bound[i].name || !sorts_equal(a.bound[i].sort, b.bound[i].sort))
      return false;
  return terms_equal(a.body, b.body) && terms_equal(a.head, b.head);
}

/// Structural equality. Surface form tags are print cosmetics and excluded.
inline bool systems_equal(const ChcSystem& a, const ChcSystem& b) {
  if (a.logic != b.logic) return false;
  if (a.options.size() != b.options.size()) return false;
  for (size_t i = 0; i < a.options.size(); ++i)
    if (a.options[i].key != b.options[i].key || a.options[i].value != b.options[i].value)
      return false;
  if (a.sort_decls != b.sort_decls) return false;
  if (a.functions.size() != b.functions.size()) return false;
  for (size_t i = 0; i < a.functions.size(); ++i) {
    if (a.functions[i].name != b.functions[i].name) return false;
    if (a.functions[i].params.size() != b.functions[i].params.size()) return false;
    for (size_t j = 0; j < a.functions[i].params.size(); ++j)
      if (!sorts_equal(a.functions[i].params[j], b.functions[i].params[j])) return false;
    if (!sorts_equal(a.functions[i].ret, b.functions[i].ret)) return false;
  }
  if (a.predicates.size() != b.predicates.size()) return false;
  for (size_t i = 0; i < a.predicates.size(); ++i) {
    if (a.predicates[i].name != b.predicates[i].name) return false;
    if (a.predicates[i].params.size() != b.predicates[i].params.size()) return false;
    for (size_t j = 0; j < a.predicates[i].params.size(); ++j)
      if (!sorts_equal(a.predicates[i].params[j], b.predicates[i].params[j])) return false;
  }
  if (a.clauses.size() != b.clauses.size()) return false;
  for (size_t i = 0; i < a.clauses.size(); ++i)
    if (!clauses_equal(a.clauses[i], b.clauses[i])) return false;
  return true;
}

/// Validation failure description, or nullopt when the system is well-formed.
inline std::optional<std::string> validate_system(const ChcSystem& sys) {
  for (size_t ci = 0; ci < sys.clauses.size(); ++ci) {
    const ChcClause& cl = sys.clauses[ci];
    auto where = [&](const std::string& msg) {
      return "clause " + std::to_string(ci) + ": " + msg;
    };

    for (size_t i = 0; i < cl.bound.size(); ++i)
      for (size_t j = i + 1; j < cl.bound.size(); ++j)
        if (cl.bound[i].name == cl.bound[j].name)
          return where("duplicate bound variable '" + cl.bound[i].name + "'");

    if (cl.head->kind != TermKind::PredApp && !is_false(cl.head))
      return where("head must be a predicate application or false");
    if (cl.body->sort->kind != Sort::Kind::Bool) return where("body must be Bool");

    // Every predicate application matches a declaration, in head and body.
    std::optional<std::string> err;
    auto check_apps = [&](const TermPtr& t) {
      walk_term(t, [&](const TermPtr& u, const std::vector<int>&) {
        if (err) return false;
        if (u->kind == TermKind::PredApp) {
          const PredDecl* d = sys.find_predicate(u->sym);
          if (!d) {
            err = where("undeclared predicate '" + u->sym + "'");
            return false;
          }
          if (d->params.size() != u->args.size()) {
            err = where("predicate '" + u->sym + "' arity mismatch");
            return false;
          }
          for (size_t i = 0; i < u->args.size(); ++i)
            if (!sorts_equal(d->params[i], u->args[i]->sort)) {
              err = where("predicate '" + u->sym + "' argument " + std::to_string(i) +
                          " sort mismatch");
              return false;
            }
        }
        return true;
      });
    };
    check_apps(cl.body);
    check_apps(cl.head);
    if (err) return err;

    // Free variables must come from the clause prefix or be declared constants.
    auto fv_check = [&](const TermPtr& t) -> std::optional<std::string> {
      for (const auto& [name, sort] : free_vars(t)) {
        bool in_prefix = std::any_of(cl.bound.begin(), cl.bound.end(),
                                     [&](const Binding& b) { return b.name == name; });
        if (!in_prefix) return where("unbound variable '" + name + "'");
        (void)sort;
      }
      return std::nullopt;
    };
    if (auto e = fv_check(cl.body)) return e;
    if (auto e = fv_check(cl.head)) return e;

    // Body predicate applications may only sit on the positive and/exists
    // spine; a predicate occurrence under any other connective is not Horn.
    struct SpineCheck {
      std::optional<std::string>& err;
      const std::string& pos;
      void go(const TermPtr& t, bool on_spine) {
        if (err) return;
        if (t->kind == TermKind::PredApp) {
          if (!on_spine) err = pos + "predicate under non-conjunctive context";
          for (const auto& a : t->args)
            if (contains_pred_app(a)) err = pos + "nested predicate in argument";
          return;
        }
        if (t->kind == TermKind::App && t->sym == "and") {
          for (const auto& a : t->args) go(a, on_spine);
          return;
        }
        if (t->kind == TermKind::Quant && t->quant == QuantKind::Exists) {
          go(t->args[0], on_spine);
          return;
        }
        if (contains_pred_app(t)) err = pos + "predicate under non-conjunctive context";
      }
    };
    std::string pos = "clause " + std::to_string(ci) + ": ";
    SpineCheck sc{err, pos};
    sc.go(cl.body, true);
    if (err) return err;
    for (const auto& a : cl.head->args)
      if (contains_pred_app(a)) return where("nested predicate in head argument");
  }
  return std::nullopt;
}

}  // namespace chcfuzz
