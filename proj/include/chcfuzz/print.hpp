/// \file print.hpp
/// \brief Deterministic SMT-LIB2 printing of terms and whole systems.
///
/// print_script is a pure function of the system value: byte-identical
/// output for structurally equal systems, which is what makes mutant
/// replay reproducible at the file level.

#pragma once

#include <sstream>
#include <string>

#include "system.hpp"

namespace chcfuzz {

namespace detail {

inline bool simple_symbol_char(char c) {
  if (std::isalnum(static_cast<unsigned char>(c))) return true;
  static const std::string extra = "~!@$%^&*_-+=<>.?/";
  return extra.find(c) != std::string::npos;
}

inline bool needs_quoting(const std::string& sym) {
  if (sym.empty()) return true;
  if (std::isdigit(static_cast<unsigned char>(sym[0]))) return true;
  for (char c : sym)
    if (!simple_symbol_char(c)) return true;
  return false;
}

}  // namespace detail

inline std::string print_symbol(const std::string& sym) {
  if (!detail::needs_quoting(sym)) return sym;
  return "|" + sym + "|";
}

inline void print_term_to(std::ostream& os, const TermPtr& t) {
  switch (t->kind) {
    case TermKind::Var:
      os << print_symbol(t->sym);
      return;
    case TermKind::Const:
      os << t->sym;
      return;
    case TermKind::App:
    case TermKind::PredApp: {
      if (t->args.empty() && !t->as_qualified) {
        os << print_symbol(t->sym);
        return;
      }
      os << '(';
      if (t->as_qualified)
        os << "(as " << print_symbol(t->sym) << ' ' << sort_to_string(t->sort) << ')';
      else if (!t->sym.empty() && t->sym[0] == '(')
        os << t->sym;  // indexed operator, e.g. "(_ extract 3 0)"
      else
        os << print_symbol(t->sym);
      for (const auto& a : t->args) {
        os << ' ';
        print_term_to(os, a);
      }
      os << ')';
      return;
    }
    case TermKind::Quant: {
      os << '(' << (t->quant == QuantKind::Forall ? "forall" : "exists") << " (";
      for (size_t i = 0; i < t->bound.size(); ++i) {
        if (i) os << ' ';
        os << '(' << print_symbol(t->bound[i].name) << ' '
           << sort_to_string(t->bound[i].sort) << ')';
      }
      os << ") ";
      print_term_to(os, t->args[0]);
      os << ')';
      return;
    }
  }
}

inline std::string print_term(const TermPtr& t) {
  std::ostringstream os;
  print_term_to(os, t);
  return os.str();
}

/// The assertion term of a clause in its remembered surface form.
inline TermPtr clause_to_term(const ChcClause& cl) {
  switch (cl.form) {
    case ClauseForm::BareHead:
      if (is_true(cl.body)) return mk_forall(cl.bound, cl.head);
      break;  // body grew a constraint; fall through to implication form
    case ClauseForm::NegatedBody:
      if (is_false(cl.head)) return mk_forall(cl.bound, mk_not(cl.body));
      break;
    case ClauseForm::NegatedExists:
      if (is_false(cl.head)) return mk_not(mk_exists(cl.bound, cl.body));
      break;
    case ClauseForm::Disjunction: {
      // Top-level body conjuncts become negated disjuncts, head last.
      std::vector<TermPtr> disj;
      if (cl.body->kind == TermKind::App && cl.body->sym == "and") {
        for (const auto& c : cl.body->args)
          disj.push_back(c->kind == TermKind::App && c->sym == "not" && c->args.size() == 1
                             ? c->args[0]
                             : mk_not(c));
      } else if (!is_true(cl.body)) {
        disj.push_back(mk_not(cl.body));
      }
      if (!is_false(cl.head)) disj.push_back(cl.head);
      if (disj.size() >= 2) return mk_forall(cl.bound, mk_or(std::move(disj)));
      if (disj.size() == 1) return mk_forall(cl.bound, disj[0]);
      break;
    }
    case ClauseForm::Implication:
      break;
  }
  return mk_forall(cl.bound, mk_implies(cl.body, cl.head));
}

/// Complete SMT-LIB2 script: logic, options, declarations, assertions,
/// check-sat and get-model.
inline std::string print_script(const ChcSystem& sys) {
  std::ostringstream os;
  os << "(set-logic " << (sys.logic.empty() ? "HORN" : sys.logic) << ")\n";
  for (const auto& o : sys.options)
    os << "(set-option :" << o.key << ' ' << o.value << ")\n";
  for (const auto& s : sys.sort_decls)
    os << "(declare-sort " << print_symbol(s) << " 0)\n";
  for (const auto& f : sys.functions) {
    os << "(declare-fun " << print_symbol(f.name) << " (";
    for (size_t i = 0; i < f.params.size(); ++i)
      os << (i ? " " : "") << sort_to_string(f.params[i]);
    os << ") " << sort_to_string(f.ret) << ")\n";
  }
  for (const auto& p : sys.predicates) {
    os << "(declare-fun " << print_symbol(p.name) << " (";
    for (size_t i = 0; i < p.params.size(); ++i)
      os << (i ? " " : "") << sort_to_string(p.params[i]);
    os << ") Bool)\n";
  }
  for (const auto& cl : sys.clauses) {
    os << "(assert ";
    print_term_to(os, clause_to_term(cl));
    os << ")\n";
  }
  os << "(check-sat)\n(get-model)\n";
  return os.str();
}

}  // namespace chcfuzz
