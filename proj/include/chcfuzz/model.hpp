/// \file model.hpp
/// \brief Solver models: parsing get-model output and substituting
/// definitions back into clauses.

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "parse.hpp"

namespace chcfuzz {

class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

struct ModelDef {
  std::vector<Binding> params;
  TermPtr body;
};

/// Interpretations returned by a sat verdict: predicate definitions plus any
/// background constant/function interpretations the solver printed.
struct Model {
  std::map<std::string, ModelDef> definitions;

  bool defines(const std::string& name) const { return definitions.count(name) != 0; }
};

inline bool models_equal(const Model& a, const Model& b) {
  if (a.definitions.size() != b.definitions.size()) return false;
  for (const auto& [name, def] : a.definitions) {
    auto it = b.definitions.find(name);
    if (it == b.definitions.end()) return false;
    if (def.params.size() != it->second.params.size()) return false;
    for (size_t i = 0; i < def.params.size(); ++i)
      if (def.params[i].name != it->second.params[i].name ||
          !sorts_equal(def.params[i].sort, it->second.params[i].sort))
        return false;
    if (!terms_equal(def.body, it->second.body)) return false;
  }
  return true;
}

namespace detail {

/// Parses `(model (define-fun ...) ...)` or the bare paren list z3 prints,
/// inlining references between model entries so every definition body is
/// closed over its own parameters.
class ModelParser {
 public:
  ModelParser(const std::string& text, const ChcSystem& sys) : sys_(sys) {
    SExprReader reader(text);
    exprs_ = reader.read_all();
    if (exprs_.empty() || exprs_[0].is_atom)
      throw ModelError("model output is not a parenthesized list");
    const SExpr& top = exprs_[0];
    size_t first = 0;
    if (!top.items.empty() && top.items[0].is_sym("model")) first = 1;
    for (size_t i = first; i < top.items.size(); ++i) {
      const SExpr& e = top.items[i];
      if (e.is_atom || e.items.size() != 5 || !e.items[0].is_sym("define-fun"))
        throw ModelError("unsupported model entry");
      raw_[e.items[1].atom] = &e;
      order_.push_back(e.items[1].atom);
    }
  }

  Model parse() {
    Model m;
    for (const auto& name : order_) m.definitions[name] = resolve(name, 0);
    return m;
  }

 private:
  ModelDef resolve(const std::string& name, int depth) {
    if (depth > 64) throw ModelError("model definition recursion too deep");
    auto done = cache_.find(name);
    if (done != cache_.end()) return done->second;
    const SExpr& e = *raw_.at(name);
    TermParser tp(sys_);

    ModelDef def;
    for (const auto& p : e.items[2].items) {
      if (p.is_atom || p.items.size() != 2)
        throw ModelError("malformed model parameter list for '" + name + "'");
      def.params.push_back({p.items[0].atom, tp.parse_sort(p.items[1])});
    }
    SortPtr ret = tp.parse_sort(e.items[3]);
    def.body = parse_body(e.items[4], def.params, depth);
    if (!sorts_equal(def.body->sort, ret))
      throw ModelError("model body sort mismatch for '" + name + "'");
    cache_[name] = def;
    return def;
  }

  /// Parses a body; applications of other model entries are expanded with
  /// their arguments substituted.
  TermPtr parse_body(const SExpr& e, const std::vector<Binding>& params, int depth) {
    // Parse against a system augmented with the other model entries so
    // references resolve, then inline those references bottom-up.
    ChcSystem aug = sys_;
    for (const auto& [n, raw] : raw_) {
      if (aug.declares_symbol(n)) continue;
      TermParser tp(sys_);
      std::vector<SortPtr> ps;
      for (const auto& p : raw->items[2].items) ps.push_back(tp.parse_sort(p.items[1]));
      SortPtr ret = tp.parse_sort(raw->items[3]);
      if (ret->kind == Sort::Kind::Bool)
        aug.predicates.push_back({n, std::move(ps)});
      else
        aug.functions.push_back({n, std::move(ps), std::move(ret)});
    }
    TermParser tp(aug);
    TermEnv env(aug);
    env.push_scope();
    for (const auto& b : params) env.bind(b.name, mk_var(b.name, b.sort));
    TermPtr t = tp.parse_term(e, env);
    return inline_refs(t, depth);
  }

  TermPtr inline_refs(const TermPtr& t, int depth) {
    if ((t->kind == TermKind::App || t->kind == TermKind::PredApp) &&
        raw_.count(t->sym) && !sys_.declares_symbol(t->sym)) {
      ModelDef d = resolve(t->sym, depth + 1);
      if (d.params.size() != t->args.size())
        throw ModelError("arity mismatch inlining model entry '" + t->sym + "'");
      std::map<std::string, TermPtr> sub;
      for (size_t i = 0; i < d.params.size(); ++i)
        sub[d.params[i].name] = inline_refs(t->args[i], depth);
      return substitute(d.body, sub);
    }
    if (t->args.empty()) return t;
    Term n = *t;
    bool changed = false;
    for (size_t i = 0; i < n.args.size(); ++i) {
      TermPtr r = inline_refs(t->args[i], depth);
      if (r != t->args[i]) changed = true;
      n.args[i] = r;
    }
    return changed ? std::make_shared<Term>(std::move(n)) : t;
  }

  const ChcSystem& sys_;
  std::vector<SExpr> exprs_;
  std::map<std::string, const SExpr*> raw_;
  std::vector<std::string> order_;
  std::map<std::string, ModelDef> cache_;
};

}  // namespace detail

inline Model parse_model(const std::string& text, const ChcSystem& sys) {
  try {
    return detail::ModelParser(text, sys).parse();
  } catch (const ParseError& e) {
    throw ModelError(std::string("model parse failure: ") + e.what());
  }
}

inline std::string print_model(const Model& m) {
  std::ostringstream os;
  os << "(\n";
  for (const auto& [name, def] : m.definitions) {
    os << "  (define-fun " << print_symbol(name) << " (";
    for (size_t i = 0; i < def.params.size(); ++i) {
      if (i) os << ' ';
      os << '(' << print_symbol(def.params[i].name) << ' '
         << sort_to_string(def.params[i].sort) << ')';
    }
    os << ") " << sort_to_string(def.body->sort) << ' ';
    print_term_to(os, def.body);
    os << ")\n";
  }
  os << ")\n";
  return os.str();
}

namespace detail {

inline TermPtr substitute_defs(const TermPtr& t, const Model& model) {
  if ((t->kind == TermKind::PredApp || t->kind == TermKind::App) && model.defines(t->sym) &&
      !t->as_qualified) {
    const ModelDef& def = model.definitions.at(t->sym);
    if (def.params.size() != t->args.size())
      throw ModelError("model definition for '" + t->sym + "' has arity " +
                       std::to_string(def.params.size()) + ", application has " +
                       std::to_string(t->args.size()));
    std::map<std::string, TermPtr> sub;
    for (size_t i = 0; i < t->args.size(); ++i)
      sub[def.params[i].name] = substitute_defs(t->args[i], model);
    return substitute(def.body, sub);
  }
  if (t->args.empty()) return t;
  Term n = *t;
  bool changed = false;
  for (size_t i = 0; i < n.args.size(); ++i) {
    TermPtr r = substitute_defs(t->args[i], model);
    if (r != t->args[i]) changed = true;
    n.args[i] = r;
  }
  return changed ? std::make_shared<Term>(std::move(n)) : t;
}

}  // namespace detail

/// Per clause, the closed quantified formula with every predicate (and any
/// model-interpreted function) replaced by its definition instantiated at
/// the application arguments. Throws ModelError when the model misses a
/// predicate the system uses or an arity disagrees.
inline std::vector<TermPtr> substitute_model(const ChcSystem& sys, const Model& model) {
  for (const auto& p : sys.predicates) {
    bool used = false;
    for (const auto& cl : sys.clauses) {
      walk_term(cl.body, [&](const TermPtr& t, const std::vector<int>&) {
        if (t->kind == TermKind::PredApp && t->sym == p.name) used = true;
        return !used;
      });
      if (!used && cl.head->kind == TermKind::PredApp && cl.head->sym == p.name) used = true;
      if (used) break;
    }
    if (used && !model.defines(p.name))
      throw ModelError("model does not define predicate '" + p.name + "'");
  }

  std::vector<TermPtr> out;
  out.reserve(sys.clauses.size());
  for (const auto& cl : sys.clauses) {
    TermPtr body = detail::substitute_defs(cl.body, model);
    TermPtr head = detail::substitute_defs(cl.head, model);
    TermPtr formula = mk_forall(cl.bound, mk_implies(body, head));
    if (contains_pred_app(formula))
      throw ModelError("predicate application survived substitution");
    out.push_back(formula);
  }
  return out;
}

}  // namespace chcfuzz
