/// \file ast.hpp
/// \brief Sorts and terms for the SMT-LIB2 HORN fragment.
///
/// Terms are immutable trees shared via shared_ptr; every transformation
/// builds new nodes. Applications carry their result sort, computed at
/// construction time from a fixed signature table, so a well-formed tree
/// is well-sorted by construction.

#pragma once

#include <cstdint>
#include <memory>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace chcfuzz {

// ---------------------------------------------------------------------------
// Sorts
// ---------------------------------------------------------------------------

struct Sort;
using SortPtr = std::shared_ptr<const Sort>;

struct Sort {
  enum class Kind { Bool, Int, Real, BitVec, Array, Uninterpreted };

  Kind kind = Kind::Bool;
  unsigned width = 0;     // BitVec only, >= 1
  SortPtr index;          // Array only
  SortPtr element;        // Array only
  std::string name;       // Uninterpreted only
};

inline SortPtr bool_sort() {
  static const SortPtr s = std::make_shared<Sort>(Sort{Sort::Kind::Bool});
  return s;
}

inline SortPtr int_sort() {
  static const SortPtr s = std::make_shared<Sort>(Sort{Sort::Kind::Int});
  return s;
}

inline SortPtr real_sort() {
  static const SortPtr s = std::make_shared<Sort>(Sort{Sort::Kind::Real});
  return s;
}

inline SortPtr bitvec_sort(unsigned width) {
  if (width == 0) throw std::invalid_argument("BitVec width must be >= 1");
  Sort s;
  s.kind = Sort::Kind::BitVec;
  s.width = width;
  return std::make_shared<Sort>(std::move(s));
}

inline SortPtr array_sort(SortPtr index, SortPtr element) {
  Sort s;
  s.kind = Sort::Kind::Array;
  s.index = std::move(index);
  s.element = std::move(element);
  return std::make_shared<Sort>(std::move(s));
}

inline SortPtr uninterpreted_sort(std::string name) {
  Sort s;
  s.kind = Sort::Kind::Uninterpreted;
  s.name = std::move(name);
  return std::make_shared<Sort>(std::move(s));
}

inline bool sorts_equal(const SortPtr& a, const SortPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Sort::Kind::BitVec: return a->width == b->width;
    case Sort::Kind::Array:
      return sorts_equal(a->index, b->index) && sorts_equal(a->element, b->element);
    case Sort::Kind::Uninterpreted: return a->name == b->name;
    default: return true;
  }
}

inline std::string sort_to_string(const SortPtr& s) {
  switch (s->kind) {
    case Sort::Kind::Bool: return "Bool";
    case Sort::Kind::Int: return "Int";
    case Sort::Kind::Real: return "Real";
    case Sort::Kind::BitVec: return "(_ BitVec " + std::to_string(s->width) + ")";
    case Sort::Kind::Array:
      return "(Array " + sort_to_string(s->index) + " " + sort_to_string(s->element) + ")";
    case Sort::Kind::Uninterpreted: return s->name;
  }
  return "?";
}

inline bool is_numeric(const SortPtr& s) {
  return s->kind == Sort::Kind::Int || s->kind == Sort::Kind::Real;
}

// ---------------------------------------------------------------------------
// Terms
// ---------------------------------------------------------------------------

struct Term;
using TermPtr = std::shared_ptr<const Term>;

enum class TermKind { Var, Const, App, PredApp, Quant };
enum class QuantKind { Forall, Exists };

/// One (name, sort) entry of a quantifier prefix.
struct Binding {
  std::string name;
  SortPtr sort;
};

struct Term {
  TermKind kind = TermKind::Const;
  SortPtr sort;

  /// Var name, Const literal text, App operator, or PredApp predicate symbol.
  std::string sym;

  /// App/PredApp arguments; for Quant the single body term.
  std::vector<TermPtr> args;

  QuantKind quant = QuantKind::Forall;   // Quant only
  std::vector<Binding> bound;            // Quant only

  /// Set on App nodes that need an `(as sym <sort>)` qualified head when
  /// printed (z3 model output uses `(as const (Array ...))`).
  bool as_qualified = false;
};

class SortError : public std::runtime_error {
 public:
  explicit SortError(const std::string& what) : std::runtime_error(what) {}
};

inline TermPtr mk_var(std::string name, SortPtr sort) {
  Term t;
  t.kind = TermKind::Var;
  t.sym = std::move(name);
  t.sort = std::move(sort);
  return std::make_shared<Term>(std::move(t));
}

/// `literal` is kept as written ("5", "5.0", "#b101", "true", ...).
inline TermPtr mk_const(std::string literal, SortPtr sort) {
  Term t;
  t.kind = TermKind::Const;
  t.sym = std::move(literal);
  t.sort = std::move(sort);
  return std::make_shared<Term>(std::move(t));
}

inline TermPtr mk_true() { return mk_const("true", bool_sort()); }
inline TermPtr mk_false() { return mk_const("false", bool_sort()); }

inline TermPtr mk_int(int64_t v) {
  if (v < 0) {
    Term t;
    t.kind = TermKind::App;
    t.sym = "-";
    t.sort = int_sort();
    t.args = {mk_const(std::to_string(-v), int_sort())};
    return std::make_shared<Term>(std::move(t));
  }
  return mk_const(std::to_string(v), int_sort());
}

inline bool is_true(const TermPtr& t) {
  return t->kind == TermKind::Const && t->sym == "true";
}
inline bool is_false(const TermPtr& t) {
  return t->kind == TermKind::Const && t->sym == "false";
}

/// Integer or real literal value, looking through a unary minus wrapper.
inline std::optional<int64_t> int_literal_value(const TermPtr& t) {
  if (t->kind == TermKind::Const && t->sort->kind == Sort::Kind::Int) {
    try {
      return std::stoll(t->sym);
    } catch (...) {
      return std::nullopt;
    }
  }
  if (t->kind == TermKind::App && t->sym == "-" && t->args.size() == 1) {
    auto inner = int_literal_value(t->args[0]);
    if (inner && *inner != INT64_MIN) return -*inner;
  }
  return std::nullopt;
}

/// True for numeric literals (possibly under unary minus) of Int or Real sort.
inline bool is_numeral(const TermPtr& t) {
  if (t->kind == TermKind::Const && is_numeric(t->sort)) return true;
  if (t->kind == TermKind::App && t->sym == "-" && t->args.size() == 1)
    return t->args[0]->kind == TermKind::Const && is_numeric(t->args[0]->sort);
  return false;
}

namespace detail {

inline bool all_bool(const std::vector<TermPtr>& args) {
  for (const auto& a : args)
    if (a->sort->kind != Sort::Kind::Bool) return false;
  return true;
}

inline bool same_numeric(const std::vector<TermPtr>& args, bool& has_real) {
  has_real = false;
  for (const auto& a : args) {
    if (!is_numeric(a->sort)) return false;
    if (a->sort->kind == Sort::Kind::Real) has_real = true;
  }
  return true;
}

/// Retypes bare integer numerals as Real so mixed Int/Real argument lists
/// type-check the way solvers accept them in LRA scripts.
inline std::vector<TermPtr> promote_numerals(const std::vector<TermPtr>& args) {
  std::vector<TermPtr> out;
  out.reserve(args.size());
  for (const auto& a : args) {
    if (a->sort->kind == Sort::Kind::Int && is_numeral(a)) {
      if (a->kind == TermKind::Const) {
        out.push_back(mk_const(a->sym, real_sort()));
      } else {
        Term t = *a;  // unary minus wrapper
        t.sort = real_sort();
        t.args = {mk_const(a->args[0]->sym, real_sort())};
        out.push_back(std::make_shared<Term>(std::move(t)));
      }
    } else {
      out.push_back(a);
    }
  }
  return out;
}

inline bool all_same_sort(const std::vector<TermPtr>& args) {
  for (size_t i = 1; i < args.size(); ++i)
    if (!sorts_equal(args[0]->sort, args[i]->sort)) return false;
  return true;
}

inline bool all_bitvec_same(const std::vector<TermPtr>& args) {
  for (const auto& a : args)
    if (a->sort->kind != Sort::Kind::BitVec || a->sort->width != args[0]->sort->width)
      return false;
  return !args.empty();
}

}  // namespace detail

/// Computes the result sort of `(op args...)`, normalizing mixed Int/Real
/// numeral arguments in place. Throws SortError for unknown operators or
/// ill-sorted applications.
inline SortPtr infer_app_sort(const std::string& op, std::vector<TermPtr>& args) {
  using detail::all_bool;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) throw SortError("operator '" + op + "': " + msg);
  };

  if (op == "not") {
    need(args.size() == 1 && all_bool(args), "expects one Bool argument");
    return bool_sort();
  }
  if (op == "and" || op == "or" || op == "xor") {
    need(args.size() >= 2 && all_bool(args), "expects >= 2 Bool arguments");
    return bool_sort();
  }
  if (op == "=>") {
    need(args.size() >= 2 && all_bool(args), "expects >= 2 Bool arguments");
    return bool_sort();
  }
  if (op == "ite") {
    need(args.size() == 3, "expects 3 arguments");
    need(args[0]->sort->kind == Sort::Kind::Bool, "condition must be Bool");
    std::vector<TermPtr> branches = {args[1], args[2]};
    if (!detail::all_same_sort(branches)) {
      bool has_real = false;
      if (detail::same_numeric(branches, has_real) && has_real) {
        branches = detail::promote_numerals(branches);
        args[1] = branches[0];
        args[2] = branches[1];
      }
    }
    need(sorts_equal(args[1]->sort, args[2]->sort), "branch sorts differ");
    return args[1]->sort;
  }
  if (op == "=" || op == "distinct") {
    need(args.size() >= 2, "expects >= 2 arguments");
    if (!detail::all_same_sort(args)) {
      bool has_real = false;
      if (detail::same_numeric(args, has_real) && has_real)
        args = detail::promote_numerals(args);
    }
    need(detail::all_same_sort(args), "argument sorts differ");
    return bool_sort();
  }
  if (op == "<" || op == "<=" || op == ">" || op == ">=") {
    need(args.size() >= 2, "expects >= 2 arguments");
    bool has_real = false;
    need(detail::same_numeric(args, has_real), "expects numeric arguments");
    if (has_real) args = detail::promote_numerals(args);
    need(detail::all_same_sort(args), "mixed Int/Real arguments");
    return bool_sort();
  }
  if (op == "+" || op == "*" || op == "-") {
    need(!args.empty(), "expects arguments");
    bool has_real = false;
    need(detail::same_numeric(args, has_real), "expects numeric arguments");
    if (has_real) args = detail::promote_numerals(args);
    need(detail::all_same_sort(args), "mixed Int/Real arguments");
    if (op == "-") need(args.size() <= 2 || detail::all_same_sort(args), "arity");
    return args[0]->sort;
  }
  if (op == "div" || op == "mod" || op == "rem") {
    need(args.size() == 2, "expects 2 arguments");
    need(args[0]->sort->kind == Sort::Kind::Int && args[1]->sort->kind == Sort::Kind::Int,
         "expects Int arguments");
    return int_sort();
  }
  if (op == "/") {
    need(args.size() >= 2, "expects >= 2 arguments");
    bool has_real = false;
    need(detail::same_numeric(args, has_real), "expects numeric arguments");
    args = detail::promote_numerals(args);
    return real_sort();
  }
  if (op == "abs") {
    need(args.size() == 1 && is_numeric(args[0]->sort), "expects one numeric argument");
    return args[0]->sort;
  }
  if (op == "to_real") {
    need(args.size() == 1 && args[0]->sort->kind == Sort::Kind::Int, "expects one Int");
    return real_sort();
  }
  if (op == "to_int") {
    need(args.size() == 1 && args[0]->sort->kind == Sort::Kind::Real, "expects one Real");
    return int_sort();
  }
  if (op == "is_int") {
    need(args.size() == 1 && args[0]->sort->kind == Sort::Kind::Real, "expects one Real");
    return bool_sort();
  }
  if (op == "select") {
    need(args.size() == 2 && args[0]->sort->kind == Sort::Kind::Array, "expects array, index");
    need(sorts_equal(args[0]->sort->index, args[1]->sort), "index sort mismatch");
    return args[0]->sort->element;
  }
  if (op == "store") {
    need(args.size() == 3 && args[0]->sort->kind == Sort::Kind::Array,
         "expects array, index, value");
    need(sorts_equal(args[0]->sort->index, args[1]->sort), "index sort mismatch");
    need(sorts_equal(args[0]->sort->element, args[2]->sort), "value sort mismatch");
    return args[0]->sort;
  }

  // Bit-vector operators, best effort.
  static const std::map<std::string, int> bv_arith = {
      {"bvadd", 2}, {"bvsub", 2}, {"bvmul", 2}, {"bvand", 2}, {"bvor", 2},
      {"bvxor", 2}, {"bvudiv", 2}, {"bvurem", 2}, {"bvsdiv", 2}, {"bvsrem", 2},
      {"bvsmod", 2}, {"bvshl", 2}, {"bvlshr", 2}, {"bvashr", 2}, {"bvnand", 2},
      {"bvnor", 2}, {"bvnot", 1}, {"bvneg", 1}};
  if (auto it = bv_arith.find(op); it != bv_arith.end()) {
    need(static_cast<int>(args.size()) >= it->second && detail::all_bitvec_same(args),
         "expects bit-vector arguments of equal width");
    return args[0]->sort;
  }
  static const std::map<std::string, int> bv_rel = {
      {"bvult", 2}, {"bvule", 2}, {"bvugt", 2}, {"bvuge", 2},
      {"bvslt", 2}, {"bvsle", 2}, {"bvsgt", 2}, {"bvsge", 2}};
  if (bv_rel.count(op)) {
    need(args.size() == 2 && detail::all_bitvec_same(args),
         "expects two bit-vectors of equal width");
    return bool_sort();
  }
  if (op == "concat") {
    need(args.size() == 2 && args[0]->sort->kind == Sort::Kind::BitVec &&
             args[1]->sort->kind == Sort::Kind::BitVec,
         "expects two bit-vectors");
    return bitvec_sort(args[0]->sort->width + args[1]->sort->width);
  }

  throw SortError("unknown operator '" + op + "'");
}

inline TermPtr mk_app(const std::string& op, std::vector<TermPtr> args) {
  Term t;
  t.kind = TermKind::App;
  t.sym = op;
  t.sort = infer_app_sort(op, args);
  t.args = std::move(args);
  return std::make_shared<Term>(std::move(t));
}

/// Application of a declared background function; the caller supplies the
/// result sort from the declaration.
inline TermPtr mk_func_app(std::string name, std::vector<TermPtr> args, SortPtr ret) {
  Term t;
  t.kind = TermKind::App;
  t.sym = std::move(name);
  t.sort = std::move(ret);
  t.args = std::move(args);
  return std::make_shared<Term>(std::move(t));
}

inline TermPtr mk_pred_app(std::string pred, std::vector<TermPtr> args) {
  Term t;
  t.kind = TermKind::PredApp;
  t.sym = std::move(pred);
  t.sort = bool_sort();
  t.args = std::move(args);
  return std::make_shared<Term>(std::move(t));
}

inline TermPtr mk_quant(QuantKind q, std::vector<Binding> bound, TermPtr body) {
  if (bound.empty()) return body;
  if (body->sort->kind != Sort::Kind::Bool)
    throw SortError("quantifier body must be Bool");
  Term t;
  t.kind = TermKind::Quant;
  t.quant = q;
  t.sort = bool_sort();
  t.bound = std::move(bound);
  t.args = {std::move(body)};
  return std::make_shared<Term>(std::move(t));
}

inline TermPtr mk_forall(std::vector<Binding> bound, TermPtr body) {
  return mk_quant(QuantKind::Forall, std::move(bound), std::move(body));
}
inline TermPtr mk_exists(std::vector<Binding> bound, TermPtr body) {
  return mk_quant(QuantKind::Exists, std::move(bound), std::move(body));
}

inline TermPtr mk_not(TermPtr a) { return mk_app("not", {std::move(a)}); }

inline TermPtr mk_and(std::vector<TermPtr> args) {
  if (args.empty()) return mk_true();
  if (args.size() == 1) return args[0];
  return mk_app("and", std::move(args));
}

inline TermPtr mk_or(std::vector<TermPtr> args) {
  if (args.empty()) return mk_false();
  if (args.size() == 1) return args[0];
  return mk_app("or", std::move(args));
}

inline TermPtr mk_implies(TermPtr a, TermPtr b) {
  return mk_app("=>", {std::move(a), std::move(b)});
}

/// `((as const (Array I E)) v)` -- constant array.
inline TermPtr mk_const_array(SortPtr array, TermPtr value) {
  if (array->kind != Sort::Kind::Array || !sorts_equal(array->element, value->sort))
    throw SortError("as-const: value sort does not match array element sort");
  Term t;
  t.kind = TermKind::App;
  t.sym = "const";
  t.sort = array;
  t.args = {std::move(value)};
  t.as_qualified = true;
  return std::make_shared<Term>(std::move(t));
}

// ---------------------------------------------------------------------------
// Structural equality and hashing
// ---------------------------------------------------------------------------

inline bool terms_equal(const TermPtr& a, const TermPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind || a->sym != b->sym || a->args.size() != b->args.size())
    return false;
  if (!sorts_equal(a->sort, b->sort)) return false;
  if (a->kind == TermKind::Quant) {
    if (a->quant != b->quant || a->bound.size() != b->bound.size()) return false;
    for (size_t i = 0; i < a->bound.size(); ++i)
      if (a->bound[i].name != b->bound[i].name ||
          !sorts_equal(a->bound[i].sort, b->bound[i].sort))
        return false;
  }
  if (a->as_qualified != b->as_qualified) return false;
  for (size_t i = 0; i < a->args.size(); ++i)
    if (!terms_equal(a->args[i], b->args[i])) return false;
  return true;
}

/// FNV-1a, the stable 64-bit hash used for trace states as well.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 14695981039346656037ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline uint64_t fnv1a(const std::string& s, uint64_t h = 14695981039346656037ull) {
  return fnv1a(s.data(), s.size(), h);
}

inline uint64_t term_hash(const TermPtr& t, uint64_t h = 14695981039346656037ull) {
  h = fnv1a(&t->kind, sizeof(t->kind), h);
  h = fnv1a(t->sym, h);
  if (t->kind == TermKind::Quant) {
    h = fnv1a(&t->quant, sizeof(t->quant), h);
    for (const auto& b : t->bound) h = fnv1a(b.name, h);
  }
  for (const auto& a : t->args) h = term_hash(a, h);
  return h;
}

// ---------------------------------------------------------------------------
// Traversal helpers
// ---------------------------------------------------------------------------

/// Rebuilds `root` with the subterm at `path` replaced. A path is the list
/// of argument indices from the root (a quantifier body is index 0).
inline TermPtr replace_at_path(const TermPtr& root, const std::vector<int>& path,
                               const TermPtr& replacement, size_t depth = 0) {
  if (depth == path.size()) return replacement;
  int idx = path[depth];
  if (idx < 0 || static_cast<size_t>(idx) >= root->args.size())
    throw std::out_of_range("term path out of range");
  Term t = *root;
  t.args[idx] = replace_at_path(root->args[idx], path, replacement, depth + 1);
  return std::make_shared<Term>(std::move(t));
}

inline TermPtr subterm_at_path(const TermPtr& root, const std::vector<int>& path) {
  TermPtr cur = root;
  for (int idx : path) {
    if (idx < 0 || static_cast<size_t>(idx) >= cur->args.size())
      throw std::out_of_range("term path out of range");
    cur = cur->args[idx];
  }
  return cur;
}

/// Preorder visit of all subterms; `visit(term, path)` returning false
/// prunes the subtree.
template <typename F>
inline void walk_term(const TermPtr& root, F&& visit) {
  std::vector<int> path;
  struct Rec {
    F& f;
    std::vector<int>& path;
    void go(const TermPtr& t) {
      if (!f(t, const_cast<const std::vector<int>&>(path))) return;
      for (size_t i = 0; i < t->args.size(); ++i) {
        path.push_back(static_cast<int>(i));
        go(t->args[i]);
        path.pop_back();
      }
    }
  } rec{visit, path};
  rec.go(root);
}

inline bool contains_pred_app(const TermPtr& t) {
  bool found = false;
  walk_term(t, [&](const TermPtr& u, const std::vector<int>&) {
    if (u->kind == TermKind::PredApp) found = true;
    return !found;
  });
  return found;
}

/// Free variable names of a term (variables not bound by an inner quantifier).
inline void collect_free_vars(const TermPtr& t, std::vector<std::string>& shadow,
                              std::map<std::string, SortPtr>& out) {
  if (t->kind == TermKind::Var) {
    for (const auto& s : shadow)
      if (s == t->sym) return;
    out.emplace(t->sym, t->sort);
    return;
  }
  if (t->kind == TermKind::Quant) {
    size_t n = shadow.size();
    for (const auto& b : t->bound) shadow.push_back(b.name);
    collect_free_vars(t->args[0], shadow, out);
    shadow.resize(n);
    return;
  }
  for (const auto& a : t->args) collect_free_vars(a, shadow, out);
}

inline std::map<std::string, SortPtr> free_vars(const TermPtr& t) {
  std::map<std::string, SortPtr> out;
  std::vector<std::string> shadow;
  collect_free_vars(t, shadow, out);
  return out;
}

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fresh_name(const std::string& base,
                              const std::map<std::string, SortPtr>& avoid,
                              const std::vector<Binding>& also) {
  auto taken = [&](const std::string& n) {
    if (avoid.count(n)) return true;
    for (const auto& b : also)
      if (b.name == n) return true;
    return false;
  };
  if (!taken(base)) return base;
  for (unsigned k = 0;; ++k) {
    std::string cand = base + "!" + std::to_string(k);
    if (!taken(cand)) return cand;
  }
}

}  // namespace detail

/// Capture-avoiding parallel substitution of variables by terms.
inline TermPtr substitute(const TermPtr& t, const std::map<std::string, TermPtr>& sub) {
  switch (t->kind) {
    case TermKind::Var: {
      auto it = sub.find(t->sym);
      return it == sub.end() ? t : it->second;
    }
    case TermKind::Const:
      return t;
    case TermKind::App:
    case TermKind::PredApp: {
      Term n = *t;
      bool changed = false;
      for (size_t i = 0; i < n.args.size(); ++i) {
        TermPtr r = substitute(t->args[i], sub);
        if (r != t->args[i]) changed = true;
        n.args[i] = r;
      }
      return changed ? std::make_shared<Term>(std::move(n)) : t;
    }
    case TermKind::Quant: {
      // Drop shadowed entries; rename binders that would capture.
      std::map<std::string, TermPtr> inner = sub;
      for (const auto& b : t->bound) inner.erase(b.name);
      if (inner.empty()) return t;

      std::map<std::string, SortPtr> avoid;
      for (const auto& [k, v] : inner) {
        auto fv = free_vars(v);
        avoid.insert(fv.begin(), fv.end());
      }
      std::vector<Binding> bound = t->bound;
      std::map<std::string, TermPtr> rename;
      for (auto& b : bound) {
        if (avoid.count(b.name)) {
          std::string nn = detail::fresh_name(b.name, avoid, bound);
          rename[b.name] = mk_var(nn, b.sort);
          b.name = nn;
        }
      }
      TermPtr body = t->args[0];
      if (!rename.empty()) body = substitute(body, rename);
      body = substitute(body, inner);
      return mk_quant(t->quant, std::move(bound), std::move(body));
    }
  }
  return t;
}

}  // namespace chcfuzz
