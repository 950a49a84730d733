/// \file mutate.hpp
/// \brief The ten satisfiability-preserving mutation families.
///
/// Every mutation is a deterministic, replayable transformation: a
/// MutationRecord captures the rng seed and, after the first application,
/// every decision taken (target clause, AST path, permutation, generated
/// rule shape, rewritten bodies), so applying the same record to the same
/// system reproduces the same result bit for bit.
///
/// Families 1-6 rewrite a clause in place and preserve clause-wise logical
/// equivalence; 7-8 append a rule with an unsatisfiable premise and preserve
/// satisfiability; 9 delegates to the solver's simplify tactic; 10 only
/// touches the option preamble.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "params.hpp"
#include "parse.hpp"
#include "print.hpp"
#include "process.hpp"
#include "system.hpp"

namespace chcfuzz {

using json = nlohmann::json;

enum class MutationKind {
  SwapAnd,
  DupAnd,
  BreakAnd,
  SwapOr,
  MixBoundVars,
  AddIneq,
  AddLinRule,
  AddNonlinRule,
  Rewrite,
  ParamToggle,
};

enum class MutationType { Own, Rewrites, Parameters };

inline const char* kind_name(MutationKind k) {
  switch (k) {
    case MutationKind::SwapAnd: return "SWAP_AND";
    case MutationKind::DupAnd: return "DUP_AND";
    case MutationKind::BreakAnd: return "BREAK_AND";
    case MutationKind::SwapOr: return "SWAP_OR";
    case MutationKind::MixBoundVars: return "MIX_BOUND_VARS";
    case MutationKind::AddIneq: return "ADD_INEQ";
    case MutationKind::AddLinRule: return "ADD_LIN_RULE";
    case MutationKind::AddNonlinRule: return "ADD_NONLIN_RULE";
    case MutationKind::Rewrite: return "REWRITE";
    case MutationKind::ParamToggle: return "PARAM_TOGGLE";
  }
  return "?";
}

inline std::optional<MutationKind> kind_from_name(const std::string& s) {
  static const std::vector<std::pair<std::string, MutationKind>> table = {
      {"SWAP_AND", MutationKind::SwapAnd},           {"DUP_AND", MutationKind::DupAnd},
      {"BREAK_AND", MutationKind::BreakAnd},         {"SWAP_OR", MutationKind::SwapOr},
      {"MIX_BOUND_VARS", MutationKind::MixBoundVars},{"ADD_INEQ", MutationKind::AddIneq},
      {"ADD_LIN_RULE", MutationKind::AddLinRule},    {"ADD_NONLIN_RULE", MutationKind::AddNonlinRule},
      {"REWRITE", MutationKind::Rewrite},            {"PARAM_TOGGLE", MutationKind::ParamToggle}};
  for (const auto& [name, kind] : table)
    if (name == s) return kind;
  return std::nullopt;
}

inline MutationType type_of(MutationKind k) {
  if (k == MutationKind::Rewrite) return MutationType::Rewrites;
  if (k == MutationKind::ParamToggle) return MutationType::Parameters;
  return MutationType::Own;
}

inline const std::vector<MutationKind>& own_mutation_kinds() {
  static const std::vector<MutationKind> kinds = {
      MutationKind::SwapAnd,    MutationKind::DupAnd,       MutationKind::BreakAnd,
      MutationKind::SwapOr,     MutationKind::MixBoundVars, MutationKind::AddIneq,
      MutationKind::AddLinRule, MutationKind::AddNonlinRule};
  return kinds;
}

struct MutationRecord {
  MutationKind kind = MutationKind::SwapAnd;
  uint64_t rng_seed = 0;
  json choices = json::object();

  bool has_choices() const { return !choices.empty(); }

  json to_json() const {
    return json{{"kind", kind_name(kind)}, {"rng_seed", rng_seed}, {"choices", choices}};
  }
  static MutationRecord from_json(const json& j) {
    MutationRecord r;
    auto k = kind_from_name(j.at("kind").get<std::string>());
    if (!k) throw std::invalid_argument("unknown mutation kind in record");
    r.kind = *k;
    r.rng_seed = j.at("rng_seed").get<uint64_t>();
    r.choices = j.value("choices", json::object());
    return r;
  }
};

struct MutationChain {
  std::string seed_id;
  std::vector<MutationRecord> records;

  json to_json() const {
    json recs = json::array();
    for (const auto& r : records) recs.push_back(r.to_json());
    return json{{"seed_id", seed_id}, {"records", recs}};
  }
  static MutationChain from_json(const json& j) {
    MutationChain c;
    c.seed_id = j.value("seed_id", "");
    for (const auto& r : j.at("records")) c.records.push_back(MutationRecord::from_json(r));
    return c;
  }
};

// ---------------------------------------------------------------------------
// Deterministic RNG
// ---------------------------------------------------------------------------

/// mt19937_64 with hand-rolled bounded draws; std distributions are not
/// reproducible across standard libraries, raw engine output is.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next() { return gen_(); }

  /// Uniform in [0, n).
  uint64_t below(uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    for (;;) {
      uint64_t r = gen_();
      if (r < limit) return r % n;
    }
  }

  /// Uniform in [lo, hi] inclusive.
  int64_t range(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo + 1)));
  }

  double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform random permutation of 0..n-1.
  std::vector<int> permutation(size_t n) {
    std::vector<int> p(n);
    for (size_t i = 0; i < n; ++i) p[i] = static_cast<int>(i);
    for (size_t i = n; i > 1; --i) std::swap(p[i - 1], p[below(i)]);
    return p;
  }

 private:
  std::mt19937_64 gen_;
};

// ---------------------------------------------------------------------------
// Low-level mutation operations
// ---------------------------------------------------------------------------

namespace mutops {

inline bool is_op(const TermPtr& t, const char* op) {
  return t->kind == TermKind::App && t->sym == op;
}

/// Swaps operands i and j of the and/or node addressed by path in the body
/// of clause `ci`.
inline std::optional<ChcSystem> swap_operands(const ChcSystem& sys, size_t ci,
                                              const std::vector<int>& path, size_t i,
                                              size_t j, const char* op) {
  if (ci >= sys.clauses.size()) return std::nullopt;
  TermPtr node;
  try {
    node = subterm_at_path(sys.clauses[ci].body, path);
  } catch (const std::out_of_range&) {
    return std::nullopt;
  }
  if (!is_op(node, op) || i >= node->args.size() || j >= node->args.size() || i == j)
    return std::nullopt;
  Term n = *node;
  std::swap(n.args[i], n.args[j]);
  ChcSystem out = sys;
  out.clauses[ci].body =
      replace_at_path(sys.clauses[ci].body, path, std::make_shared<Term>(std::move(n)));
  return out;
}

inline std::optional<ChcSystem> dup_conjunct(const ChcSystem& sys, size_t ci,
                                             const std::vector<int>& path, size_t pick) {
  if (ci >= sys.clauses.size()) return std::nullopt;
  TermPtr node;
  try {
    node = subterm_at_path(sys.clauses[ci].body, path);
  } catch (const std::out_of_range&) {
    return std::nullopt;
  }
  if (!is_op(node, "and") || pick >= node->args.size()) return std::nullopt;
  Term n = *node;
  n.args.push_back(n.args[pick]);
  ChcSystem out = sys;
  out.clauses[ci].body =
      replace_at_path(sys.clauses[ci].body, path, std::make_shared<Term>(std::move(n)));
  return out;
}

/// a1 ∧ ... ∧ an  ->  a1 ∧ ... ∧ as ∧ (a_{s+1} ∧ ... ∧ an); split in
/// [1, n-2] so the nested group keeps at least two members.
inline std::optional<ChcSystem> break_conjunction(const ChcSystem& sys, size_t ci,
                                                  const std::vector<int>& path, size_t split) {
  if (ci >= sys.clauses.size()) return std::nullopt;
  TermPtr node;
  try {
    node = subterm_at_path(sys.clauses[ci].body, path);
  } catch (const std::out_of_range&) {
    return std::nullopt;
  }
  if (!is_op(node, "and") || node->args.size() < 3) return std::nullopt;
  if (split < 1 || split > node->args.size() - 2) return std::nullopt;
  std::vector<TermPtr> front(node->args.begin(), node->args.begin() + split);
  std::vector<TermPtr> back(node->args.begin() + split, node->args.end());
  front.push_back(mk_and(std::move(back)));
  ChcSystem out = sys;
  out.clauses[ci].body =
      replace_at_path(sys.clauses[ci].body, path, mk_and(std::move(front)));
  return out;
}

/// Reorders the clause's quantifier prefix: new_prefix[k] = old_prefix[perm[k]].
inline std::optional<ChcClause> mix_bound_vars(const ChcClause& clause,
                                               const std::vector<int>& perm) {
  if (clause.bound.empty()) return std::nullopt;
  if (perm.size() != clause.bound.size()) return std::nullopt;
  std::vector<bool> seen(perm.size(), false);
  for (int p : perm) {
    if (p < 0 || static_cast<size_t>(p) >= perm.size() || seen[p]) return std::nullopt;
    seen[p] = true;
  }
  ChcClause out = clause;
  for (size_t k = 0; k < perm.size(); ++k) out.bound[k] = clause.bound[perm[k]];
  return out;
}

/// Relaxed copy of a numeric literal: +1/-1 for Int, the integer digits of
/// the decimal for Real. Returns nullopt when the text cannot be adjusted.
inline std::optional<TermPtr> relax_literal(const TermPtr& lit, int delta) {
  if (lit->kind == TermKind::App && lit->sym == "-" && lit->args.size() == 1) {
    auto inner = relax_literal(lit->args[0], -delta);
    if (!inner) return std::nullopt;
    // Sign crossings: -(0.x) + 1 would need fraction arithmetic; for Int the
    // inner value may reach zero or below, handled via the plain value path.
    if ((*inner)->sort->kind == Sort::Kind::Int) {
      auto v = int_literal_value(lit);
      if (!v || *v > INT64_MAX - 1 || *v < INT64_MIN + 1) return std::nullopt;
      return mk_int(*v + delta);
    }
    if ((*inner)->kind != TermKind::Const) return std::nullopt;
    return mk_app("-", {*inner});
  }
  if (lit->kind != TermKind::Const) return std::nullopt;
  if (lit->sort->kind == Sort::Kind::Int) {
    auto v = int_literal_value(lit);
    if (!v || *v > INT64_MAX - 1 || *v < INT64_MIN + 1) return std::nullopt;
    return mk_int(*v + delta);
  }
  if (lit->sort->kind == Sort::Kind::Real) {
    std::string text = lit->sym;
    auto dot = text.find('.');
    std::string ipart = dot == std::string::npos ? text : text.substr(0, dot);
    std::string fpart = dot == std::string::npos ? "" : text.substr(dot);
    int64_t iv;
    try {
      iv = std::stoll(ipart);
    } catch (...) {
      return std::nullopt;
    }
    int64_t nv = iv + delta;
    if (nv < 0) return std::nullopt;  // crossing zero needs fraction math
    return mk_const(std::to_string(nv) + fpart, real_sort());
  }
  return std::nullopt;
}

/// True when the node is `lit (op) var` or `var (op) lit` for a strict or
/// non-strict inequality with a relaxable numeric literal.
inline bool add_ineq_eligible(const TermPtr& t) {
  if (t->kind != TermKind::App || t->args.size() != 2) return false;
  if (t->sym != "<" && t->sym != "<=" && t->sym != ">" && t->sym != ">=") return false;
  const TermPtr& a = t->args[0];
  const TermPtr& b = t->args[1];
  auto eligible_pair = [&](const TermPtr& lit, const TermPtr& var, bool lit_left) {
    if (var->kind != TermKind::Var || !is_numeral(lit)) return false;
    bool weaken_up = (t->sym == "<" || t->sym == "<=") != lit_left;
    return relax_literal(lit, weaken_up ? 1 : -1).has_value();
  };
  return eligible_pair(b, a, false) || eligible_pair(a, b, true);
}

/// x<c -> (x<c) ∧ (x<c+1) and the mirrored variants; the added conjunct is
/// implied by the original, so the conjunction is equivalent to it.
inline std::optional<TermPtr> add_ineq(const TermPtr& site) {
  if (!add_ineq_eligible(site)) return std::nullopt;
  bool lit_left = is_numeral(site->args[0]);
  const TermPtr& lit = lit_left ? site->args[0] : site->args[1];
  bool less = site->sym == "<" || site->sym == "<=";
  int delta = (less != lit_left) ? 1 : -1;
  auto relaxed = relax_literal(lit, delta);
  if (!relaxed) return std::nullopt;
  std::vector<TermPtr> args = site->args;
  args[lit_left ? 0 : 1] = *relaxed;
  TermPtr weaker = mk_app(site->sym, std::move(args));
  return mk_and({site, weaker});
}

}  // namespace mutops

// ---------------------------------------------------------------------------
// Rewrite service (solver binary in tactic-application mode)
// ---------------------------------------------------------------------------

struct RewriteServiceConfig {
  std::string solver_path;
  std::vector<std::string> extra_argv;
  double timeout_seconds = 10.0;
};

namespace detail {

inline std::string oracle_declarations(const ChcSystem& sys) {
  std::ostringstream os;
  for (const auto& s : sys.sort_decls) os << "(declare-sort " << print_symbol(s) << " 0)\n";
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
  return os.str();
}

/// Prefix variables become free constants for transport; names clashing
/// with declared symbols are renamed and mapped back after parsing.
struct PrefixTransport {
  std::vector<Binding> consts;                 // transported names
  std::map<std::string, TermPtr> to_wire;      // original name -> wire var
  std::map<std::string, TermPtr> from_wire;    // wire name -> original var
};

inline PrefixTransport make_transport(const ChcSystem& sys,
                                      const std::vector<Binding>& bound) {
  PrefixTransport tr;
  for (const auto& b : bound) {
    std::string wire = b.name;
    if (sys.declares_symbol(wire)) {
      unsigned k = 0;
      do {
        wire = b.name + "!w" + std::to_string(k++);
      } while (sys.declares_symbol(wire));
    }
    tr.consts.push_back({wire, b.sort});
    if (wire != b.name) {
      tr.to_wire[b.name] = mk_var(wire, b.sort);
      tr.from_wire[wire] = mk_var(b.name, b.sort);
    }
  }
  return tr;
}

/// Extracts the terms of the first goal in `(goals (goal ... :precision ...))`.
inline std::optional<std::vector<SExpr>> goal_terms(const std::string& out) {
  SExprReader reader(out);
  std::vector<SExpr> exprs;
  try {
    exprs = reader.read_all();
  } catch (const ParseError&) {
    return std::nullopt;
  }
  for (const auto& e : exprs) {
    if (e.is_atom || e.items.empty() || !e.items[0].is_sym("goals")) continue;
    if (e.items.size() < 2 || e.items[1].is_atom) return std::nullopt;
    const SExpr& goal = e.items[1];
    if (goal.items.empty() || !goal.items[0].is_sym("goal")) return std::nullopt;
    std::vector<SExpr> terms;
    for (size_t i = 1; i < goal.items.size(); ++i) {
      const SExpr& item = goal.items[i];
      if (item.is_atom && !item.atom.empty() && item.atom[0] == ':') {
        ++i;  // keyword plus its value
        continue;
      }
      terms.push_back(item);
    }
    return terms;
  }
  return std::nullopt;
}

}  // namespace detail

/// Applies `(apply (using-params simplify :<param> true))` (or plain
/// simplify for empty_simplify) to one clause body via the external solver
/// binary. Returns the rewritten body or nullopt on any service failure.
inline std::optional<TermPtr> rewrite_body(const ChcSystem& sys, const ChcClause& clause,
                                           const std::string& param,
                                           const RewriteServiceConfig& service) {
  if (service.solver_path.empty()) return std::nullopt;
  detail::PrefixTransport tr = detail::make_transport(sys, clause.bound);

  std::ostringstream script;
  script << detail::oracle_declarations(sys);
  for (const auto& c : tr.consts)
    script << "(declare-const " << print_symbol(c.name) << ' ' << sort_to_string(c.sort)
           << ")\n";
  TermPtr wire_body =
      tr.to_wire.empty() ? clause.body : substitute(clause.body, tr.to_wire);
  script << "(assert " << print_term(wire_body) << ")\n";
  if (param == "empty_simplify")
    script << "(apply simplify)\n";
  else
    script << "(apply (using-params simplify :" << param << " true))\n";

  TempDir dir("chcfuzz-rw");
  auto path = dir.write_file("rewrite.smt2", script.str());
  std::vector<std::string> argv = {service.solver_path};
  argv.insert(argv.end(), service.extra_argv.begin(), service.extra_argv.end());
  argv.push_back(path.string());

  ProcessResult run;
  try {
    run = run_process(argv, service.timeout_seconds, "", dir.path().string());
  } catch (const ProcessError&) {
    return std::nullopt;
  }
  if (run.timed_out || run.signaled || run.out.find("(error") != std::string::npos)
    return std::nullopt;

  auto terms = detail::goal_terms(run.out);
  if (!terms) return std::nullopt;

  TermParser tp(sys);
  TermEnv env(sys);
  env.push_scope();
  for (const auto& c : tr.consts) env.bind(c.name, mk_var(c.name, c.sort));
  std::vector<TermPtr> parsed;
  try {
    for (const auto& t : *terms) parsed.push_back(tp.parse_term(t, env));
  } catch (const ParseError&) {
    return std::nullopt;
  }
  TermPtr body = mk_and(std::move(parsed));
  if (!tr.from_wire.empty()) body = substitute(body, tr.from_wire);
  if (body->sort->kind != Sort::Kind::Bool) return std::nullopt;
  return body;
}

// ---------------------------------------------------------------------------
// Mutation engine
// ---------------------------------------------------------------------------

struct AppliedMutation {
  ChcSystem system;
  MutationRecord record;
};

class MutationEngine {
 public:
  explicit MutationEngine(RewriteServiceConfig rewrite_service = {})
      : service_(std::move(rewrite_service)) {}

  const RewriteServiceConfig& service() const { return service_; }

  /// Applies `rec` to `system`. When rec.choices is empty the decisions are
  /// drawn from rec.rng_seed and recorded; a filled record replays exactly.
  /// Returns nullopt when no applicable site exists (reason in *why).
  std::optional<AppliedMutation> apply(const ChcSystem& system, MutationRecord rec,
                                       std::string* why = nullptr) const {
    auto fail = [&](const std::string& reason) -> std::optional<AppliedMutation> {
      if (why) *why = reason;
      return std::nullopt;
    };
    Rng rng(rec.rng_seed);
    switch (rec.kind) {
      case MutationKind::SwapAnd:
        return apply_swap(system, rec, rng, "and", fail);
      case MutationKind::SwapOr:
        return apply_swap(system, rec, rng, "or", fail);
      case MutationKind::DupAnd:
        return apply_dup(system, rec, rng, fail);
      case MutationKind::BreakAnd:
        return apply_break(system, rec, rng, fail);
      case MutationKind::MixBoundVars:
        return apply_mix(system, rec, rng, fail);
      case MutationKind::AddIneq:
        return apply_add_ineq(system, rec, rng, fail);
      case MutationKind::AddLinRule:
        return apply_add_lin(system, rec, rng, fail);
      case MutationKind::AddNonlinRule:
        return apply_add_nonlin(system, rec, rng, fail);
      case MutationKind::Rewrite:
        return apply_rewrite(system, rec, rng, fail);
      case MutationKind::ParamToggle:
        return apply_param_toggle(system, rec, rng, fail);
    }
    return fail("unknown mutation kind");
  }

  // -- site enumeration (public: the scheduler asks for applicability) ------

  struct Site {
    size_t clause;
    std::vector<int> path;
    size_t arity;
  };

  /// All and/or nodes in clause bodies with the required minimum arity.
  static std::vector<Site> connective_sites(const ChcSystem& sys, const char* op,
                                            size_t min_arity) {
    std::vector<Site> sites;
    for (size_t ci = 0; ci < sys.clauses.size(); ++ci) {
      walk_term(sys.clauses[ci].body, [&](const TermPtr& t, const std::vector<int>& path) {
        if (mutops::is_op(t, op) && t->args.size() >= min_arity)
          sites.push_back({ci, path, t->args.size()});
        return true;
      });
    }
    return sites;
  }

  static std::vector<Site> ineq_sites(const ChcSystem& sys) {
    std::vector<Site> sites;
    for (size_t ci = 0; ci < sys.clauses.size(); ++ci) {
      walk_term(sys.clauses[ci].body, [&](const TermPtr& t, const std::vector<int>& path) {
        if (mutops::add_ineq_eligible(t)) sites.push_back({ci, path, 2});
        return true;
      });
    }
    return sites;
  }

 private:
  template <typename Fail>
  std::optional<AppliedMutation> apply_swap(const ChcSystem& sys, MutationRecord& rec,
                                            Rng& rng, const char* op, Fail&& fail) const {
    size_t ci;
    std::vector<int> path;
    size_t i, j;
    if (rec.has_choices()) {
      ci = rec.choices.at("clause").get<size_t>();
      path = rec.choices.at("path").get<std::vector<int>>();
      i = rec.choices.at("i").get<size_t>();
      j = rec.choices.at("j").get<size_t>();
    } else {
      auto sites = connective_sites(sys, op, 2);
      if (sites.empty()) return fail(std::string("no ") + op + " site");
      const Site& s = sites[rng.below(sites.size())];
      ci = s.clause;
      path = s.path;
      i = rng.below(s.arity);
      j = rng.below(s.arity - 1);
      if (j >= i) ++j;  // distinct pair, uniform
      rec.choices = json{{"clause", ci}, {"path", path}, {"i", i}, {"j", j}};
    }
    auto out = mutops::swap_operands(sys, ci, path, i, j, op);
    if (!out) return fail("recorded swap site is gone");
    return AppliedMutation{std::move(*out), rec};
  }

  template <typename Fail>
  std::optional<AppliedMutation> apply_dup(const ChcSystem& sys, MutationRecord& rec,
                                           Rng& rng, Fail&& fail) const {
    size_t ci, pick;
    std::vector<int> path;
    if (rec.has_choices()) {
      ci = rec.choices.at("clause").get<size_t>();
      path = rec.choices.at("path").get<std::vector<int>>();
      pick = rec.choices.at("pick").get<size_t>();
    } else {
      auto sites = connective_sites(sys, "and", 2);
      if (sites.empty()) return fail("no conjunction site");
      const Site& s = sites[rng.below(sites.size())];
      ci = s.clause;
      path = s.path;
      pick = rng.below(s.arity);
      rec.choices = json{{"clause", ci}, {"path", path}, {"pick", pick}};
    }
    auto out = mutops::dup_conjunct(sys, ci, path, pick);
    if (!out) return fail("recorded dup site is gone");
    return AppliedMutation{std::move(*out), rec};
  }

  template <typename Fail>
  std::optional<AppliedMutation> apply_break(const ChcSystem& sys, MutationRecord& rec,
                                             Rng& rng, Fail&& fail) const {
    size_t ci, split;
    std::vector<int> path;
    if (rec.has_choices()) {
      ci = rec.choices.at("clause").get<size_t>();
      path = rec.choices.at("path").get<std::vector<int>>();
      split = rec.choices.at("split").get<size_t>();
    } else {
      auto sites = connective_sites(sys, "and", 3);
      if (sites.empty()) return fail("no conjunction of arity >= 3");
      const Site& s = sites[rng.below(sites.size())];
      ci = s.clause;
      path = s.path;
      split = 1 + rng.below(s.arity - 2);
      rec.choices = json{{"clause", ci}, {"path", path}, {"split", split}};
    }
    auto out = mutops::break_conjunction(sys, ci, path, split);
    if (!out) return fail("recorded break site is gone");
    return AppliedMutation{std::move(*out), rec};
  }

  template <typename Fail>
  std::optional<AppliedMutation> apply_mix(const ChcSystem& sys, MutationRecord& rec,
                                           Rng& rng, Fail&& fail) const {
    size_t ci;
    std::vector<int> perm;
    if (rec.has_choices()) {
      ci = rec.choices.at("clause").get<size_t>();
      perm = rec.choices.at("perm").get<std::vector<int>>();
    } else {
      std::vector<size_t> eligible;
      for (size_t i = 0; i < sys.clauses.size(); ++i)
        if (sys.clauses[i].bound.size() >= 2) eligible.push_back(i);
      if (eligible.empty()) return fail("no clause with >= 2 bound variables");
      ci = eligible[rng.below(eligible.size())];
      do {
        perm = rng.permutation(sys.clauses[ci].bound.size());
      } while (std::is_sorted(perm.begin(), perm.end()));
      rec.choices = json{{"clause", ci}, {"perm", perm}};
    }
    if (ci >= sys.clauses.size()) return fail("recorded clause is gone");
    auto cl = mutops::mix_bound_vars(sys.clauses[ci], perm);
    if (!cl) return fail("recorded permutation no longer fits");
    ChcSystem out = sys;
    out.clauses[ci] = std::move(*cl);
    return AppliedMutation{std::move(out), rec};
  }

  template <typename Fail>
  std::optional<AppliedMutation> apply_add_ineq(const ChcSystem& sys, MutationRecord& rec,
                                                Rng& rng, Fail&& fail) const {
    size_t ci;
    std::vector<int> path;
    if (rec.has_choices()) {
      ci = rec.choices.at("clause").get<size_t>();
      path = rec.choices.at("path").get<std::vector<int>>();
    } else {
      auto sites = ineq_sites(sys);
      if (sites.empty()) return fail("no eligible inequality");
      const Site& s = sites[rng.below(sites.size())];
      ci = s.clause;
      path = s.path;
      rec.choices = json{{"clause", ci}, {"path", path}};
    }
    if (ci >= sys.clauses.size()) return fail("recorded clause is gone");
    TermPtr site;
    try {
      site = subterm_at_path(sys.clauses[ci].body, path);
    } catch (const std::out_of_range&) {
      return fail("recorded inequality site is gone");
    }
    auto widened = mutops::add_ineq(site);
    if (!widened) return fail("recorded site is not an eligible inequality");
    ChcSystem out = sys;
    out.clauses[ci].body = replace_at_path(sys.clauses[ci].body, path, *widened);
    return AppliedMutation{std::move(out), rec};
  }

  // Unsatisfiable premises for the linear generated rule; u is a fresh Int
  // variable added to the prefix for the entries that mention it.
  static constexpr size_t kUnsatPremiseCount = 5;

  static TermPtr unsat_premise(size_t index, const TermPtr& u) {
    switch (index) {
      case 0: return mk_false();
      case 1: return mk_not(mk_app("=", {u, u}));
      case 2: return mk_app("<", {u, u});
      case 3: return mk_app("=", {mk_int(0), mk_int(1)});
      default: return mk_and({mk_app("<", {u, mk_int(0)}), mk_app(">", {u, mk_int(0)})});
    }
  }

  static bool premise_uses_var(size_t index) { return index != 0 && index != 3; }

  /// Fresh variable names that cannot collide with declared symbols.
  static std::vector<std::string> fresh_var_names(const ChcSystem& sys,
                                                  const std::string& base, size_t count,
                                                  const std::vector<std::string>& taken = {}) {
    std::vector<std::string> names;
    unsigned k = 0;
    while (names.size() < count) {
      std::string cand = base + std::to_string(k++);
      if (sys.declares_symbol(cand)) continue;
      if (std::find(taken.begin(), taken.end(), cand) != taken.end()) continue;
      names.push_back(cand);
    }
    return names;
  }

  template <typename Fail>
  std::optional<AppliedMutation> apply_add_lin(const ChcSystem& sys, MutationRecord& rec,
                                               Rng& rng, Fail&& fail) const {
    if (sys.predicates.empty()) return fail("no predicates declared");
    std::string pred;
    size_t premise;
    if (rec.has_choices()) {
      pred = rec.choices.at("pred").get<std::string>();
      premise = rec.choices.at("premise").get<size_t>();
      if (premise >= kUnsatPremiseCount) return fail("recorded premise index out of range");
    } else {
      pred = sys.predicates[rng.below(sys.predicates.size())].name;
      premise = rng.below(kUnsatPremiseCount);
      rec.choices = json{{"pred", pred}, {"premise", premise}};
    }
    const PredDecl* p = sys.find_predicate(pred);
    if (!p) return fail("recorded predicate is gone");

    size_t extra = premise_uses_var(premise) ? 1 : 0;
    auto names = fresh_var_names(sys, "v!", p->params.size() + extra);
    ChcClause cl;
    std::vector<TermPtr> args;
    for (size_t i = 0; i < p->params.size(); ++i) {
      cl.bound.push_back({names[i], p->params[i]});
      args.push_back(mk_var(names[i], p->params[i]));
    }
    TermPtr u;
    if (extra) {
      cl.bound.push_back({names.back(), int_sort()});
      u = mk_var(names.back(), int_sort());
    }
    cl.body = unsat_premise(premise, u);
    cl.head = mk_pred_app(pred, std::move(args));
    cl.form = ClauseForm::Implication;

    ChcSystem out = sys;
    out.clauses.push_back(std::move(cl));
    return AppliedMutation{std::move(out), rec};
  }

  template <typename Fail>
  std::optional<AppliedMutation> apply_add_nonlin(const ChcSystem& sys, MutationRecord& rec,
                                                  Rng& rng, Fail&& fail) const {
    if (sys.predicates.empty()) return fail("no predicates declared");
    std::string pred;
    size_t n;
    std::vector<int> head_sel;
    std::vector<std::vector<int>> prem_sel;
    const PredDecl* p = nullptr;

    if (rec.has_choices()) {
      pred = rec.choices.at("pred").get<std::string>();
      n = rec.choices.at("n").get<size_t>();
      head_sel = rec.choices.at("head_args").get<std::vector<int>>();
      prem_sel = rec.choices.at("premise_args").get<std::vector<std::vector<int>>>();
      p = sys.find_predicate(pred);
      if (!p || n < 1 || n > 10 || head_sel.size() != p->params.size() ||
          prem_sel.size() != n)
        return fail("recorded rule shape no longer fits");
    } else {
      pred = sys.predicates[rng.below(sys.predicates.size())].name;
      p = sys.find_predicate(pred);
      n = static_cast<size_t>(rng.range(1, 10));
    }

    size_t m = p->params.size();
    // v0..v_{m-1} mirror the predicate signature; x1..xn are the Int cycle.
    auto vnames = fresh_var_names(sys, "v!", m);
    auto xnames = fresh_var_names(sys, "x!", n, vnames);

    // Argument pools per position: index k in [0, m) selects v_k (same-sort
    // entries only), m + i selects x_{i+1} when the position is Int-sorted.
    auto pool_for = [&](size_t j, bool head_only) {
      std::vector<int> pool;
      for (size_t k = 0; k < m; ++k)
        if (sorts_equal(p->params[k], p->params[j])) pool.push_back(static_cast<int>(k));
      if (!head_only && p->params[j]->kind == Sort::Kind::Int)
        for (size_t i = 0; i < n; ++i) pool.push_back(static_cast<int>(m + i));
      return pool;
    };

    if (!rec.has_choices()) {
      head_sel.resize(m);
      for (size_t j = 0; j < m; ++j) {
        auto pool = pool_for(j, true);
        head_sel[j] = pool[rng.below(pool.size())];
      }
      prem_sel.assign(n, std::vector<int>(m));
      for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < m; ++j) {
          auto pool = pool_for(j, false);
          prem_sel[i][j] = pool[rng.below(pool.size())];
        }
      rec.choices = json{{"pred", pred}, {"n", n}, {"head_args", head_sel},
                         {"premise_args", prem_sel}};
    }

    auto arg_at = [&](int sel, size_t j, bool head_only) -> TermPtr {
      if (sel >= 0 && static_cast<size_t>(sel) < m &&
          sorts_equal(p->params[sel], p->params[j]))
        return mk_var(vnames[sel], p->params[sel]);
      size_t xi = static_cast<size_t>(sel) - m;
      if (!head_only && sel >= static_cast<int>(m) && xi < n &&
          p->params[j]->kind == Sort::Kind::Int)
        return mk_var(xnames[xi], int_sort());
      return nullptr;
    };

    std::vector<TermPtr> head_args(m);
    for (size_t j = 0; j < m; ++j) {
      head_args[j] = arg_at(head_sel[j], j, true);
      if (!head_args[j]) return fail("recorded head argument selection invalid");
    }
    std::vector<TermPtr> xs;
    for (size_t i = 0; i < n; ++i) xs.push_back(mk_var(xnames[i], int_sort()));

    std::vector<TermPtr> cycle;
    for (size_t i = 0; i < n; ++i) {
      std::vector<TermPtr> pargs(m);
      for (size_t j = 0; j < m; ++j) {
        if (prem_sel[i].size() != m) return fail("recorded premise argument shape invalid");
        pargs[j] = arg_at(prem_sel[i][j], j, false);
        if (!pargs[j]) return fail("recorded premise argument selection invalid");
      }
      TermPtr gt = mk_app(">", {xs[i], xs[(i + 1) % n]});
      cycle.push_back(mk_and({gt, mk_pred_app(pred, std::move(pargs))}));
    }
    std::vector<Binding> xbound;
    for (size_t i = 0; i < n; ++i) xbound.push_back({xnames[i], int_sort()});

    ChcClause cl;
    for (size_t j = 0; j < m; ++j) cl.bound.push_back({vnames[j], p->params[j]});
    cl.body = mk_exists(std::move(xbound), mk_and(std::move(cycle)));
    cl.head = mk_pred_app(pred, std::move(head_args));
    cl.form = ClauseForm::Implication;

    ChcSystem out = sys;
    out.clauses.push_back(std::move(cl));
    return AppliedMutation{std::move(out), rec};
  }

  template <typename Fail>
  std::optional<AppliedMutation> apply_rewrite(const ChcSystem& sys, MutationRecord& rec,
                                               Rng& rng, Fail&& fail) const {
    std::string param;
    if (rec.has_choices() && rec.choices.contains("param"))
      param = rec.choices.at("param").get<std::string>();
    else
      param = rewrite_params()[rng.below(rewrite_params().size())];

    ChcSystem out = sys;
    if (rec.has_choices() && rec.choices.contains("bodies")) {
      // Replay from the recorded rewritten bodies.
      auto bodies = rec.choices.at("bodies").get<std::vector<std::string>>();
      if (bodies.size() != sys.clauses.size())
        return fail("recorded rewrite does not match the clause count");
      TermParser tp(sys);
      for (size_t i = 0; i < bodies.size(); ++i) {
        detail::SExprReader reader(bodies[i]);
        TermEnv env(sys);
        env.push_scope();
        for (const auto& b : sys.clauses[i].bound) env.bind(b.name, mk_var(b.name, b.sort));
        try {
          auto exprs = reader.read_all();
          if (exprs.size() != 1) return fail("recorded body is not a single term");
          out.clauses[i].body = tp.parse_term(exprs[0], env);
        } catch (const ParseError&) {
          return fail("recorded rewritten body no longer parses");
        }
      }
      return AppliedMutation{std::move(out), rec};
    }

    std::vector<std::string> bodies;
    for (size_t i = 0; i < sys.clauses.size(); ++i) {
      auto body = rewrite_body(sys, sys.clauses[i], param, service_);
      if (!body) return fail("rewrite service failed on clause " + std::to_string(i));
      out.clauses[i].body = *body;
      bodies.push_back(print_term(*body));
    }
    rec.choices = json{{"param", param}, {"bodies", bodies}};
    return AppliedMutation{std::move(out), rec};
  }

  template <typename Fail>
  std::optional<AppliedMutation> apply_param_toggle(const ChcSystem& sys,
                                                    MutationRecord& rec, Rng& rng,
                                                    Fail&& fail) const {
    std::string key, value;
    if (rec.has_choices() && rec.choices.contains("key")) {
      key = rec.choices.at("key").get<std::string>();
      if (rec.choices.contains("value")) {
        value = rec.choices.at("value").get<std::string>();
      } else {
        const SolverParam* p = find_solver_param(key);
        if (!p) return fail("unknown solver parameter '" + key + "'");
        key = p->option_key;
        value = p->default_value ? "false" : "true";
      }
      if (sys.has_option(key)) return fail("parameter already toggled in this chain");
    } else {
      std::vector<const SolverParam*> remaining;
      for (const auto& p : solver_params())
        if (!sys.has_option(p.option_key)) remaining.push_back(&p);
      if (remaining.empty()) return fail("all solver parameters already toggled");
      const SolverParam* p = remaining[rng.below(remaining.size())];
      key = p->option_key;
      value = p->default_value ? "false" : "true";
    }
    rec.choices = json{{"key", key}, {"value", value}};
    ChcSystem out = sys;
    out.options.push_back({key, value});
    return AppliedMutation{std::move(out), rec};
  }

  RewriteServiceConfig service_;
};

}  // namespace chcfuzz
