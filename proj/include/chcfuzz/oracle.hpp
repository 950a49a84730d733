/// \file oracle.hpp
/// \brief Bug decision logic and oracle-solver checks.
///
/// judge() is the verdict table: the seed's established satisfiability
/// against the mutant verdict decides between model checking, bug handling,
/// passing, and logging. The oracle solver (a separate configured binary,
/// possibly the same as the solver under test) backs model validation,
/// clause equivalence, and premise unsatisfiability.

#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "model.hpp"
#include "mutate.hpp"
#include "print.hpp"
#include "process.hpp"
#include "runner.hpp"

namespace chcfuzz {

enum class GroundTruth { Sat, Unsat };

inline const char* truth_name(GroundTruth t) {
  return t == GroundTruth::Sat ? "sat" : "unsat";
}

enum class Decision { CheckModel, HandleBug, Pass, LogInfo };

/// The verdict table, cell for cell:
///   truth \ result |   sat        unsat       unknown/timeout
///   sat            | check-model  handle-bug  log-info
///   unsat          | handle-bug   pass        log-info
/// Crashes are handled by the caller before consulting the table.
inline Decision judge(GroundTruth truth, SolverVerdict::Outcome result) {
  switch (result) {
    case SolverVerdict::Outcome::Sat:
      return truth == GroundTruth::Sat ? Decision::CheckModel : Decision::HandleBug;
    case SolverVerdict::Outcome::Unsat:
      return truth == GroundTruth::Sat ? Decision::HandleBug : Decision::Pass;
    default:
      return Decision::LogInfo;
  }
}

// ---------------------------------------------------------------------------
// Oracle solver
// ---------------------------------------------------------------------------

struct OracleConfig {
  std::string path;
  std::vector<std::string> extra_argv;
  double timeout_seconds = 10.0;  // per check
};

enum class OracleAnswer { Unsat, Sat, Inconclusive };

struct OracleCheck {
  std::string declarations;          // emitted inside the push scope
  std::vector<std::string> asserts;  // printed terms
  bool want_witness = false;
};

struct OracleOutcome {
  OracleAnswer answer = OracleAnswer::Inconclusive;
  std::string witness;  // raw model text when requested and sat
};

namespace detail {

/// Reads the next balanced s-expression blob starting at or after `pos`.
inline std::string take_sexpr_blob(const std::string& out, size_t& pos) {
  size_t start = out.find('(', pos);
  if (start == std::string::npos) return "";
  int depth = 0;
  bool quoted = false;
  for (size_t i = start; i < out.size(); ++i) {
    char c = out[i];
    if (quoted) {
      if (c == '|') quoted = false;
      continue;
    }
    if (c == '|') quoted = true;
    if (c == '(') ++depth;
    if (c == ')') {
      if (--depth == 0) {
        pos = i + 1;
        return out.substr(start, i - start + 1);
      }
    }
  }
  return "";
}

}  // namespace detail

/// Runs all checks in one oracle child process; each check sits in its own
/// (push 1) ... (pop 1) scope and contributes exactly one verdict line.
/// A crashed or timed-out oracle yields Inconclusive for the unanswered
/// checks.
inline std::vector<OracleOutcome> oracle_run(const OracleConfig& oracle,
                                             const std::vector<OracleCheck>& checks) {
  std::vector<OracleOutcome> results(checks.size());
  if (checks.empty()) return results;
  if (oracle.path.empty()) return results;

  std::ostringstream script;
  long long per_check_ms = static_cast<long long>(oracle.timeout_seconds * 1000);
  script << "(set-option :timeout " << per_check_ms << ")\n";
  for (const auto& c : checks) {
    script << "(push 1)\n" << c.declarations;
    for (const auto& a : c.asserts) script << "(assert " << a << ")\n";
    script << "(check-sat)\n";
    if (c.want_witness) script << "(get-model)\n";
    script << "(pop 1)\n";
  }

  TempDir dir("chcfuzz-oracle");
  auto path = dir.write_file("oracle.smt2", script.str());
  std::vector<std::string> argv = {oracle.path};
  argv.insert(argv.end(), oracle.extra_argv.begin(), oracle.extra_argv.end());
  argv.push_back(path.string());

  double budget = oracle.timeout_seconds * static_cast<double>(checks.size()) + 10.0;
  ProcessResult run;
  try {
    run = run_process(argv, budget, "", dir.path().string());
  } catch (const ProcessError&) {
    return results;
  }

  size_t pos = 0, idx = 0;
  while (idx < results.size() && pos <= run.out.size()) {
    size_t nl = run.out.find('\n', pos);
    size_t end = nl == std::string::npos ? run.out.size() : nl;
    std::string line = detail::trim(run.out.substr(pos, end - pos));
    size_t next = nl == std::string::npos ? run.out.size() + 1 : nl + 1;
    if (line == "unsat") {
      results[idx++].answer = OracleAnswer::Unsat;
    } else if (line == "sat") {
      results[idx].answer = OracleAnswer::Sat;
      if (checks[idx].want_witness) {
        size_t blob_pos = next;
        results[idx].witness = detail::take_sexpr_blob(run.out, blob_pos);
        next = std::max(next, blob_pos);
      }
      ++idx;
    } else if (line == "unknown" || line == "timeout") {
      results[idx++].answer = OracleAnswer::Inconclusive;
    }
    pos = next;
  }
  return results;
}

// ---------------------------------------------------------------------------
// Check builders
// ---------------------------------------------------------------------------

namespace detail {

/// Declarations plus the clause prefix as free constants; prefix names that
/// collide with declared symbols are renamed in the returned substitution.
struct SkolemizedPrefix {
  std::string declarations;
  std::map<std::string, TermPtr> rename;
};

inline SkolemizedPrefix skolemize_prefix(const ChcSystem& sys,
                                         const std::vector<Binding>& bound,
                                         bool declare_predicates) {
  SkolemizedPrefix sk;
  std::ostringstream os;
  for (const auto& s : sys.sort_decls) os << "(declare-sort " << print_symbol(s) << " 0)\n";
  for (const auto& f : sys.functions) {
    os << "(declare-fun " << print_symbol(f.name) << " (";
    for (size_t i = 0; i < f.params.size(); ++i)
      os << (i ? " " : "") << sort_to_string(f.params[i]);
    os << ") " << sort_to_string(f.ret) << ")\n";
  }
  if (declare_predicates) {
    for (const auto& p : sys.predicates) {
      os << "(declare-fun " << print_symbol(p.name) << " (";
      for (size_t i = 0; i < p.params.size(); ++i)
        os << (i ? " " : "") << sort_to_string(p.params[i]);
      os << ") Bool)\n";
    }
  }
  std::vector<std::string> used;
  for (const auto& b : bound) {
    std::string name = b.name;
    if (sys.declares_symbol(name) ||
        std::find(used.begin(), used.end(), name) != used.end()) {
      unsigned k = 0;
      std::string cand;
      do {
        cand = b.name + "!sk" + std::to_string(k++);
      } while (sys.declares_symbol(cand) ||
               std::find(used.begin(), used.end(), cand) != used.end());
      sk.rename[b.name] = mk_var(cand, b.sort);
      name = cand;
    }
    used.push_back(name);
    os << "(declare-const " << print_symbol(name) << ' ' << sort_to_string(b.sort) << ")\n";
  }
  sk.declarations = os.str();
  return sk;
}

inline TermPtr apply_rename(const TermPtr& t, const std::map<std::string, TermPtr>& rename) {
  return rename.empty() ? t : substitute(t, rename);
}

}  // namespace detail

/// Check that `term` (with free variables from `bound`) is unsatisfiable.
inline OracleCheck unsat_check(const ChcSystem& sys, const std::vector<Binding>& bound,
                               const TermPtr& term, bool declare_predicates = true) {
  auto sk = detail::skolemize_prefix(sys, bound, declare_predicates);
  OracleCheck c;
  c.declarations = sk.declarations;
  c.asserts = {print_term(detail::apply_rename(term, sk.rename))};
  return c;
}

/// fi != ri for one clause pair: the prefixes are merged by name, both
/// implications are built over the shared free constants, and the negated
/// equality must be unsat for the clauses to be equivalent.
inline std::optional<OracleCheck> clause_equivalence_check(const ChcSystem& sys,
                                                           const ChcClause& f,
                                                           const ChcClause& r) {
  std::vector<Binding> merged = f.bound;
  for (const auto& b : r.bound) {
    bool found = false;
    for (const auto& m : merged) {
      if (m.name == b.name) {
        if (!sorts_equal(m.sort, b.sort)) return std::nullopt;
        found = true;
        break;
      }
    }
    if (!found) merged.push_back(b);
  }
  auto sk = detail::skolemize_prefix(sys, merged, true);
  TermPtr ff = detail::apply_rename(mk_implies(f.body, f.head), sk.rename);
  TermPtr rr = detail::apply_rename(mk_implies(r.body, r.head), sk.rename);
  OracleCheck c;
  c.declarations = sk.declarations;
  c.asserts = {print_term(mk_not(mk_app("=", {ff, rr})))};
  return c;
}

/// Spec operation: clause-by-clause equivalence of two aligned systems.
/// Conservative: an inconclusive oracle answer rejects.
inline bool check_equivalence(const ChcSystem& original, const ChcSystem& reduced,
                              const OracleConfig& oracle) {
  if (original.clauses.size() != reduced.clauses.size()) return false;
  std::vector<OracleCheck> checks;
  for (size_t i = 0; i < original.clauses.size(); ++i) {
    if (clauses_equal(original.clauses[i], reduced.clauses[i])) continue;  // identity
    auto c = clause_equivalence_check(original, original.clauses[i], reduced.clauses[i]);
    if (!c) return false;
    checks.push_back(std::move(*c));
  }
  for (const auto& r : oracle_run(oracle, checks))
    if (r.answer != OracleAnswer::Unsat) return false;
  return true;
}

/// Single clause pair; used by the reducer's subtree edits.
inline bool check_clause_equivalence(const ChcSystem& sys, const ChcClause& f,
                                     const ChcClause& r, const OracleConfig& oracle) {
  if (clauses_equal(f, r)) return true;
  auto c = clause_equivalence_check(sys, f, r);
  if (!c) return false;
  auto res = oracle_run(oracle, {*c});
  return res.size() == 1 && res[0].answer == OracleAnswer::Unsat;
}

// ---------------------------------------------------------------------------
// Model validation
// ---------------------------------------------------------------------------

struct ModelCheckResult {
  enum class Status { Ok, Bug, Inconclusive };
  Status status = Status::Ok;
  size_t bug_clause = 0;        // valid when status == Bug
  std::string witness;          // oracle assignment falsifying the clause
  std::vector<size_t> inconclusive_clauses;
  std::string note;             // substitution failures etc.

  bool ok() const { return status == Status::Ok; }
  bool bug() const { return status == Status::Bug; }
};

/// Substitutes the model into every clause and asks the oracle for a
/// counterexample per clause: body' ∧ ¬head' over the skolemized prefix.
/// Any sat answer is a model bug; unknown answers are logged, not bugs.
inline ModelCheckResult validate_model(const ChcSystem& sys, const Model& model,
                                       const OracleConfig& oracle) {
  ModelCheckResult result;
  std::vector<OracleCheck> checks;
  std::vector<size_t> clause_of_check;
  for (size_t i = 0; i < sys.clauses.size(); ++i) {
    const ChcClause& cl = sys.clauses[i];
    TermPtr body, head;
    try {
      body = detail::substitute_defs(cl.body, model);
      head = detail::substitute_defs(cl.head, model);
      if (contains_pred_app(body) || contains_pred_app(head))
        throw ModelError("predicate application survived substitution");
    } catch (const ModelError& e) {
      result.status = ModelCheckResult::Status::Inconclusive;
      result.inconclusive_clauses.push_back(i);
      result.note = e.what();
      continue;
    }
    auto sk = detail::skolemize_prefix(sys, cl.bound, false);
    OracleCheck c;
    c.declarations = sk.declarations;
    c.asserts = {print_term(detail::apply_rename(body, sk.rename)),
                 print_term(mk_not(detail::apply_rename(head, sk.rename)))};
    c.want_witness = true;
    checks.push_back(std::move(c));
    clause_of_check.push_back(i);
  }

  auto answers = oracle_run(oracle, checks);
  for (size_t k = 0; k < answers.size(); ++k) {
    if (answers[k].answer == OracleAnswer::Sat) {
      result.status = ModelCheckResult::Status::Bug;
      result.bug_clause = clause_of_check[k];
      result.witness = answers[k].witness;
      return result;
    }
    if (answers[k].answer == OracleAnswer::Inconclusive) {
      result.status = ModelCheckResult::Status::Inconclusive;
      result.inconclusive_clauses.push_back(clause_of_check[k]);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Findings
// ---------------------------------------------------------------------------

struct Finding {
  enum class Kind { SatisfiabilityBug, ModelBug, Crash, UnknownInfo };

  Kind kind = Kind::SatisfiabilityBug;
  std::string seed_id;
  MutationChain chain;
  GroundTruth truth = GroundTruth::Sat;
  SolverVerdict verdict;
  size_t failing_clause = 0;  // ModelBug
  std::string evidence;       // witness / verdict pair / crash info
};

inline const char* finding_kind_name(Finding::Kind k) {
  switch (k) {
    case Finding::Kind::SatisfiabilityBug: return "sat-bug";
    case Finding::Kind::ModelBug: return "model-bug";
    case Finding::Kind::Crash: return "crash";
    case Finding::Kind::UnknownInfo: return "unknown-info";
  }
  return "?";
}

inline std::optional<Finding::Kind> finding_kind_from_name(const std::string& s) {
  if (s == "sat-bug") return Finding::Kind::SatisfiabilityBug;
  if (s == "model-bug") return Finding::Kind::ModelBug;
  if (s == "crash") return Finding::Kind::Crash;
  if (s == "unknown-info") return Finding::Kind::UnknownInfo;
  return std::nullopt;
}

}  // namespace chcfuzz
