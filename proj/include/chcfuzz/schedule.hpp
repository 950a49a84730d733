/// \file schedule.hpp
/// \brief Seed groups, transition statistics, mutation weights, and the
/// selection/switch policies that drive the fuzzing loop.
///
/// The solver is modeled as a Markov chain over trace states: the global
/// transition matrix accumulates counts over all runs, per-group matrices
/// count each instance's own transitions, and a group's priority is the sum
/// of inverse transition probabilities over its matrix, so groups that
/// exercised rare transitions rank first.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mutate.hpp"
#include "oracle.hpp"
#include "system.hpp"
#include "trace.hpp"

namespace chcfuzz {

// ---------------------------------------------------------------------------
// Transition statistics
// ---------------------------------------------------------------------------

struct TransitionStats {
  std::map<std::pair<uint64_t, uint64_t>, uint64_t> counts;  // global (i,j) -> n
  std::map<uint64_t, uint64_t> row_sums;                     // i -> sum_j counts(i,j)
  std::set<uint64_t> unique_traces;                          // trace hashes seen

  bool empty() const { return counts.empty(); }

  void merge(const TraceSummary& trace) {
    for (const auto& [edge, n] : trace.transitions) {
      counts[edge] += n;
      row_sums[edge.first] += n;
    }
  }

  /// Records the trace hash; true when it was globally new.
  bool note_trace(const TraceSummary& trace) {
    return unique_traces.insert(trace.trace_hash()).second;
  }

  double probability(uint64_t i, uint64_t j) const {
    auto it = counts.find({i, j});
    if (it == counts.end()) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(row_sums.at(i));
  }

  /// w_ij = 1/p_ij when p_ij > 0, else 0.
  double weight(uint64_t i, uint64_t j) const {
    double p = probability(i, j);
    return p > 0.0 ? 1.0 / p : 0.0;
  }
};

// ---------------------------------------------------------------------------
// Seed groups
// ---------------------------------------------------------------------------

struct SeedGroup {
  std::string seed_id;
  ChcSystem seed;
  GroundTruth truth = GroundTruth::Sat;
  MutationChain chain;
  ChcSystem current;  // the seed replayed through the chain

  uint64_t consecutive_runs = 0;  // runs since this group was last acquired
  uint64_t stagnant_runs = 0;     // runs since a globally new trace
  uint64_t unknown_count = 0;
  uint64_t bug_count = 0;
  uint64_t timeout_streak = 0;
  uint64_t total_runs = 0;

  std::map<std::pair<uint64_t, uint64_t>, uint64_t> transition_counts;  // T_m

  bool retired = false;
  bool checked_out = false;

  size_t clause_count() const { return current.clauses.size(); }

  bool nonlinear() const {
    for (const auto& cl : seed.clauses)
      if (!classify(cl).linear) return true;
    return false;
  }
  size_t predicate_count() const { return seed.predicates.size(); }

  void rollback() {
    chain.records.clear();
    current = seed;
    stagnant_runs = 0;
    timeout_streak = 0;
  }
};

/// k_m = sum over the group's transitions of w_ij * t^m_ij; groups that
/// never produced a trace rank first (+inf).
inline double priority(const TransitionStats& stats, const SeedGroup& group) {
  if (group.transition_counts.empty()) return std::numeric_limits<double>::infinity();
  double k = 0.0;
  for (const auto& [edge, t] : group.transition_counts)
    k += stats.weight(edge.first, edge.second) * static_cast<double>(t);
  return k;
}

// ---------------------------------------------------------------------------
// Mutation weights
// ---------------------------------------------------------------------------

struct WeightEntry {
  double w = 0.1;  // all mutations start at the same weight
  uint64_t applications = 0;
  uint64_t hits = 0;  // applications that opened a new unique trace
};

/// Golden-ratio update toward the observed new-trace probability.
inline double updated_weight(double current, double p) {
  return 0.62 * current + 0.38 * p;
}

struct MutationWeights {
  std::map<std::string, WeightEntry> entries;

  static MutationWeights initial() {
    MutationWeights w;
    for (MutationKind k : own_mutation_kinds()) w.entries[kind_name(k)] = {};
    for (const auto& p : rewrite_params()) w.entries[p] = {};
    for (const auto& p : solver_params()) w.entries[p.name] = {};
    return w;
  }

  WeightEntry& at(const std::string& id) { return entries.at(id); }

  void record(const std::string& id, bool new_trace) {
    auto& e = entries.at(id);
    ++e.applications;
    if (new_trace) ++e.hits;
  }

  /// Called once per weight-recalculation cadence: kinds never applied keep
  /// their weight.
  void update_all() {
    for (auto& [id, e] : entries) {
      if (e.applications == 0) continue;
      double p = static_cast<double>(e.hits) / static_cast<double>(e.applications);
      e.w = updated_weight(e.w, p);
    }
  }
};

// ---------------------------------------------------------------------------
// Mutation choice
// ---------------------------------------------------------------------------

struct MutationChoice {
  MutationKind kind;
  std::string param;  // rewrite parameter or solver parameter identifier

  /// Identifier used for weighting: own kinds by name, rewrites and solver
  /// parameters by their parameter name.
  std::string id() const { return param.empty() ? kind_name(kind) : param; }

  /// Seeds the engine record, pre-filling the parameter decision.
  MutationRecord to_record(uint64_t rng_seed) const {
    MutationRecord rec{kind, rng_seed, json::object()};
    if (kind == MutationKind::Rewrite) rec.choices = json{{"param", param}};
    if (kind == MutationKind::ParamToggle) rec.choices = json{{"key", param}};
    return rec;
  }
};

/// First the mutation type, uniformly among the enabled ones; then a member
/// of that type, weighted by current weights (or uniformly under the
/// equiprobable flag).
inline MutationChoice choose_mutation(const MutationWeights& weights,
                                      const std::set<MutationType>& enabled_types,
                                      Rng& rng, bool equiprobable) {
  if (enabled_types.empty()) throw std::invalid_argument("no mutation types enabled");
  std::vector<MutationType> types(enabled_types.begin(), enabled_types.end());
  MutationType type = types[rng.below(types.size())];

  std::vector<MutationChoice> members;
  if (type == MutationType::Own) {
    for (MutationKind k : own_mutation_kinds()) members.push_back({k, ""});
  } else if (type == MutationType::Rewrites) {
    for (const auto& p : rewrite_params()) members.push_back({MutationKind::Rewrite, p});
  } else {
    for (const auto& p : solver_params()) members.push_back({MutationKind::ParamToggle, p.name});
  }

  if (equiprobable) return members[rng.below(members.size())];

  double total = 0.0;
  for (const auto& m : members) total += weights.entries.at(m.id()).w;
  if (total <= 0.0) return members[rng.below(members.size())];
  double x = rng.unit() * total;
  for (const auto& m : members) {
    x -= weights.entries.at(m.id()).w;
    if (x <= 0.0) return m;
  }
  return members.back();
}

// ---------------------------------------------------------------------------
// Group selection
// ---------------------------------------------------------------------------

enum class Heuristic { Default, RareTransitions, Complex, Simple };

inline std::optional<Heuristic> heuristic_from_name(const std::string& s) {
  if (s == "default") return Heuristic::Default;
  if (s == "transitions" || s == "rare-transitions") return Heuristic::RareTransitions;
  if (s == "complex") return Heuristic::Complex;
  if (s == "simple") return Heuristic::Simple;
  return std::nullopt;
}

/// A selection policy: one heuristic, or a combination where the first
/// partitions and the second orders within each partition (realized as a
/// lexicographic key).
struct HeuristicSpec {
  Heuristic primary = Heuristic::Default;
  std::optional<Heuristic> secondary;
};

namespace detail {

inline void heuristic_key(Heuristic h, const SeedGroup& g, const TransitionStats& stats,
                          std::vector<double>& key) {
  switch (h) {
    case Heuristic::Default:
      key.push_back(0.0);
      break;
    case Heuristic::RareTransitions:
      key.push_back(-priority(stats, g));  // higher k_m first
      break;
    case Heuristic::Complex:
      key.push_back(g.nonlinear() ? 0.0 : 1.0);  // non-linear first
      key.push_back(-static_cast<double>(g.predicate_count()));
      break;
    case Heuristic::Simple:
      key.push_back(g.nonlinear() ? 1.0 : 0.0);  // linear first
      key.push_back(static_cast<double>(g.predicate_count()));
      break;
  }
}

}  // namespace detail

/// Picks the next group to fuzz. `exclude` is the group just switched away
/// from (it loses ties so the fuzzer actually proceeds to another instance);
/// `rr_cursor` carries round-robin state for the default order.
inline std::optional<size_t> select_group(const HeuristicSpec& heuristic,
                                          const std::vector<SeedGroup>& groups,
                                          const TransitionStats& stats, size_t& rr_cursor,
                                          std::optional<size_t> exclude = std::nullopt) {
  std::vector<size_t> eligible;
  for (size_t i = 0; i < groups.size(); ++i)
    if (!groups[i].retired && !groups[i].checked_out) eligible.push_back(i);
  if (eligible.empty()) return std::nullopt;
  if (eligible.size() > 1 && exclude)
    eligible.erase(std::remove(eligible.begin(), eligible.end(), *exclude), eligible.end());

  if (heuristic.primary == Heuristic::Default && !heuristic.secondary) {
    // Round-robin in input order.
    for (size_t step = 1; step <= groups.size(); ++step) {
      size_t idx = (rr_cursor + step) % groups.size();
      if (std::find(eligible.begin(), eligible.end(), idx) != eligible.end()) {
        rr_cursor = idx;
        return idx;
      }
    }
    return eligible.front();
  }

  size_t best = eligible.front();
  std::vector<double> best_key;
  detail::heuristic_key(heuristic.primary, groups[best], stats, best_key);
  if (heuristic.secondary)
    detail::heuristic_key(*heuristic.secondary, groups[best], stats, best_key);
  for (size_t k = 1; k < eligible.size(); ++k) {
    size_t idx = eligible[k];
    std::vector<double> key;
    detail::heuristic_key(heuristic.primary, groups[idx], stats, key);
    if (heuristic.secondary)
      detail::heuristic_key(*heuristic.secondary, groups[idx], stats, key);
    if (key < best_key) {  // ties keep input order
      best = idx;
      best_key = key;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Run accounting and switch policy
// ---------------------------------------------------------------------------

/// What the completed run means for the group's counters.
enum class RunEffect { None, Bug, Unknown };

struct SchedulerLimits {
  uint64_t bug_limit = 3;
  uint64_t unknown_limit = 10;
  uint64_t consecutive_cap = 100;       // runs in a row on one group
  uint64_t stagnation_factor = 5;       // switch after 5*n stagnant runs
  uint64_t rollback_stagnation = 3;     // roll back after 3*(5*n)
  uint64_t rollback_timeouts = 3;       // roll back after 3 consecutive timeouts
};

/// Folds one run into the group and the global statistics. Stagnation
/// resets only when the run's trace was globally new.
inline bool record_run(SeedGroup& group, TransitionStats& stats, MutationWeights& weights,
                       const SolverVerdict& verdict, const TraceSummary& trace,
                       const std::string& mutation_id, RunEffect effect) {
  stats.merge(trace);
  for (const auto& [edge, n] : trace.transitions) group.transition_counts[edge] += n;
  bool new_trace = stats.note_trace(trace);

  ++group.consecutive_runs;
  ++group.total_runs;
  if (new_trace)
    group.stagnant_runs = 0;
  else
    ++group.stagnant_runs;

  if (verdict.outcome == SolverVerdict::Outcome::Timeout)
    ++group.timeout_streak;
  else
    group.timeout_streak = 0;

  if (effect == RunEffect::Bug) ++group.bug_count;
  if (effect == RunEffect::Unknown) ++group.unknown_count;

  weights.record(mutation_id, new_trace);
  return new_trace;
}

enum class SwitchAction { Keep, Switch, Rollback };

struct SwitchDecision {
  SwitchAction action = SwitchAction::Keep;
  std::string reason;
  bool retire = false;
};

/// Called after each run. Rollback discards the mutant chain (the group
/// returns to just the seed); hitting the bug or unknown limit retires the
/// group for the rest of the session.
inline SwitchDecision should_switch(const SeedGroup& group, const SchedulerLimits& limits) {
  uint64_t n = std::max<uint64_t>(group.clause_count(), 1);
  uint64_t stagnation = limits.stagnation_factor * n;

  if (group.timeout_streak >= limits.rollback_timeouts)
    return {SwitchAction::Rollback, "consecutive timeouts", false};
  if (group.stagnant_runs >= limits.rollback_stagnation * stagnation)
    return {SwitchAction::Rollback, "no new traces for too long", false};
  if (group.bug_count >= limits.bug_limit)
    return {SwitchAction::Switch, "bug limit reached", true};
  if (group.unknown_count >= limits.unknown_limit)
    return {SwitchAction::Switch, "unknown limit reached", true};
  if (group.stagnant_runs >= stagnation)
    return {SwitchAction::Switch, "stagnation", false};
  if (group.consecutive_runs >= limits.consecutive_cap)
    return {SwitchAction::Switch, "consecutive run cap", false};
  return {SwitchAction::Keep, "", false};
}

}  // namespace chcfuzz
