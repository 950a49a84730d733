/// \file params.hpp
/// \brief Built-in catalogs: simplify rewrite parameters and boolean solver
/// parameters with their defaults (verified against z3 4.13).

#pragma once

#include <string>
#include <vector>

namespace chcfuzz {

/// Rewrite parameters accepted by `(using-params simplify :<name> true)`.
/// The distinguished empty_simplify entry means plain `(apply simplify)`.
inline const std::vector<std::string>& rewrite_params() {
  static const std::vector<std::string> params = {
      "empty_simplify",
      "arith_ineq_lhs",
      "arith_lhs",
      "blast_distinct",
      "blast_select_store",
      "elim_and",
      "elim_rem",
      "elim_to_real",
      "eq2ineq",
      "expand_power",
      "expand_select_ite",
      "expand_select_store",
      "expand_store_eq",
      "expand_tan",
      "gcd_rounding",
      "hoist_ite",
      "hoist_mul",
      "ite_extra_rules",
      "local_ctx",
      "mul2concat",
      "mul_to_power",
      "pull_cheap_ite",
      "push_ite_arith",
      "rewrite_patterns",
      "som",
      "sort_store",
      "sort_sums",
      "split_concat_eq",
      "algebraic_number_evaluator",
      "elim_ite",
      "elim_sign_ext",
      "flat",
      "push_to_real",
      "ignore_patterns_on_ground_qbody",
  };
  return params;
}

struct SolverParam {
  std::string name;       // catalog identifier, e.g. "spacer.ctp"
  std::string option_key; // set-option key, e.g. "fp.spacer.ctp"
  bool default_value;
};

/// Boolean fixedpoint parameters toggled by the parameter mutation; each is
/// flipped to the negation of its solver default.
inline const std::vector<SolverParam>& solver_params() {
  static const std::vector<SolverParam> params = {
      {"spacer.ctp", "fp.spacer.ctp", true},
      {"spacer.elim_aux", "fp.spacer.elim_aux", true},
      {"spacer.eq_prop", "fp.spacer.eq_prop", true},
      {"spacer.ground_pobs", "fp.spacer.ground_pobs", true},
      {"spacer.keep_proxy", "fp.spacer.keep_proxy", true},
      {"spacer.mbqi", "fp.spacer.mbqi", true},
      {"spacer.propagate", "fp.spacer.propagate", true},
      {"spacer.reach_dnf", "fp.spacer.reach_dnf", true},
      {"spacer.use_array_eq_generalizer", "fp.spacer.use_array_eq_generalizer", true},
      {"spacer.use_derivations", "fp.spacer.use_derivations", true},
      {"spacer.use_inc_clause", "fp.spacer.use_inc_clause", true},
      {"spacer.use_inductive_generalizer", "fp.spacer.use_inductive_generalizer", true},
      {"xform.coi", "fp.xform.coi", true},
      {"xform.compress_unbound", "fp.xform.compress_unbound", true},
      {"xform.inline_eager", "fp.xform.inline_eager", true},
      {"xform.inline_linear", "fp.xform.inline_linear", true},
      {"xform.slice", "fp.xform.slice", true},
      {"xform.tail_simplifier_pve", "fp.xform.tail_simplifier_pve", true},
      {"spacer.p3.share_invariants", "fp.spacer.p3.share_invariants", false},
      {"spacer.p3.share_lemmas", "fp.spacer.p3.share_lemmas", false},
      {"spacer.use_lim_num_gen", "fp.spacer.use_lim_num_gen", false},
      {"spacer.reset_pob_queue", "fp.spacer.reset_pob_queue", true},
      {"spacer.simplify_lemmas_post", "fp.spacer.simplify_lemmas_post", false},
      {"spacer.simplify_lemmas_pre", "fp.spacer.simplify_lemmas_pre", false},
      {"spacer.simplify_pob", "fp.spacer.simplify_pob", false},
      {"spacer.use_bg_invs", "fp.spacer.use_bg_invs", false},
      {"spacer.use_euf_gen", "fp.spacer.use_euf_gen", false},
      {"spacer.use_lemma_as_cti", "fp.spacer.use_lemma_as_cti", false},
      {"xform.array_blast_full", "fp.xform.array_blast_full", false},
      {"xform.coalesce_rules", "fp.xform.coalesce_rules", false},
      {"xform.elim_term_ite", "fp.xform.elim_term_ite", false},
      {"xform.inline_linear_branch", "fp.xform.inline_linear_branch", false},
      {"xform.instantiate_arrays", "fp.xform.instantiate_arrays", false},
      {"xform.instantiate_arrays.enforce", "fp.xform.instantiate_arrays.enforce", false},
      {"xform.instantiate_quantifiers", "fp.xform.instantiate_quantifiers", false},
      {"xform.quantify_arrays", "fp.xform.quantify_arrays", false},
      {"xform.transform_arrays", "fp.xform.transform_arrays", false},
  };
  return params;
}

inline const SolverParam* find_solver_param(const std::string& name) {
  for (const auto& p : solver_params())
    if (p.name == name || p.option_key == name) return &p;
  return nullptr;
}

}  // namespace chcfuzz
