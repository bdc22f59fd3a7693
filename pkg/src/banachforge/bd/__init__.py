"""Finite-stage Bourgain–Delbaen model, its estimates and toy instances."""
from __future__ import annotations

from .estimates import (
    TOY_LABEL, add_vectors, build_exact_pair, calkin_witness, check_dependent, check_exact_pair, check_ris,
    construct_gamma, evaluation_analysis, lower_bound_witness, norming_handle, reconstruct, ris_average_bound,
    ris_foreign_weight_bound,
)
from .model import (
    BDModel, BDParams, FunctionalHandle, GammaNode, YVec, build_model, column_vector, dual_bound, eval_c, eval_d,
    eval_e, extend, full_vector, lift, literal_c, literal_coordinate, literal_d, norm_Y, norm_Z, projection,
    ran_bd, restrict_stage, stage_values, supp_bd,
)
from .toys import dependent_toy, exact_pair_toy, random_model, random_vector, staggered_ris, toy_params

__all__ = [
    "TOY_LABEL", "add_vectors", "build_exact_pair", "calkin_witness", "check_dependent", "check_exact_pair",
    "check_ris", "construct_gamma", "evaluation_analysis", "lower_bound_witness", "norming_handle", "reconstruct",
    "ris_average_bound", "ris_foreign_weight_bound", "BDModel", "BDParams", "FunctionalHandle", "GammaNode", "YVec",
    "build_model", "column_vector", "dual_bound", "eval_c", "eval_d", "eval_e", "extend", "full_vector", "lift",
    "literal_c", "literal_coordinate", "literal_d", "norm_Y", "norm_Z", "projection", "ran_bd", "restrict_stage",
    "stage_values", "supp_bd", "dependent_toy", "exact_pair_toy", "random_model", "random_vector", "staggered_ris",
    "toy_params",
]
