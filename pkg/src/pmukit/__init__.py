"""Finite-dimensional verification toolkit for pseudo-multiplicative unitaries."""
from __future__ import annotations

from .errors import (CocycleViolation, InvalidGroupoid, NotGroupoidPMU, NotInAlgebra, NotNormalizedCofixed,
                     NotNormalizedFixed, ParseError, PmuError)
from .fixedpoints import (cofixed_space, counit, fixed_space, haar_weight, is_compact, is_etale, is_proper,
                          verify_counit, verify_fixed, verify_left_haar)
from .groupoid import (FiniteGroupoid, counting_haar, cyclic_groupoid, disjoint_union, group_groupoid,
                       make_groupoid, pair_groupoid, parse_groupoid_spec, product, radon_nikodym,
                       transformation_groupoid, unit_groupoid)
from .legs import delta, delta_hat, is_regular, leg, leg_hat, pairing_matrix, verify_hopf, verify_leg_relations
from .pmu import PMU, cross_validate, groupoid_pmu, opposite, pentagon_residual, verify_pmu
from .report import Check, Report
from .reps import (Corepresentation, GroupoidRep, Representation, corep_from_groupoid_rep,
                   groupoid_rep_from_corep, regular_corep, regular_rep, trivial_corep, trivial_rep, verify_corep,
                   verify_rep)

__all__ = [
    "CocycleViolation", "InvalidGroupoid", "NotGroupoidPMU", "NotInAlgebra", "NotNormalizedCofixed",
    "NotNormalizedFixed", "ParseError", "PmuError", "cofixed_space", "counit", "fixed_space", "haar_weight",
    "is_compact", "is_etale", "is_proper", "verify_counit", "verify_fixed", "verify_left_haar",
    "FiniteGroupoid", "counting_haar", "cyclic_groupoid", "disjoint_union", "group_groupoid", "make_groupoid",
    "pair_groupoid", "parse_groupoid_spec", "product", "radon_nikodym", "transformation_groupoid",
    "unit_groupoid", "delta", "delta_hat", "is_regular", "leg", "leg_hat", "pairing_matrix", "verify_hopf",
    "verify_leg_relations", "PMU", "cross_validate", "groupoid_pmu", "opposite", "pentagon_residual",
    "verify_pmu", "Check", "Report", "Corepresentation", "GroupoidRep", "Representation",
    "corep_from_groupoid_rep", "groupoid_rep_from_corep", "regular_corep", "regular_rep", "trivial_corep",
    "trivial_rep", "verify_corep", "verify_rep",
]
