"""Numerical laboratory for dilatation structures.

Metric spaces with base-point dilatations, their tangent groups, curve
length and derivability, derivatives of maps, and the looking-down relation
between two structures on one space.
"""

__version__ = "0.1.0"

from .core import (DEGENERATE, FAIL, INCONCLUSIVE, PASS, Check, DilatationStructure,
                   InvalidInputError, Report, audit_axioms, dilate)
from .limits import (CONVERGED, DIVERGING, OSCILLATING, EpsSchedule, LimitEstimate,
                     estimate_limit, richardson_extrapolate, tends_to_zero)
from .structures import (ContractingStructure, EuclideanStructure, HeisenbergFlatStructure,
                         HeisenbergStructure, RotatingStructure, make_structure)
from .tangent import (TangentGroup, approx_sum, delta_op, rescaled_distance, tangent_delta,
                      tangent_distance, tangent_inv, tangent_sum)
from .curves import (Curve, derivative_at, hausdorff_length_estimate, length_formula_check,
                     length_via_dilatation, make_curve, metric_derivative,
                     reparametrize_arclength, rn_probe, upper_dilatation, variation)
from .calculus import (StructureMap, chain_rule_check, check_conical_morphism,
                       equivalence_check, make_map, pansu_derivative, tangent_iso_check,
                       transport_structure)
from .lookdown import (LookdownPair, check_condition_c, check_projector, distribution_gap,
                       identity_derivative, lookdown_audit, make_pair, q_eps, transfer_probe)
