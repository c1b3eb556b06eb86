"""Exact damage models for the self-similar spring/damper tree.

A tree with one weakened spring or damper has the transfer function
``G_inf(s) * Delta(s)``, where ``G_inf = 1/sqrt(k b s)`` and ``Delta`` is a
ratio of real polynomials in ``w = sqrt(s)``.  The package builds ``Delta``,
traces its zeros and poles against the damage amount, computes its
H-infinity norm and inverts frequency-response data back to a damage amount.
"""

__version__ = "0.1.0"

from .core import HalfOrderPolynomial, HalfOrderRational, evaluate, normalize, poly_mul, roots
from .tree import (
    ConstantsOverride,
    DamageSpec,
    Kind,
    Location,
    TerminationMode,
    TreeParams,
    base_case_delta,
    delta_for,
    enumerate_locations,
    finite_tree_response,
    recurrence_step,
    step_lower,
    step_upper,
    undamaged_response,
)
from .response import FrequencyGrid, FrequencyResponse
from .locus import LocusFit, LocusTable, ZeroPoleSet, eval_fit, fit_locus, trace_locus, zero_pole_set
from .analysis import bode, hinf_norm, norm_vs_epsilon, sample_response
from .identify import (
    IdentificationResult,
    IdentificationTarget,
    error_curve,
    identify_structured,
    identify_unstructured,
    relative_error,
)
