"""Numerical verification of basis expansions for operators on Köthe spaces.

The package walks the whole construction on finite truncations: a graded
family of weights, an operator rescaled to a contraction between adjacent
grades, the three dead-end spaces, the Schmidt basis of the nuclear
embedding restricted to the range, and the cone argument that bounds the
projected operators uniformly.
"""
from ._version import __version__
from .errors import *  # noqa: F401,F403
from .koethe import (
    KoetheMatrix,
    demo_matrix,
    hilbert_norm,
    koethe_from_config,
    normalize,
    sup_norm,
    verify_conditions,
)
from .operator import OperatorMatrix, grade_norm, operator_from_config, rescale_to_contraction
from .deadend import DeadEndData, build_deadend, valid_cone_grades
from .basis import BasisExpansion, expand, extract_basis, project_T, range_basis, reconstruct
from .cone import ConeContext, build_context, decompose, estimate_C
from .pipeline import PipelineConfig, run_pipeline
