"""Decay rates of convolution-type trilinear oscillatory integrals.

Exact polynomial algebra for phases ``S(x, y)``, mixed Hessians of the
shifted phase and their minors, Monte Carlo sublevel-set exponents, and a
numerical harness that measures decay slopes of the trilinear form.
"""

from .polycore import Polynomial, Role, VarId, AffineMap, serialize
from .parser import ParseError, parse_phase, parse_polynomial
from .hessian import (
    GLTransform,
    GuardError,
    MinorSelection,
    PhaseError,
    build_s_tau,
    d_operator,
    enumerate_minors,
    gl_pushforward,
    minor_determinant,
    mixed_hessian,
)
from .sublevel import (
    AlphaEstimate,
    LadderConfig,
    SamplerConfig,
    SupportGeometry,
    estimate_alpha,
    sublevel_measure,
)
from .decay import (
    AnalysisConfig,
    PhaseSpec,
    analyze_phase,
    corollary_check,
    predicted_exponent,
)
from .oscint import (
    CutoffSpec,
    QuadConfig,
    TestFamily,
    brute_force_oracle,
    evaluate_trilinear,
    family_norms,
    run_ladder,
)

__version__ = "0.1.0"

__all__ = [
    "Polynomial",
    "Role",
    "VarId",
    "AffineMap",
    "serialize",
    "ParseError",
    "parse_phase",
    "parse_polynomial",
    "GLTransform",
    "GuardError",
    "MinorSelection",
    "PhaseError",
    "build_s_tau",
    "d_operator",
    "enumerate_minors",
    "gl_pushforward",
    "minor_determinant",
    "mixed_hessian",
    "AlphaEstimate",
    "LadderConfig",
    "SamplerConfig",
    "SupportGeometry",
    "estimate_alpha",
    "sublevel_measure",
    "AnalysisConfig",
    "PhaseSpec",
    "analyze_phase",
    "corollary_check",
    "predicted_exponent",
    "CutoffSpec",
    "QuadConfig",
    "TestFamily",
    "brute_force_oracle",
    "evaluate_trilinear",
    "family_norms",
    "run_ladder",
]
