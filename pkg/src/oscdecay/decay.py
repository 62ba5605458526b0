"""Decay-rate prediction from Hessian minors.

A k x k minor whose determinant P satisfies the sublevel bound with
exponent alpha predicts ``|Lambda| <~ |lambda|^(-sigma)`` with

    sigma = k * alpha / (4 * (alpha + 1/2)),

which tends to k/4 as alpha -> oo. :func:`analyze_phase` runs this over every
minor and keeps the largest sigma.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from .hessian import (
    MAX_DIM,
    GuardError,
    MinorSelection,
    d_operator,
    enumerate_minors,
    minor_determinant,
    mixed_hessian,
)
from .polycore import AffineMap, Polynomial, Role, VarId
from .sublevel import (
    NO_DECAY,
    AlphaEstimate,
    AlphaEstimationError,
    LadderConfig,
    SamplerConfig,
    SupportGeometry,
    estimate_alpha,
)

__all__ = [
    "PhaseSpec",
    "AnalysisConfig",
    "DecayPrediction",
    "MinorReport",
    "CorollaryReport",
    "PhaseAnalysis",
    "predicted_exponent",
    "analyze_phase",
    "corollary_check",
]

THEOREM = "theorem1"
COROLLARY = "corollary"
NO_DECAY_REGIME = "no-decay"
HOERMANDER_LIMIT = "hoermander-limit"
UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class PhaseSpec:
    """A phase ``S(x, y)`` together with its cutoff support ``[-r, r]^{2d}``."""

    phase: Polynomial
    geometry: SupportGeometry = SupportGeometry()
    text: str | None = None

    @property
    def dim(self) -> int:
        return self.phase.dim


@dataclass(frozen=True)
class AnalysisConfig:
    sampler: SamplerConfig = SamplerConfig()
    ladder: LadderConfig = LadderConfig()
    k_range: tuple[int, ...] | None = None


def predicted_exponent(k: int, alpha) -> Fraction | float:
    """``k * alpha / (4 * (alpha + 1/2))``; exact for rational alpha, ``k/4`` at infinity."""
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError(f"minor size must be a positive integer, got {k!r}")
    if isinstance(alpha, float) and math.isinf(alpha):
        if alpha < 0:
            raise ValueError("alpha must be nonnegative")
        return Fraction(int(k), 4)
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if isinstance(alpha, (int, Fraction)):
        a = Fraction(alpha)
        return Fraction(int(k)) * a / (4 * a + 2)
    return k * alpha / (4.0 * alpha + 2.0)


@dataclass(frozen=True)
class DecayPrediction:
    exponent: float | Fraction
    regime: str
    selection: MinorSelection | None = None

    def to_json(self) -> dict:
        e = self.exponent
        return {
            "exponent": float(e),
            "exponent_exact": str(e) if isinstance(e, Fraction) else None,
            "regime": self.regime,
            "selection": self.selection.to_json() if self.selection else None,
        }


@dataclass(frozen=True)
class MinorReport:
    selection: MinorSelection
    P: Polynomial
    alpha: AlphaEstimate | None
    prediction: DecayPrediction
    note: str | None = None

    def to_json(self) -> dict:
        return {
            "selection": self.selection.to_json(),
            "P": str(self.P),
            # alpha is estimated on the normalized, relabeled representative
            "alpha_polynomial": None if self.P.is_zero() else str(canonical_form(self.P)),
            "alpha": self.alpha.to_json() if self.alpha else None,
            "prediction": self.prediction.to_json(),
            "note": self.note,
        }


@dataclass(frozen=True)
class CorollaryReport:
    """Grid check of ``|D_{i,j,l} S| >= 1``.

    A grid minimum of at least 1 is evidence, not a certificate: the
    operator is only sampled on a tensor grid.
    """

    witness: tuple[int, int, int] | None
    witnesses: tuple[tuple[int, int, int], ...]
    minima: dict
    rectangle: tuple[tuple[float, float], ...]
    grid_n: int
    prediction: DecayPrediction | None

    @property
    def min_abs(self) -> float | None:
        return self.minima[self.witness] if self.witness else None

    def to_json(self) -> dict:
        return {
            "witness": list(self.witness) if self.witness else None,
            "witnesses": [list(w) for w in self.witnesses],
            "min_abs_D": {f"{i},{j},{l}": v for (i, j, l), v in self.minima.items()},
            "rectangle": [list(iv) for iv in self.rectangle],
            "grid_n": self.grid_n,
            "prediction": self.prediction.to_json() if self.prediction else None,
            "caveat": "grid minimum >= 1 is not a certificate",
        }


@dataclass(frozen=True)
class PhaseAnalysis:
    reports: tuple[MinorReport, ...]
    best: DecayPrediction
    hessian: tuple[tuple[str, ...], ...] = field(default=())

    def to_json(self) -> dict:
        return {
            "mixed_hessian": [list(r) for r in self.hessian],
            "minors": [r.to_json() for r in self.reports],
            "best": self.best.to_json(),
        }


# -- alpha cache keyed on a canonical form of |P| ------------------------------

def _permute(P: Polynomial, perm: Sequence[int]) -> Polynomial:
    """Relabel coordinate i -> perm[i] in all three variable blocks at once."""
    d = P.dim
    mapping = {}
    for role in (Role.X, Role.Y, Role.TAU):
        for i in range(d):
            mapping[VarId(role, i + 1)] = Polynomial.var(d, VarId(role, perm[i] + 1))
    return P.substitute(AffineMap.from_mapping(d, mapping))


def canonical_form(P: Polynomial) -> Polynomial:
    """Representative of ``{c P(pi x, pi y, pi tau)}`` over permutations pi and scalars c.

    The ball and the support box are invariant under these relabelings, and
    alpha does not see constant factors, so the estimate is computed on this
    representative: largest coefficient scaled to 1, then the
    lexicographically least relabeling. That makes it exactly equivariant and
    keeps the fixed eps ladder matched to the size of P.
    """
    top = max(abs(c) for _, c in P.items())
    P = P / top
    best = None
    for perm in itertools.permutations(range(P.dim)):
        Q = _permute(P, perm)
        for cand in (Q, -Q):
            key = str(cand)
            if best is None or key < best[0]:
                best = (key, cand)
    return best[1]


class _AlphaCache:
    def __init__(self, geom: SupportGeometry, cfg: AnalysisConfig):
        self.geom = geom
        self.cfg = cfg
        self.store: dict[Polynomial, AlphaEstimate | AlphaEstimationError] = {}

    def get(self, P: Polynomial) -> AlphaEstimate:
        key = canonical_form(P)
        if key not in self.store:
            try:
                self.store[key] = estimate_alpha(key, self.geom, self.cfg.ladder, self.cfg.sampler)
            except AlphaEstimationError as exc:
                self.store[key] = exc
        hit = self.store[key]
        if isinstance(hit, AlphaEstimationError):
            raise hit
        return hit


def _prediction(sel: MinorSelection, alpha: AlphaEstimate) -> DecayPrediction:
    if alpha.no_decay:
        return DecayPrediction(Fraction(0), NO_DECAY_REGIME, sel)
    if alpha.is_infinite:
        return DecayPrediction(predicted_exponent(sel.k, math.inf), HOERMANDER_LIMIT, sel)
    return DecayPrediction(predicted_exponent(sel.k, max(alpha.alpha_hat, 0.0)), THEOREM, sel)


def analyze_phase(spec: PhaseSpec, config: AnalysisConfig = AnalysisConfig()) -> PhaseAnalysis:
    """Estimate alpha and the predicted exponent for every minor of the mixed Hessian."""
    d = spec.dim
    if d > MAX_DIM:
        raise GuardError(f"dimension {d} exceeds the analysis guard ({MAX_DIM})")
    M = mixed_hessian(spec.phase)
    cache = _AlphaCache(spec.geometry, config)
    reports = []
    for sel in enumerate_minors(d, config.k_range):
        P = minor_determinant(M, sel)
        if P.is_zero():
            alpha = AlphaEstimate(NO_DECAY, diagnostics={"reason": "P is identically zero"})
            reports.append(MinorReport(sel, P, alpha, _prediction(sel, alpha)))
            continue
        try:
            alpha = cache.get(P)
        except AlphaEstimationError as exc:
            reports.append(MinorReport(sel, P, None, DecayPrediction(0.0, UNDETERMINED, sel),
                                       note=str(exc)))
            continue
        reports.append(MinorReport(sel, P, alpha, _prediction(sel, alpha)))

    candidates = [r for r in reports if r.prediction.regime in (THEOREM, HOERMANDER_LIMIT)]
    if candidates:
        # max exponent, then larger k, then enumeration (lexicographic) order
        order = {id(r): n for n, r in enumerate(reports)}
        top = max(candidates, key=lambda r: (float(r.prediction.exponent), r.selection.k,
                                             -order[id(r)]))
        best = top.prediction
    else:
        best = DecayPrediction(Fraction(0), NO_DECAY_REGIME, None)
    return PhaseAnalysis(tuple(reports), best, tuple(tuple(r) for r in M.to_lists()))


def _grid_min_abs(D: Polynomial, rect: Sequence[tuple[float, float]], grid_n: int) -> float:
    if D.is_zero():
        return 0.0
    exps, coefs = D.compiled()
    d = D.dim
    used = np.flatnonzero(exps[:, : 2 * d].any(axis=0))
    if used.size == 0:
        return abs(float(coefs.sum()))
    axes = [np.linspace(rect[v][0], rect[v][1], 2 * grid_n + 1) for v in used]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.zeros((mesh[0].size, 3 * d))
    for v, m in zip(used, mesh):
        pts[:, v] = m.ravel()
    return float(np.abs(_kernels.eval_poly(exps, coefs, pts)).min())


def corollary_check(S: Polynomial, rect: Sequence[tuple[float, float]] | None = None,
                    grid_n: int = 8, geometry: SupportGeometry = SupportGeometry()
                    ) -> CorollaryReport:
    """Look for ``(i, j, l)`` with ``|D_{i,j,l} S| >= 1`` on the grid over ``rect``.

    ``rect`` lists (lo, hi) for the 2d coordinates (x then y) and must contain
    the support box ``[-r, r]^{2d}``; it defaults to that box.
    """
    d = S.dim
    r = geometry.r
    if rect is None:
        rect = [(-r, r)] * (2 * d)
    rect = tuple((float(lo), float(hi)) for lo, hi in rect)
    if len(rect) != 2 * d:
        raise ValueError(f"rectangle needs {2 * d} intervals")
    if any(lo > -r or hi < r for lo, hi in rect):
        raise ValueError("rectangle must contain the support box")
    minima = {}
    witnesses = []
    for i, j, l in itertools.product(range(1, d + 1), repeat=3):
        m = _grid_min_abs(d_operator(S, i, j, l), rect, grid_n)
        minima[(i, j, l)] = m
        if m >= 1.0:
            witnesses.append((i, j, l))
    witness = witnesses[0] if witnesses else None
    pred = DecayPrediction(Fraction(1, 6), COROLLARY) if witness else None
    return CorollaryReport(witness, tuple(witnesses), minima, rect, grid_n, pred)
