"""Numerical evaluation of the trilinear form and empirical decay slopes.

The form is

    Lambda(f, g, h) = int e^{i lam S(x, y)} f(x) g(y) h(x + y) phi(x, y) dx dy.

For indicator families on boxes, x and y are rescaled to the unit cube
(the oscillation then stays O(1) for the scaling families) and the integral
is estimated by scrambled Sobol sampling with independent replicates. The
gaussian family uses tensor Gauss-Legendre quadrature over the cutoff box.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import stats
from scipy.stats import qmc

from . import _kernels
from ._parallel import STREAM_TRILINEAR, pmap, stream_rng
from .polycore import Polynomial, Role

__all__ = [
    "CutoffSpec",
    "TestFamily",
    "FamilyInstance",
    "QuadConfig",
    "IntegralValue",
    "DecayFit",
    "QuadratureCeilingError",
    "EmptyRegionError",
    "FitError",
    "ResolutionError",
    "evaluate_trilinear",
    "run_ladder",
    "fit_decay",
    "lambda_ladder",
    "family_norms",
    "trivial_bound",
    "brute_force_oracle",
    "brute_force_with_error",
]

FAMILIES = ("scaled-box", "aniso-box", "gaussian", "custom-box", "synthetic")

# |lambda| ceilings per method and dimension
RESCALED_CEILING = 1e5
DIRECT_CEILING = {1: 1e3, 2: 2e2}
USABLE_REL_ERROR = 0.1


class QuadratureCeilingError(RuntimeError):
    """lambda is beyond what the selected quadrature resolves."""


class EmptyRegionError(ValueError):
    """The region {x in F, y in G, x + y in H} has no volume."""


class FitError(RuntimeError):
    """Too few usable rungs for a slope fit."""


class ResolutionError(ValueError):
    """Brute-force grid too coarse for the requested lambda."""


@dataclass(frozen=True)
class CutoffSpec:
    """``phi(z) = prod_k exp(1 - 1/(1 - (z_k/r)^2))`` on ``|z_k| < r`` ("bump"), or 1 ("one")."""

    kind: str = "bump"
    r: float = 1.0

    def __post_init__(self):
        if self.kind not in ("bump", "one"):
            raise ValueError(f"unknown cutoff kind {self.kind!r}")
        if not self.r > 0:
            raise ValueError("cutoff half-width must be positive")

    @property
    def code(self) -> int:
        return _kernels.CUTOFF_BUMP if self.kind == "bump" else _kernels.CUTOFF_ONE

    def value(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        if self.kind == "one":
            return np.ones(z.shape[0])
        s = z / self.r
        inside = np.abs(s) < 1.0
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            prof = np.where(inside, np.exp(1.0 - 1.0 / (1.0 - s * s)), 0.0)
        return prof.prod(axis=1)

    def to_json(self) -> dict:
        return {"kind": self.kind, "r": self.r}


Box = tuple[tuple[float, float], ...]


def _box(spec, d: int) -> Box:
    box = tuple((float(lo), float(hi)) for lo, hi in spec)
    if len(box) != d or any(not hi > lo for lo, hi in box):
        raise ValueError(f"box must have {d} nondegenerate intervals: {spec!r}")
    return box


def _volume(box: Box) -> float:
    return math.prod(hi - lo for lo, hi in box)


@dataclass(frozen=True)
class FamilyInstance:
    """Concrete f, g, h at one lambda.

    Box families carry three boxes (the functions are their indicators);
    the gaussian family carries a width w with ``f = g = h = exp(-|z|^2 / (2 w^2))``.
    """

    kind: str
    dim: int
    lam: float
    f_box: Box | None = None
    g_box: Box | None = None
    h_box: Box | None = None
    width: float | None = None


@dataclass(frozen=True)
class TestFamily:
    """Parameterized test functions.

    * ``scaled-box``: ``f = g = h = 1_[0, lam^(-1/3)]^d``
    * ``aniso-box`` (d = 2): ``f = g = h = 1_[0,1] x [0, lam^(-1/2)/10]``
    * ``gaussian``: fixed-width gaussians (``width``)
    * ``custom-box``: fixed boxes ``f_box``, ``g_box``, ``h_box``
    * ``synthetic``: no integral; ratio exactly ``lam^(-1/3)`` (self-test)
    """

    __test__ = False  # not a pytest class

    kind: str
    dim: int
    width: float = 0.25
    f_box: Box | None = None
    g_box: Box | None = None
    h_box: Box | None = None

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise ValueError(f"unknown family {self.kind!r}; expected one of {FAMILIES}")
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if self.kind == "aniso-box" and self.dim != 2:
            raise ValueError("aniso-box family is defined for d = 2 only")
        if self.kind == "custom-box":
            if self.f_box is None:
                raise ValueError("custom-box family needs at least f_box")
            f = _box(self.f_box, self.dim)
            object.__setattr__(self, "f_box", f)
            object.__setattr__(self, "g_box", _box(self.g_box, self.dim) if self.g_box else f)
            object.__setattr__(self, "h_box", _box(self.h_box, self.dim) if self.h_box else f)
        if self.kind == "gaussian" and not self.width > 0:
            raise ValueError("gaussian width must be positive")

    @property
    def is_box(self) -> bool:
        return self.kind in ("scaled-box", "aniso-box", "custom-box")

    def at(self, lam: float) -> FamilyInstance:
        d = self.dim
        a = abs(lam)
        if self.kind in ("scaled-box", "aniso-box") and a == 0:
            raise ValueError(f"{self.kind} family needs lambda != 0")
        if self.kind == "scaled-box":
            box = ((0.0, a ** (-1.0 / 3.0)),) * d
            return FamilyInstance(self.kind, d, lam, box, box, box)
        if self.kind == "aniso-box":
            box = ((0.0, 1.0), (0.0, a ** -0.5 / 10.0))
            return FamilyInstance(self.kind, d, lam, box, box, box)
        if self.kind == "custom-box":
            return FamilyInstance(self.kind, d, lam, self.f_box, self.g_box, self.h_box)
        return FamilyInstance(self.kind, d, lam, width=self.width)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "dim": self.dim}
        if self.kind == "gaussian":
            out["width"] = self.width
        if self.kind == "custom-box":
            out.update(f_box=self.f_box, g_box=self.g_box, h_box=self.h_box)
        return out


@dataclass(frozen=True)
class QuadConfig:
    """Sampler settings. ``2^log2_points`` points per replicate."""

    log2_points: int = 17
    replicates: int = 8
    seed: int = 42
    node_budget: int = 1 << 26

    @property
    def total_points(self) -> int:
        return self.replicates << self.log2_points

    def to_json(self) -> dict:
        return {"log2_points": self.log2_points, "replicates": self.replicates,
                "seed": self.seed, "total_points": self.total_points,
                "node_budget": self.node_budget}


@dataclass(frozen=True)
class IntegralValue:
    lam: float
    value: complex
    error: float
    norms: tuple[float, float, float]
    method: str = "rqmc"

    def __post_init__(self):
        if not self.error >= 0:
            raise ValueError("error estimate must be nonnegative")

    @property
    def norm_product(self) -> float:
        return math.prod(self.norms)

    @property
    def ratio(self) -> float:
        return abs(self.value) / self.norm_product

    @property
    def usable(self) -> bool:
        return self.error < USABLE_REL_ERROR * abs(self.value)

    def to_row(self) -> dict:
        return {"lambda": self.lam, "re": self.value.real, "im": self.value.imag,
                "abs": abs(self.value), "err": self.error,
                "norm_product": self.norm_product, "ratio": self.ratio}


@dataclass(frozen=True)
class DecayFit:
    values: tuple[IntegralValue, ...]
    slope: float
    stderr: float
    intercept: float
    used: tuple[bool, ...]
    residuals: tuple[float, ...]
    rvalue: float
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "slope": self.slope,
            "stderr": self.stderr,
            "intercept": self.intercept,
            "rungs_used": sum(self.used),
            "rungs_total": len(self.used),
            "r_squared": self.rvalue ** 2,
            "max_abs_residual": max((abs(r) for r in self.residuals), default=0.0),
            "rows": [dict(v.to_row(), used=u) for v, u in zip(self.values, self.used)],
            **self.extra,
        }


# -- norms and bounds ----------------------------------------------------------

def family_norms(inst: FamilyInstance) -> tuple[float, float, float]:
    """L^2 norms of f, g, h: square roots of box volumes, or the gaussian closed form."""
    if inst.kind == "synthetic":
        return (1.0, 1.0, 1.0)
    if inst.kind == "gaussian":
        n = (math.pi * inst.width ** 2) ** (inst.dim / 4.0)
        return (n, n, n)
    return tuple(math.sqrt(_volume(b)) for b in (inst.f_box, inst.g_box, inst.h_box))


def trivial_bound(inst: FamilyInstance, cutoff: CutoffSpec = CutoffSpec()) -> float:
    """Upper bound for the normalized ratio valid for every phase.

    ``|Lambda| <= sup|phi| * ||f * g||_2 ||h||_2`` and Young's inequality with
    ``||f||_1 <= |supp f|^(1/2) ||f||_2``. The gaussian case uses
    ``||f||_1 / ||f||_2 = (4 pi w^2)^(d/4)``.
    """
    if inst.kind == "synthetic":
        return 1.0
    if inst.kind == "gaussian":
        return (4.0 * math.pi * inst.width ** 2) ** (inst.dim / 4.0)
    return math.sqrt(min(_volume(inst.f_box), _volume(inst.g_box)))


# -- samplers ------------------------------------------------------------------

@lru_cache(maxsize=64)
def _sobol(dim: int, seed: int, replicate: int, log2n: int) -> np.ndarray:
    eng = qmc.Sobol(dim, scramble=True, seed=stream_rng(seed, STREAM_TRILINEAR, replicate))
    u = eng.random_base2(log2n)
    u.setflags(write=False)
    return u


def _xy_part(S: Polynomial) -> tuple[np.ndarray, np.ndarray]:
    exps, coefs = S.compiled()
    return exps[:, : 2 * S.dim], coefs


def _check_phase(S: Polynomial, d: int) -> None:
    if S.dim != d:
        raise ValueError(f"phase dimension {S.dim} does not match family dimension {d}")
    if S.uses_role(Role.TAU):
        raise ValueError("phase must not contain tau variables")


def _warn_support(inst: FamilyInstance, cutoff: CutoffSpec) -> None:
    if cutoff.kind != "bump":
        return
    for box in (inst.f_box, inst.g_box):
        if any(lo < -cutoff.r or hi > cutoff.r for lo, hi in box):
            warnings.warn("family box extends past the cutoff support", stacklevel=3)
            return


def _evaluate_box(S, cutoff, inst, quad) -> IntegralValue:
    d = inst.dim
    f, g, h = (np.array(b, dtype=float) for b in (inst.f_box, inst.g_box, inst.h_box))
    lo_sum, hi_sum = f[:, 0] + g[:, 0], f[:, 1] + g[:, 1]
    if np.any(np.minimum(hi_sum, h[:, 1]) <= np.maximum(lo_sum, h[:, 0])):
        raise EmptyRegionError("x + y never lands in the h box")
    exps, coefs = _xy_part(S)
    lam = float(inst.lam)
    w_f, w_g = f[:, 1] - f[:, 0], g[:, 1] - g[:, 0]
    vol = float(np.prod(w_f) * np.prod(w_g))

    def one(rep: int) -> complex:
        u = _sobol(2 * d, quad.seed, rep, quad.log2_points)
        re, im = _kernels.trilinear_sum(exps, coefs, lam, u, f[:, 0], w_f, g[:, 0], w_g,
                                        h[:, 0], h[:, 1], cutoff.code, cutoff.r)
        return complex(re, im) * vol / u.shape[0]

    reps = np.array(pmap(one, range(quad.replicates)))
    value = complex(reps.mean())
    n = len(reps)
    # standard error of the complex mean from the replicate spread
    err = math.sqrt(float(np.sum(np.abs(reps - value) ** 2)) / (n - 1) / n) if n > 1 else 0.0
    return IntegralValue(inst.lam, value, err, family_norms(inst), "rqmc")


def _gauss_nodes(S: Polynomial, lam: float, r: float) -> int:
    # enough Legendre nodes per axis to follow the total phase swing over the box
    swing = abs(lam) * sum(abs(float(c)) * r ** sum(e) for e, c in S.items())
    return 16 + int(math.ceil(2.0 * swing / math.pi))


def _gauss_quadrature(S, cutoff, inst, n: int) -> complex:
    d = inst.dim
    r = cutoff.r
    t, w = np.polynomial.legendre.leggauss(n)
    t, w = t * r, w * r
    grids = np.meshgrid(*([t] * d), indexing="ij")
    pts = np.stack([m.ravel() for m in grids], axis=1)
    wts = np.prod(np.meshgrid(*([w] * d), indexing="ij"), axis=0).ravel()
    s2 = 2.0 * inst.width ** 2
    gauss = lambda z: np.exp(-np.sum(z * z, axis=-1) / s2)
    fx = wts * gauss(pts)
    exps, coefs = _xy_part(S)
    total = 0j
    step = max(1, (1 << 21) // pts.shape[0])
    for start in range(0, pts.shape[0], step):
        x = pts[start:start + step]
        xx = np.repeat(x, pts.shape[0], axis=0)
        yy = np.tile(pts, (x.shape[0], 1))
        xy = np.concatenate([xx, yy], axis=1)
        phase = inst.lam * _kernels.eval_poly(exps, coefs, xy)
        amp = (np.repeat(fx[start:start + step], pts.shape[0]) * np.tile(fx, x.shape[0])
               * gauss(xx + yy) * cutoff.value(xy))
        total += complex(np.sum(amp * np.exp(1j * phase)))
    return total


def _evaluate_gaussian(S, cutoff, inst, quad) -> IntegralValue:
    d = inst.dim
    ceiling = DIRECT_CEILING.get(d)
    if ceiling is None:
        raise QuadratureCeilingError(f"direct quadrature supports d = 1, 2 only (got d = {d})")
    if abs(inst.lam) > ceiling:
        raise QuadratureCeilingError(f"|lambda| = {abs(inst.lam):g} exceeds the direct-quadrature "
                                     f"ceiling {ceiling:g} for d = {d}")
    n = _gauss_nodes(S, inst.lam, cutoff.r)
    n_fine = int(math.ceil(1.5 * n))
    if n_fine ** (2 * d) > quad.node_budget:
        raise QuadratureCeilingError(f"lambda = {inst.lam:g} needs {n_fine}^{2 * d} nodes, "
                                     f"over the budget {quad.node_budget}")
    coarse = _gauss_quadrature(S, cutoff, inst, n)
    fine = _gauss_quadrature(S, cutoff, inst, n_fine)
    return IntegralValue(inst.lam, fine, abs(fine - coarse), family_norms(inst), "gauss-legendre")


def evaluate_trilinear(S: Polynomial, cutoff: CutoffSpec, inst: FamilyInstance,
                       quad: QuadConfig = QuadConfig()) -> IntegralValue:
    """Estimate ``Lambda`` for one family instance."""
    if inst.kind == "synthetic":
        lam = abs(inst.lam)
        if lam == 0:
            raise ValueError("synthetic family needs lambda != 0")
        return IntegralValue(inst.lam, complex(lam ** (-1.0 / 3.0)), 0.0, (1.0, 1.0, 1.0),
                             "closed-form")
    _check_phase(S, inst.dim)
    if inst.kind == "gaussian":
        return _evaluate_gaussian(S, cutoff, inst, quad)
    if abs(inst.lam) > RESCALED_CEILING:
        raise QuadratureCeilingError(f"|lambda| = {abs(inst.lam):g} exceeds the sampling "
                                     f"ceiling {RESCALED_CEILING:g}")
    _warn_support(inst, cutoff)
    return _evaluate_box(S, cutoff, inst, quad)


# -- ladders and fits ----------------------------------------------------------

def lambda_ladder(lam_min: float, lam_max: float, steps: int = 8) -> np.ndarray:
    if not 0 < lam_min < lam_max:
        raise ValueError("need 0 < lambda_min < lambda_max")
    if steps < 2:
        raise ValueError("ladder needs at least two rungs")
    return np.geomspace(lam_min, lam_max, steps)


def fit_decay(values: Sequence[IntegralValue], min_rungs: int = 4) -> DecayFit:
    """Least-squares slope of log(ratio) against log(lambda) over the usable rungs."""
    values = tuple(values)
    used = tuple(v.usable and v.ratio > 0 for v in values)
    if sum(used) < min_rungs:
        raise FitError(f"only {sum(used)} of {len(values)} rungs have quadrature error "
                       f"below {USABLE_REL_ERROR:.0%} of |Lambda|; need {min_rungs}")
    xs = np.log([abs(v.lam) for v, u in zip(values, used) if u])
    ys = np.log([v.ratio for v, u in zip(values, used) if u])
    res = stats.linregress(xs, ys)
    resid = ys - (res.intercept + res.slope * xs)
    return DecayFit(values, float(res.slope), float(res.stderr), float(res.intercept), used,
                    tuple(float(r) for r in resid), float(res.rvalue))


def run_ladder(S: Polynomial, cutoff: CutoffSpec, family: TestFamily,
               lambdas: Sequence[float], quad: QuadConfig = QuadConfig()) -> DecayFit:
    """Evaluate every rung and fit the decay slope."""
    lams = np.asarray(lambdas, dtype=float)
    if lams.size < 6:
        raise ValueError("a ladder needs at least 6 rungs")
    if np.any(lams <= 0):
        raise ValueError("ladder values must be positive")
    q = lams[1:] / lams[:-1]
    if not np.allclose(q, q[0], rtol=1e-9) or q[0] <= 1:
        raise ValueError("ladder must be increasing and geometric")
    values = [evaluate_trilinear(S, cutoff, family.at(float(lam)), quad) for lam in lams]
    fit = fit_decay(values)
    bounds = [trivial_bound(family.at(float(lam)), cutoff) for lam in lams]
    return DecayFit(fit.values, fit.slope, fit.stderr, fit.intercept, fit.used, fit.residuals,
                    fit.rvalue, {"trivial_bound_ok": all(v.ratio <= b * (1 + 1e-9) + 3 * v.error
                                                         / v.norm_product
                                                         for v, b in zip(values, bounds))})


# -- brute-force reference -----------------------------------------------------

def _grad_bound(S: Polynomial, box: Sequence[tuple[float, float]]) -> float:
    m = [max(abs(lo), abs(hi)) for lo, hi in box]
    best = 0.0
    for v in range(len(box)):
        tot = 0.0
        for e, c in S.items():
            if e[v]:
                tot += abs(float(c)) * e[v] * math.prod(
                    m[w] ** (e[w] - (w == v)) for w in range(len(box)) if e[w] - (w == v))
        best = max(best, tot)
    return best


def _plain_eval(S: Polynomial, xy: np.ndarray) -> np.ndarray:
    out = np.zeros(xy.shape[0])
    for e, c in S.items():
        term = np.full(xy.shape[0], float(c))
        for v, k in enumerate(e[: xy.shape[1]]):
            if k:
                term = term * xy[:, v] ** k
        out += term
    return out


def brute_force_oracle(S: Polynomial, cutoff: CutoffSpec, f_box, g_box, h_box,
                       lam: float, grid_n: int = 2000) -> complex:
    """Midpoint tensor rule over ``f_box x g_box`` (d = 1 or 2); tests only.

    ``1_H(x + y)`` takes the value 1/2 on the boundary of H, which makes the
    rule exact for the simplex at lambda = 0.
    """
    d = S.dim
    if d not in (1, 2):
        raise ValueError("brute-force oracle supports d = 1, 2")
    if d == 2 and grid_n ** 4 > 10 ** 8:
        raise ValueError("grid too large for d = 2")
    f, g, hb = _box(f_box, d), _box(g_box, d), _box(h_box, d)
    cells = [(hi - lo) / grid_n for lo, hi in f + g]
    if abs(lam) * _grad_bound(S, f + g) * max(cells) > 0.25:
        raise ResolutionError(f"grid_n = {grid_n} cannot resolve lambda = {lam:g}")
    axes = [lo + (np.arange(grid_n) + 0.5) * (hi - lo) / grid_n for lo, hi in f + g]
    hlo = np.array([lo for lo, _ in hb])
    hhi = np.array([hi for _, hi in hb])
    scale = 1e-12 * max(1.0, float(np.abs(np.concatenate([hlo, hhi])).max()))

    def indicator(s):
        below = np.where(np.abs(s - hlo) <= scale, 0.5, (s > hlo).astype(float))
        above = np.where(np.abs(s - hhi) <= scale, 0.5, (s < hhi).astype(float))
        return np.prod(np.minimum(below, above), axis=1)

    xs = np.stack([m.ravel() for m in np.meshgrid(*axes[:d], indexing="ij")], axis=1)
    ys = np.stack([m.ravel() for m in np.meshgrid(*axes[d:], indexing="ij")], axis=1)
    total = 0j
    step = max(1, (1 << 22) // ys.shape[0])
    for start in range(0, xs.shape[0], step):
        x = xs[start:start + step]
        xx = np.repeat(x, ys.shape[0], axis=0)
        yy = np.tile(ys, (x.shape[0], 1))
        xy = np.concatenate([xx, yy], axis=1)
        w = indicator(xx + yy) * cutoff.value(xy)
        total += complex(np.sum(w * np.exp(1j * lam * _plain_eval(S, xy))))
    return total * math.prod(cells)


def brute_force_with_error(S, cutoff, f_box, g_box, h_box, lam, grid_n=2000):
    """Oracle value at ``grid_n`` and its difference from the ``grid_n/2`` rule."""
    fine = brute_force_oracle(S, cutoff, f_box, g_box, h_box, lam, grid_n)
    coarse = brute_force_oracle(S, cutoff, f_box, g_box, h_box, lam, grid_n // 2)
    return fine, abs(fine - coarse)
