"""Sublevel-set measures of determinant polynomials and the exponent alpha.

For a determinant polynomial ``P(x, y, tau)`` the quantity of interest is

    m(eps) = |{tau in B : min_{(x,y) in box} |P(x, y, tau)| < eps}|

where ``B`` is the tau ball of radius ``R`` (by default the diameter of the
support box ``[-r, r]^{2d}``). ``m`` is estimated by randomized quasi-Monte
Carlo: every replicate is an independently scrambled Sobol net mapped to
the ball, and the same points are reused for every ``eps`` so the estimates
are nested and monotone in ``eps``.

The exponent estimate is conservative. Local log-log slopes between
neighbouring rungs of a geometric ``eps`` ladder are formed, each is
lowered by ``z`` of its standard errors, and the minimum is reported.
Slopes that are too noisy to say anything (standard error above
``max_slope_se``) are skipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln, ndtri
from scipy.stats import qmc

from . import _kernels
from ._parallel import STREAM_SUBLEVEL, pmap, stream_rng
from .polycore import Polynomial

__all__ = [
    "SupportGeometry",
    "SamplerConfig",
    "LadderConfig",
    "MeasureSample",
    "AlphaEstimate",
    "AlphaEstimationError",
    "NO_DECAY",
    "worst_case_abs",
    "worst_case_values",
    "sublevel_measure",
    "estimate_alpha",
    "tau_samples",
]

NO_DECAY = "no-decay"

# grids larger than this are refused; P rarely depends on many (x, y) variables
MAX_GRID_POINTS = 200_000


class AlphaEstimationError(RuntimeError):
    """No rung of the ladder yields a statistically usable slope."""


@dataclass(frozen=True)
class SupportGeometry:
    """``supp phi`` inside ``[-r, r]^{2d}``; tau ranges over the ball of radius ``R``."""

    r: float = 1.0
    R: float | None = None

    def __post_init__(self):
        if not self.r > 0 or (self.R is not None and not self.R > 0):
            raise ValueError("support half-width and tau radius must be positive")

    def tau_radius(self, d: int) -> float:
        return self.R if self.R is not None else 2.0 * self.r * math.sqrt(2 * d)

    def to_json(self) -> dict:
        return {"r": self.r, "R": self.R}


@dataclass(frozen=True)
class SamplerConfig:
    n_samples: int = 200_000
    replicates: int = 8
    seed: int = 42
    grid_n: int = 8
    box: bool = False  # sample tau in [-R, R]^d instead of the ball

    def per_replicate(self) -> int:
        """Points per replicate: the next power of two, so Sobol nets stay balanced."""
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        if self.replicates < 2:
            raise ValueError("need at least two replicates")
        need = math.ceil(self.n_samples / self.replicates)
        return 1 << max(0, math.ceil(math.log2(need)))

    def total(self) -> int:
        return self.per_replicate() * self.replicates

    def to_json(self) -> dict:
        return {"n_samples": self.n_samples, "replicates": self.replicates, "seed": self.seed,
                "grid_n": self.grid_n, "box": self.box, "effective_samples": self.total()}


@dataclass(frozen=True)
class LadderConfig:
    eps_max: float = 1e-1
    eps_min: float = 1e-6
    steps: int = 6
    z: float = 1.0
    max_slope_se: float = 0.05
    max_rel_se: float = 0.25

    def ladder(self) -> np.ndarray:
        if self.steps < 4:
            raise ValueError("the eps ladder needs at least 4 rungs")
        if not 0 < self.eps_min < self.eps_max:
            raise ValueError("need 0 < eps_min < eps_max")
        return np.geomspace(self.eps_max, self.eps_min, self.steps)

    def to_json(self) -> dict:
        return {"eps_max": self.eps_max, "eps_min": self.eps_min, "steps": self.steps,
                "z": self.z, "max_slope_se": self.max_slope_se, "max_rel_se": self.max_rel_se}


@dataclass(frozen=True)
class MeasureSample:
    eps: float
    m_hat: float
    n_samples: int
    std_error: float  # binomial standard error times the volume
    hits: int = 0
    replicate_std_error: float = 0.0

    @property
    def rel_error(self) -> float:
        return self.std_error / self.m_hat if self.m_hat > 0 else math.inf

    def to_json(self) -> dict:
        return {"eps": self.eps, "m_hat": self.m_hat, "n_samples": self.n_samples,
                "std_error": self.std_error, "hits": self.hits,
                "replicate_std_error": self.replicate_std_error}


@dataclass(frozen=True)
class AlphaEstimate:
    alpha_hat: float | str
    ladder: tuple[MeasureSample, ...] = ()
    local_slopes: tuple[float | None, ...] = ()
    slope_errors: tuple[float | None, ...] = ()
    accepted: tuple[bool, ...] = ()
    diagnostics: dict = field(default_factory=dict)

    @property
    def no_decay(self) -> bool:
        return self.alpha_hat == NO_DECAY

    @property
    def is_infinite(self) -> bool:
        return isinstance(self.alpha_hat, float) and math.isinf(self.alpha_hat)

    def to_json(self) -> dict:
        a = self.alpha_hat
        if isinstance(a, float) and math.isinf(a):
            a = "inf"
        return {
            "alpha_hat": a,
            "ladder": [s.to_json() for s in self.ladder],
            "local_slopes": list(self.local_slopes),
            "slope_errors": list(self.slope_errors),
            "accepted": list(self.accepted),
            "diagnostics": self.diagnostics,
        }


# -- tau sampling ---------------------------------------------------------------

def ball_volume(d: int, R: float) -> float:
    return float(math.exp(d / 2 * math.log(math.pi) - gammaln(d / 2 + 1)) * R ** d)


def _to_ball(u: np.ndarray, d: int, R: float) -> np.ndarray:
    if d == 1:
        return R * (2.0 * u[:, :1] - 1.0)
    if d == 2:
        rho = R * np.sqrt(u[:, 0])
        th = 2.0 * np.pi * u[:, 1]
        return np.column_stack([rho * np.cos(th), rho * np.sin(th)])
    rho = R * u[:, 0] ** (1.0 / d)
    g = ndtri(np.clip(u[:, 1:], 1e-15, 1.0 - 1e-15))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return rho[:, None] * g


def _sampler_dims(d: int, box: bool) -> int:
    return d if (box or d <= 2) else d + 1


def tau_samples(d: int, R: float, cfg: SamplerConfig, replicate: int) -> np.ndarray:
    """Deterministic tau points of one replicate (shape ``(per_replicate, d)``)."""
    m = int(math.log2(cfg.per_replicate()))
    sob = qmc.Sobol(_sampler_dims(d, cfg.box), scramble=True,
                    seed=stream_rng(cfg.seed, STREAM_SUBLEVEL, replicate))
    u = sob.random_base2(m)
    if cfg.box:
        return R * (2.0 * u - 1.0)
    return _to_ball(u, d, R)


# -- worst case over (x, y) -------------------------------------------------------

def _split_terms(P: Polynomial):
    exps, coefs = P.compiled()
    d = P.dim
    xy = exps[:, : 2 * d]
    tau = exps[:, 2 * d:]
    used = np.flatnonzero(xy.any(axis=0))
    return xy, tau, coefs, used


def _grid(used: np.ndarray, r: float, grid_n: int) -> np.ndarray:
    if grid_n < 1:
        raise ValueError("grid_n must be at least 1")
    axis = np.linspace(-r, r, 2 * grid_n + 1)
    npts = axis.size ** used.size
    if npts > MAX_GRID_POINTS:
        raise ValueError(f"worst-case grid would have {npts} points; P depends on {used.size} "
                         f"(x, y) variables, reduce grid_n")
    mesh = np.meshgrid(*([axis] * used.size), indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def worst_case_values(P: Polynomial, taus: np.ndarray, geom: SupportGeometry,
                      grid_n: int) -> np.ndarray:
    """``min |P(x, y, tau)|`` over the (x, y) grid, for every row of ``taus``.

    The grid has ``2*grid_n + 1`` equispaced points per axis of ``[-r, r]``
    and spans only the (x, y) variables that occur in ``P``; the others do
    not change the value. A tau-only ``P`` is evaluated once per point.
    """
    taus = np.atleast_2d(np.asarray(taus, dtype=np.float64))
    if P.is_zero():
        return np.zeros(taus.shape[0])
    xy, tau_exp, coefs, used = _split_terms(P)
    if used.size == 0:
        return np.abs(_kernels.eval_poly(tau_exp, coefs, taus))
    grid = _grid(used, geom.r, grid_n)
    A = coefs[None, :] * np.prod(taus[:, None, :] ** tau_exp[None, :, :], axis=2)
    B = np.prod(grid[:, None, :] ** xy[None, :, used], axis=2)
    return _kernels.min_abs_grid(A, B)


def worst_case_abs(P: Polynomial, tau: Sequence[float], geom: SupportGeometry,
                   grid_n: int = 8) -> float:
    return float(worst_case_values(P, np.asarray(tau, dtype=np.float64)[None, :], geom, grid_n)[0])


# -- measures and alpha --------------------------------------------------------

def _worst_case_replicates(P: Polynomial, geom: SupportGeometry,
                           cfg: SamplerConfig) -> list[np.ndarray]:
    d = P.dim
    R = geom.tau_radius(d)

    def one(rep: int) -> np.ndarray:
        return worst_case_values(P, tau_samples(d, R, cfg, rep), geom, cfg.grid_n)

    return pmap(one, range(cfg.replicates))


def _domain_volume(d: int, R: float, box: bool) -> float:
    return (2.0 * R) ** d if box else ball_volume(d, R)


def _measure_from(values: list[np.ndarray], eps: float, vol: float) -> MeasureSample:
    per = np.array([np.count_nonzero(v < eps) for v in values], dtype=np.float64)
    n_rep = values[0].size
    n = n_rep * len(values)
    hits = int(per.sum())
    p = hits / n
    m_hat = vol * p
    se = vol * math.sqrt(p * (1.0 - p) / n)
    rep_se = vol * float(np.std(per / n_rep, ddof=1)) / math.sqrt(len(values))
    return MeasureSample(float(eps), m_hat, n, se, hits, rep_se)


def sublevel_measure(P: Polynomial, eps: float, geom: SupportGeometry,
                     cfg: SamplerConfig = SamplerConfig()) -> MeasureSample:
    if not eps > 0:
        raise ValueError("eps must be positive")
    if cfg.n_samples < 1:
        raise ValueError("sample count must be positive")
    vals = _worst_case_replicates(P, geom, cfg)
    return _measure_from(vals, eps, _domain_volume(P.dim, geom.tau_radius(P.dim), cfg.box))


def _trend(values: list[float]) -> str:
    if len(values) < 2:
        return "undetermined"
    diffs = np.diff(values)
    if np.all(diffs > 0):
        return "increasing"
    if np.all(diffs < 0):
        return "decreasing"
    return "mixed"


def estimate_alpha(P: Polynomial, geom: SupportGeometry = SupportGeometry(),
                   ladder: LadderConfig = LadderConfig(),
                   cfg: SamplerConfig = SamplerConfig()) -> AlphaEstimate:
    """Conservative estimate of the largest alpha with ``m(eps) <~ eps^alpha``.

    Returns ``alpha_hat = "no-decay"`` for ``P == 0`` and ``inf`` when every
    rung has an empty sublevel set. Raises :class:`AlphaEstimationError`
    when hits exist but no slope is precise enough to use.
    """
    eps = ladder.ladder()
    if P.is_zero():
        return AlphaEstimate(NO_DECAY, diagnostics={"reason": "P is identically zero"})
    d = P.dim
    vol = _domain_volume(d, geom.tau_radius(d), cfg.box)
    vals = _worst_case_replicates(P, geom, cfg)
    samples = tuple(_measure_from(vals, e, vol) for e in eps)

    usable = [s.m_hat > 0 and s.rel_error < ladder.max_rel_se for s in samples]
    slopes: list[float | None] = []
    errors: list[float | None] = []
    accepted: list[bool] = []
    for i in range(len(samples) - 1):
        a, b = samples[i], samples[i + 1]
        if not (usable[i] and usable[i + 1]):
            slopes.append(None)
            errors.append(None)
            accepted.append(False)
            continue
        dlog = math.log(a.eps / b.eps)
        slope = math.log(a.m_hat / b.m_hat) / dlog
        se = math.hypot(a.rel_error, b.rel_error) / dlog
        slopes.append(slope)
        errors.append(se)
        accepted.append(se <= ladder.max_slope_se)

    ok = [i for i, flag in enumerate(accepted) if flag]
    ok_slopes = [slopes[i] for i in ok]
    diagnostics = {
        "monotone": bool(all(samples[i].m_hat >= samples[i + 1].m_hat
                             for i in range(len(samples) - 1))),
        "usable_rungs": int(sum(usable)),
        "accepted_slopes": len(ok),
        "slope_trend": _trend(ok_slopes),
        "slope_spread": float(max(ok_slopes) - min(ok_slopes)) if ok_slopes else 0.0,
        "tau_radius": geom.tau_radius(d),
        "volume": vol,
    }

    if all(s.hits == 0 for s in samples):
        alpha = math.inf
        diagnostics["reason"] = "sublevel sets empty on the whole ladder"
    elif ok:
        bounds = [slopes[i] - ladder.z * errors[i] for i in ok]
        j = int(np.argmin(bounds))
        alpha = float(bounds[j])
        diagnostics["limiting_rungs"] = [samples[ok[j]].eps, samples[ok[j] + 1].eps]
    else:
        raise AlphaEstimationError(
            "no slope of the eps ladder is statistically usable "
            f"(hits per rung: {[s.hits for s in samples]}); raise n_samples or eps_min")
    return AlphaEstimate(alpha, samples, tuple(slopes), tuple(errors), tuple(accepted),
                         diagnostics)
