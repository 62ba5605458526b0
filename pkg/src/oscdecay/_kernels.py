"""Numeric inner loops, compiled with numba when available.

Set ``OSCDECAY_NO_NUMBA=1`` to force the pure-numpy implementations. Both
paths are always importable as ``numpy_impl`` and ``numba_impl`` (the latter
is ``None`` without numba), which is what the benchmark and the
backend-equivalence tests use. Results agree to rounding; each backend is
individually deterministic.
"""

from __future__ import annotations

import os
import types

import numpy as np

__all__ = ["BACKEND", "eval_poly", "min_abs_grid", "trilinear_sum", "numpy_impl", "numba_impl"]

CUTOFF_ONE = 0
CUTOFF_BUMP = 1

_CHUNK = 1 << 15


# -- pure numpy ---------------------------------------------------------------

def _np_eval_poly(exps, coefs, pts):
    n = pts.shape[0]
    out = np.zeros(n)
    for start in range(0, n, _CHUNK):
        p = pts[start:start + _CHUNK]
        acc = np.zeros(p.shape[0])
        for t in range(exps.shape[0]):
            term = np.full(p.shape[0], coefs[t])
            for v in range(exps.shape[1]):
                e = exps[t, v]
                if e:
                    term = term * p[:, v] ** e
            acc += term
        out[start:start + _CHUNK] = acc
    return out


def _np_min_abs_grid(A, B):
    out = np.empty(A.shape[0])
    step = max(1, (1 << 22) // max(1, B.shape[0]))
    for start in range(0, A.shape[0], step):
        vals = A[start:start + step] @ B.T
        out[start:start + step] = np.abs(vals).min(axis=1)
    return out


def _np_cutoff(z, kind, r):
    if kind == CUTOFF_ONE:
        return np.ones(z.shape[0])
    s = z / r
    inside = np.all(np.abs(s) < 1.0, axis=1)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        prof = np.where(np.abs(s) < 1.0, np.exp(1.0 - 1.0 / (1.0 - s * s)), 0.0)
    return np.where(inside, prof.prod(axis=1), 0.0)


def _np_trilinear_sum(exps, coefs, lam, u, lo_f, w_f, lo_g, w_g, lo_h, hi_h, kind, r):
    d = lo_f.shape[0]
    re = 0.0
    im = 0.0
    for start in range(0, u.shape[0], _CHUNK):
        uu = u[start:start + _CHUNK]
        x = lo_f + w_f * uu[:, :d]
        y = lo_g + w_g * uu[:, d:]
        s = x + y
        mask = np.all((s >= lo_h) & (s <= hi_h), axis=1)
        if not mask.any():
            continue
        xy = np.concatenate([x[mask], y[mask]], axis=1)
        phase = lam * _np_eval_poly(exps, coefs, xy)
        phi = _np_cutoff(xy, kind, r)
        re += float(np.sum(phi * np.cos(phase)))
        im += float(np.sum(phi * np.sin(phase)))
    return re, im


numpy_impl = types.SimpleNamespace(
    eval_poly=_np_eval_poly,
    min_abs_grid=_np_min_abs_grid,
    trilinear_sum=_np_trilinear_sum,
)


# -- numba --------------------------------------------------------------------

def _build_numba():
    from numba import njit

    @njit(cache=True, nogil=True)
    def eval_poly(exps, coefs, pts):
        n = pts.shape[0]
        nt, nv = exps.shape
        out = np.zeros(n)
        for i in range(n):
            acc = 0.0
            for t in range(nt):
                term = coefs[t]
                for v in range(nv):
                    e = exps[t, v]
                    if e:
                        term *= pts[i, v] ** e
                acc += term
            out[i] = acc
        return out

    @njit(cache=True, nogil=True)
    def min_abs_grid(A, B):
        ns, nt = A.shape
        ng = B.shape[0]
        out = np.empty(ns)
        for s in range(ns):
            best = np.inf
            for g in range(ng):
                v = 0.0
                for t in range(nt):
                    v += A[s, t] * B[g, t]
                v = abs(v)
                if v < best:
                    best = v
            out[s] = best
        return out

    @njit(cache=True, nogil=True)
    def trilinear_sum(exps, coefs, lam, u, lo_f, w_f, lo_g, w_g, lo_h, hi_h, kind, r):
        d = lo_f.shape[0]
        nt = exps.shape[0]
        xy = np.empty(2 * d)
        re = 0.0
        im = 0.0
        for i in range(u.shape[0]):
            ok = True
            for k in range(d):
                xk = lo_f[k] + w_f[k] * u[i, k]
                yk = lo_g[k] + w_g[k] * u[i, d + k]
                sk = xk + yk
                if sk < lo_h[k] or sk > hi_h[k]:
                    ok = False
                    break
                xy[k] = xk
                xy[d + k] = yk
            if not ok:
                continue
            phi = 1.0
            if kind == 1:
                for k in range(2 * d):
                    z = xy[k] / r
                    if abs(z) >= 1.0:
                        phi = 0.0
                        break
                    phi *= np.exp(1.0 - 1.0 / (1.0 - z * z))
            if phi == 0.0:
                continue
            phase = 0.0
            for t in range(nt):
                term = coefs[t]
                for v in range(2 * d):
                    e = exps[t, v]
                    if e:
                        term *= xy[v] ** e
                phase += term
            phase *= lam
            re += phi * np.cos(phase)
            im += phi * np.sin(phase)
        return re, im

    return types.SimpleNamespace(
        eval_poly=eval_poly,
        min_abs_grid=min_abs_grid,
        trilinear_sum=trilinear_sum,
    )


try:
    numba_impl = _build_numba()
except ImportError:  # numba not installed
    numba_impl = None

_disabled = os.environ.get("OSCDECAY_NO_NUMBA", "").strip().lower() not in ("", "0", "false", "no")
_active = numpy_impl if (_disabled or numba_impl is None) else numba_impl
BACKEND = "numpy" if _active is numpy_impl else "numba"


def eval_poly(exps: np.ndarray, coefs: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Evaluate ``sum_t coefs[t] * prod_v pts[:, v] ** exps[t, v]`` row-wise."""
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    if exps.shape[0] == 0:
        return np.zeros(pts.shape[0])
    return _active.eval_poly(np.ascontiguousarray(exps, dtype=np.int64),
                             np.ascontiguousarray(coefs, dtype=np.float64), pts)


def min_abs_grid(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``min_g |sum_t A[s, t] * B[g, t]|`` for every row ``s`` of ``A``."""
    return _active.min_abs_grid(np.ascontiguousarray(A, dtype=np.float64),
                                np.ascontiguousarray(B, dtype=np.float64))


def trilinear_sum(exps, coefs, lam, u, lo_f, w_f, lo_g, w_g, lo_h, hi_h, cutoff_kind, r):
    """Sum of ``phi * exp(i lam S)`` over the sample points whose ``x + y`` lies in the h box.

    ``u`` holds unit-cube samples of shape (n, 2d); x and y are the affine
    images of its two halves in the f and g boxes. ``exps`` must cover only
    the 2d (x, y) slots.
    """
    f64 = lambda a: np.ascontiguousarray(a, dtype=np.float64)
    return _active.trilinear_sum(np.ascontiguousarray(exps, dtype=np.int64), f64(coefs),
                                 float(lam), f64(u), f64(lo_f), f64(w_f), f64(lo_g), f64(w_g),
                                 f64(lo_h), f64(hi_h), int(cutoff_kind), float(r))
