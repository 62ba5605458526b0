import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oscdecay.decay import (
    AnalysisConfig,
    PhaseSpec,
    analyze_phase,
    canonical_form,
    corollary_check,
    predicted_exponent,
)
from oscdecay.hessian import GLTransform, GuardError, MinorSelection, gl_pushforward
from oscdecay.parser import parse_phase, parse_polynomial
from oscdecay.polycore import AffineMap, Polynomial, Role, VarId
from oscdecay.sublevel import SupportGeometry

CASE1 = "1/2*(x1*y1*y2 + x2*y2^2 - x2*y1^2)"
D3 = ("x1*x2*y2 + x1*x3*y3 + 1/2*x1*y3^2 + 1/2*x1^2*y1 - 1/2*x2^2*y1"
      " - 1/2*x3*y1^2 - 1/2*x2^2*y3")


def analyze(src, d, **kw):
    return analyze_phase(PhaseSpec(parse_phase(src, d), **kw))


@pytest.mark.parametrize("k, alpha, expect", [
    (2, 1, Fraction(1, 3)), (2, Fraction(1, 2), Fraction(1, 4)), (1, 1, Fraction(1, 6)),
    (3, Fraction(1, 3), Fraction(3, 10)), (2, 0, 0)])
def test_exponent_formula_exact(k, alpha, expect):
    out = predicted_exponent(k, alpha)
    assert out == expect and isinstance(out, Fraction)


def test_exponent_limit_and_errors():
    assert predicted_exponent(3, math.inf) == Fraction(3, 4)
    assert predicted_exponent(2, 1e12) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        predicted_exponent(0, 1)
    with pytest.raises(ValueError):
        predicted_exponent(1, -0.1)


@pytest.mark.property
@settings(max_examples=1000)
@given(st.integers(1, 6), st.fractions(0, 50, max_denominator=20),
       st.fractions(0, 50, max_denominator=20))
def test_exponent_monotone_and_bounded(k, a, b):
    lo, hi = sorted((a, b))
    assert predicted_exponent(k, lo) <= predicted_exponent(k, hi) < Fraction(k, 4)
    if lo < hi:
        assert predicted_exponent(k, lo) < predicted_exponent(k, hi)
    if hi > 0:
        assert predicted_exponent(k, hi) < predicted_exponent(k + 1, hi)


def test_minor_beats_determinant_in_d3():
    res = analyze(D3, 3)
    assert res.best.selection.k == 2
    assert 0.30 <= res.best.exponent <= 0.34
    full = next(r for r in res.reports if r.selection.k == 3)
    assert 0.27 <= full.prediction.exponent <= 0.31
    assert res.best.exponent > full.prediction.exponent


def test_one_dimensional_rate():
    res = analyze("1/2*x1^2*y1", 1)
    assert res.best.selection == MinorSelection((1,), (1,))
    assert res.best.exponent == pytest.approx(1 / 6, abs=0.01)


def test_no_decay_phases():
    for src in ("x1^3", "x1*y2", "x1^2 + y2^2 + (x1 + y1)^3"):
        res = analyze(src, 2)
        assert res.best.regime == "no-decay" and res.best.exponent == 0
        assert all(r.prediction.regime == "no-decay" for r in res.reports)


def test_ties_prefer_larger_k_then_lexicographic():
    # case 1: 2x2 minor gives ~1/3, the four 1x1 minors tie among themselves
    res = analyze(CASE1, 2)
    assert res.best.selection.k == 2
    res1 = analyze_phase(PhaseSpec(parse_phase(CASE1, 2)), AnalysisConfig(k_range=(1,)))
    ones = [r for r in res1.reports if r.prediction.regime == "theorem1"]
    top = max(float(r.prediction.exponent) for r in ones)
    first = next(r for r in ones if float(r.prediction.exponent) == top)
    assert res1.best.selection == first.selection


def test_dimension_guard():
    with pytest.raises(GuardError):
        analyze("x1*y1", 7)


def _relabel(S, perm):
    d = S.dim
    m = {}
    for role in (Role.X, Role.Y):
        for i in range(d):
            m[VarId(role, i + 1)] = Polynomial.var(d, VarId(role, perm[i] + 1))
    return S.substitute(AffineMap.from_mapping(d, m))


@pytest.mark.parametrize("src, d", [(CASE1, 2), ("x1^2*y2 + 3*x2*y1*y2 - x1*x2*y2", 2), (D3, 3)])
def test_invariant_under_coordinate_relabeling(src, d):
    S = parse_phase(src, d)
    base = analyze_phase(PhaseSpec(S))
    for perm in itertools.permutations(range(d)):
        other = analyze_phase(PhaseSpec(_relabel(S, perm)))
        assert other.best.exponent == base.best.exponent
        assert other.best.selection.k == base.best.selection.k
        assert sorted(float(r.prediction.exponent) for r in other.reports) == \
            sorted(float(r.prediction.exponent) for r in base.reports)


def test_x_only_permutation_is_not_a_symmetry():
    # swapping x1, x2 but not y1, y2 changes the determinant class
    S = parse_phase("5*x1*x2*y1 - 7/2*x1*x2*y2 - 4*x1*y2^2", 2)
    swapped = S.substitute(AffineMap.from_mapping(2, {
        VarId(Role.X, 1): Polynomial.x(2, 2), VarId(Role.X, 2): Polynomial.x(2, 1)}))
    full = MinorSelection((1, 2), (1, 2))
    a = next(r for r in analyze_phase(PhaseSpec(S)).reports if r.selection == full)
    b = next(r for r in analyze_phase(PhaseSpec(swapped)).reports if r.selection == full)
    assert str(a.P) == "-40*t1*t2" and str(b.P) == "40*t2^2"
    assert a.prediction.exponent > b.prediction.exponent


def test_canonical_form_identifies_relabelings():
    P = parse_polynomial("t1^2 - 3*t2", 2, allow_tau=True)
    Q = parse_polynomial("3*t1 - t2^2", 2, allow_tau=True)
    assert canonical_form(P) == canonical_form(Q)


def test_unimodular_change_keeps_full_determinant_rate():
    S = parse_phase("1/2*(x1*y1^2 + x2*y2^2)", 2)
    A = GLTransform.from_rows([[1, 1], [0, 1]])
    full = MinorSelection((1, 2), (1, 2))
    e0 = next(r for r in analyze_phase(PhaseSpec(S)).reports if r.selection == full)
    e1 = next(r for r in analyze_phase(PhaseSpec(gl_pushforward(S, A))).reports
              if r.selection == full)
    assert float(e1.prediction.exponent) == pytest.approx(float(e0.prediction.exponent), abs=0.02)


def test_corollary_examples():
    rep = corollary_check(parse_phase("x1^2*y1", 1))
    assert rep.witness == (1, 1, 1) and rep.min_abs == 2
    assert rep.prediction.exponent == Fraction(1, 6)
    half = corollary_check(parse_phase("1/2*x1^2*y1", 1))
    assert half.witness == (1, 1, 1) and half.min_abs == 1
    none = corollary_check(parse_phase("x1*y2", 2))
    assert none.witness is None and none.prediction is None


def test_corollary_grid_minimum_over_rectangle():
    # D_{111} of x1^2 y1 + x1^3 y1/6 is 2 + x1, which drops below 1 near x1 = -1
    S = parse_phase("x1^2*y1 + 1/6*x1^3*y1", 1)
    assert corollary_check(S, geometry=SupportGeometry(r=0.5)).witness == (1, 1, 1)
    assert corollary_check(S, geometry=SupportGeometry(r=1.5)).witness is None
    with pytest.raises(ValueError):
        corollary_check(S, rect=[(-0.1, 0.1), (-1, 1)])


def test_report_json_round_trips_selection():
    res = analyze(D3, 3)
    js = res.to_json()
    assert js["best"]["selection"]["k"] == 2
    assert len(js["minors"]) == 19
