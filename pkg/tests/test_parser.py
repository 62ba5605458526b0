
import pytest
from hypothesis import given, settings, strategies as st

from oscdecay.parser import MAX_NESTING, ParseError, parse_phase, parse_polynomial, tokenize
from oscdecay.polycore import Polynomial, serialize

from conftest import polynomials

TRIALS = settings(max_examples=1000)


def test_basic_phase():
    S = parse_phase("1/2*(x1*y1^2 + x2*y2^2)", 2)
    assert serialize(S) == "1/2*x1*y1^2 + 1/2*x2*y2^2"


def test_decimal_and_unary_minus():
    assert serialize(parse_phase("0.5*x1", 1)) == "1/2*x1"
    assert parse_phase("-(x1 - y1)", 1) == Polynomial.y(1, 1) - Polynomial.x(1, 1)
    assert parse_phase("--x1", 1) == Polynomial.x(1, 1)


@pytest.mark.parametrize("src, span", [("x3*y1", (0, 2)), ("x1$", (2, 3))])
def test_error_spans(src, span):
    with pytest.raises(ParseError) as err:
        parse_phase(src, 2)
    assert err.value.span == span


@pytest.mark.parametrize("src", ["2x1", "x1^-1", "1/0", "x1 +", "(x1", "x0", "t1", "x1^65",
                                 "", "x1 y1", "x1^1.5"])
def test_rejected_inputs(src):
    with pytest.raises(ParseError):
        parse_phase(src, 2)


def test_tau_only_when_allowed():
    assert parse_polynomial("t1*t2", 2, allow_tau=True) == Polynomial.tau(2, 1) * Polynomial.tau(2, 2)


def test_nesting_limit():
    deep = "(" * (3 * MAX_NESTING) + "x1" + ")" * (3 * MAX_NESTING)
    with pytest.raises(ParseError):
        parse_phase(deep, 1)
    ok = "(" * 50 + "x1" + ")" * 50
    assert parse_phase(ok, 1) == Polynomial.x(1, 1)


def test_tokens_carry_spans():
    toks = tokenize("x1 + 3/4")
    assert [t.kind for t in toks][:2] == ["variable", "plus"]
    assert toks[0].span == (0, 2)


@pytest.mark.property
@TRIALS
@given(polynomials(dim=2, max_degree=4, max_terms=6))
def test_round_trip(p):
    assert parse_polynomial(serialize(p), 2, allow_tau=True) == p


@pytest.mark.property
@TRIALS
@given(st.text(alphabet="xyt0123456789+-*/^(). _$", max_size=30))
def test_fuzz_totality(src):
    # every input either parses or raises ParseError, never anything else
    try:
        out = parse_polynomial(src, 2, allow_tau=True)
    except ParseError as exc:
        assert 0 <= exc.span[0] <= exc.span[1] <= len(src) + 1
    else:
        assert isinstance(out, Polynomial)


@pytest.mark.property
@TRIALS
@given(st.text(max_size=20))
def test_fuzz_totality_unicode(src):
    try:
        parse_phase(src, 3)
    except ParseError:
        pass
