from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from oscdecay.polycore import Polynomial

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# criterion lines collected by test_acceptance, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "property: randomized property suite (>= 1000 trials)")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


coefficients = st.fractions(min_value=-9, max_value=9, max_denominator=6)


@st.composite
def polynomials(draw, dim=2, max_degree=3, max_terms=5, slots=None):
    """Sparse polynomials over the 3*dim variables (or a subset of slots)."""
    slots = list(range(3 * dim)) if slots is None else list(slots)
    n = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(n):
        deg = draw(st.integers(0, max_degree))
        exp = [0] * (3 * dim)
        for s in draw(st.lists(st.sampled_from(slots), min_size=deg, max_size=deg)):
            exp[s] += 1
        terms[tuple(exp)] = terms.get(tuple(exp), Fraction(0)) + draw(coefficients)
    return Polynomial(dim, terms)


def xy_polynomials(dim=2, **kw):
    return polynomials(dim=dim, slots=range(2 * dim), **kw)


@pytest.fixture
def acceptance():
    def record(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record
