"""Independent references built on sympy, used only by the tests."""

import sympy as sp


def symbols(d):
    x = sp.symbols(f"x1:{d + 1}")
    y = sp.symbols(f"y1:{d + 1}")
    t = sp.symbols(f"t1:{d + 1}")
    return x, y, t


def to_sympy(p):
    x, y, t = symbols(p.dim)
    vs = list(x) + list(y) + list(t)
    expr = sp.Integer(0)
    for exp, c in p.items():
        term = sp.Rational(c.numerator, c.denominator)
        for v, e in zip(vs, exp):
            term *= v ** e
        expr += term
    return sp.expand(expr)


def mixed_hessian(S_expr, d):
    """Mixed Hessian of S(x, y) - S(x + t, y - t), computed from scratch."""
    x, y, t = symbols(d)
    shift = {**{x[i]: x[i] + t[i] for i in range(d)}, **{y[i]: y[i] - t[i] for i in range(d)}}
    s_tau = sp.expand(S_expr - S_expr.xreplace(shift))
    return sp.Matrix(d, d, lambda i, j: sp.diff(s_tau, x[i], y[j]))


def minor(S_expr, d, rows, cols):
    M = mixed_hessian(S_expr, d)
    return sp.expand(M.extract([r - 1 for r in rows], [c - 1 for c in cols]).det(method="berkowitz"))
