import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from maslov_morse.errors import ExpressionSyntaxError
from maslov_morse.expr import parse_expression

# (expression, x, value), each worked out by hand
TABLE = [
    ("-22", 0.3, -22.0),
    ("10*sin(x)", 0.0, 0.0),
    ("-13+12*x^2", 1.0, -1.0),
    ("x", 0.25, 0.25),
    ("2^3^2", 0.0, 512.0),
    ("-2^2", 0.0, 4.0),
    ("(1+x)*(1-x)", 0.5, 0.75),
    ("1/4/2", 0.0, 0.125),
    ("8-3-2", 0.0, 3.0),
    ("sqrt(x)", 0.81, 0.9),
    ("exp(0)", 0.7, 1.0),
    ("cos(pi*x)", 1.0, -1.0),
    ("sin(pi*x/2)", 1.0, 1.0),
    ("-cos(pi*x)/(2+cos(4*pi*x))", 0.0, -1.0 / 3.0),
    ("-.13-.7*cos(6*pi*x)/(2+cos(6*pi*x))", 0.0, -0.13 - 0.7 / 3.0),
    ("1e-2*x", 0.5, 0.005),
    ("+x--x", 0.2, 0.4),
    ("2*x^2+3*x+1", 2.0, 15.0),
    (" ( x ) ", 0.6, 0.6),
    ("-3*x", 0.5, -1.5),
]


@pytest.mark.parametrize("src, x, value", TABLE)
def test_hand_table(src, x, value):
    assert parse_expression(src)(x) == pytest.approx(value, abs=1e-12)


def test_vectorized():
    e = parse_expression("-10-5*x^2")
    xs = np.linspace(0, 1, 5)
    assert np.allclose(e(xs), -10 - 5 * xs ** 2)
    assert parse_expression("3").is_constant() and not e.is_constant()
    assert parse_expression("7")(xs).shape == xs.shape


@pytest.mark.parametrize("src, offset, token", [
    ("1+", 2, "number"),
    ("(x", 2, ")"),
    ("sin x", 4, "("),
    ("foo(x)", 0, "x"),
    ("x 2", 2, "end of input"),
    ("", 0, "number"),
    ("é+y", 0, "number"),
    ("1+é", 2, "number"),
])
def test_syntax_errors(src, offset, token):
    with pytest.raises(ExpressionSyntaxError) as exc:
        parse_expression(src)
    err = exc.value
    assert err.offset == offset and token in err.expected
    assert err.to_dict()["error"] == "SyntaxError"


def test_byte_offset_counts_utf8():
    with pytest.raises(ExpressionSyntaxError) as exc:
        parse_expression("é+?")
    assert exc.value.offset == 0
    with pytest.raises(ExpressionSyntaxError) as exc:
        parse_expression("x+é")
    assert exc.value.offset == 2


@given(st.floats(-1e3, 1e3, allow_nan=False), st.floats(-1e3, 1e3, allow_nan=False), st.floats(0, 1))
def test_arithmetic_matches_python(a, b, x):
    src = f"({a!r})*x+({b!r})-x*x"
    assert parse_expression(src)(x) == pytest.approx(a * x + b - x * x, rel=1e-12, abs=1e-9)


def test_non_string():
    with pytest.raises(ExpressionSyntaxError):
        parse_expression(3)
