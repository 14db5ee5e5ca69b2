import random
import sys
from fractions import Fraction

import pytest
from hypothesis import settings, strategies as st

from abelkit.darboux_jm import PlanarVF
from abelkit.poly import xy

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def gamma():
    """``v d/dx - (4 x^2 v + x^5) d/dv``, the planar form of D^2 x = 0."""
    return PlanarVF(xy("v"), xy("-4*x^2*v - x^5"))


@pytest.fixture
def rng():
    return random.Random(20240611)


small_rationals = st.fractions(min_value=-3, max_value=3, max_denominator=6)
nonzero_rationals = small_rationals.filter(lambda q: q != 0)


@st.composite
def t_polynomials(draw, max_degree=2):
    coeffs = draw(st.lists(small_rationals, min_size=1, max_size=max_degree + 1))
    return " + ".join(f"({c})*t^{i}" for i, c in enumerate(coeffs))


@st.composite
def smooth_coefficients(draw):
    """Coefficient strings that are smooth and bounded on the sampling range."""
    base = draw(t_polynomials())
    extra = draw(st.sampled_from(["", " + sin(t)", " + exp(-t)/2", " + cos(2*t)/3", " + 1/(1+t^2)"]))
    return base + extra


def random_coefficient(rng, allow_zero=False):
    """A random smooth coefficient string, drawn from ``rng``."""
    c = [Fraction(rng.randint(-6, 6), rng.randint(1, 4)) for _ in range(3)]
    pieces = [f"({c[0]})", f"({c[1]})*t", f"({c[2]})*sin(t)"]
    if rng.random() < 0.5:
        pieces.append(f"({Fraction(rng.randint(1, 5), 3)})*exp(-t)")
    text = " + ".join(pieces)
    if not allow_zero and all(x == 0 for x in c) and "exp" not in text:
        text += " + 1"
    return text


def random_nonvanishing(rng):
    """Coefficient bounded away from zero on [0.1, 3]."""
    a = Fraction(rng.randint(2, 6), 2)
    b = Fraction(rng.randint(-2, 2), 4)
    sign = rng.choice([1, -1])
    return f"({sign})*({a} + ({b})*sin(t))"


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
