from fractions import Fraction

from hypothesis import settings, strategies as st

from timekernel.potential import PolynomialPotential
from timekernel.scalar import GradedScalar

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

small_fractions = st.fractions(min_value=-20, max_value=20, max_denominator=12)


@st.composite
def scalars(draw, mu=None, hbar=None):
    return GradedScalar(
        draw(small_fractions),
        draw(small_fractions),
        draw(st.integers(-3, 3)) if mu is None else mu,
        draw(st.integers(-3, 3)) if hbar is None else hbar,
    )


@st.composite
def potentials(draw, max_degree=4, real=True):
    degrees = draw(st.sets(st.integers(1, max_degree), min_size=0, max_size=max_degree))
    coeffs = {}
    for s in degrees:
        c = draw(small_fractions)
        if c:
            im = Fraction(0) if real else draw(small_fractions)
            coeffs[s] = GradedScalar(c, im, draw(st.integers(0, 1)), 0)
    return PolynomialPotential(coeffs)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
