import math
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, strategies as st

from conftest import potentials, scalars
from timekernel.errors import DivergenceError, PreconditionError
from timekernel.frobenius import BoundaryConditionSpec, ShiftSpec, solve_tke, toa_spec
from timekernel.phase_space import (
    PhaseSpaceSeries,
    classical_limit,
    inverse_hamiltonian_series,
    local_toa_series,
    quantum_corrections,
    weyl_transform_sgn,
    within_kernel_order,
)
from timekernel.potential import PolynomialPotential, harmonic, linear
from timekernel.scalar import GradedScalar, ZERO
from timekernel.series import KernelSeries

FREE = PolynomialPotential({})
TOA_IMAGE = PhaseSpaceSeries([((1, 1), GradedScalar.real(-1, mu=1))])


def ks(*terms):
    return KernelSeries(list(terms), max(sum(e) for e, _ in terms))


def test_weyl_monomial_rules():
    assert weyl_transform_sgn(ks(((1, 0), GradedScalar.real(Fraction(1, 4))))) == TOA_IMAGE
    beta = Fraction(3, 2)
    out = weyl_transform_sgn(ks(((0, 1), GradedScalar.imag(-beta))))
    assert out == PhaseSpaceSeries([((0, 2), GradedScalar.real(2 * beta, mu=1, hbar=1))])
    lam = Fraction(5)
    out = weyl_transform_sgn(ks(((0, 2), GradedScalar.real(lam / 4))))
    assert out == PhaseSpaceSeries([((0, 3), GradedScalar.real(lam, mu=1, hbar=2))])


def test_weyl_of_general_free_solution():
    # -mu q/p - 2 mu c/p - (2 mu/p) sum beta_k k! (hbar/p)^k / i^k
    c = GradedScalar.real(3)
    g = {1: GradedScalar.real(2), 2: GradedScalar.imag(5)}
    T = solve_tke(FREE, BoundaryConditionSpec(c, g), 6)
    expected = [((1, 1), GradedScalar.real(-1, mu=1)), ((0, 1), GradedScalar.real(-6, mu=1))]
    for k, b in g.items():
        coeff = (b * (-2 * math.factorial(k))).times_i_power(-k)
        expected.append(((0, k + 1), coeff.with_grade(1, k)))
    assert weyl_transform_sgn(T) == PhaseSpaceSeries(expected)


@given(st.lists(st.tuples(st.tuples(st.integers(0, 5), st.integers(0, 5)), scalars()), max_size=6))
def test_weyl_is_linear_and_injective(terms):
    T = KernelSeries(terms, 10)
    out = weyl_transform_sgn(T)
    assert len(out.regular) == len(T)
    assert weyl_transform_sgn(T + T) == out + out
    assert not out.has_delta_terms()


def test_local_toa_examples():
    assert local_toa_series(FREE, 4) == TOA_IMAGE
    a = Fraction(2, 3)
    S = local_toa_series(linear(a), 1)
    assert S == PhaseSpaceSeries([((1, 1), GradedScalar.real(-1, mu=1)), ((2, 3), GradedScalar.real(a / 2, mu=2))])


def test_local_toa_harmonic():
    omega = Fraction(3, 2)
    S = local_toa_series(harmonic(omega), 6)
    expected = [
        ((2 * j + 1, 2 * j + 1), GradedScalar.real(-Fraction((-1) ** j, 2 * j + 1) * omega ** (2 * j), mu=2 * j + 1))
        for j in range(7)
    ]
    assert S == PhaseSpaceSeries(expected)


def test_inverse_hamiltonian_free():
    assert inverse_hamiltonian_series(FREE, 1, 4) == PhaseSpaceSeries([((0, 2), GradedScalar.real(2, mu=1))])


def test_inverse_hamiltonian_harmonic_n1():
    omega = Fraction(2)
    S = inverse_hamiltonian_series(harmonic(omega), 1, 5)
    expected = [((2 * k, 2 * k + 2), GradedScalar.real(2 * (-1) ** k * omega ** (2 * k), mu=2 * k + 1)) for k in range(6)]
    assert S == PhaseSpaceSeries(expected)


def _binomial_oracle(V, N, j_max):
    """(p^2/2mu)^-N (1 + x)^-N with x = 2 mu V / p^2, expanded by generalized binomial coefficients."""
    terms = []
    for k in range(j_max + 1):
        gen = Fraction(1)
        for r in range(k):
            gen *= Fraction(-N - r, r + 1)
        power = {0: [GradedScalar.real(1)]}
        for _ in range(k):
            nxt = {}
            for d, cs in power.items():
                for s, a in V.coeffs.items():
                    nxt.setdefault(d + s, []).extend(c * a for c in cs)
            power = nxt
        for d, cs in power.items():
            for c in cs:
                terms.append(((d, 2 * N + 2 * k), (c * (gen * 2 ** (N + k))).with_grade(c.mu_exp + N + k, 0)))
    return PhaseSpaceSeries(terms)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_inverse_hamiltonian_against_binomial_oracle(N):
    V = harmonic(Fraction(1, 3))
    assert inverse_hamiltonian_series(V, N, 5) == _binomial_oracle(V, N, 5)
    W = PolynomialPotential({1: GradedScalar.real(2), 3: GradedScalar.real(Fraction(-1, 5))})
    assert inverse_hamiltonian_series(W, N, 4) == _binomial_oracle(W, N, 4)


def test_harmonic_n2_first_correction():
    omega = Fraction(1)
    S = inverse_hamiltonian_series(harmonic(omega), 2, 1)
    # -2 (2mu/p^2)^3 (mu omega^2 q^2 / 2)
    term = [c for (m, j), c in S.regular if (m, j) == (2, 6)]
    assert term == [GradedScalar.real(-2 * 8 * Fraction(1, 2), mu=4)]


def test_classical_limit_examples():
    beta = Fraction(1)
    S = TOA_IMAGE + PhaseSpaceSeries([((0, 2), GradedScalar.real(2 * beta, mu=1, hbar=1))])
    assert classical_limit(S) == TOA_IMAGE
    assert classical_limit(TOA_IMAGE) == TOA_IMAGE
    assert quantum_corrections(S) == S - TOA_IMAGE
    with pytest.raises(DivergenceError):
        classical_limit(PhaseSpaceSeries([((0, 1), GradedScalar.real(1, hbar=-2))]))


def test_classical_limit_of_harmonic_shift():
    K = 16
    T = solve_tke(harmonic(1), ShiftSpec(1, 1), K)
    S = classical_limit(within_kernel_order(weyl_transform_sgn(T), K))
    ref = local_toa_series(harmonic(1), 20).filter(lambda m, j, c: m + j - 1 <= K)
    assert S == ref


@given(potentials(max_degree=2))
def test_linear_systems_classical_limit_is_exact(V):
    K = 12
    S = classical_limit(within_kernel_order(weyl_transform_sgn(solve_tke(V, toa_spec(), K)), K))
    ref = local_toa_series(V, K).filter(lambda m, j, c: m + j - 1 <= K)
    assert S == ref


@given(potentials(max_degree=4))
def test_nonlinear_discrepancy_confined_to_higher_grades(V):
    K = 10
    S = within_kernel_order(weyl_transform_sgn(solve_tke(V, toa_spec(), K)), K)
    ref = local_toa_series(V, K).filter(lambda m, j, c: m + j - 1 <= K)
    assert S.grade_part(0) == ref
    assert all(h == 0 or h >= 2 for h in S.hbar_grades())


def test_evaluate_excludes_p_zero():
    assert TOA_IMAGE.evaluate(1, 2) == -0.5
    with pytest.raises(PreconditionError):
        TOA_IMAGE.evaluate(1, 0)


def test_json_round_trip():
    S = weyl_transform_sgn(solve_tke(harmonic(1), ShiftSpec(2, 3), 9))
    S = S + PhaseSpaceSeries((), [((1, 0), GradedScalar.imag(-1, mu=1))])
    assert PhaseSpaceSeries.from_json(S.to_json()) == S
