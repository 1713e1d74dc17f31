import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import scalars, small_fractions
from timekernel.errors import PreconditionError, ValidationError
from timekernel.frobenius import solve_tke, toa_spec
from timekernel.mtke import (
    DistributionBoundary,
    DistributionKernel,
    PiecewiseTerm,
    delta_jump_check,
    moment_family,
    mtke_classify,
    mtke_free_solution,
    mtke_ho_solution,
    weyl_transform_distribution,
)
from timekernel.phase_space import PhaseSpaceSeries
from timekernel.potential import harmonic
from timekernel.scalar import GradedScalar, ZERO
from timekernel.weights import Weight

HALF = GradedScalar.real(Fraction(1, 2))
TOA_IMAGE = PhaseSpaceSeries([((1, 1), GradedScalar.real(-1, mu=1))])
# g(v) = -(mu/hbar) v sgn(v)
SHIFT_G = PiecewiseTerm("v", 1, Weight.SGN, GradedScalar.real(-1, mu=1, hbar=-1))


def dbc(alpha=HALF, beta=HALF, f=(), g=()):
    return DistributionBoundary(GradedScalar.coerce(alpha), GradedScalar.coerce(beta), tuple(f), tuple(g))


def test_alpha_beta_must_sum_to_one():
    with pytest.raises(ValidationError):
        dbc(GradedScalar.real(1), GradedScalar.real(1))
    with pytest.raises(ValidationError):
        dbc(GradedScalar.real(1, mu=1), GradedScalar.real(0))


def test_stationary_flag_requires_f_zero_at_origin():
    f = PiecewiseTerm("u", 0, Weight.ONE, GradedScalar.real(1))
    with pytest.raises(ValidationError):
        DistributionBoundary(HALF, HALF, (f,), (), True)
    DistributionBoundary(HALF, HALF, (PiecewiseTerm("u", 2, Weight.ONE, GradedScalar.real(1)),), (), True)


def test_free_symmetric_is_sgn_kernel():
    K = mtke_free_solution(dbc())
    sgn, rest = K.sgn_part()
    assert list(sgn) == [((1, 0), GradedScalar.imag(Fraction(-1, 4), mu=1, hbar=-1))]
    assert not rest


def test_free_one_sided():
    K = mtke_free_solution(dbc(GradedScalar.real(1), ZERO))
    assert list(K.terms()) == [(("heaviside", 1, 0, Weight.ONE, Weight.HPLUS), GradedScalar.imag(Fraction(-1, 2), mu=1, hbar=-1))]


def test_ho_heaviside_coefficients():
    omega = Fraction(3)
    K = mtke_ho_solution(dbc(), omega, 3)
    plus = K.groups[("heaviside", Weight.ONE, Weight.HPLUS)]
    for j in range(4):
        expected = GradedScalar.imag(Fraction(-1, 2), mu=1, hbar=-1) * GradedScalar.real(
            (omega / 2) ** (2 * j) / math.factorial(2 * j + 1), mu=2 * j, hbar=-2 * j
        )
        assert plus.coefficient(2 * j + 1, 2 * j) == expected * Fraction(1, 2)


def test_moment_examples():
    F = moment_family([PiecewiseTerm("u", 2, Weight.ONE, GradedScalar.real(1))], 2)
    assert F[1] == [PiecewiseTerm("u", 4, Weight.ONE, GradedScalar.real(Fraction(1, 4)))]
    assert F[2] == [PiecewiseTerm("u", 6, Weight.ONE, GradedScalar.real(Fraction(1, 24)))]
    G = moment_family([PiecewiseTerm("v", 1, Weight.SGN, GradedScalar.real(1))], 1)
    assert G[1] == [PiecewiseTerm("v", 3, Weight.SGN, GradedScalar.real(Fraction(1, 3)))]


@given(st.integers(0, 6), st.sampled_from(list(Weight)), st.floats(-2, 2).filter(lambda x: abs(x) > 1e-3))
def test_moment_closure_matches_quadrature(k, w, x):
    from scipy.integrate import quad

    t = PiecewiseTerm("u", k, w, GradedScalar.real(1))
    m = t.moment()
    assert m.weight is w and m.degree == k + 2
    side = 1 if x > 0 else -1
    numeric, _ = quad(lambda y: y * t.evaluate(y, side).real, 0, x)
    assert m.evaluate(x, side).real == pytest.approx(numeric, abs=1e-12)


def test_classification_examples():
    g_odd_imag = PiecewiseTerm("v", 2, Weight.SGN, GradedScalar.imag(3))
    assert tuple(vars(mtke_classify(dbc(g=[g_odd_imag]))).values()) == (True, True, True)
    assert tuple(vars(mtke_classify(dbc(GradedScalar.real(1), ZERO))).values()) == (False, True, False)
    assert tuple(vars(mtke_classify(dbc(g=[SHIFT_G]))).values()) == (True, False, False)


def test_complex_alpha_hermitian():
    a = GradedScalar(Fraction(1, 2), Fraction(2))
    assert mtke_classify(dbc(a, a.conjugate())).hermitian
    assert not mtke_classify(dbc(a, a.conjugate())).time_reversal


def _all_configs():
    f = PiecewiseTerm("u", 2, Weight.HPLUS, GradedScalar.real(1))
    g = PiecewiseTerm("v", 1, Weight.ONE, GradedScalar.imag(2))
    a = GradedScalar(Fraction(1, 3), Fraction(1))
    yield dbc()
    yield dbc(GradedScalar.real(1), ZERO)
    yield dbc(a, GradedScalar.real(1) - a, [f], [g, SHIFT_G])


@pytest.mark.parametrize("omega", [None, Fraction(1), Fraction(5, 2)])
def test_delta_jump_is_universal(omega):
    for d in _all_configs():
        K = mtke_free_solution(d) if omega is None else mtke_ho_solution(d, omega, 3)
        for mu, hbar in ((1.0, 1.0), (2.0, 0.5)):
            assert delta_jump_check(K, mu, hbar) == pytest.approx(mu / (2j * hbar))


def test_delta_jump_needs_step_part():
    with pytest.raises(PreconditionError):
        delta_jump_check(DistributionKernel([]))


def test_weyl_free_examples():
    assert weyl_transform_distribution(mtke_free_solution(dbc())) == TOA_IMAGE
    one_sided = weyl_transform_distribution(mtke_free_solution(dbc(GradedScalar.real(1), ZERO)))
    # delta coefficients carry an implicit factor pi
    assert one_sided == TOA_IMAGE + PhaseSpaceSeries((), [((1, 0), GradedScalar.imag(-1, mu=1))])
    shifted = weyl_transform_distribution(mtke_free_solution(dbc(g=[SHIFT_G])))
    assert shifted == TOA_IMAGE + PhaseSpaceSeries([((0, 2), GradedScalar.real(2, mu=1, hbar=1))])


def test_weyl_stationary_particle_term():
    c = Fraction(3)
    f = PiecewiseTerm("u", 2, Weight.ONE, GradedScalar.real(c))
    out = weyl_transform_distribution(mtke_free_solution(dbc(f=[f])))
    # 2 pi hbar f(2q) delta(p) = 2 pi hbar * 4 c q^2 delta(p)
    assert out == TOA_IMAGE + PhaseSpaceSeries((), [((2, 0), GradedScalar.real(8 * c, hbar=1))])


def test_weyl_delta_derivative_rescaling():
    # v^n -> 2 pi i^n hbar^(n+1) delta^(n)(p)
    g = PiecewiseTerm("v", 3, Weight.ONE, GradedScalar.real(1))
    out = weyl_transform_distribution(mtke_free_solution(dbc(g=[g])))
    assert out.delta_part() == PhaseSpaceSeries((), [((0, 3), GradedScalar.imag(-2, hbar=4))])


@pytest.mark.parametrize("omega", [Fraction(1), Fraction(2, 3)])
def test_ho_matches_toa_kernel(omega):
    J = 5
    K = mtke_ho_solution(dbc(), omega, J)
    sgn, rest = K.sgn_part()
    assert not rest
    T = solve_tke(harmonic(omega), toa_spec(), 4 * J + 1)
    prefactor = GradedScalar.imag(-1, mu=1, hbar=-1)
    assert sgn == T.scale(prefactor)


half_imag = st.fractions(min_value=-5, max_value=5, max_denominator=6)


@given(half_imag, st.lists(st.tuples(st.integers(0, 4), small_fractions), max_size=3), st.lists(st.tuples(st.integers(0, 4), small_fractions), max_size=3))
def test_hermitian_data_gives_real_image(t, fs, gs):
    a = GradedScalar(Fraction(1, 2), t)
    f = [PiecewiseTerm("u", k, Weight.ONE, GradedScalar.real(c)) for k, c in fs]
    # g(v) = g*(-v): real even pieces and imaginary odd pieces
    g = []
    for k, c in gs:
        g.append(PiecewiseTerm("v", 2 * k, Weight.ONE, GradedScalar.real(c)))
        g.append(PiecewiseTerm("v", 2 * k, Weight.SGN, GradedScalar.imag(c)))
        g.append(PiecewiseTerm("v", k, Weight.SGN if k % 2 else Weight.ONE, GradedScalar.real(c)))
    d = dbc(a, a.conjugate(), f, g)
    assert mtke_classify(d).hermitian
    for K in (mtke_free_solution(d), mtke_ho_solution(d, Fraction(1), 2)):
        assert weyl_transform_distribution(K).is_real()


@given(st.lists(st.tuples(st.integers(0, 4), small_fractions), max_size=4))
def test_both_symmetries_with_sgn_family_remove_delta_terms(gs):
    g = [PiecewiseTerm("v", 2 * k, Weight.SGN, GradedScalar.imag(c)) for k, c in gs]
    d = dbc(g=g)
    assert mtke_classify(d).both
    for K in (mtke_free_solution(d), mtke_ho_solution(d, Fraction(1), 3)):
        assert not weyl_transform_distribution(K).has_delta_terms()


def test_both_symmetries_with_odd_polynomial_g_keeps_a_delta_derivative():
    # g(v) = i v meets both symmetry conditions yet transforms to -2 pi hbar^2 delta'(p)
    d = dbc(g=[PiecewiseTerm("v", 1, Weight.ONE, GradedScalar.imag(1))])
    assert mtke_classify(d).both
    out = weyl_transform_distribution(mtke_free_solution(d))
    assert out.delta_part() == PhaseSpaceSeries((), [((0, 1), GradedScalar.real(-2, hbar=2))])


def test_kernel_evaluate_matches_toa_closed_form():
    from timekernel.picard import harmonic_toa_closed_form

    K = mtke_ho_solution(dbc(), Fraction(1), 12)
    u = np.linspace(-1, 1, 7)
    U, W = np.meshgrid(u, u + 0.05, indexing="ij")
    expected = -1j * harmonic_toa_closed_form(U, W) * np.sign(W)
    assert np.max(np.abs(K.evaluate(U, W) - expected)) < 1e-12


def test_json_round_trips():
    d = dbc(GradedScalar.real(1), ZERO, [PiecewiseTerm("u", 2, Weight.HMINUS, GradedScalar.real(1))], [SHIFT_G])
    assert DistributionBoundary.from_json(d.to_json()) == d
    K = mtke_ho_solution(d, Fraction(1), 2)
    again = DistributionKernel.from_json(K.to_json())
    assert again == K and again.to_json() == K.to_json()


def test_unknown_weight_rejected():
    with pytest.raises(ValidationError):
        PiecewiseTerm.from_json("u", {"degree": 1, "weight": "box", "coeff": "1"})
