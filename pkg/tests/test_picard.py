import json
import math
import os
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import cumulative_simpson as scipy_cumulative_simpson

from timekernel.errors import NonConvergenceError, PreconditionError, ValidationError
from timekernel.frobenius import BoundaryConditionSpec, ShiftSpec, solve_tke, toa_spec
from timekernel.mtke import DistributionBoundary, PiecewiseTerm, mtke_ho_solution
from timekernel.picard import (
    Grid,
    cumulative_simpson,
    difference_bound,
    grid_reference,
    harmonic_toa_closed_form,
    parse_grid_counts,
    picard_bound,
    picard_solve,
    picard_solve_mtke,
)
from timekernel.potential import PolynomialPotential, harmonic, random_potential
from timekernel.scalar import GradedScalar
from timekernel.series import evaluate_uv
from timekernel.weights import Weight

FREE = PolynomialPotential({})
QUARTIC = PolynomialPotential({4: GradedScalar.real(Fraction(1, 10))})
HALF = GradedScalar.real(Fraction(1, 2))


def closed_harmonic(grid, omega=1.0):
    return grid_reference(lambda U, W: harmonic_toa_closed_form(U, W, omega), grid)


@pytest.mark.parametrize("n", [3, 4, 5, 10, 11, 64])
@pytest.mark.parametrize("h", [0.1, -0.05])
def test_cumulative_simpson_against_scipy(n, h):
    x = h * np.arange(n)
    f = np.cos(3 * x) + x**2
    ours = cumulative_simpson(f, h)
    ref = scipy_cumulative_simpson(f, dx=h, initial=0)
    assert np.max(np.abs(ours - ref)) < 5 * abs(h) ** 4


@pytest.mark.parametrize("n", [3, 6, 9])
def test_cumulative_simpson_exact_on_quadratics(n):
    h = -0.25
    x = h * np.arange(n)
    f = 2 - x + 3 * x**2
    exact = 2 * x - x**2 / 2 + x**3
    assert np.allclose(cumulative_simpson(f, h), exact, atol=1e-14, rtol=0)


def test_cumulative_simpson_along_axis():
    h = 0.1
    x = h * np.arange(7)
    f = np.outer(np.ones(3), np.exp(x))
    out = cumulative_simpson(f, h, axis=1)
    assert np.allclose(out[1], cumulative_simpson(np.exp(x), h))


def test_grid_validation():
    with pytest.raises(ValidationError):
        Grid(-1, 1, -1, 1, 10, 11)
    with pytest.raises(ValidationError):
        Grid(Fraction(1, 2), 1, -1, 1, 11, 11)
    with pytest.raises(ValidationError):
        Grid(-1, 2, -1, 1, 5, 11)  # step 3/4 misses 0
    g = Grid(-1, 2, -1, 1, 7, 11)
    assert g.iu0 == 2 and g.u[g.iu0] == 0.0
    assert parse_grid_counts("201x101") == (201, 101)
    with pytest.raises(ValidationError):
        parse_grid_counts("201")


def test_zero_potential_one_iteration():
    g = Grid.square(1, 21)
    K = picard_solve(FREE, toa_spec(), g, 1e-14, 5)
    U, _ = np.meshgrid(g.u, g.v, indexing="ij")
    assert np.array_equal(K.values, U / 4 + 0j)
    assert K.iterations_used == 1


def test_harmonic_toa_grid():
    g = Grid.square(1, 201)
    K = picard_solve(harmonic(1), toa_spec(), g, 1e-12, 100)
    assert K.final_delta <= 1e-12
    assert K.max_abs_error(closed_harmonic(g)) < 1e-8


def test_quartic_grid_against_series():
    g = Grid.square(1, 201)
    K = picard_solve(QUARTIC, toa_spec(), g, 1e-12, 100)
    T = solve_tke(QUARTIC, toa_spec(), 24)
    ref = grid_reference(lambda U, W: evaluate_uv(T, U, W), g)
    assert K.max_abs_error(ref) < 1e-8


def test_asymmetric_domain_and_shift_data():
    g = Grid(Fraction(-1, 2), 1, -1, Fraction(1, 2), 61, 61)
    bc = ShiftSpec(1, 2)
    K = picard_solve(harmonic(1), bc, g, 1e-13, 100)
    T = solve_tke(harmonic(1), bc, 30)
    ref = grid_reference(lambda U, W: evaluate_uv(T, U, W), g)
    assert K.max_abs_error(ref) < 1e-7


def test_refinement_order():
    V = harmonic(2)
    errs = []
    for n in (21, 41, 81):
        g = Grid.square(1, n)
        errs.append(picard_solve(V, toa_spec(), g, 1e-14, 200).max_abs_error(closed_harmonic(g, 2.0)))
    # fourth order: halving h cuts the error by about 2^4
    assert errs[0] / errs[1] > 10 and errs[1] / errs[2] > 10


def test_bound_examples():
    assert picard_bound(FREE, toa_spec(), (1, 1), 1) == 0
    assert picard_bound(harmonic(1), toa_spec(), (1, 1), 3) == float(Fraction(1, 4) ** 3 / 6)
    assert difference_bound(harmonic(1), 1, 1) == 0.5
    with pytest.raises(PreconditionError):
        picard_bound(FREE, toa_spec(), (1, 1), 0)


@given(
    st.integers(0, 10**6),
    st.floats(0.1, 3),
    st.floats(0.1, 3),
    st.integers(1, 8),
)
def test_bound_ratio(seed, U, W, j):
    V = random_potential(3, seed % 50)
    bc = BoundaryConditionSpec(GradedScalar.real(1), {1: GradedScalar.real(2), 3: GradedScalar.imag(1)})
    b0 = picard_bound(V, bc, (U, W), j)
    b1 = picard_bound(V, bc, (U, W), j + 1)
    rate = difference_bound(V, U, W) / 2
    assert b1 <= b0 * rate * U * W / (j + 1) * (1 + 1e-12)


def test_bound_decays():
    bounds = [picard_bound(random_potential(3, 1), toa_spec(), (2, 2), j) for j in range(1, 120)]
    assert bounds[-1] < 1e-6 * max(bounds)
    assert all(b1 < b0 for b0, b1 in zip(bounds[60:], bounds[61:]))


@pytest.mark.parametrize("V", [harmonic(1), QUARTIC, random_potential(3, 9)])
def test_increments_respect_bound(V):
    g = Grid.square(1, 81)
    bc = BoundaryConditionSpec(GradedScalar.real(Fraction(1, 3)), {2: GradedScalar.real(1)})
    K = picard_solve(V, bc, g, 1e-13, 100, record_increments=True)
    U, W = np.meshgrid(g.u, g.v, indexing="ij")
    for j, inc in enumerate(K.increments, start=1):
        assert np.all(inc <= 2 * picard_bound(V, bc, (1, 1), j, u=U, v=W) + 1e-15)


def test_two_seeds_converge_together():
    g = Grid.square(1, 61)
    tol = 1e-13
    a = picard_solve(QUARTIC, toa_spec(), g, tol, 200)
    b = picard_solve(QUARTIC, toa_spec(), g, tol, 200, initial=lambda U, W: np.cos(U) * np.exp(W) + 1j)
    assert np.max(np.abs(a.values - b.values)) <= 10 * tol


def test_non_convergence_reports_delta():
    with pytest.raises(NonConvergenceError) as info:
        picard_solve(harmonic(1), toa_spec(), Grid.square(1, 21), 1e-14, 2)
    assert info.value.final_delta > 1e-14
    assert info.value.iterations == 2


@pytest.mark.parametrize("threads", ["1", "2", "8"])
def test_thread_count_does_not_change_bits(threads, monkeypatch):
    g = Grid.square(1, 41)
    monkeypatch.setenv("TIMEKERNEL_THREADS", "1")
    ref = picard_solve(random_potential(3, 2), toa_spec(), g, 1e-13, 100).values
    monkeypatch.setenv("TIMEKERNEL_THREADS", threads)
    out = picard_solve(random_potential(3, 2), toa_spec(), g, 1e-13, 100).values
    assert out.tobytes() == ref.tobytes()


def _dbc(f=(), g=(), alpha=HALF, beta=HALF):
    return DistributionBoundary(alpha, beta, tuple(f), tuple(g))


def test_mtke_free_exact_on_nodes():
    g = Grid.square(1, 21)
    K = picard_solve_mtke(FREE, _dbc(), g, 1e-14, 5)
    U, W = np.meshgrid(g.u, g.v, indexing="ij")
    for side in (1, -1):
        sgn = np.where(W > 0, 1, np.where(W < 0, -1, side))
        assert np.array_equal(K.one_sided(side), U * sgn / 4j)
    assert np.array_equal(K.values[:, g.iv0], np.zeros(g.nu, dtype=complex))


def test_mtke_harmonic_matches_toa():
    g = Grid.square(1, 201)
    K = picard_solve_mtke(harmonic(1), _dbc(), g, 1e-12, 100)
    U, W = np.meshgrid(g.u, g.v, indexing="ij")
    toa = harmonic_toa_closed_form(U, W)
    for side in (1, -1):
        sgn = np.where(W > 0, 1, np.where(W < 0, -1, side))
        assert np.max(np.abs(K.one_sided(side) - toa * sgn / 1j)) < 1e-8


def test_mtke_harmonic_with_f_and_g():
    f = [PiecewiseTerm("u", 2, Weight.ONE, GradedScalar.real(1))]
    gt = [PiecewiseTerm("v", 1, Weight.SGN, GradedScalar.real(1)), PiecewiseTerm("v", 2, Weight.HMINUS, GradedScalar.imag(1))]
    d = _dbc(f, gt, GradedScalar.real(1), GradedScalar.real(0))
    g = Grid.square(1, 201)
    K = picard_solve_mtke(harmonic(1), d, g, 1e-12, 100)
    closed = mtke_ho_solution(d, Fraction(1), 14)
    U, W = np.meshgrid(g.u, g.v, indexing="ij")
    for side in (1, -1):
        vs = np.where(W == 0, side, np.sign(W))
        assert np.max(np.abs(K.one_sided(side) - closed.evaluate(U, W, v_side=vs))) < 1e-8
    # first moment of f is u^4/4, weighted by (mu omega / 2 hbar)^2 v^2 / 2
    assert closed.groups[("f", Weight.ONE, Weight.ONE)].coefficient(4, 2).re == Fraction(1, 32)


def test_mtke_two_seeds():
    g = Grid.square(1, 41)
    tol = 1e-13
    d = _dbc()
    a = picard_solve_mtke(harmonic(1), d, g, tol, 200)
    b = picard_solve_mtke(harmonic(1), d, g, tol, 200, initial=lambda U, W, su, sv: sv * np.sin(U + W))
    assert np.max(np.abs(a.one_sided(1) - b.one_sided(1))) <= 10 * tol
    assert np.max(np.abs(a.one_sided(-1) - b.one_sided(-1))) <= 10 * tol


def test_exports():
    g = Grid.square(1, 5)
    K = picard_solve(harmonic(1), toa_spec(), g, 1e-14, 50)
    rows = K.csv_rows()
    assert len(rows) == 25 and rows[0][:2] == ["-1", "-1"]
    summary = json.loads(K.summary_json(closed_harmonic(g)))
    assert set(summary) == {"grid", "iterations_used", "final_delta", "max_abs_error"}
    assert Grid.from_json(summary["grid"]) == g
