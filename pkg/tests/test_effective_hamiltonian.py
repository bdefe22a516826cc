"""Effective Hamiltonian construction and generated equations of motion."""

import math
from fractions import Fraction

import numpy as np
import pytest

from qmoments.dynamics import MomentState, init_gaussian, integrate, IntegratorConfig
from qmoments.effective_hamiltonian import (
    CallablePotential,
    PolynomialPotential,
    build_heff,
    equations_of_motion,
    finite_difference_derivative,
)
from qmoments.exact import MomentPolynomial
from qmoments.indices import single
from qmoments.moment_algebra import build_bracket_table
from qmoments.schrodinger import Grid, energy_expectation, gaussian_wavepacket

D = MomentPolynomial.moment


def test_free_particle_couplings():
    h = build_heff(PolynomialPotential([], mass=2), 2)
    assert h.coupling_orders() == [single(0, 2)]
    assert h.coupling_value(single(0, 2), 0.0) == 0.25
    poly = h.moment_polynomial()
    p = MomentPolynomial.p()
    assert poly == (p * p).scale(Fraction(1, 4)) + D(single(0, 2), Fraction(1, 4))


def test_harmonic_coupling_is_half_m_omega_sq():
    m, omega = 2.0, 3.0
    h = build_heff(PolynomialPotential([0, 0, 0.5 * m * omega**2], mass=m), 2)
    assert h.coupling_value(single(2, 0), 1.7) == pytest.approx(0.5 * m * omega**2)


def test_cubic_coupling_linear_in_q():
    pot = PolynomialPotential([0, 0, 0.5, -0.1])
    h = build_heff(pot, 2)
    for q in (-1.0, 0.0, 2.5):
        assert h.coupling_value(single(2, 0), q) == pytest.approx(0.5 * (1.0 - 0.6 * q))


def test_evaluate_free_particle_number():
    h = build_heff(PolynomialPotential([], mass=1), 2)
    state = MomentState(
        0.0, 2.0, {single(2, 0): 1.0, single(1, 1): 0.0, single(0, 2): 0.5},
        1.0, 2,
    )
    assert h.evaluate(state) == pytest.approx(2.25)


def test_evaluate_zero_state():
    h = build_heff(PolynomialPotential([], mass=1), 2)
    state = MomentState(
        0.0, 0.0, {single(2, 0): 0.0, single(1, 1): 0.0, single(0, 2): 0.0},
        1.0, 2, classical_mode=True,
    )
    assert h.evaluate(state) == 0.0


def test_evaluate_missing_moment_errors():
    h = build_heff(PolynomialPotential([], mass=1), 2)
    state = MomentState(
        0.0, 0.0, {single(2, 0): 1.0, single(1, 1): 0.0, single(0, 2): 0.25},
        1.0, 2,
    )
    del state.moments[single(0, 2)]
    with pytest.raises(ValueError, match="lacks moment"):
        h.evaluate(state)


def test_evaluate_matches_wavefunction_energy():
    """Gaussian in a harmonic well: <H> from moments equals the grid integral."""
    pot = PolynomialPotential([0, 0, 0.5], mass=1)
    h = build_heff(pot, 2)
    state = init_gaussian(0.7, -0.4, 1.2, 0.0, 1.0, 2)
    grid = Grid(-14, 14, 2048)
    wf = gaussian_wavepacket(grid, 0.7, -0.4, 1.2)
    assert h.evaluate(state) == pytest.approx(energy_expectation(wf, pot), rel=1e-5)


def test_linearity_of_build_heff():
    v1 = PolynomialPotential([0, 0, 0.3, 0.1], mass=1)
    v2 = PolynomialPotential([0.2, 0, 0.1, 0, 0.05], mass=1)
    h12 = build_heff(v1 + v2, 4)
    h1 = build_heff(v1, 4)
    h2 = build_heff(v2, 4)
    for idx in h12.coupling_orders():
        if idx == single(0, 2):
            continue  # the kinetic coupling belongs to the shared mass term
        for q in (-0.8, 0.3, 1.9):
            assert h12.coupling_value(idx, q) == pytest.approx(
                h1.coupling_value(idx, q) + h2.coupling_value(idx, q)
            )


def test_equations_of_motion_free_particle():
    h = build_heff(PolynomialPotential([], mass=2), 2)
    table = build_bracket_table(2, 1)
    field = equations_of_motion(h, table)
    assert field.expression(("D", single(2, 0))) == D(single(1, 1), 1)  # 2/m with m=2
    assert field.expression(("p", 0)).is_zero
    assert field.expression(("D", single(0, 2))).is_zero
    assert field.expression(("q", 0)) == MomentPolynomial.p().scale(Fraction(1, 2))


def test_equations_of_motion_cubic_back_reaction():
    """dp/dt = -V'(q) - V'''(q) Delta(q^2)/2 at second order."""
    pot = PolynomialPotential([0, 0, Fraction(1, 2), Fraction(-1, 10)])
    h = build_heff(pot, 2)
    table = build_bracket_table(2, 1)
    field = equations_of_motion(h, table)
    q = MomentPolynomial.q()
    expected = (
        -pot.as_polynomial(1)
        + D(single(2, 0), Fraction(3, 10))
    )
    assert field.expression(("p", 0)) == expected
    # and the q-dependence of the Delta(qp) equation carries V''(q)
    dqp = field.expression(("D", single(1, 1)))
    assert dqp == D(single(0, 2)) - D(single(2, 0)) + D(single(2, 0), Fraction(3, 5)) * q


def test_energy_conserved_along_trajectory():
    pot = PolynomialPotential([0, 0, 0.5, -0.05])
    h = build_heff(pot, 2)
    field = equations_of_motion(h, build_bracket_table(2, 1))
    state0 = init_gaussian(0.3, 0.8, 0.8, 0.1, 1.0, 2)
    traj = integrate(field, state0, (0, 6), IntegratorConfig(), t_eval=np.linspace(0, 6, 61))
    drift = np.max(np.abs(traj.energy - traj.energy[0])) / abs(traj.energy[0])
    assert drift < 1e-9


def test_quadratic_exactness_no_truncation_remainder():
    """At order 2 a quadratic Hamiltonian closes with no dropped terms."""
    h = build_heff(PolynomialPotential([0, 0, 0.5], mass=1), 2)
    table = build_bracket_table(2, 1)
    field = equations_of_motion(h, table)
    heff = h.moment_polynomial()
    from qmoments.moment_algebra import poisson_bracket

    for var, expr in zip(field.layout, field.exprs):
        if var[0] == "D":
            f = D(var[1])
        elif var[0] == "q":
            f = MomentPolynomial.q()
        else:
            f = MomentPolynomial.p()
        untruncated = poisson_bracket(f, heff, table)
        assert untruncated == expr


def test_callable_potential_finite_difference_validation():
    pot = CallablePotential(
        lambda q, k: [math.sin(q), math.cos(q), -math.sin(q), -math.cos(q), math.sin(q)][k],
        mass=1.0,
    )
    for q in (-0.9, 0.0, 1.3):
        for k in (1, 2):
            assert finite_difference_derivative(pot, q, k, h=1e-4) == pytest.approx(
                pot.value(q, k), abs=1e-6
            )
    h = build_heff(pot, 2)
    # p^2/2m + Delta(p^2)/2m + V(q) + V''(q) Delta(q^2)/2 at the Gaussian state
    expected = 0.125 + math.sin(0.5) - 0.5 * math.sin(0.5)
    assert h.evaluate(init_gaussian(0.5, 0.0, 1.0, 0.0, 1.0, 2)) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(TypeError):
        h.moment_polynomial()
