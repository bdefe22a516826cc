"""Moment states, Gaussian initialization, integration and monitors."""

import math

import numpy as np
import pytest

from qmoments.casimir_darboux import free_particle_s
from qmoments.dynamics import (
    AdmissibilityError,
    IntegrationError,
    IntegratorConfig,
    MomentState,
    Trajectory,
    init_gaussian,
    integrate,
    monitors,
)
from qmoments.effective_hamiltonian import (
    MomentVectorField,
    PolynomialPotential,
    build_heff,
    equations_of_motion,
)
from qmoments.exact import MomentPolynomial
from qmoments.indices import single
from qmoments.moment_algebra import build_bracket_table


def _free_field(mass=1.0, order=2):
    h = build_heff(PolynomialPotential([], mass=mass), order)
    return h, equations_of_motion(h, build_bracket_table(order, 1))


def test_init_gaussian_minimal():
    s = init_gaussian(0.0, 0.0, 1.0, 0.0, 1.0, 2)
    assert s.moments[single(2, 0)] == 1.0
    assert s.moments[single(0, 2)] == 0.25
    assert s.moments[single(1, 1)] == 0.0
    assert s.casimir() == pytest.approx(0.25)
    assert s.margin() == pytest.approx(0.0)


def test_init_gaussian_saturates_casimir_for_any_width():
    rng = np.random.default_rng(5)
    for _ in range(50):
        sigma = float(rng.uniform(0.2, 4.0))
        ps0 = float(rng.uniform(-2.0, 2.0))
        hbar = float(rng.uniform(0.3, 2.0))
        s = init_gaussian(1.0, -1.0, sigma, ps0, hbar, 2)
        assert s.casimir() == pytest.approx(hbar**2 / 4, rel=1e-12)


def test_init_gaussian_fourth_moments_follow_wick():
    s = init_gaussian(0.0, 0.0, 1.0, 0.0, 1.0, 4)
    assert s.moments[single(4, 0)] == pytest.approx(3.0)
    assert s.moments[single(0, 4)] == pytest.approx(3 * 0.25**2)
    assert s.moments[single(2, 2)] == pytest.approx(0.25)
    assert s.moments[single(3, 1)] == pytest.approx(0.0)
    assert s.moments[single(3, 0)] == 0.0


def test_init_gaussian_correlated_wick():
    s = init_gaussian(0.0, 0.0, 1.5, 0.8, 1.0, 4)
    sxx, sxy = 1.5**2, 1.5 * 0.8
    syy = 0.8**2 + 0.25 / 1.5**2
    assert s.moments[single(2, 2)] == pytest.approx(sxx * syy + 2 * sxy**2)
    assert s.moments[single(3, 1)] == pytest.approx(3 * sxx * sxy)


def test_init_gaussian_rejects_bad_width():
    with pytest.raises(ValueError):
        init_gaussian(0, 0, 0.0, 0, 1.0, 2)


def test_admissibility_floor_enforced():
    with pytest.raises(AdmissibilityError):
        MomentState(0, 0, {single(2, 0): 1.0, single(1, 1): 0.0, single(0, 2): 0.1}, 1.0, 2)
    # the same data is a valid classical state
    MomentState(
        0, 0, {single(2, 0): 1.0, single(1, 1): 0.0, single(0, 2): 0.1},
        1.0, 2, classical_mode=True,
    )


def test_monitors_arithmetic():
    h, _ = _free_field()
    state = MomentState(
        0.0, 0.0, {single(2, 0): 4.0, single(1, 1): 2.0, single(0, 2): 2.0}, 1.0, 2
    )
    energy, casimir, margin = monitors(state, h)
    assert casimir == pytest.approx(4.0)
    assert margin == pytest.approx(3.75)
    assert energy == pytest.approx(1.0)


def test_free_particle_matches_closed_form():
    h, field = _free_field()
    state0 = init_gaussian(0, 0, 1.0, 0.0, 1.0, 2)
    traj = integrate(field, state0, (0, 10), IntegratorConfig(), t_eval=np.linspace(0, 10, 201))
    s_num = np.sqrt(traj.column(("D", single(2, 0))))
    s_ref = free_particle_s(traj.times, 1.0, 0.25, 1.0)
    assert np.max(np.abs(s_num - s_ref) / s_ref) < 1e-12


def test_harmonic_breathing_period_and_monitors():
    """sigma=1 packet in a unit well: Delta(q^2)(t) = 1 - 0.75 sin^2 t."""
    pot = PolynomialPotential([0, 0, 0.5], mass=1)
    h = build_heff(pot, 2)
    field = equations_of_motion(h, build_bracket_table(2, 1))
    state0 = init_gaussian(0, 0, 1.0, 0.0, 1.0, 2)
    times = np.linspace(0, 2 * math.pi, 101)
    traj = integrate(field, state0, (0, 2 * math.pi), IntegratorConfig(), t_eval=times)
    dq2 = traj.column(("D", single(2, 0)))
    assert np.max(np.abs(dq2 - (1 - 0.75 * np.sin(times) ** 2))) < 1e-9
    assert np.max(np.abs(traj.energy - traj.energy[0])) / traj.energy[0] < 1e-10
    assert np.max(np.abs(traj.casimir - traj.casimir[0])) / traj.casimir[0] < 1e-9


def test_zero_field_keeps_state():
    h, field = _free_field()
    zero_field = MomentVectorField(
        field.layout, [MomentPolynomial.zero(1)] * len(field.layout), h
    )
    state0 = init_gaussian(0.3, -0.2, 1.1, 0.1, 1.0, 2)
    traj = integrate(zero_field, state0, (0, 5), IntegratorConfig(), t_eval=np.linspace(0, 5, 11))
    assert np.allclose(traj.ys, traj.ys[0], rtol=0, atol=0)


def test_rk4_fourth_order_convergence():
    """Halving the fixed step shrinks the closed-form error ~16x."""
    pot = PolynomialPotential([0, 0, 0.5], mass=1)
    h = build_heff(pot, 2)
    field = equations_of_motion(h, build_bracket_table(2, 1))
    state0 = init_gaussian(0, 0, 1.0, 0.0, 1.0, 2)

    def max_err(step):
        cfg = IntegratorConfig(method="rk4", step=step)
        traj = integrate(field, state0, (0, 5), cfg)
        dq2 = traj.column(("D", single(2, 0)))
        return np.max(np.abs(dq2 - (1 - 0.75 * np.sin(traj.times) ** 2)))

    e1, e2 = max_err(0.02), max_err(0.01)
    assert 10 < e1 / e2 < 24


def test_classical_mode_no_spreading():
    """A C=0 classical state keeps its width under free evolution."""
    h, field = _free_field()
    state0 = init_gaussian(0, 1.0, 1.3, 0.0, 1.0, 2, casimir=0.0, classical_mode=True)
    traj = integrate(field, state0, (0, 10), IntegratorConfig(), t_eval=np.linspace(0, 10, 51))
    s = np.sqrt(traj.column(("D", single(2, 0))))
    assert np.max(np.abs(s - s[0])) <= 1e-10
    assert np.max(np.abs(traj.margin - traj.casimir)) == 0.0


def test_quantum_admissibility_preserved():
    pot = PolynomialPotential([0, 0, 0.5, -0.05])
    h = build_heff(pot, 2)
    field = equations_of_motion(h, build_bracket_table(2, 1))
    state0 = init_gaussian(0.2, 0.5, 0.9, -0.3, 1.0, 2)
    traj = integrate(field, state0, (0, 8), IntegratorConfig(), t_eval=np.linspace(0, 8, 81))
    assert np.min(traj.margin) > -1e-10


def test_free_order_4_preserves_gaussian_closure():
    """The order-4 free system keeps Delta(q^4) = 3 Delta(q^2)^2."""
    h = build_heff(PolynomialPotential([], mass=1), 4)
    field = equations_of_motion(h, build_bracket_table(4, 1))
    state0 = init_gaussian(0, 0, 1.0, 0.0, 1.0, 4)
    traj = integrate(field, state0, (0, 5), IntegratorConfig(), t_eval=np.linspace(0, 5, 51))
    dq2 = traj.column(("D", single(2, 0)))
    dq4 = traj.column(("D", single(4, 0)))
    assert np.max(np.abs(dq4 - 3 * dq2**2)) < 1e-10


def test_cubic_order_4_hbar_terms_and_energy():
    """At order 4 the cubic coupling brings explicit hbar^2 terms into the
    equations of motion; the flow still conserves the energy exactly."""
    from fractions import Fraction

    from qmoments.exact import MomentPolynomial

    pot = PolynomialPotential([0, 0, Fraction(1, 2), Fraction(-1, 10)], mass=1)
    h = build_heff(pot, 4)
    table = build_bracket_table(4, 1)
    field = equations_of_motion(h, table)
    dp3 = field.expression(("D", single(0, 3)))
    # the constant term is (V'''/6) * (3 hbar^2/2) = -3 hbar^2/20
    assert dp3.terms[(2, ())] == MomentPolynomial.constant(
        Fraction(-3, 20), 1
    ).terms[(0, ())]
    state0 = init_gaussian(0.2, 0.4, 0.8, 0.0, 1.0, 4)
    traj = integrate(field, state0, (0, 8), IntegratorConfig(), t_eval=np.linspace(0, 8, 81))
    drift = np.max(np.abs(traj.energy - traj.energy[0])) / abs(traj.energy[0])
    assert drift < 1e-10


def test_step_budget_exhaustion():
    h, field = _free_field()
    state0 = init_gaussian(0, 0, 1.0, 0.0, 1.0, 2)
    with pytest.raises(IntegrationError) as err:
        integrate(field, state0, (0, 10), IntegratorConfig(max_steps=10))
    assert err.value.last_time is not None


def test_non_finite_blowup_reports_last_time():
    # inverted quadratic: moments blow up in finite time at machine scale
    pot = PolynomialPotential([0, 0, -8.0])
    h = build_heff(pot, 2)
    field = equations_of_motion(h, build_bracket_table(2, 1))
    state0 = init_gaussian(0.0, 0.0, 1.0, 0.0, 1.0, 2)
    with pytest.raises(IntegrationError):
        integrate(field, state0, (0, 200), IntegratorConfig(rtol=1e-6, atol=1e-9))


def test_trajectory_requires_increasing_times():
    with pytest.raises(ValueError):
        Trajectory(
            [0.0, 0.0, 1.0],
            np.zeros((3, 5)),
            (("q", 0), ("p", 0), ("D", single(2, 0)), ("D", single(1, 1)), ("D", single(0, 2))),
            1.0,
            2,
            False,
            np.zeros(3),
            np.ones(3),
        )


def test_csv_export_schema(tmp_path):
    h, field = _free_field(order=3)
    state0 = init_gaussian(0, 0, 1.0, 0.0, 1.0, 3)
    traj = integrate(field, state0, (0, 1), IntegratorConfig(), t_eval=np.linspace(0, 1, 5))
    path = tmp_path / "traj.csv"
    traj.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == (
        "t,q,p,Delta_q2,Delta_qp,Delta_p2,Delta_q3,Delta_q2p,Delta_qp2,Delta_p3,"
        "energy,casimir,margin"
    )
    assert len(lines) == 6
    assert all(len(line.split(",")) == 13 for line in lines[1:])
