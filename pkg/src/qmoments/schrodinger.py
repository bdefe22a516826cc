"""Desk-scale exact quantum evolution used to validate moment dynamics.

Crank-Nicolson propagation on a uniform hard-wall grid (unconditionally
stable, norm-preserving to rounding, second-order accurate in space and
time), plus extraction of Weyl-ordered central moments from wavefunctions
through the ordering change of basis of the operator algebra.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.linalg import solve_banded

from . import indices
from .weyl_algebra import _weyl_in_normal


class ResolutionError(ValueError):
    pass


class BoundaryContactWarning(UserWarning):
    """Wavepacket support approached the hard-wall boundary."""


class AccuracyWarning(UserWarning):
    pass


class Grid:
    """Uniform spatial grid with hard-wall boundaries."""

    def __init__(self, x_min: float, x_max: float, n_points: int):
        if n_points < 64:
            raise ValueError("n_points must be at least 64")
        if x_max <= x_min:
            raise ValueError("empty grid interval")
        self.x_min = float(x_min)
        self.x_max = float(x_max)
        self.n_points = int(n_points)
        self.x = np.linspace(x_min, x_max, n_points)
        self.dx = self.x[1] - self.x[0]

    def __repr__(self):
        return f"Grid({self.x_min:g}, {self.x_max:g}, {self.n_points})"


class WaveFunction:
    """Complex amplitudes on a grid; normalized on construction."""

    def __init__(self, grid: Grid, values, hbar: float = 1.0, mass: float = 1.0):
        self.grid = grid
        self.values = np.asarray(values, dtype=complex)
        if self.values.shape != grid.x.shape:
            raise ValueError("amplitude array does not match the grid")
        self.hbar = float(hbar)
        self.mass = float(mass)

    @property
    def norm(self) -> float:
        return math.sqrt(float(np.trapezoid(np.abs(self.values) ** 2, dx=self.grid.dx)))

    def normalized(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.values / self.norm, self.hbar, self.mass)

    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def expectation_x(self) -> float:
        return float(np.trapezoid(self.grid.x * self.density(), dx=self.grid.dx))

    def apply_momentum(self, subtract: float = 0.0) -> np.ndarray:
        """(-i hbar d/dx - subtract) applied via the centered stencil."""
        return -1j * self.hbar * np.gradient(self.values, self.grid.dx, edge_order=2) - (
            subtract * self.values
        )


def gaussian_wavepacket(grid: Grid, q0: float, p0: float, sigma: float, hbar: float = 1.0, mass: float = 1.0) -> WaveFunction:
    """Normalized Gaussian with position spread Delta(q^2) = sigma^2."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if grid.dx > sigma / 8:
        raise ResolutionError(
            f"grid spacing {grid.dx:g} too coarse: need >= 8 points per sigma={sigma:g}"
        )
    x = grid.x
    psi = np.exp(-((x - q0) ** 2) / (4.0 * sigma**2) + 1j * p0 * x / hbar)
    wf = WaveFunction(grid, psi, hbar, mass)
    return wf.normalized()


def hamiltonian_apply(wf: WaveFunction, potential) -> np.ndarray:
    """H psi with the second-order accurate spatial second derivative."""
    psi = wf.values
    dx2 = wf.grid.dx**2
    lap = np.empty_like(psi)
    lap[1:-1] = psi[2:] - 2.0 * psi[1:-1] + psi[:-2]
    lap[0] = psi[1] - 2.0 * psi[0]  # hard wall: psi = 0 beyond the edge
    lap[-1] = psi[-2] - 2.0 * psi[-1]
    v = np.array([potential.value(xi) for xi in wf.grid.x])
    return -(wf.hbar**2) / (2.0 * wf.mass) * lap / dx2 + v * psi


def energy_expectation(wf: WaveFunction, potential) -> float:
    hpsi = hamiltonian_apply(wf, potential)
    val = np.trapezoid(np.conj(wf.values) * hpsi, dx=wf.grid.dx)
    return float(val.real)


def evolve(potential, psi0: WaveFunction, dt: float, steps: int, support_check: bool = True) -> WaveFunction:
    """Crank-Nicolson propagation over ``steps`` time steps.

    The scheme is the Cayley form (1 + i dt H / 2 hbar) psi' =
    (1 - i dt H / 2 hbar) psi solved with banded tridiagonal factors, so the
    norm is preserved to rounding.  The documented step heuristic warns when
    (dt |<H>| / hbar)^3 / 12 exceeds 1e-8, the target local error per step.
    Support is monitored: a wavepacket whose 5-sigma interval touches the
    walls raises a BoundaryContactWarning.
    """
    if dt <= 0 or steps < 0:
        raise ValueError("dt must be positive and steps non-negative")
    grid = psi0.grid
    hbar, mass = psi0.hbar, psi0.mass
    e0 = abs(energy_expectation(psi0, potential))
    if (dt * e0 / hbar) ** 3 / 12.0 > 1e-8:
        warnings.warn(
            f"time step dt={dt:g} exceeds the local-error heuristic for |<H>|={e0:g}",
            AccuracyWarning,
            stacklevel=2,
        )
    n = grid.n_points
    v = np.array([potential.value(xi) for xi in grid.x])
    kin = hbar**2 / (2.0 * mass * grid.dx**2)
    h_main = 2.0 * kin + v
    h_off = -kin * np.ones(n - 1)
    theta = dt / (2.0 * hbar)
    # banded storage for A = 1 + i theta H
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = 1j * theta * h_off
    ab[1, :] = 1.0 + 1j * theta * h_main
    ab[2, :-1] = 1j * theta * h_off
    b_main = 1.0 - 1j * theta * h_main
    b_off = -1j * theta * h_off

    psi = psi0.values.copy()
    check_every = max(1, steps // 64)
    for step in range(steps):
        rhs = b_main * psi
        rhs[:-1] += b_off * psi[1:]
        rhs[1:] += b_off * psi[:-1]
        psi = solve_banded((1, 1), ab, rhs)
        if support_check and (step % check_every == check_every - 1):
            _check_support(grid, psi)
    out = WaveFunction(grid, psi, hbar, mass)
    if support_check:
        _check_support(grid, psi)
    return out


def _check_support(grid: Grid, psi: np.ndarray):
    dens = np.abs(psi) ** 2
    total = np.trapezoid(dens, dx=grid.dx)
    mean = np.trapezoid(grid.x * dens, dx=grid.dx) / total
    var = np.trapezoid((grid.x - mean) ** 2 * dens, dx=grid.dx) / total
    sigma = math.sqrt(max(var, 0.0))
    if mean - 5 * sigma < grid.x_min or mean + 5 * sigma > grid.x_max:
        warnings.warn(
            "wavepacket support within 5 sigma of a hard wall", BoundaryContactWarning,
            stacklevel=3,
        )


def moments_from_wavefunction(wf: WaveFunction, order: int, quality_tol: float = 1e-4):
    """Weyl-ordered central moments up to ``order`` extracted from a state.

    Normal-ordered centered expectations <(q-q0)^j (p-p0)^k> are computed by
    repeated application of the centered momentum stencil; the ordering
    change of basis then yields the Weyl moments.  The largest residual
    imaginary part is returned as a quality metric (and warned about above
    ``quality_tol``).  Accuracy degrades with repeated differencing; orders
    above 4 are rejected.

    Returns (MomentState, quality).
    """
    from .dynamics import MomentState

    if order > 4:
        raise ValueError("moment extraction is limited to order <= 4")
    grid, dx = wf.grid, wf.grid.dx
    psi = wf.values
    dens = np.abs(psi) ** 2
    norm = np.trapezoid(dens, dx=dx)
    q0 = float(np.trapezoid(grid.x * dens, dx=dx) / norm)
    pfield = wf.apply_momentum()
    p0 = float(np.trapezoid(np.conj(psi) * pfield, dx=dx).real / norm)

    # chi_k = (P - p0)^k psi
    chi = [psi]
    for _ in range(order):
        prev = WaveFunction(grid, chi[-1], wf.hbar, wf.mass)
        chi.append(prev.apply_momentum(subtract=p0))
    xc = grid.x - q0
    raw = {}
    for j in range(order + 1):
        for k in range(order + 1 - j):
            integrand = np.conj(psi) * xc**j * chi[k]
            raw[(j, k)] = complex(np.trapezoid(integrand, dx=dx) / norm)

    quality = 0.0
    moments = {}
    for idx in indices.iter_indices(order, 1):
        a, b = idx[0]
        total = 0j
        for (h, (al, be)), coeff in _weyl_in_normal(a, b):
            total += coeff.as_complex() * wf.hbar**h * raw[(al, be)]
        quality = max(quality, abs(total.imag))
        moments[idx] = total.real
    if quality > quality_tol:
        warnings.warn(
            f"moment extraction quality {quality:.3g} above {quality_tol:.3g}",
            AccuracyWarning,
            stacklevel=2,
        )
    state = MomentState(q0, p0, moments, wf.hbar, order, validate=False)
    return state, quality
