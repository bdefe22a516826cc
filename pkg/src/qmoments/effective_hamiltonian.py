"""Effective Hamiltonian <H> over basic variables and central moments.

For H = p^2/2m + V(q) in symmetric ordering the expectation value expands
into the classical energy plus moment couplings: Delta(p^2) couples with
1/(2m) and Delta(q^a) with V^(a)(q)/a!.  For polynomial potentials the
expansion is exact once the truncation order reaches the degree.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import factorial

from . import indices
from .exact import MomentPolynomial
from .moment_algebra import BracketTable, poisson_bracket


class PolynomialPotential:
    """V(q) = sum c_k q^k with exact coefficient bookkeeping."""

    def __init__(self, coefficients, mass=1):
        self.coefficients = [Fraction(c) for c in coefficients]
        while self.coefficients and not self.coefficients[-1]:
            self.coefficients.pop()
        self.mass = Fraction(mass)
        if self.mass <= 0:
            raise ValueError("mass must be positive")

    @property
    def degree(self) -> int:
        return max(len(self.coefficients) - 1, 0)

    def derivative_coefficients(self, k: int) -> list:
        coeffs = self.coefficients
        for _ in range(k):
            coeffs = [i * c for i, c in enumerate(coeffs)][1:]
        return coeffs

    def value(self, q: float, derivative: int = 0) -> float:
        coeffs = self.derivative_coefficients(derivative)
        acc = 0.0
        for c in reversed(coeffs):
            acc = acc * q + float(c)
        return acc

    def as_polynomial(self, derivative: int = 0, npairs: int = 1) -> MomentPolynomial:
        poly = MomentPolynomial.zero(npairs)
        q = MomentPolynomial.q(0, npairs)
        for k, c in enumerate(self.derivative_coefficients(derivative)):
            if c:
                poly = poly + (q**k).scale(c)
        return poly

    def __add__(self, other: "PolynomialPotential") -> "PolynomialPotential":
        if self.mass != other.mass:
            raise ValueError("potentials with different masses")
        n = max(len(self.coefficients), len(other.coefficients))
        a = self.coefficients + [Fraction(0)] * (n - len(self.coefficients))
        b = other.coefficients + [Fraction(0)] * (n - len(other.coefficients))
        return PolynomialPotential([x + y for x, y in zip(a, b)], self.mass)

    def __repr__(self):
        return f"PolynomialPotential({[str(c) for c in self.coefficients]}, mass={self.mass})"


class CallablePotential:
    """Potential given by a derivative callback f(q, k) -> d^k V/dq^k.

    Supported by pointwise evaluation (energies, adiabatic formulas) but not
    by symbolic equation generation; consistency of the callback is checked
    against finite differences in the tests only.
    """

    def __init__(self, derivatives, mass=1, degree=None):
        self._derivatives = derivatives
        self.mass = Fraction(mass)
        self.degree = degree

    def value(self, q: float, derivative: int = 0) -> float:
        return float(self._derivatives(q, derivative))


def finite_difference_derivative(pot, q: float, k: int, h: float = 1e-4) -> float:
    """Central-difference d^k V/dq^k used to validate derivative callbacks."""
    if k == 0:
        return pot.value(q)
    lower = lambda x: finite_difference_derivative(pot, x, k - 1, h)
    return (lower(q + h) - lower(q - h)) / (2 * h)


class EffectiveHamiltonian:
    """Classical part plus moment couplings at a truncation order."""

    def __init__(self, potential, truncation_order: int):
        if truncation_order < 2:
            raise ValueError("truncation order must be >= 2")
        self.potential = potential
        self.truncation_order = truncation_order

    @property
    def mass(self):
        return self.potential.mass

    def coupling_orders(self):
        """Moment indices with nonzero coupling coefficients."""
        out = [indices.single(0, 2)]
        degree = getattr(self.potential, "degree", None)
        top = self.truncation_order if degree is None else min(self.truncation_order, degree)
        for a in range(2, top + 1):
            out.append(indices.single(a, 0))
        return out

    def coupling_value(self, idx, q: float) -> float:
        """Coefficient of Delta(idx) at position q: (1/a!b!) d^{a+b}H/dq^a dp^b."""
        (a, b) = idx[0]
        if (a, b) == (0, 2):
            return 0.5 / float(self.mass)
        if b == 0 and a >= 2:
            return self.potential.value(q, a) / factorial(a)
        return 0.0

    def classical(self, q: float, p: float) -> float:
        return p * p / (2.0 * float(self.mass)) + self.potential.value(q)

    def evaluate(self, state) -> float:
        """Energy of a MomentState; exact for quadratic H at order 2."""
        if state.order < self.truncation_order:
            raise ValueError(
                "state order %d below Hamiltonian truncation %d"
                % (state.order, self.truncation_order)
            )
        total = self.classical(state.q, state.p)
        for idx in self.coupling_orders():
            if indices.order(idx) > self.truncation_order:
                continue
            try:
                value = state.moments[idx]
            except KeyError:
                raise ValueError("state lacks moment %s" % indices.pretty(idx))
            total += self.coupling_value(idx, state.q) * value
        return total

    @lru_cache(maxsize=4)
    def moment_polynomial(self, npairs: int = 1) -> MomentPolynomial:
        """H_eff as an exact polynomial in q, p and the moment symbols."""
        if not isinstance(self.potential, PolynomialPotential):
            raise TypeError("symbolic form requires a polynomial potential")
        p = MomentPolynomial.p(0, npairs)
        heff = (p * p).scale(Fraction(1, 2) / self.mass)
        heff = heff + self.potential.as_polynomial(0, npairs)
        heff = heff + MomentPolynomial.moment(indices.single(0, 2)).scale(
            Fraction(1, 2) / self.mass
        )
        top = min(self.truncation_order, self.potential.degree)
        for a in range(2, top + 1):
            coupling = self.potential.as_polynomial(a, npairs).scale(
                Fraction(1, factorial(a))
            )
            heff = heff + coupling * MomentPolynomial.moment(indices.single(a, 0))
        return heff


def build_heff(potential, truncation_order: int) -> EffectiveHamiltonian:
    return EffectiveHamiltonian(potential, truncation_order)


class MomentVectorField:
    """Hamiltonian vector field on (q, p, moments) at a truncation order."""

    def __init__(self, layout, exprs, hamiltonian):
        self.layout = tuple(layout)
        self.exprs = tuple(exprs)
        self.hamiltonian = hamiltonian
        self.positions = {var: i for i, var in enumerate(self.layout)}
        self._compiled = {}

    @property
    def dimension(self) -> int:
        return len(self.layout)

    def expression(self, var) -> MomentPolynomial:
        return self.exprs[self.positions[var]]

    def compiled(self, hbar: float):
        """rhs(t, y) callable generated once per hbar value."""
        key = float(hbar)
        fn = self._compiled.get(key)
        if fn is None:
            body = ",\n        ".join(
                expr.as_code(self.positions, key) for expr in self.exprs
            )
            src = f"def rhs(t, y):\n    return [\n        {body},\n    ]\n"
            ns = {}
            exec(src, {"__builtins__": {}}, ns)
            fn = ns["rhs"]
            self._compiled[key] = fn
        return fn

    def energy_function(self, hbar: float):
        expr = self.hamiltonian.moment_polynomial()
        code = expr.as_code(self.positions, float(hbar))
        ns = {}
        exec(f"def ham(y):\n    return {code}\n", {"__builtins__": {}}, ns)
        return ns["ham"]


def equations_of_motion(
    h: EffectiveHamiltonian, table: BracketTable
) -> MomentVectorField:
    """Xdot = {X, H_eff} for every state coordinate, closed by truncation.

    The q and p equations pick up moment back-reaction through the
    (q, p)-dependence of the coupling coefficients; bracket results are
    filtered by the semiclassical truncation rule so the system closes.
    """
    if table.truncation_order < h.truncation_order:
        raise ValueError("bracket table order below Hamiltonian order")
    heff = h.moment_polynomial(table.npairs)
    layout = [("q", 0), ("p", 0)]
    layout += [("D", idx) for idx in indices.iter_indices(h.truncation_order, 1)]
    exprs = []
    for var in layout:
        if var[0] == "D":
            f = MomentPolynomial.moment(var[1])
        elif var[0] == "q":
            f = MomentPolynomial.q(var[1], table.npairs)
        else:
            f = MomentPolynomial.p(var[1], table.npairs)
        xdot = poisson_bracket(f, heff, table)
        exprs.append(xdot.truncate(h.truncation_order))
    return MomentVectorField(layout, exprs, h)
