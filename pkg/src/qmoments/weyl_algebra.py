"""Exact operator algebra for centered canonical pairs.

Operators are stored in normal order (every position factor left of every
momentum factor, per canonical pair), which is the unique rewriting terminus
of the commutation relation (p-hat - p)(q-hat - q) = (q-hat - q)(p-hat - p)
- i*hbar.  Weyl (symmetric) ordering is a derived basis reached through a
cached triangular change-of-basis table; expectation values of Weyl-ordered
centered monomials are the moment symbols Delta(q^a p^b).

The module also provides ``bracket_oracle``, a first-principles evaluation
of the Poisson bracket of two moments: each moment is expanded into raw
expectation values of operator monomials, the defining bracket
{<A>, <B>} = <[A, B]>/(i*hbar) is applied pairwise through the symbolic
commutator together with the Leibniz rule, and the result is re-expressed
through Weyl-ordered central moments.  Every closed-form bracket in the
package is validated against this oracle.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

from . import indices
from .exact import (
    GR_ONE,
    GaussianRational,
    MomentPolynomial,
    _coerce,
    _merge_vars,
)


class NonHermitianError(ValueError):
    """Raised when a Hermitian expectation retains an imaginary part."""


class OperatorPoly:
    """Normal-ordered polynomial in centered canonical operators.

    Terms map ``(hbar_power, exps)`` to a GaussianRational where ``exps``
    holds one ``(a, b)`` exponent pair per canonical pair.  Different pairs
    commute; the zero polynomial has no terms.
    """

    __slots__ = ("npairs", "terms")

    def __init__(self, npairs: int = 1, terms: dict | None = None):
        self.npairs = npairs
        self.terms = terms if terms is not None else {}

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, npairs: int = 1):
        return cls(npairs, {})

    @classmethod
    def identity(cls, npairs: int = 1):
        zero_exps = tuple((0, 0) for _ in range(npairs))
        return cls(npairs, {(0, zero_exps): GR_ONE})

    @classmethod
    def monomial(cls, exps, coeff=1, hbar_power: int = 0):
        coeff = _coerce(coeff)
        if coeff.is_zero:
            return cls(len(exps), {})
        return cls(len(exps), {(hbar_power, tuple(exps)): coeff})

    @classmethod
    def position(cls, pair: int = 0, npairs: int = 1):
        exps = tuple((1, 0) if i == pair else (0, 0) for i in range(npairs))
        return cls.monomial(exps)

    @classmethod
    def momentum(cls, pair: int = 0, npairs: int = 1):
        exps = tuple((0, 1) if i == pair else (0, 0) for i in range(npairs))
        return cls.monomial(exps)

    # -- linear structure ---------------------------------------------------

    def _check(self, other):
        if self.npairs != other.npairs:
            raise ValueError("mixing operators over different pair counts")

    def __add__(self, other):
        self._check(other)
        terms = dict(self.terms)
        for key, c in other.terms.items():
            acc = terms.get(key)
            s = c if acc is None else acc + c
            if s.is_zero:
                terms.pop(key, None)
            else:
                terms[key] = s
        return OperatorPoly(self.npairs, terms)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return OperatorPoly(self.npairs, {k: -c for k, c in self.terms.items()})

    def scale(self, factor):
        factor = _coerce(factor)
        if factor.is_zero:
            return OperatorPoly.zero(self.npairs)
        return OperatorPoly(
            self.npairs, {k: c * factor for k, c in self.terms.items()}
        )

    # -- operator product ---------------------------------------------------

    def __mul__(self, other):
        """Associative product; reordering applies the pairwise commutator
        exhaustively so the result is again in canonical normal order."""
        self._check(other)
        terms = {}
        for (h1, e1), c1 in self.terms.items():
            for (h2, e2), c2 in other.terms.items():
                base = c1 * c2
                for extra_h, exps, factor in _normal_products(e1, e2):
                    key = (h1 + h2 + extra_h, exps)
                    c = base * factor
                    acc = terms.get(key)
                    s = c if acc is None else acc + c
                    if s.is_zero:
                        terms.pop(key, None)
                    else:
                        terms[key] = s
        return OperatorPoly(self.npairs, terms)

    def commutator(self, other) -> "OperatorPoly":
        return self * other - other * self

    def divide_ihbar(self) -> "OperatorPoly":
        """Exact division by i*hbar; every term must carry hbar."""
        terms = {}
        for (h, exps), c in self.terms.items():
            if h < 1:
                raise ValueError("term without hbar cannot be divided by i*hbar")
            terms[(h - 1, exps)] = c.mul_ipow(3)
        return OperatorPoly(self.npairs, terms)

    # -- inspection ----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(a + b for a, b in exps) for _, exps in self.terms)

    def __eq__(self, other):
        if not isinstance(other, OperatorPoly):
            return NotImplemented
        return self.npairs == other.npairs and self.terms == other.terms

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for key in sorted(self.terms):
            h, exps = key
            c = self.terms[key]
            factors = [f"({c})"]
            if h:
                factors.append("hbar" if h == 1 else f"hbar^{h}")
            for i, (a, b) in enumerate(exps):
                tag = "" if self.npairs == 1 else str(i + 1)
                if a:
                    factors.append(f"Q{tag}" + (f"^{a}" if a > 1 else ""))
                if b:
                    factors.append(f"P{tag}" + (f"^{b}" if b > 1 else ""))
            bits.append("*".join(factors))
        return " + ".join(bits)


@lru_cache(maxsize=None)
def _pair_product(b1: int, a2: int):
    """Reordering table for P^b1 * Q^a2 within one pair.

    Returns tuples (k, coeff) meaning a contribution of
    coeff * (-i*hbar)^k with k position and momentum exponents removed.
    The coefficient includes the (-i)^k phase; hbar_power equals k.
    """
    out = []
    for k in range(min(b1, a2) + 1):
        count = comb(b1, k) * comb(a2, k) * factorial(k)
        out.append((k, GaussianRational(count).mul_ipow(3 * k)))
    return tuple(out)


def _normal_products(e1, e2):
    """All normal-ordered contributions of a product of two monomials."""
    per_pair = []
    for (a1, b1), (a2, b2) in zip(e1, e2):
        opts = [
            (k, (a1 + a2 - k, b1 + b2 - k), c)
            for k, c in _pair_product(b1, a2)
        ]
        per_pair.append(opts)
    for combo in itertools.product(*per_pair):
        h = sum(k for k, _, _ in combo)
        exps = tuple(e for _, e, _ in combo)
        factor = GR_ONE
        for _, _, c in combo:
            factor = factor * c
        yield h, exps, factor


# ---------------------------------------------------------------------------
# Weyl symmetrization and the ordering change of basis
# ---------------------------------------------------------------------------


def _distinct_words(a: int, b: int):
    """Distinct arrangements of a 'q's and b 'p's."""
    if a == 0:
        yield ("p",) * b
        return
    if b == 0:
        yield ("q",) * a
        return
    for word in _distinct_words(a - 1, b):
        yield ("q",) + word
    for word in _distinct_words(a, b - 1):
        yield ("p",) + word


@lru_cache(maxsize=None)
def weyl_symmetrize(a: int, b: int) -> OperatorPoly:
    """Average of all (a+b)! orderings of (q-hat-q)^a (p-hat-p)^b.

    Computed over the distinct word arrangements with multiplicity weights
    (equal words contribute identical summands), then normal-ordered.  The
    leading monomial (a, b) always carries coefficient 1.
    """
    if a < 0 or b < 0:
        raise ValueError("exponents must be non-negative")
    q = OperatorPoly.position()
    p = OperatorPoly.momentum()
    acc = OperatorPoly.zero(1)
    for word in _distinct_words(a, b):
        prod = OperatorPoly.identity(1)
        for letter in word:
            prod = prod * (q if letter == "q" else p)
        acc = acc + prod
    return acc.scale(Fraction(1, comb(a + b, a)))


@lru_cache(maxsize=None)
def weyl_monomial(idx) -> OperatorPoly:
    """Weyl-ordered centered monomial for a multi-pair moment index."""
    npairs = len(idx)
    result = OperatorPoly.identity(npairs)
    for pair, (a, b) in enumerate(idx):
        if a == 0 and b == 0:
            continue
        embedded = OperatorPoly(
            npairs,
            {
                (h, _embed(exps[0], pair, npairs)): c
                for (h, exps), c in weyl_symmetrize(a, b).terms.items()
            },
        )
        result = result * embedded
    return result


def _embed(pair_exps, pair, npairs):
    return tuple(
        pair_exps if i == pair else (0, 0) for i in range(npairs)
    )


@lru_cache(maxsize=None)
def _weyl_in_normal(a: int, b: int):
    """W(a,b) = sum of coeff * hbar^h * N(a-k, b-k), as a tuple of items."""
    return tuple(
        ((h, exps[0]), c)
        for (h, exps), c in sorted(weyl_symmetrize(a, b).terms.items())
    )


@lru_cache(maxsize=None)
def _normal_in_weyl(a: int, b: int):
    """Inverse change of basis: N(a,b) as combination of Weyl monomials.

    Triangular inversion of _weyl_in_normal; returns tuple of
    ((hbar_power, (alpha, beta)), coeff) items.
    """
    acc = {(0, (a, b)): GR_ONE}
    for (h, (al, be)), c in _weyl_in_normal(a, b):
        if (al, be) == (a, b):
            continue
        for (h2, target), c2 in _normal_in_weyl(al, be):
            key = (h + h2, target)
            add = -(c * c2)
            cur = acc.get(key)
            s = add if cur is None else cur + add
            if s.is_zero:
                acc.pop(key, None)
            else:
                acc[key] = s
    return tuple(sorted(acc.items()))


def expectation(op: OperatorPoly, require_real: bool = False) -> MomentPolynomial:
    """Expectation value of a normal-ordered centered operator polynomial.

    Each centered monomial is rewritten in the Weyl basis and the Weyl
    monomial (a, b) is mapped to Delta(q^a p^b); order-one moments vanish
    and the order-zero moment is the constant 1.  With ``require_real`` a
    residual imaginary coefficient reports a non-Hermitian input.
    """
    result = MomentPolynomial.zero(op.npairs)
    for (h, exps), c in op.terms.items():
        conversions = [_normal_in_weyl(a, b) for a, b in exps]
        for combo in itertools.product(*conversions):
            coeff = c
            total_h = h
            widx = []
            for (h_i, pair_weyl), c_i in combo:
                coeff = coeff * c_i
                total_h += h_i
                widx.append(pair_weyl)
            mono = MomentPolynomial.moment(tuple(widx)).scale(coeff)
            if not mono.is_zero:
                shifted = MomentPolynomial(
                    op.npairs,
                    {(hk + total_h, v): cc for (hk, v), cc in mono.terms.items()},
                )
                result = result + shifted
    if require_real and not result.is_real:
        raise NonHermitianError(
            "expectation of a non-Hermitian operator: %r" % result.imag_part()
        )
    return result


# ---------------------------------------------------------------------------
# First-principles bracket oracle
# ---------------------------------------------------------------------------
#
# State-space coordinates for the oracle are the raw expectation values
# E[alpha] = <prod_i q_i^{a_i} p_i^{b_i}> of normal-ordered, uncentered
# monomials (alpha is an exps tuple).  A central moment is a polynomial in
# these coordinates; brackets descend from <[A,B]>/(i*hbar) on the
# coordinates plus the Leibniz rule.


class _EPoly:
    """Polynomial in raw expectation values with hbar-graded coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms = terms if terms is not None else {}

    @classmethod
    def constant(cls, c, hbar_power: int = 0):
        c = _coerce(c)
        if c.is_zero:
            return cls({})
        return cls({(hbar_power, ()): c})

    @classmethod
    def variable(cls, alpha, coeff=GR_ONE, hbar_power: int = 0):
        return cls({(hbar_power, ((alpha, 1),)): coeff})

    def __add__(self, other):
        terms = dict(self.terms)
        for key, c in other.terms.items():
            acc = terms.get(key)
            s = c if acc is None else acc + c
            if s.is_zero:
                terms.pop(key, None)
            else:
                terms[key] = s
        return _EPoly(terms)

    def __mul__(self, other):
        terms = {}
        for (h1, v1), c1 in self.terms.items():
            for (h2, v2), c2 in other.terms.items():
                key = (h1 + h2, _merge_vars(v1, v2))
                c = c1 * c2
                acc = terms.get(key)
                s = c if acc is None else acc + c
                if s.is_zero:
                    terms.pop(key, None)
                else:
                    terms[key] = s
        return _EPoly(terms)

    def scale(self, factor):
        factor = _coerce(factor)
        if factor.is_zero:
            return _EPoly({})
        return _EPoly({k: c * factor for k, c in self.terms.items()})

    def diff(self, alpha):
        terms = {}
        for (h, vars_), c in self.terms.items():
            for i, (v, power) in enumerate(vars_):
                if v == alpha:
                    if power == 1:
                        new_vars = vars_[:i] + vars_[i + 1 :]
                    else:
                        new_vars = vars_[:i] + ((v, power - 1),) + vars_[i + 1 :]
                    key = (h, new_vars)
                    add = c * power
                    acc = terms.get(key)
                    s = add if acc is None else acc + add
                    if s.is_zero:
                        terms.pop(key, None)
                    else:
                        terms[key] = s
                    break
        return _EPoly(terms)

    def variables(self):
        out = set()
        for (_h, vars_) in self.terms:
            for v, _ in vars_:
                out.add(v)
        return out

    @property
    def is_zero(self):
        return not self.terms


def _is_trivial(alpha) -> bool:
    return all(a == 0 and b == 0 for a, b in alpha)


@lru_cache(maxsize=None)
def _uncentered_expectation_epoly(idx):
    """<W(idx)> expanded in raw expectation values and powers of q, p.

    The centered factors are expanded binomially; the scalars q, p are the
    raw first-order expectation values themselves, so the result is a pure
    polynomial in the E-coordinates.
    """
    npairs = len(idx)
    result = _EPoly({})
    for (h, exps), c in weyl_monomial(idx).terms.items():
        per_pair = []
        for pair, (al, be) in enumerate(exps):
            opts = []
            for j in range(al + 1):
                for k in range(be + 1):
                    coeff = GaussianRational(
                        comb(al, j) * comb(be, k) * (-1) ** (al - j + be - k)
                    )
                    opts.append((pair, j, k, al - j, be - k, coeff))
            per_pair.append(opts)
        for combo in itertools.product(*per_pair):
            coeff = c
            raw = [None] * npairs
            scal = []
            for pair, j, k, qpow, ppow, c_i in combo:
                coeff = coeff * c_i
                raw[pair] = (j, k)
                if qpow:
                    scal.append((_basic_alpha(pair, npairs, "q"), qpow))
                if ppow:
                    scal.append((_basic_alpha(pair, npairs, "p"), ppow))
            raw_alpha = tuple(raw)
            vars_ = {}
            for v, power in scal:
                vars_[v] = vars_.get(v, 0) + power
            if not _is_trivial(raw_alpha):
                vars_[raw_alpha] = vars_.get(raw_alpha, 0) + 1
            term = _EPoly({(h, tuple(sorted(vars_.items()))): coeff})
            result = result + term
    return result


def _basic_alpha(pair, npairs, kind):
    return tuple(
        ((1, 0) if kind == "q" else (0, 1)) if i == pair else (0, 0)
        for i in range(npairs)
    )


@lru_cache(maxsize=None)
def _epoly_pair_bracket(x, y):
    """{E[x], E[y]} = <[T_x, T_y]>/(i*hbar) as a linear _EPoly."""
    tx = OperatorPoly.monomial(x)
    ty = OperatorPoly.monomial(y)
    comm = tx.commutator(ty)
    if comm.is_zero:
        return _EPoly({})
    comm = comm.divide_ihbar()
    result = _EPoly({})
    for (h, exps), c in comm.terms.items():
        if _is_trivial(exps):
            result = result + _EPoly.constant(c, h)
        else:
            result = result + _EPoly.variable(exps, c, h)
    return result


def _epoly_bracket(f: _EPoly, g: _EPoly) -> _EPoly:
    result = _EPoly({})
    fvars = sorted(f.variables())
    gvars = sorted(g.variables())
    partials_f = {x: f.diff(x) for x in fvars}
    partials_g = {y: g.diff(y) for y in gvars}
    for x in fvars:
        fx = partials_f[x]
        if fx.is_zero:
            continue
        for y in gvars:
            if x == y:
                continue
            pi = _pair_bracket_canonical(x, y)
            if pi.is_zero:
                continue
            gy = partials_g[y]
            if gy.is_zero:
                continue
            result = result + fx * gy * pi
    return result


def _pair_bracket_canonical(x, y):
    if x <= y:
        return _epoly_pair_bracket(x, y)
    return _epoly_pair_bracket(y, x).scale(GaussianRational(-1))


@lru_cache(maxsize=None)
def _evar_as_moments(alpha) -> MomentPolynomial:
    """Raw expectation E[alpha] rewritten in q, p and central moments."""
    npairs = len(alpha)
    result = MomentPolynomial.zero(npairs)
    per_pair = []
    for pair, (j, k) in enumerate(alpha):
        opts = []
        for al in range(j + 1):
            for be in range(k + 1):
                coeff = GaussianRational(comb(j, al) * comb(k, be))
                opts.append((pair, al, be, j - al, k - be, coeff))
        per_pair.append(opts)
    for combo in itertools.product(*per_pair):
        coeff = GR_ONE
        centered = []
        qp_vars = {}
        for pair, al, be, qpow, ppow, c_i in combo:
            coeff = coeff * c_i
            centered.append((al, be))
            if qpow:
                qp_vars[("q", pair)] = qpow
            if ppow:
                qp_vars[("p", pair)] = ppow
        conversions = [_normal_in_weyl(al, be) for al, be in centered]
        for conv in itertools.product(*conversions):
            c2 = coeff
            total_h = 0
            widx = []
            for (h_i, pair_weyl), c_i in conv:
                c2 = c2 * c_i
                total_h += h_i
                widx.append(pair_weyl)
            mono = MomentPolynomial.moment(tuple(widx)).scale(c2)
            if mono.is_zero:
                continue
            shifted_terms = {}
            for (hk, v), cc in mono.terms.items():
                key = (hk + total_h, _merge_vars(v, tuple(sorted(qp_vars.items()))))
                acc = shifted_terms.get(key)
                s = cc if acc is None else acc + cc
                if s.is_zero:
                    shifted_terms.pop(key, None)
                else:
                    shifted_terms[key] = s
            result = result + MomentPolynomial(npairs, shifted_terms)
    return result


def _epoly_to_moments(e: _EPoly, npairs: int) -> MomentPolynomial:
    result = MomentPolynomial.zero(npairs)
    for (h, vars_), c in e.terms.items():
        term = MomentPolynomial.constant(c, npairs, hbar_power=h)
        for alpha, power in vars_:
            sub = _evar_as_moments(alpha)
            for _ in range(power):
                term = term * sub
        result = result + term
    return result


def _index_as_epoly(idx) -> _EPoly:
    n = indices.order(idx)
    if n == 0:
        return _EPoly.constant(GR_ONE)
    if n == 1:
        return _EPoly.variable(idx)
    return _uncentered_expectation_epoly(idx)


@lru_cache(maxsize=None)
def bracket_oracle(m1, m2) -> MomentPolynomial:
    """Poisson bracket of two moments, from first principles.

    ``m1`` and ``m2`` are moment indices of order >= 2, or order-1 indices
    standing for the basic expectation values q and p.  The result is exact;
    for genuine moments it is real and independent of q, p (central moments
    are Poisson orthogonal to the basic variables).
    """
    npairs = len(m1)
    if len(m2) != npairs:
        raise ValueError("moment indices live on different pair counts")
    f = _index_as_epoly(m1)
    g = _index_as_epoly(m2)
    raw = _epoly_bracket(f, g)
    result = _epoly_to_moments(raw, npairs)
    if indices.order(m1) >= 2 and indices.order(m2) >= 2:
        if not result.is_real:
            raise AssertionError(
                "bracket oracle produced an imaginary part for %s, %s"
                % (indices.pretty(m1), indices.pretty(m2))
            )
        if result.uses_basic():
            raise AssertionError(
                "bracket oracle produced q/p dependence for %s, %s"
                % (indices.pretty(m1), indices.pretty(m2))
            )
    return result
