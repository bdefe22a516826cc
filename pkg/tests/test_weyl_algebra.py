"""Exact operator algebra and the first-principles bracket oracle."""

import itertools
import random
from fractions import Fraction

import pytest

from qmoments import indices
from qmoments.exact import GaussianRational, MomentPolynomial
from qmoments.indices import single
from qmoments.weyl_algebra import (
    OperatorPoly,
    bracket_oracle,
    expectation,
    weyl_monomial,
    weyl_symmetrize,
)


def GR(re, im=0):
    return GaussianRational(re, im)


def test_multiply_already_ordered():
    q = OperatorPoly.position()
    p = OperatorPoly.momentum()
    assert (q * p).terms == {(0, ((1, 1),)): GR(1)}


def test_multiply_single_commutator():
    q = OperatorPoly.position()
    p = OperatorPoly.momentum()
    # (p-hat - p)(q-hat - q) = (q-hat - q)(p-hat - p) - i hbar
    assert (p * q).terms == {
        (0, ((1, 1),)): GR(1),
        (1, ((0, 0),)): GR(0, -1),
    }


def test_commutator_q2_p2():
    """[Q^2, P^2] = 2 i hbar (QP + PQ) = 4 i hbar QP + 2 hbar^2."""
    q = OperatorPoly.position()
    p = OperatorPoly.momentum()
    comm = (q * q).commutator(p * p)
    assert comm.terms == {
        (1, ((1, 1),)): GR(0, 4),
        (2, ((0, 0),)): GR(2),
    }
    # and the bracket of raw expectations follows Eq.-style normalization
    qp_sym = expectation(comm.divide_ihbar())
    assert qp_sym == MomentPolynomial.moment(single(1, 1), 4)


def test_multiply_associative_randomized():
    rng = random.Random(7)

    def random_op():
        op = OperatorPoly.zero(1)
        for _ in range(3):
            exps = ((rng.randint(0, 2), rng.randint(0, 2)),)
            coeff = GR(Fraction(rng.randint(-3, 3), rng.randint(1, 3)), rng.randint(-1, 1))
            op = op + OperatorPoly.monomial(exps, coeff)
        return op

    for _ in range(25):
        a, b, c = random_op(), random_op(), random_op()
        assert (a * b) * c == a * (b * c)


def test_weyl_symmetrize_covariance():
    # average of QP and PQ, normal ordered via the multiply oracle
    q = OperatorPoly.position()
    p = OperatorPoly.momentum()
    expected = (q * p + p * q).scale(Fraction(1, 2))
    assert weyl_symmetrize(1, 1) == expected
    assert weyl_symmetrize(1, 1).terms == {
        (0, ((1, 1),)): GR(1),
        (1, ((0, 0),)): GR(0, Fraction(-1, 2)),
    }


def test_weyl_symmetrize_commuting_factors():
    assert weyl_symmetrize(2, 0).terms == {(0, ((2, 0),)): GR(1)}
    assert weyl_symmetrize(0, 3).terms == {(0, ((0, 3),)): GR(1)}


def test_weyl_symmetrize_q2p_three_term_average():
    """The explicit three-term average of (Q^2 P) orderings."""
    q = OperatorPoly.position()
    p = OperatorPoly.momentum()
    threeterm = (q * q * p + q * p * q + p * q * q).scale(Fraction(1, 3))
    assert weyl_symmetrize(2, 1) == threeterm
    # normal form: Q^2 P - i hbar Q
    assert threeterm.terms == {
        (0, ((2, 1),)): GR(1),
        (1, ((1, 0),)): GR(0, -1),
    }


def test_weyl_leading_coefficient_is_one():
    for a in range(5):
        for b in range(5):
            assert weyl_symmetrize(a, b).terms[(0, ((a, b),))] == GR(1)


def test_expectation_single_variable():
    assert expectation(OperatorPoly.monomial(((2, 0),))) == MomentPolynomial.moment(single(2, 0))


def test_expectation_normal_qp():
    got = expectation(OperatorPoly.monomial(((1, 1),)))
    expected = MomentPolynomial.moment(single(1, 1)) + MomentPolynomial.constant(
        GR(0, Fraction(1, 2)), 1, hbar_power=1
    )
    assert got == expected


def test_expectation_weyl_round_trip():
    for a, b in [(2, 2), (3, 1), (1, 3), (4, 0)]:
        assert expectation(weyl_symmetrize(a, b)) == MomentPolynomial.moment(single(a, b))


def test_expectation_n22_frozen():
    # <N(2,2)> = Delta(q^2 p^2) + 2 i hbar Delta(qp) - hbar^2/2
    got = expectation(OperatorPoly.monomial(((2, 2),)))
    expected = MomentPolynomial(
        1,
        {
            (0, ((("D", single(2, 2)), 1),)): GR(1),
            (1, ((("D", single(1, 1)), 1),)): GR(0, 2),
            (2, ()): GR(Fraction(-1, 2)),
        },
    )
    assert got == expected


def test_expectation_hermiticity_up_to_order_8():
    for a in range(9):
        for b in range(9 - a):
            assert expectation(weyl_symmetrize(a, b)).is_real


def test_expectation_rejects_non_hermitian_when_asked():
    from qmoments.weyl_algebra import NonHermitianError

    with pytest.raises(NonHermitianError):
        expectation(OperatorPoly.monomial(((1, 1),)), require_real=True)


def test_bracket_oracle_second_order_block():
    assert bracket_oracle(single(2, 0), single(0, 2)) == MomentPolynomial.moment(single(1, 1), 4)
    assert bracket_oracle(single(2, 0), single(1, 1)) == MomentPolynomial.moment(single(2, 0), 2)
    assert bracket_oracle(single(1, 1), single(0, 2)) == MomentPolynomial.moment(single(0, 2), 2)


def test_bracket_oracle_self_bracket_vanishes():
    assert bracket_oracle(single(1, 1), single(1, 1)).is_zero


def test_bracket_oracle_basic_orthogonality():
    """q and p Poisson-commute with every central moment."""
    for basic in (single(1, 0), single(0, 1)):
        for idx in indices.iter_indices(4, 1):
            assert bracket_oracle(basic, idx).is_zero
    assert bracket_oracle(single(1, 0), single(0, 1)) == MomentPolynomial.constant(1, 1)


def test_bracket_oracle_antisymmetry_order_6():
    for m1, m2 in itertools.combinations(indices.iter_indices(6, 1), 2):
        assert bracket_oracle(m1, m2) == -bracket_oracle(m2, m1)


def test_bracket_oracle_frozen_higher_order_values():
    # {Delta(q^2 p), Delta(p^2)} = 4 Delta(q p^2)
    assert bracket_oracle(single(2, 1), single(0, 2)) == MomentPolynomial.moment(single(1, 2), 4)
    # {Delta(q^3), Delta(p^2)} = 6 Delta(q^2 p)
    assert bracket_oracle(single(3, 0), single(0, 2)) == MomentPolynomial.moment(single(2, 1), 6)
    # {Delta(q^3), Delta(p^3)} closes on products and an hbar^2 constant
    got = bracket_oracle(single(3, 0), single(0, 3))
    expected = (
        MomentPolynomial.moment(single(2, 0), -9) * MomentPolynomial.moment(single(0, 2))
        + MomentPolynomial.moment(single(2, 2), 9)
        + MomentPolynomial.constant(Fraction(-3, 2), 1, hbar_power=2)
    )
    assert got == expected


def test_bracket_oracle_two_pair_cases():
    x1sq = ((2, 0), (0, 0))
    p2sq = ((0, 0), (0, 2))
    x1p2 = ((1, 0), (0, 1))
    x2p2 = ((0, 0), (1, 1))
    x1x2 = ((1, 0), (1, 0))
    p1p2 = ((0, 1), (0, 1))
    assert bracket_oracle(x1sq, p2sq).is_zero
    assert bracket_oracle(x1p2, x2p2) == MomentPolynomial.moment(x1p2, -1)
    got = bracket_oracle(x1x2, p1p2)
    expected = MomentPolynomial.moment(((1, 1), (0, 0))) + MomentPolynomial.moment(((0, 0), (1, 1)))
    assert got == expected


def test_weyl_monomial_multi_pair_round_trip():
    idx = ((1, 1), (2, 0))
    assert expectation(weyl_monomial(idx)) == MomentPolynomial.moment(idx)


def test_oracle_coordinate_round_trip():
    """Expanding a moment into raw expectation values and re-expressing it
    through central moments is the identity (both conversion layers of the
    oracle are mutually inverse)."""
    from qmoments.weyl_algebra import _epoly_to_moments, _index_as_epoly

    for idx in indices.iter_indices(4, 1) + indices.iter_indices(3, 2):
        got = _epoly_to_moments(_index_as_epoly(idx), len(idx))
        assert got == MomentPolynomial.moment(idx)
