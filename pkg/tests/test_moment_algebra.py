"""Closed-form brackets, tables and the Leibniz-extended Poisson bracket."""

import random
import warnings
from fractions import Fraction

import pytest

from qmoments import indices
from qmoments.exact import MomentPolynomial
from qmoments.indices import single
from qmoments.moment_algebra import (
    MomentAlgebraError,
    build_bracket_table,
    closed_form_bracket,
    kcoeff,
    leibniz_bracket,
    operator_bracket,
    poisson_bracket,
)
from qmoments.weyl_algebra import bracket_oracle

D = MomentPolynomial.moment


def test_kcoeff_values():
    assert kcoeff(1, 1, 1, 1, 1) == 0
    assert kcoeff(1, 2, 0, 0, 2) == -4
    assert kcoeff(2, 2, 0, 0, 2) == 2


def test_kcoeff_rejects_out_of_range():
    with pytest.raises(MomentAlgebraError):
        kcoeff(0, 2, 0, 0, 2)
    with pytest.raises(MomentAlgebraError):
        kcoeff(3, 2, 0, 0, 2)


def test_closed_form_second_order_block():
    assert closed_form_bracket(single(2, 0), single(0, 2)) == D(single(1, 1), 4)
    assert closed_form_bracket(single(1, 1), single(0, 2)) == D(single(0, 2), 2)
    assert closed_form_bracket(single(2, 0), single(1, 1)) == D(single(2, 0), 2)


def test_closed_form_matches_oracle_with_bilinear_terms():
    got = closed_form_bracket(single(2, 1), single(1, 2), check=False)
    assert got == bracket_oracle(single(2, 1), single(1, 2))
    # bilinear products survive here:
    expected = (
        D(single(2, 0)) * D(single(0, 2))
        + D(single(1, 1), -4) * D(single(1, 1))
        + D(single(2, 2), 3)
        + MomentPolynomial.constant(Fraction(1, 2), 1, hbar_power=2)
    )
    assert got == expected


def test_closed_form_oracle_equivalence_order_5():
    for m1, m2 in indices.index_pairs(5, 1):
        assert closed_form_bracket(m1, m2, check=False) == bracket_oracle(m1, m2)


def test_closed_form_requires_single_pair_moments():
    with pytest.raises(MomentAlgebraError):
        closed_form_bracket(((2, 0), (0, 0)), ((0, 0), (0, 2)))
    with pytest.raises(MomentAlgebraError):
        closed_form_bracket(single(1, 0), single(0, 2))


def test_operator_bracket_equals_oracle_two_pairs_order_3():
    for m1, m2 in indices.index_pairs(3, 2):
        assert operator_bracket(m1, m2) == bracket_oracle(m1, m2)


def test_validated_bracket_emits_no_warning():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        build_bracket_table.cache_clear()
        build_bracket_table(3, 1, validate=True)


def test_convention_mismatch_warns_and_falls_back(monkeypatch):
    """A closed form that disagrees with the oracle is reported and the
    oracle value is used instead."""
    from qmoments import moment_algebra as ma
    from qmoments.moment_algebra import ConventionMismatchWarning, validated_bracket

    ma._reconciled.cache_clear()
    monkeypatch.setattr(
        ma, "_closed_form_raw", lambda m1, m2: MomentPolynomial.zero(1)
    )
    try:
        with pytest.warns(ConventionMismatchWarning):
            got = validated_bracket(single(2, 0), single(0, 2))
        assert got == bracket_oracle(single(2, 0), single(0, 2))
    finally:
        ma._reconciled.cache_clear()


def test_table_n2_single_pair_contents():
    table = build_bracket_table(2, 1)
    assert len(table.entries) == 3
    assert table.lookup(single(2, 0), single(0, 2)) == D(single(1, 1), 4)
    assert table.lookup(single(0, 2), single(2, 0)) == D(single(1, 1), -4)
    assert table.lookup(single(1, 1), single(1, 1)).is_zero
    assert all(table.validated.values())


def test_table_n2_two_pairs_is_ten_moment_system():
    table = build_bracket_table(2, 2)
    assert len(table.moment_indices) == 10
    assert len(table.entries) == 45
    x1x2 = ((1, 0), (1, 0))
    p1p2 = ((0, 1), (0, 1))
    assert table.lookup(x1x2, p1p2) == bracket_oracle(x1x2, p1p2)


def test_table_n3_closure_under_truncation():
    """Entries only keep monomials whose hbar order fits the truncation."""
    table = build_bracket_table(3, 1)
    for poly in table.entries.values():
        for key in poly.terms:
            assert poly.hbar_order_doubled(key) <= 3
            for v, _ in key[1]:
                if v[0] == "D":
                    assert indices.order(v[1]) <= 3
    # the cubic-cubic bracket is entirely above the filter
    assert table.lookup(single(2, 1), single(1, 2)).is_zero


def test_truncation_consistency_n3_vs_n2():
    t3 = build_bracket_table(3, 1)
    t2 = build_bracket_table(2, 1)
    for (m1, m2), poly in t2.entries.items():
        assert t3.lookup(m1, m2).truncate(2) == poly


def test_table_resource_guard():
    with pytest.raises(MomentAlgebraError):
        build_bracket_table(40, 3)


def test_table_missing_entry_reports_moment():
    table = build_bracket_table(2, 1)
    with pytest.raises(MomentAlgebraError, match=r"Delta\(q\^3\)"):
        table.lookup(single(3, 0), single(0, 2))


def test_poisson_bracket_basic_variables():
    table = build_bracket_table(2, 1)
    q = MomentPolynomial.q()
    p = MomentPolynomial.p()
    assert poisson_bracket(q * q, p * p, table) == q * p * 4
    assert poisson_bracket(q, p, table) == MomentPolynomial.constant(1, 1)
    assert poisson_bracket(D(single(2, 0)), q, table).is_zero


def test_poisson_bracket_casimir_is_central():
    table = build_bracket_table(2, 1)
    casimir = D(single(2, 0)) * D(single(0, 2)) - D(single(1, 1)) * D(single(1, 1))
    for idx in table.moment_indices:
        assert poisson_bracket(casimir, D(idx), table).is_zero
    assert poisson_bracket(casimir, MomentPolynomial.q(), table).is_zero


def test_poisson_bracket_antisymmetry_randomized():
    # float coefficients are carried exactly (binary rationals), so the
    # identity still holds symbolically
    table = build_bracket_table(2, 1)
    rng = random.Random(3)
    symbols = [MomentPolynomial.q(), MomentPolynomial.p()] + [
        D(idx) for idx in table.moment_indices
    ]

    def random_poly():
        poly = MomentPolynomial.constant(rng.randint(-2, 2), 1)
        for _ in range(3):
            term = MomentPolynomial.constant(Fraction(rng.uniform(-2.0, 2.0)), 1)
            for _ in range(rng.randint(1, 2)):
                term = term * rng.choice(symbols)
            poly = poly + term
        return poly

    for _ in range(20):
        f, g = random_poly(), random_poly()
        assert poisson_bracket(f, g, table) == -poisson_bracket(g, f, table)


def test_poisson_bracket_jacobi_exact_at_order_2():
    """Order-2 brackets close on order-2 moments, so Jacobi holds exactly."""
    table = build_bracket_table(2, 1)
    rng = random.Random(11)
    symbols = [MomentPolynomial.q(), MomentPolynomial.p()] + [
        D(idx) for idx in table.moment_indices
    ]
    for _ in range(12):
        f, g, h = (rng.choice(symbols) * rng.choice(symbols) for _ in range(3))
        total = (
            poisson_bracket(f, poisson_bracket(g, h, table), table)
            + poisson_bracket(g, poisson_bracket(h, f, table), table)
            + poisson_bracket(h, poisson_bracket(f, g, table), table)
        )
        assert total.is_zero


def test_poisson_bracket_numeric_antisymmetry():
    """Evaluated at a random state the bracket identities hold numerically."""
    table = build_bracket_table(2, 1)
    rng = random.Random(21)
    basic = {("q", 0): 0.7, ("p", 0): -0.4}
    values = {
        single(2, 0): 1.3,
        single(1, 1): 0.2,
        single(0, 2): 0.6,
    }
    f = (
        D(single(2, 0)) * MomentPolynomial.q()
        + D(single(1, 1), rng.uniform(-1, 1))
        + MomentPolynomial.p() * MomentPolynomial.p()
    )
    g = D(single(0, 2)) * D(single(2, 0)) + MomentPolynomial.q().scale(rng.uniform(-1, 1))
    fg = poisson_bracket(f, g, table).evaluate(1.0, basic, values)
    gf = poisson_bracket(g, f, table).evaluate(1.0, basic, values)
    assert abs(fg + gf) <= 1e-12 * max(abs(fg), 1.0)


def test_leibniz_bracket_with_oracle_backend():
    """The Leibniz extension over the untruncated oracle stays exact."""
    f = D(single(3, 0))
    g = D(single(0, 3))
    got = leibniz_bracket(f, g, bracket_oracle)
    assert got == bracket_oracle(single(3, 0), single(0, 3))


def test_table_json_round_trip_structure():
    table = build_bracket_table(2, 1)
    payload = table.to_jsonable()
    assert payload["truncation_order"] == 2
    assert payload["pairs"] == 1
    assert len(payload["entries"]) == 3
    entry = payload["entries"][0]
    assert {"lhs", "rhs", "validated", "terms"} <= set(entry)
    # {Delta(q^2), Delta(qp)} = 2 Delta(q^2) appears with coefficient "2"
    flat = [
        (e["lhs"], e["rhs"], t["coeff_re"], t["moments"])
        for e in payload["entries"]
        for t in e["terms"]
    ]
    assert ([[2, 0]], [[1, 1]], "2", [{"index": [[2, 0]], "power": 1}]) in flat
