from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from geomatch.integrals import (
    matched_value,
    matching_combination,
    orbital,
    orbital_division,
    orbital_nonsplit_f,
    orbital_nonsplit_g,
    orbital_split_f,
    orbital_split_g,
    verify_matching,
    TestFunctionSpec,
)
from geomatch.orders import OrderKind
from geomatch.padic import (
    ramified_torus,
    ramified_torus_2nonsplit,
    split_torus,
    unramified_torus,
)

PRIMES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


def field_tori(p, M=14):
    tori = [unramified_torus(p, M), ramified_torus(p, M)]
    if p == 2:
        tori.append(ramified_torus_2nonsplit(M))
    return tori


def test_split_f_values():
    tor3, tor2 = split_torus(3, 10), split_torus(2, 10)
    assert orbital_split_f(tor3.element(4, 1), 0).value == 3
    assert orbital_split_f(tor2.element(3, 1), 1).value == 6
    assert orbital_split_f(tor3.element(2, 1), 2).value == 0


def test_split_g_values():
    tor3, tor2 = split_torus(3, 10), split_torus(2, 10)
    assert orbital_split_g(tor3.element(4, 1), 0).value == 6
    assert orbital_split_g(tor2.element(5, 1), 2).value == 16
    assert orbital_split_g(tor3.element(2, 1), 1).value == 0


def test_division_values():
    tr2 = ramified_torus(2, 10)
    assert orbital_division(tr2.element(3, 1), 1).value == 3
    tu3 = unramified_torus(3, 10)
    assert orbital_division(tu3.element(2, 1), 0).value == 2
    tu2 = unramified_torus(2, 10)
    # e = 1, n = 2: the indicator level is ceil(en/2) = 1, so membership in
    # U^1 already switches the value on
    assert orbital_division(tu2.element(3, 2), 2).value == 24
    assert orbital_division(tu2.element(2, 1), 2).value == 0


def test_nonsplit_f_values():
    tu2, tu3 = unramified_torus(2, 10), unramified_torus(3, 10)
    assert orbital_nonsplit_f(tu2.element(3, 2), 1).value == 6
    assert orbital_nonsplit_f(tu3.element(10, 27), 1).value == 816
    assert orbital_nonsplit_f(tu3.element(2, 3), 1).value == 0


def test_nonsplit_g_values():
    tr2, tu2, tu3 = ramified_torus(2, 10), unramified_torus(2, 10), unramified_torus(3, 10)
    assert orbital_nonsplit_g(tr2.element(3, 1), 1).value == 1
    assert orbital_nonsplit_g(tu2.element(3, 2), 0).value == 6
    assert orbital_nonsplit_g(tu3.element(2, 9), 2).value == 0


def test_matching_combination_cases():
    c = matching_combination(3, 4)
    assert (c.coeff_f, c.f_level, c.coeff_g, c.g_level) == (Fraction(3), 2, Fraction(-2), 4)
    c = matching_combination(2, 3)
    assert (c.coeff_f, c.f_level, c.coeff_g, c.g_level) == (Fraction(-2), 2, Fraction(3), 3)
    c = matching_combination(5, 0)
    assert (c.coeff_f, c.f_level, c.coeff_g, c.g_level) == (Fraction(2), 0, Fraction(-1), 0)


@settings(max_examples=200, deadline=None)
@given(q=st.sampled_from(PRIMES), n=st.integers(0, 8))
def test_coefficients_sum_to_one(q, n):
    c = matching_combination(q, n)
    assert c.coeff_f + c.coeff_g == 1
    assert c.levels_coherent()


@pytest.mark.parametrize("q", [2, 3, 5])
def test_split_vanishing_grid(q):
    tor = split_torus(q, 13)
    for n in range(7):
        for i in range(5):
            for u in {1, q - 1, 2 % q}:
                a = (1 + u * q ** i) % tor.ctx.modulus
                if a % q == 0 or u == 0:
                    continue
                x = tor.element(a, 1)
                for flag in (False, True):
                    rep = verify_matching(q, n, x, flag)
                    assert rep.lhs == 0 == rep.rhs


@pytest.mark.parametrize("p", [2, 3])
def test_field_matching_grid(p):
    for tor in field_tori(p):
        for n in range(7):
            for i in range(5):
                for j in range(5):
                    x = tor.element(1 + p ** i, p ** j)
                    rep = verify_matching(p, n, x)
                    assert rep.equal, (tor.kind, n, i, j)
                    assert verify_matching(p, n, x, True).equal


@pytest.mark.parametrize("p", [2, 3])
def test_even_level_proof_values(p):
    # the matched combination at even level 2n equals
    # (2/e) q^(4n) (1 - q^-2) 1_{U_E^{en}}
    for tor in field_tori(p):
        e = tor.e
        for n in (1, 2, 3):
            for i in range(4):
                for j in range(4):
                    x = tor.element(1 + p ** i, p ** j)
                    got = matched_value(p, 2 * n, x)
                    ind = x.in_unit_filtration(e * n)
                    want = (Fraction(2, e) * p ** (4 * n)
                            * (1 - Fraction(1, p * p))) if ind else Fraction(0)
                    assert got == want


def test_orbital_dispatch_division_on_split_is_zero():
    tor = split_torus(3, 10)
    assert orbital(TestFunctionSpec(OrderKind.D, 2), tor.element(4, 1)).value == 0


def test_norm_index_flag_recorded():
    tor = split_torus(3, 10)
    a = orbital_split_f(tor.element(4, 1), 1, include_norm_index=True)
    b = orbital_split_f(tor.element(4, 1), 1)
    assert a.include_norm_index and not b.include_norm_index
    assert not a.compatible(b)
    assert a.value * 2 == b.value  # [o^x : U_o^1] = 2 at q = 3
