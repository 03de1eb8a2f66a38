import math

import pytest
from hypothesis import given, settings, strategies as st

from geomatch.geodesics import (
    class_count_bruteforce,
    dpsi_enumerated,
    gamma_splitting,
    li,
    pell_fundamental,
    pgt_report,
    pi_enumerated,
    psi_enumerated,
    sl2_classes,
    sl2_group_order,
    spectrum_rows,
    trace_bound,
    _mat_mul,
    _mat_pow,
)
from geomatch.padic import NonHyperbolicTrace


def test_pell_examples():
    assert (pell_fundamental(5).u, pell_fundamental(5).v) == (3, 1)
    assert (pell_fundamental(8).u, pell_fundamental(8).v) == (6, 2)
    assert (pell_fundamental(12).u, pell_fundamental(12).v) == (4, 1)


@settings(max_examples=150, deadline=None)
@given(st.integers(5, 2500))
def test_pell_minimality_against_bruteforce(disc):
    if disc % 4 not in (0, 1) or math.isqrt(disc) ** 2 == disc:
        return
    got = pell_fundamental(disc)
    assert got.u * got.u - disc * got.v * got.v == 4
    for v in range(1, min(got.v, 3000)):
        n = 4 + disc * v * v
        u = math.isqrt(n)
        assert u * u != n, (disc, u, v)


def test_pell_large_fundamental_unit():
    # brute force cannot reach these; the continued-fraction route must
    unit = pell_fundamental(1621)  # fundamental solution has ~25 digits
    assert unit.u * unit.u - 1621 * unit.v * unit.v == 4
    assert unit.v > 10 ** 20
    unit = pell_fundamental(9949)  # ~70 digits
    assert unit.u * unit.u - 9949 * unit.v * unit.v == 4
    assert unit.v > 10 ** 60


def test_pell_rejects_squares():
    with pytest.raises(ValueError):
        pell_fundamental(16)


def test_class_counts_match_bruteforce():
    for t in list(range(3, 13)) + [-t for t in range(3, 13)]:
        assert len(sl2_classes(t)) == class_count_bruteforce(t), t


def test_class_count_examples():
    assert len(sl2_classes(3)) == 1
    assert len(sl2_classes(-3)) == 1
    assert sorted((c.content, c.power) for c in sl2_classes(7)) == \
        [(1, 1), (1, 1), (3, 2)]


def test_x0_exactness_and_surd_identity():
    for t in range(3, 21):
        for cls in sl2_classes(t):
            g0 = cls.gamma0
            k = cls.power
            assert _mat_pow(g0, k) == cls.gamma
            # x + 1/x = |t| for the norm surd: verified through the unit pair
            U, V = cls.pell.power(k)
            assert U == abs(t) and V == cls.content
        for cls in sl2_classes(-t):
            g0 = cls.gamma0
            inv = (g0[3], -g0[1], -g0[2], g0[0])
            assert _mat_pow(inv, cls.power) == tuple(-e for e in cls.gamma)


def test_gamma_commutes_with_gamma0():
    for t in (5, 7, 12, -9):
        for cls in sl2_classes(t):
            assert _mat_mul(cls.gamma, cls.gamma0) == _mat_mul(cls.gamma0, cls.gamma)


def test_sl2_group_orders():
    assert sl2_group_order(2) == 6
    assert sl2_group_order(3) == 24
    assert sl2_group_order(4) == 48
    assert sl2_group_order(6) == 144


def test_splitting_examples():
    c3 = sl2_classes(3)[0]
    assert gamma_splitting(c3, 1) == (1, 1)
    assert gamma_splitting(c3, 2)[0] == 0  # gamma != 1 mod 2
    # trace 11, content 3: gamma = 1 mod 3, splits into 12 classes
    counts = {}
    for c in sl2_classes(11):
        counts[c.content] = gamma_splitting(c, 3)
    assert counts[3] == (12, 1)
    assert counts[1][0] == 0


def test_splitting_rejects_large_level():
    with pytest.raises(ValueError):
        gamma_splitting(sl2_classes(3)[0], 7)


def test_dpsi_values():
    v = dpsi_enumerated(1, 3)
    assert abs(v - math.log((3 + math.sqrt(5)) / 2)) < 1e-12
    assert dpsi_enumerated(2, 5) == 0.0
    with pytest.raises(NonHyperbolicTrace):
        dpsi_enumerated(1, 2)


def test_trace_bound_exact():
    assert trace_bound(10) == 3   # alpha(3)^2 = 6.85 <= 10 < alpha(4)^2 = 13.9
    assert trace_bound(14) == 4
    assert trace_bound(10000) == 100


def test_psi_row_consistency():
    rows = spectrum_rows(1, 2000)
    total = sum(r.contribution for r in rows)
    assert total == psi_enumerated(1, 2000)
    # the contribution column is the documented multiple of the dpsi column
    for r in rows:
        want = 2.0 * math.sqrt(abs(r.t) - 2) * r.dpsi * 0.5
        assert abs(r.contribution - want) <= 1e-9 * max(1.0, abs(want))


def test_psi_below_first_norm_is_zero():
    assert psi_enumerated(1, 6.5) == 0.0  # alpha(3)^2 = 6.854 > 6.5
    assert pi_enumerated(1, 6.5) == 0


def test_psi_monotone_and_pi_jumps():
    xs = [10, 20, 50, 100, 300, 700, 1000]
    psis = [psi_enumerated(1, x) for x in xs]
    assert all(b >= a for a, b in zip(psis, psis[1:]))
    pis = [pi_enumerated(1, x) for x in xs]
    assert all(b >= a for a, b in zip(pis, pis[1:]))
    # pi jumps exactly at the first norm 6.854...
    assert pi_enumerated(1, 6.8) == 0
    assert pi_enumerated(1, 6.9) == 1


def test_li_values():
    # li(2) = 1.045163..., li(10) = 6.16560...
    assert abs(li(2.0) - 1.045163780117) < 1e-9
    assert abs(li(10.0) - 6.165599504787) < 1e-9


def test_pgt_report_columns():
    rows = pgt_report(1, [100.0, 1000.0])
    assert rows[0].x == 100.0
    assert rows[0].psi_minus_x == rows[0].psi - 100.0
    assert rows[1].pi > rows[0].pi


def test_pgt_error_envelope():
    # |psi - x| / x^(7/10) stays below 5 across the desk-scale grid
    for x in (100.0, 1000.0, 3000.0):
        psi = psi_enumerated(1, x)
        assert abs(psi - x) <= 5 * x ** 0.7, (x, psi)


def test_cli_verify_local_supports_p5():
    from geomatch.cli import run_verify_local
    res = run_verify_local(5, 2, 8)
    assert res["ok"] and res["points_checked"] > 0
