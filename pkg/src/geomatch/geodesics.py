"""Hyperbolic conjugacy classes of SL2(Z) and prime-geodesic counting.

Classes of trace t correspond to integral binary quadratic forms of
discriminant t^2 - 4 (including imprimitive ones, one m-scaled copy for each
m^2 dividing the discriminant) up to proper equivalence; cycles of reduced
forms enumerate them, Pell units give the primitive hyperbolic generators,
and reduction mod N splits classes into the principal congruence subgroup.
All surd arithmetic is exact; logarithms are taken only at output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .padic import NonHyperbolicTrace

MAX_SPLITTING_LEVEL = 6
PELL_BRUTE_BOUND = 20000


# ---------------------------------------------------------------------------
# Pell units


@dataclass(frozen=True)
class PellUnit:
    """(u + v sqrt(disc))/2 with u^2 - disc v^2 = 4, u, v > 0 minimal."""

    disc: int
    u: int
    v: int

    def __post_init__(self):
        if self.u * self.u - self.disc * self.v * self.v != 4:
            raise AssertionError("not a norm-one unit of the order")

    def log(self) -> float:
        return _log_alpha(self.u)

    def power(self, k: int) -> tuple[int, int]:
        """(U, V) with ((u + v sqrt d)/2)^k = (U + V sqrt d)/2, k >= 0."""
        U, V = 2, 0
        A, B = self.u, self.v
        n = k
        while n:
            if n & 1:
                U, V = _half_mul(self.disc, (U, V), (A, B))
            A, B = _half_mul(self.disc, (A, B), (A, B))
            n >>= 1
        return U, V


def _half_mul(disc: int, x: tuple[int, int], y: tuple[int, int]) -> tuple[int, int]:
    """Product of (a + b sqrt d)/2 pairs, result in the same normalization."""
    a, b = x
    c, d = y
    num_u = a * c + disc * b * d
    num_v = a * d + b * c
    assert num_u % 2 == 0 and num_v % 2 == 0
    return num_u // 2, num_v // 2


def _log_alpha(u: int) -> float:
    """log((u + sqrt(u^2 - 4))/2) without overflowing floats."""
    if u <= 2 ** 50:
        return math.log((u + math.sqrt(u * u - 4)) / 2)
    n = u * u - 4
    s = math.isqrt(n)
    frac = (n - s * s) / (2 * s)  # sqrt(n) = s + frac + O(1/s)
    base = math.log(u + s) - math.log(2)
    if u + s < 10 ** 300:
        base += math.log1p(frac / (u + s))
    return base


def _pell_one(D: int) -> tuple[int, int]:
    """Fundamental solution of x^2 - D y^2 = 1 by continued fractions."""
    a0 = math.isqrt(D)
    if a0 * a0 == D:
        raise ValueError("square discriminant")
    m, d, a = 0, 1, a0
    num1, num = 1, a0
    den1, den = 0, 1
    while num * num - D * den * den != 1:
        m = d * a - m
        d = (D - m * m) // d
        a = (a0 + m) // d
        num1, num = num, a * num + num1
        den1, den = den, a * den + den1
    return num, den


def _iroot(n: int, k: int) -> int:
    """Integer floor k-th root."""
    if n < 0:
        raise ValueError
    x = int(round(n ** (1.0 / k))) if n < 2 ** 50 else 1 << ((n.bit_length() + k - 1) // k)
    while x ** k > n:
        x = (x * (k - 1) + n // x ** (k - 1)) // k
    while (x + 1) ** k <= n:
        x += 1
    return x


def _descend(disc: int, u: int, v: int) -> tuple[int, int]:
    """Reduce (u, v) to the minimal norm-one unit by exact root extraction."""
    changed = True
    while changed:
        changed = False
        # square root: trace U = u'^2 - 2
        s = math.isqrt(u + 2)
        if s * s == u + 2 and s > 2:
            vv = 4 * (s * s - 4)
            if vv > 0 and (s * s - 4) % disc == 0:
                w = math.isqrt((s * s - 4) // disc)
                if w > 0 and w * w * disc == s * s - 4 and \
                        PellUnit(disc, s, w).power(2) == (u, v):
                    u, v = s, w
                    changed = True
                    continue
        # cube root: trace U = u'^3 - 3 u'
        c = _iroot(u + 3 * _iroot(u, 3), 3)
        for cand in (c - 1, c, c + 1, c + 2):
            if cand > 2 and cand ** 3 - 3 * cand == u and (cand * cand - 4) % disc == 0:
                w = math.isqrt((cand * cand - 4) // disc)
                if w > 0 and w * w * disc == cand * cand - 4 and \
                        PellUnit(disc, cand, w).power(3) == (u, v):
                    u, v = cand, w
                    changed = True
                    break
    return u, v


@lru_cache(maxsize=None)
def pell_fundamental(disc: int) -> PellUnit:
    """Minimal positive solution of u^2 - disc v^2 = 4.

    Ascending search up to a fixed bound, then the continued-fraction route
    (x^2 - D y^2 = 1 scaled into the order, with exact 2nd/3rd root descent
    to the fundamental unit).
    """
    if disc <= 0:
        raise ValueError("discriminant must be positive")
    s = math.isqrt(disc)
    if s * s == disc:
        raise ValueError("square discriminant")
    if disc % 4 not in (0, 1):
        raise ValueError("not a discriminant")
    for v in range(1, PELL_BRUTE_BOUND):
        n = 4 + disc * v * v
        u = math.isqrt(n)
        if u * u == n:
            return PellUnit(disc, u, v)
    if disc % 4 == 0:
        x1, y1 = _pell_one(disc // 4)
        return PellUnit(disc, 2 * x1, y1)
    x1, y1 = _pell_one(disc)
    u, v = _descend(disc, 2 * x1, 2 * y1)
    return PellUnit(disc, u, v)


# ---------------------------------------------------------------------------
# reduced indefinite forms and their cycles


def _is_reduced(A: int, B: int, C: int, disc: int) -> bool:
    if B <= 0 or B * B >= disc:
        return False
    t = 2 * abs(A) - B
    return disc < (B + 2 * abs(A)) ** 2 and (t <= 0 or t * t < disc)


def _rho(A: int, B: int, C: int, disc: int) -> tuple[int, int, int]:
    """One reduction step; maps reduced forms to reduced forms."""
    s = math.isqrt(disc)
    ac = 2 * abs(C)
    B2 = s - (s + B) % ac
    C2 = (B2 * B2 - disc) // (4 * C)
    return C, B2, C2


def _cycle(form: tuple[int, int, int], disc: int) -> tuple[tuple[int, int, int], ...]:
    out = [form]
    cur = _rho(*form, disc)
    while cur != form:
        out.append(cur)
        cur = _rho(*cur, disc)
    return tuple(out)


@lru_cache(maxsize=None)
def primitive_classes(disc: int) -> tuple[tuple[int, int, int], ...]:
    """Canonical representatives of proper classes of primitive forms."""
    s = math.isqrt(disc)
    forms = set()
    for B in range(1, s + 1):
        if (B - disc) % 2:
            continue
        m4 = B * B - disc
        if m4 % 4:
            continue
        m = m4 // 4  # = A C < 0
        for A in range(1, abs(m) + 1):
            if abs(m) % A:
                continue
            for Asig in (A, -A):
                C = m // Asig
                if math.gcd(math.gcd(Asig, B), C) != 1:
                    continue
                if _is_reduced(Asig, B, C, disc):
                    forms.add((Asig, B, C))
    reps = []
    seen = set()
    for f in sorted(forms):
        if f in seen:
            continue
        cyc = _cycle(f, disc)
        seen.update(cyc)
        reps.append(min(cyc))
    return tuple(sorted(reps))


# ---------------------------------------------------------------------------
# trace classes


def _mat_mul(x, y):
    return (x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3],
            x[2] * y[0] + x[3] * y[2], x[2] * y[1] + x[3] * y[3])


def _mat_pow(x, k):
    out = (1, 0, 0, 1)
    while k:
        if k & 1:
            out = _mat_mul(out, x)
        x = _mat_mul(x, x)
        k >>= 1
    return out


def _mat_neg(x):
    return tuple(-e for e in x)


def _mat_inv_sl2(x):
    return (x[3], -x[1], -x[2], x[0])


@dataclass(frozen=True)
class QuadFormClass:
    """One SL2(Z)-conjugacy class of trace t.

    content scales a primitive canonical form; gamma is an integral trace-t
    representative, gamma0 the fundamental automorph generating its
    centralizer mod sign, with gamma = sign * gamma0^(±k).
    """

    t: int
    content: int
    form: tuple[int, int, int]
    gamma: tuple[int, int, int, int]
    pell: PellUnit
    power: int
    sign: int
    inverse: bool

    @property
    def gamma0(self) -> tuple[int, int, int, int]:
        A, B, C = self.form
        u, v = self.pell.u, self.pell.v
        return ((u - B * v) // 2, -C * v, A * v, (u + B * v) // 2)

    def log_x0(self) -> float:
        """log of the primitive norm in the eigenvalue normalization."""
        return self.pell.log()


@lru_cache(maxsize=None)
def sl2_classes(t: int) -> tuple[QuadFormClass, ...]:
    """All SL2(Z)-conjugacy classes of hyperbolic trace t, duplicate-free."""
    if abs(t) <= 2:
        raise NonHyperbolicTrace(f"|t| = {abs(t)} <= 2")
    disc = t * t - 4
    out = []
    m = 1
    while m * m <= disc:
        if disc % (m * m) == 0 and (disc // (m * m)) % 4 in (0, 1):
            d0 = disc // (m * m)
            pell = pell_fundamental(d0)
            for form in primitive_classes(d0):
                A, B, C = form
                gamma = ((t - m * B) // 2, -m * C, m * A, (t + m * B) // 2)
                cls = _with_power(t, m, form, gamma, pell)
                out.append(cls)
        m += 1
    return tuple(out)


def _with_power(t, m, form, gamma, pell) -> QuadFormClass:
    """Determine k with gamma = sign gamma0^(±k), verified exactly."""
    target = (abs(t), m)
    k = 1
    cur = (pell.u, pell.v)
    while cur[0] < target[0]:
        k += 1
        cur = pell.power(k)
    if cur != target:
        raise AssertionError("class element is not a power of the fundamental unit")
    cls = QuadFormClass(t, m, form, gamma, pell, k, 1 if t > 0 else -1, t < 0)
    g0 = cls.gamma0
    if t > 0:
        ok = _mat_pow(g0, k) == gamma
    else:
        ok = _mat_pow(_mat_inv_sl2(g0), k) == _mat_neg(gamma)
    if not ok:
        raise AssertionError("gamma0^k does not reproduce gamma")
    return cls


def class_count_bruteforce(t: int, bound: int = 30, closure: int = 400) -> int:
    """Independent class count: enumerate bounded matrices, merge conjugates.

    Seeds are all trace-t determinant-1 matrices with entries bounded by
    `bound`; the conjugation graph under the two standard generators is
    explored inside the larger `closure` box and components are counted.
    """
    if abs(t) <= 2:
        raise NonHyperbolicTrace(str(t))
    seeds = set()
    for a in range(-bound, bound + 1):
        d = t - a
        if abs(d) > bound:
            continue
        bc = a * d - 1
        if bc == 0:
            for b in range(-bound, bound + 1):
                seeds.add((a, b, 0, d))
                seeds.add((a, 0, b, d))
        else:
            for b in range(-bound, bound + 1):
                if b and bc % b == 0 and abs(bc // b) <= bound:
                    seeds.add((a, b, bc // b, d))
    S = (0, -1, 1, 0)
    Si = (0, 1, -1, 0)
    T = (1, 1, 0, 1)
    Ti = (1, -1, 0, 1)
    conj = [(S, Si), (Si, S), (T, Ti), (Ti, T)]
    parent: dict = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[rx] = ry

    frontier = list(seeds)
    for s in seeds:
        parent[s] = s
    while frontier:
        nxt = []
        for g in frontier:
            for c, ci in conj:
                h = _mat_mul(ci, _mat_mul(g, c))
                if max(abs(e) for e in h) > closure:
                    continue
                if h not in parent:
                    parent[h] = h
                    nxt.append(h)
                union(g, h)
        frontier = nxt
    return len({find(s) for s in seeds})


# ---------------------------------------------------------------------------
# splitting into principal congruence subgroups


@lru_cache(maxsize=None)
def sl2_group_order(N: int) -> int:
    """|SL2(Z/N)| by enumeration (N <= 6)."""
    if N > MAX_SPLITTING_LEVEL:
        raise ValueError(f"level {N} above the enumeration limit {MAX_SPLITTING_LEVEL}")
    if N == 1:
        return 1
    count = 0
    for a in range(N):
        for b in range(N):
            for c in range(N):
                for d in range(N):
                    if (a * d - b * c) % N == 1 % N:
                        count += 1
    return count


def _mod(mat, N):
    return tuple(e % N for e in mat)


def gamma_splitting(cls: QuadFormClass, N: int) -> tuple[int, int]:
    """(count, primitive_index) of the class under the level-N splitting.

    count is the number of level-N classes inside the SL2(Z)-class (0 unless
    gamma = 1 mod N), |SL2(Z/N)| / |image of the centralizer <gamma0, -1>|;
    primitive_index is the least m with gamma0^m = +-1 mod N.
    """
    if N > MAX_SPLITTING_LEVEL:
        raise ValueError(f"level {N} above the enumeration limit {MAX_SPLITTING_LEVEL}")
    if N == 1:
        return 1, 1
    ident = (1 % N, 0, 0, 1 % N)
    neg = tuple(e % N for e in (-1, 0, 0, -1))
    g0 = _mod(cls.gamma0, N)
    powers = []
    cur = ident
    mstar = None
    order = None
    for j in range(1, 4 * sl2_group_order(N) + 2):
        cur = _mod(_mat_mul(cur, g0), N)
        powers.append(cur)
        if mstar is None and (cur == ident or cur == neg):
            mstar = j
        if cur == ident:
            order = j
            break
    if order is None:
        raise AssertionError("generator image order not found")
    subgroup = set(powers)
    if neg not in subgroup:
        subgroup |= {_mod(_mat_neg(x), N) for x in powers}
    if _mod(cls.gamma, N) != ident:
        return 0, mstar
    total = sl2_group_order(N)
    assert total % len(subgroup) == 0
    return total // len(subgroup), mstar


def minus_one_in_level(N: int) -> bool:
    return N <= 2


def c_factor(N: int) -> Fraction:
    """1/2 when -1 lies in the level-N group, else 1."""
    return Fraction(1, 2) if minus_one_in_level(N) else Fraction(1)


# ---------------------------------------------------------------------------
# counting functions


def dpsi_enumerated(N: int, t: int) -> float:
    """Per-trace class-weighted sum log x0 / (sqrt x - 1/sqrt x).

    x(t) = (|t| + sqrt(t^2-4))/2, so the denominator is sqrt(|t| - 2); the
    weight of a class is (splitting count) * log of its level-N primitive
    norm x0^(m*).
    """
    raw = _dpsi_raw(N, t)
    return raw / math.sqrt(abs(t) - 2)


def _dpsi_raw(N: int, t: int) -> float:
    total = 0.0
    for cls in sl2_classes(t):
        count, mstar = gamma_splitting(cls, N)
        if count:
            total += count * mstar * cls.log_x0()
    return total


def trace_bound(x) -> int:
    """Largest integer trace with |t| <= sqrt(x) + 1/sqrt(x) (exact in x)."""
    fx = Fraction(x)
    if fx < 4:
        return 2
    tmax = math.isqrt(int(fx) + 2)
    while Fraction(tmax * tmax) * fx > (fx + 1) ** 2:
        tmax -= 1
    while Fraction((tmax + 1) * (tmax + 1)) * fx <= (fx + 1) ** 2:
        tmax += 1
    return tmax


@dataclass(frozen=True)
class SpectrumRow:
    t: int
    class_count_sl2: int
    classes_in_level: int
    dpsi: float
    contribution: float


def spectrum_rows(N: int, x) -> list[SpectrumRow]:
    """Per-trace rows for 2 < |t| <= sqrt(x) + 1/sqrt(x), both signs.

    contribution is c * 2 sqrt(|t|-2) * dpsi(t) computed from exact class
    data (c = 1/2 when -1 is in the level group), so the psi column of a
    report is exactly the sum of its contribution column.
    """
    c = float(c_factor(N))
    rows = []
    tmax = trace_bound(x)
    for at in range(3, tmax + 1):
        for t in (at, -at):
            splits = [(cls, *gamma_splitting(cls, N)) for cls in sl2_classes(t)]
            in_level = sum(cnt for _, cnt, _ in splits)
            raw = sum(cnt * ms * cls.log_x0() for cls, cnt, ms in splits)
            rows.append(SpectrumRow(
                t=t,
                class_count_sl2=len(splits),
                classes_in_level=in_level,
                dpsi=raw / math.sqrt(at - 2),
                contribution=c * 2.0 * raw,
            ))
    return rows


def psi_enumerated(N: int, x) -> float:
    """Chebyshev-style count: c * sum over traces of 2 sqrt(|t|-2) dpsi(t).

    Equivalently the sum of log(norm of the level-N primitive) over level-N
    classes of norm at most x; grows like x.
    """
    return sum(r.contribution for r in spectrum_rows(N, x))


def pi_enumerated(N: int, x) -> int:
    """Number of level-N primitive classes of norm at most x (mod +-1)."""
    fx = Fraction(x)
    tmax = trace_bound(x)
    total = 0
    for at in range(3, tmax + 1):
        for t in (at, -at):
            for cls in sl2_classes(t):
                count, mstar = gamma_splitting(cls, N)
                if count and cls.power == mstar:
                    total += count
    if minus_one_in_level(N):
        assert total % 2 == 0
        total //= 2
    return total


def li(x: float) -> float:
    """Principal-value logarithmic integral via the Ei series."""
    if x <= 1:
        raise ValueError("li needs x > 1")
    z = math.log(x)
    total = 0.5772156649015328606 + math.log(z)
    term = 1.0
    ksum = 0.0
    for k in range(1, 200):
        term *= z / k
        ksum += term / k
        if term / k < 1e-17 * max(1.0, ksum):
            break
    return total + ksum


@dataclass(frozen=True)
class PgtRow:
    x: float
    psi: float
    psi_minus_x: float
    x_pow_7_10: float
    pi: int
    li_x: float
    pi_minus_li: float


def pgt_report(N: int, xs) -> list[PgtRow]:
    """Counting-function table over a grid of x values."""
    rows = []
    for x in xs:
        psi = psi_enumerated(N, x)
        piv = pi_enumerated(N, x)
        lix = li(float(x))
        rows.append(PgtRow(float(x), psi, psi - float(x), float(x) ** 0.7,
                           piv, lix, piv - lix))
    return rows
