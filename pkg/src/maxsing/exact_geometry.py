"""Exact projective geometry over Q.

Integer vectors are plain tuples of ints, rational vectors tuples of
Fraction.  Everything here is pure and deterministic; distances and
subspace comparisons are decided exactly on squared quantities, and
square roots / logarithms only ever appear as certified rational
intervals with directed rounding.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt
from typing import Iterable, Sequence

Rat = Fraction

IntVec = tuple[int, ...]
RatVec = tuple[Fraction, ...]


class GeometryError(ValueError):
    """Base class for exact-geometry failures."""


class ZeroVector(GeometryError):
    pass


class DimensionMismatch(GeometryError):
    pass


class NegativeInput(GeometryError):
    pass


# ---------------------------------------------------------------------------
# vector helpers


def dot(x: Sequence, y: Sequence):
    if len(x) != len(y):
        raise DimensionMismatch(f"dot: {len(x)} vs {len(y)}")
    return sum(a * b for a, b in zip(x, y))


def norm_sq(x: Sequence):
    return sum(a * a for a in x)


def vec_add(x: Sequence, y: Sequence) -> tuple:
    if len(x) != len(y):
        raise DimensionMismatch(f"add: {len(x)} vs {len(y)}")
    return tuple(a + b for a, b in zip(x, y))


def vec_scale(c, x: Sequence) -> tuple:
    return tuple(c * a for a in x)


def wedge_sq(x: Sequence, y: Sequence):
    """``|x ∧ y|^2`` via the Lagrange identity |x|^2 |y|^2 - (x.y)^2."""
    d = dot(x, y)
    return norm_sq(x) * norm_sq(y) - d * d


# ---------------------------------------------------------------------------
# projective points


@dataclass(frozen=True)
class ProjPointQ:
    """A rational projective point: primitive integer vector, canonical sign."""

    rep: IntVec

    @property
    def dim(self) -> int:
        return len(self.rep)

    def norm_sq(self) -> int:
        return norm_sq(self.rep)

    def __repr__(self) -> str:  # compact, e.g. [1:0:2]
        return "[" + ":".join(str(c) for c in self.rep) + "]"


def primitive(v: Sequence) -> ProjPointQ:
    """Canonical representative of the projective class of ``v``.

    Accepts integer or rational coordinates; clears denominators, divides
    by the content and flips sign so the first nonzero coordinate is
    positive.  primitive(c*v) == primitive(v) for every nonzero rational c.
    """
    if len(v) == 0 or all(a == 0 for a in v):
        raise ZeroVector("cannot projectivize the zero vector")
    if any(isinstance(a, Fraction) for a in v):
        denom_lcm = 1
        for a in v:
            d = a.denominator if isinstance(a, Fraction) else 1
            denom_lcm = denom_lcm * d // gcd(denom_lcm, d)
        ints = [int(a * denom_lcm) for a in v]
    else:
        ints = [int(a) for a in v]
    g = 0
    for a in ints:
        g = gcd(g, a)
    ints = [a // g for a in ints]
    for a in ints:
        if a != 0:
            if a < 0:
                ints = [-b for b in ints]
            break
    return ProjPointQ(tuple(ints))


def dist_sq(x: Sequence, y: Sequence) -> Fraction:
    """Squared projective distance |x ∧ y|^2 / (|x|^2 |y|^2), in [0, 1]."""
    nx, ny = norm_sq(x), norm_sq(y)
    if nx == 0 or ny == 0:
        raise ZeroVector("projective distance needs nonzero vectors")
    d = dot(x, y)
    return Fraction(nx * ny - d * d, nx * ny)


# ---------------------------------------------------------------------------
# determinants, rank, wedge products


def det(rows: Sequence[Sequence]) -> Fraction | int:
    """Exact determinant of a square matrix over Q.

    Integer matrices go through fraction-free Bareiss elimination;
    rational ones are scaled row-wise to integers first.
    """
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise DimensionMismatch("det needs a square matrix")
    scale = Fraction(1)
    int_rows: list[list[int]] = []
    for r in rows:
        if any(isinstance(a, Fraction) for a in r):
            m = 1
            for a in r:
                d = a.denominator if isinstance(a, Fraction) else 1
                m = m * d // gcd(m, d)
            scale /= m
            int_rows.append([int(a * m) for a in r])
        else:
            int_rows.append([int(a) for a in r])
    d = _det_bareiss(int_rows)
    out = scale * d
    return int(out) if out.denominator == 1 and scale != 1 else (d if scale == 1 else out)


def _det_bareiss(m: list[list[int]]) -> int:
    n = len(m)
    if n == 0:
        return 1
    m = [row[:] for row in m]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def wedge_k(vectors: Sequence[Sequence], n: int | None = None) -> tuple:
    """Wedge product of k vectors of dim n as the C(n,k) minors.

    Coordinates are the k x k minors indexed by k-subsets of columns in
    lexicographic order.  Multilinear and alternating; zero iff the
    vectors are linearly dependent.
    """
    k = len(vectors)
    if k == 0:
        raise DimensionMismatch("need at least one vector")
    if n is None:
        n = len(vectors[0])
    if any(len(v) != n for v in vectors):
        raise DimensionMismatch("wedge_k: inconsistent dimensions")
    if not 1 <= k <= n:
        raise DimensionMismatch(f"wedge_k needs 1 <= k <= n, got k={k}, n={n}")
    coords = []
    for subset in itertools.combinations(range(n), k):
        coords.append(det([[v[j] for j in subset] for v in vectors]))
    return tuple(coords)


def rank(vectors: Iterable[Sequence]) -> int:
    """Exact rank over Q by fraction-free integer elimination."""
    rows = []
    for v in vectors:
        r = _to_primitive_int_row(v)
        if r is not None:
            rows.append(list(r))
    if not rows:
        return 0
    ncols = len(rows[0])
    if any(len(r) != ncols for r in rows):
        raise DimensionMismatch("rank: inconsistent dimensions")
    rnk = 0
    col = 0
    while rnk < len(rows) and col < ncols:
        piv = None
        for i in range(rnk, len(rows)):
            if rows[i][col] != 0:
                piv = i
                break
        if piv is None:
            col += 1
            continue
        rows[rnk], rows[piv] = rows[piv], rows[rnk]
        pv = rows[rnk][col]
        for i in range(rnk + 1, len(rows)):
            ai = rows[i][col]
            if ai == 0:
                continue
            g = gcd(pv, ai)
            rows[i] = [a * (pv // g) - b * (ai // g) for a, b in zip(rows[i], rows[rnk])]
            gg = 0
            for a in rows[i]:
                gg = gcd(gg, a)
            if gg > 1:
                rows[i] = [a // gg for a in rows[i]]
        rnk += 1
        col += 1
    return rnk


def _to_primitive_int_row(v: Sequence) -> IntVec | None:
    """Scale a rational row to a primitive integer row (None if zero)."""
    if all(a == 0 for a in v):
        return None
    return primitive(v).rep


# ---------------------------------------------------------------------------
# rational subspaces with a canonical basis


@dataclass(frozen=True)
class ProjSubspaceQ:
    """Linear subspace of Q^n in canonical form.

    The basis is the reduced row echelon form over Q with every row
    scaled to a primitive integer vector with positive leading entry, so
    two equal subspaces are structurally equal.
    """

    basis: tuple[IntVec, ...]
    ambient_dim: int

    @property
    def rank(self) -> int:
        return len(self.basis)

    def is_proper(self) -> bool:
        return self.rank < self.ambient_dim

    def contains(self, v: Sequence) -> bool:
        return in_span(v, self)

    def contains_point(self, p: ProjPointQ) -> bool:
        return in_span(p.rep, self)


def subspace_span(vectors: Sequence[Sequence], ambient_dim: int | None = None) -> ProjSubspaceQ:
    """Span of the given vectors as a canonical ProjSubspaceQ."""
    vecs = [v.rep if isinstance(v, ProjPointQ) else v for v in vectors]
    if ambient_dim is None:
        if not vecs:
            raise DimensionMismatch("empty span needs an explicit ambient_dim")
        ambient_dim = len(vecs[0])
    rows = [[Fraction(a) for a in v] for v in vecs if any(c != 0 for c in v)]
    for r in rows:
        if len(r) != ambient_dim:
            raise DimensionMismatch("subspace_span: inconsistent dimensions")
    rref = _rref(rows, ambient_dim)
    return ProjSubspaceQ(tuple(_to_primitive_int_row(r) for r in rref), ambient_dim)


def _rref(rows: list[list[Fraction]], ncols: int) -> list[list[Fraction]]:
    rref: list[list[Fraction]] = []
    pivots: list[int] = []
    for row in rows:
        r = row[:]
        for prow, pc in zip(rref, pivots):
            if r[pc] != 0:
                c = r[pc]
                r = [a - c * b for a, b in zip(r, prow)]
        pc = next((j for j, a in enumerate(r) if a != 0), None)
        if pc is None:
            continue
        inv = r[pc]
        r = [a / inv for a in r]
        for prow in rref:
            if prow[pc] != 0:
                c = prow[pc]
                prow[:] = [a - c * b for a, b in zip(prow, r)]
        rref.append(r)
        pivots.append(pc)
    order = sorted(range(len(rref)), key=lambda i: pivots[i])
    return [rref[i] for i in order]


def in_span(v: Sequence, s: ProjSubspaceQ) -> bool:
    """Exact membership of a vector in the span of a subspace."""
    v = v.rep if isinstance(v, ProjPointQ) else v
    if len(v) != s.ambient_dim:
        raise DimensionMismatch("in_span: wrong ambient dimension")
    r = [Fraction(a) for a in v]
    for row in s.basis:
        pc = next(j for j, a in enumerate(row) if a != 0)
        if r[pc] != 0:
            c = Fraction(r[pc], row[pc])
            r = [a - c * b for a, b in zip(r, row)]
    return all(a == 0 for a in r)


def orthogonal_functionals(s: ProjSubspaceQ) -> tuple[IntVec, ...]:
    """Primitive integer functionals vanishing exactly on the subspace.

    A vector lies in the span iff it pairs to zero with every returned
    functional; there are ambient_dim - rank of them.  Cheap membership
    tests against big vectors reduce to integer dot products.
    """
    pivots = [next(j for j, a in enumerate(row) if a != 0) for row in s.basis]
    pivot_set = set(pivots)
    funcs = []
    for j in range(s.ambient_dim):
        if j in pivot_set:
            continue
        f = [Fraction(0)] * s.ambient_dim
        f[j] = Fraction(1)
        for row, pc in zip(s.basis, pivots):
            f[pc] = Fraction(-row[j], row[pc])
        funcs.append(primitive(f).rep)
    return tuple(funcs)


# ---------------------------------------------------------------------------
# certified radicals and logarithms


def isqrt_floor(n: int) -> int:
    if n < 0:
        raise NegativeInput("integer sqrt of a negative number")
    return isqrt(n)


def inth_root(x: int, n: int) -> int:
    """floor(x**(1/n)) for x >= 0, n >= 1, by Newton iteration."""
    if x < 0:
        raise NegativeInput("integer root of a negative number")
    if n == 1 or x in (0, 1):
        return x
    if n == 2:
        return isqrt(x)
    r = 1 << (x.bit_length() // n + 1)
    while True:
        nr = ((n - 1) * r + x // r ** (n - 1)) // n
        if nr >= r:
            break
        r = nr
    while r ** n > x:
        r -= 1
    return r


def sqrt_bounds(r, precision_bits: int = 64) -> tuple[Fraction, Fraction]:
    """Certified rational interval around sqrt(r).

    Returns (lo, hi) with lo <= sqrt(r) <= hi and hi - lo <= 2^-precision_bits,
    by integer square roots of the scaled numerator with directed rounding.
    Perfect squares come back exact with lo == hi.
    """
    r = Fraction(r)
    if r < 0:
        raise NegativeInput("sqrt of a negative rational")
    p, q = r.numerator, r.denominator
    sp, sq = isqrt(p), isqrt(q)
    if sp * sp == p and sq * sq == q:
        e = Fraction(sp, sq)
        return (e, e)
    b = precision_bits
    m = isqrt((p << (2 * b)) // q)
    return (Fraction(m, 1 << b), Fraction(m + 1, 1 << b))


def sqrt_bounds_rel(r, precision_bits: int = 64) -> tuple[Fraction, Fraction]:
    """Like sqrt_bounds but with width at most 2^-precision_bits * sqrt(r).

    For tiny r the absolute-width interval is useless relatively; this
    shifts the working precision by the magnitude of r.
    """
    r = Fraction(r)
    if r < 0:
        raise NegativeInput("sqrt of a negative rational")
    if r == 0:
        return (Fraction(0), Fraction(0))
    e = r.numerator.bit_length() - r.denominator.bit_length()  # log2 r up to +-1
    extra = max(0, -(e // 2)) + 2
    return sqrt_bounds(r, precision_bits + extra)


def nth_root_bounds(r, n: int, precision_bits: int = 64) -> tuple[Fraction, Fraction]:
    """Certified interval around r**(1/n) for r >= 0, width <= 2^-precision_bits."""
    r = Fraction(r)
    if r < 0:
        raise NegativeInput("nth root of a negative rational")
    p, q = r.numerator, r.denominator
    rp, rq = inth_root(p, n), inth_root(q, n)
    if rp ** n == p and rq ** n == q:
        e = Fraction(rp, rq)
        return (e, e)
    b = precision_bits
    m = inth_root((p << (n * b)) // q, n)
    return (Fraction(m, 1 << b), Fraction(m + 1, 1 << b))


def _atanh_series_scaled(t_scaled: int, scale_bits: int, terms: int, round_up: bool) -> int:
    """2^scale_bits * atanh(t) bounds for t = t_scaled / 2^scale_bits in [0, 1/2].

    Directed rounding: with round_up=False every intermediate floor gives a
    lower bound of the truncated series; with round_up=True every ceiling
    plus an explicit tail bound gives an upper bound of the full series.
    """
    one = 1 << scale_bits
    if t_scaled == 0:
        return 0

    def mul(a: int, b: int) -> int:
        prod = a * b
        if round_up:
            return -((-prod) >> scale_bits)
        return prod >> scale_bits

    def div(a: int, b: int) -> int:
        if round_up:
            return -((-a) // b)
        return a // b

    t2 = mul(t_scaled, t_scaled)
    total = t_scaled
    power = t_scaled
    j = 1
    while j <= terms:
        power = mul(power, t2)
        if power == 0 and not round_up:
            break
        total += div(power, 2 * j + 1)
        j += 1
    if round_up:
        # tail: sum_{i>terms} t^(2i+1)/(2i+1) <= t^(2J+3) / ((2J+3)(1-t^2))
        next_power = mul(power, t2)
        denom = (2 * j + 1) * (one - t2)
        if denom <= 0:
            raise NegativeInput("atanh series needs t < 1")
        total += div(next_power * one, denom) + 1
    return total


_LN2_CACHE: dict[int, tuple[Fraction, Fraction]] = {}


def _ln2_bounds(scale_bits: int) -> tuple[Fraction, Fraction]:
    if scale_bits not in _LN2_CACHE:
        terms = scale_bits // 3 + 3
        t_lo = (1 << scale_bits) // 3
        t_hi = t_lo + 1
        lo = 2 * _atanh_series_scaled(t_lo, scale_bits, terms, round_up=False)
        hi = 2 * _atanh_series_scaled(t_hi, scale_bits, terms, round_up=True)
        _LN2_CACHE[scale_bits] = (Fraction(lo, 1 << scale_bits), Fraction(hi, 1 << scale_bits))
    return _LN2_CACHE[scale_bits]


def ln_bounds(y, precision_bits: int = 64) -> tuple[Fraction, Fraction]:
    """Certified rational interval around ln(y), width <= 2^-precision_bits.

    Range-reduces y = 2^e * m with m in [1, 2) and sums the atanh series
    of (m-1)/(m+1) in fixed-point integers with directed rounding.
    """
    y = Fraction(y)
    if y <= 0:
        raise NegativeInput("log of a non-positive rational")
    if y == 1:
        return (Fraction(0), Fraction(0))
    if y < 1:
        lo, hi = ln_bounds(1 / y, precision_bits)
        return (-hi, -lo)
    p, q = y.numerator, y.denominator
    e = p.bit_length() - q.bit_length()
    while e > 0 and (q << e) > p:
        e -= 1
    while (q << (e + 1)) <= p:
        e += 1
    w = precision_bits + 32 + e.bit_length()
    tn = p - (q << e)
    td = p + (q << e)
    terms = w // 3 + 3
    if tn == 0:
        m_lo = m_hi = Fraction(0)
    else:
        t_scaled = (tn << w) // td
        t_lo, t_hi = t_scaled, t_scaled + 1
        m_lo = Fraction(2 * _atanh_series_scaled(t_lo, w, terms, round_up=False), 1 << w)
        m_hi = Fraction(2 * _atanh_series_scaled(t_hi, w, terms, round_up=True), 1 << w)
    if e == 0:
        lo, hi = m_lo, m_hi
    else:
        l2_lo, l2_hi = _ln2_bounds(w)
        lo, hi = e * l2_lo + m_lo, e * l2_hi + m_hi
    assert hi - lo <= Fraction(1, 1 << precision_bits)
    return (lo, hi)


def dec_str(x, digits: int = 12) -> str:
    """Decimal rendering of a rational at the given precision (truncated)."""
    x = Fraction(x)
    sign = "-" if x < 0 else ""
    x = abs(x)
    scaled = (x.numerator * 10 ** digits) // x.denominator
    ip, fp = divmod(scaled, 10 ** digits)
    return f"{sign}{ip}.{str(fp).zfill(digits)}"
