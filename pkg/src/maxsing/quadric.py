"""Rational quadratic forms with a certified pair of hyperbolic planes.

The hypersurface machinery needs exactly three things decided exactly:
whether a point is on the quadric, the orthogonal complement of a point,
and totally isotropic rational lines through a given isotropic point.
The two-hyperbolic-plane witness is an input certificate, not something
computed: it guarantees such lines exist and seeds the searches.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Sequence

from .exact_geometry import (
    DimensionMismatch,
    ProjPointQ,
    ProjSubspaceQ,
    dot,
    primitive,
    subspace_span,
    wedge_sq,
)
from .multilinear import StepPreconditionError


class DegenerateDirection(ValueError):
    pass


class NotOnQuadric(ValueError):
    pass


class HeightExhausted(RuntimeError):
    pass


class InvalidWitness(ValueError):
    pass


@dataclass(frozen=True)
class QuadraticFormQ:
    """Symmetric rational Gram matrix A; b(x,y) = x^T A y and q(x) = b(x,x)."""

    gram: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        n = len(self.gram)
        for row in self.gram:
            if len(row) != n:
                raise DimensionMismatch("gram matrix must be square")
        for i in range(n):
            for j in range(n):
                if self.gram[i][j] != self.gram[j][i]:
                    raise InvalidWitness("gram matrix must be symmetric")
        if all(a == 0 for row in self.gram for a in row):
            raise InvalidWitness("quadratic form must not vanish identically")

    @property
    def dim(self) -> int:
        return len(self.gram)

    def bilinear(self, x: Sequence, y: Sequence) -> Fraction:
        if len(x) != self.dim or len(y) != self.dim:
            raise DimensionMismatch("bilinear form: wrong vector dimension")
        total = Fraction(0)
        for i, xi in enumerate(x):
            if xi == 0:
                continue
            row = self.gram[i]
            s = sum(row[j] * yj for j, yj in enumerate(y) if yj != 0)
            total += xi * s
        return total

    def q(self, x: Sequence) -> Fraction:
        return self.bilinear(x, x)


@dataclass(frozen=True)
class HyperbolicWitness:
    """Two orthogonal hyperbolic planes: q(u_i)=q(v_i)=0, b(u_i,v_i)!=0, cross-pairs orthogonal."""

    u1: tuple[int, ...]
    v1: tuple[int, ...]
    u2: tuple[int, ...]
    v2: tuple[int, ...]

    def vectors(self) -> tuple[tuple[int, ...], ...]:
        return (self.u1, self.v1, self.u2, self.v2)


def validate_witness(form: QuadraticFormQ, w: HyperbolicWitness) -> bool:
    """True iff the witness certifies two orthogonal hyperbolic planes."""
    for v in w.vectors():
        if len(v) != form.dim:
            raise DimensionMismatch("witness vector of wrong dimension")
    if any(form.q(v) != 0 for v in w.vectors()):
        return False
    if form.bilinear(w.u1, w.v1) == 0 or form.bilinear(w.u2, w.v2) == 0:
        return False
    for a in (w.u1, w.v1):
        for b in (w.u2, w.v2):
            if form.bilinear(a, b) != 0:
                return False
    return True


def on_quadric(form: QuadraticFormQ, p: ProjPointQ | Sequence) -> bool:
    v = p.rep if isinstance(p, ProjPointQ) else p
    return form.q(v) == 0


def orth_complement(form: QuadraticFormQ, p: ProjPointQ | Sequence) -> ProjSubspaceQ:
    """Kernel of x -> b(p, x) as a canonical subspace."""
    v = p.rep if isinstance(p, ProjPointQ) else p
    row = [sum(form.gram[i][j] * v[i] for i in range(form.dim)) for j in range(form.dim)]
    if all(a == 0 for a in row):
        raise DegenerateDirection("point pairs to zero with everything (radical direction)")
    j0 = next(j for j, a in enumerate(row) if a != 0)
    basis = []
    for j in range(form.dim):
        if j == j0:
            continue
        vec = [Fraction(0)] * form.dim
        vec[j] = row[j0]
        vec[j0] = -row[j]
        basis.append(vec)
    return subspace_span(basis, form.dim)


def s_h_quadric(form: QuadraticFormQ, h: ProjSubspaceQ, alpha: ProjPointQ) -> int:
    """The three-valued obstruction score of alpha relative to H.

    0 if alpha is outside H; 1 if inside with orthogonal complement
    different from H; 2 if inside and the complement equals H exactly.
    """
    if not on_quadric(form, alpha):
        raise NotOnQuadric(f"{alpha} is not a zero of the form")
    if not h.contains_point(alpha):
        return 0
    return 2 if orth_complement(form, alpha) == h else 1


def _coefficient_shells(r: int, height: int, rng: random.Random | None = None):
    """Primitive coefficient vectors with canonical sign, by max-norm shell."""
    from .multilinear import candidate_vectors

    for h in range(1, height + 1):
        shell = []
        for c in candidate_vectors(r, h):
            g = 0
            for a in c:
                g = gcd(g, a)
            if g != 1:
                continue
            lead = next(a for a in c if a != 0)
            if lead < 0:
                continue
            shell.append(c)
        if rng is not None:
            rng.shuffle(shell)
        yield from shell


def isotropic_in_subspace_outside(
    form: QuadraticFormQ,
    s: ProjSubspaceQ,
    h: ProjSubspaceQ,
    height: int,
    seeds: Sequence[Sequence] = (),
    rng: random.Random | None = None,
    prefer_small_area_to: ProjPointQ | None = None,
) -> ProjPointQ:
    """A zero of the form inside S but outside H, by exhaustive enumeration.

    Seeds are tried first; then primitive coefficient vectors over S's
    canonical basis up to the given max-norm height, in deterministic
    order.  When ``prefer_small_area_to`` is set, all valid candidates in
    the search range are collected and the one minimizing
    |anchor ∧ candidate|^2 wins (ties: earliest found), which keeps the
    construction's coordinate growth down.

    The per-candidate tests run in coefficient space: the form restricted
    to S is precomputed as an integer Gram matrix, and membership in H
    reduces to integer pairings with H's orthogonal functionals.
    """
    from .exact_geometry import orthogonal_functionals

    if all(h.contains(b) for b in s.basis):
        raise StepPreconditionError("search subspace is contained in the excluded one")
    candidates = []

    def consider(vec) -> ProjPointQ | None:
        if all(a == 0 for a in vec):
            return None
        if form.q(vec) != 0:
            return None
        pt = primitive(vec)
        if h.contains_point(pt):
            return None
        return pt

    for seed in seeds:
        pt = consider(tuple(seed))
        if pt is not None and s.contains_point(pt):
            candidates.append(pt)
    order_seen = {pt: i for i, pt in enumerate(candidates)}

    r = s.rank
    gram_frac = [[form.bilinear(s.basis[i], s.basis[j]) for j in range(r)] for i in range(r)]
    denom = 1
    for row in gram_frac:
        for a in row:
            denom = denom * a.denominator // gcd(denom, a.denominator)
    gram_int = [[int(a * denom) for a in row] for row in gram_frac]
    h_funcs = orthogonal_functionals(h)
    pairings = [[dot(f, b) for b in s.basis] for f in h_funcs]

    for coeffs in _coefficient_shells(r, height, rng):
        q_val = 0
        for i in range(r):
            ci = coeffs[i]
            if ci == 0:
                continue
            q_val += gram_int[i][i] * ci * ci
            for j in range(i + 1, r):
                if coeffs[j]:
                    q_val += 2 * gram_int[i][j] * ci * coeffs[j]
        if q_val != 0:
            continue
        if all(sum(c * w for c, w in zip(coeffs, row)) == 0 for row in pairings):
            continue  # inside H
        vec = [0] * s.ambient_dim
        for c, bas in zip(coeffs, s.basis):
            if c:
                for j, a in enumerate(bas):
                    vec[j] += c * a
        pt = primitive(vec)
        if pt not in order_seen:
            order_seen[pt] = len(order_seen)
            candidates.append(pt)
        if candidates and prefer_small_area_to is None:
            return candidates[0]
    if not candidates:
        raise HeightExhausted(f"no isotropic point in S outside H up to height {height}")
    if prefer_small_area_to is None:
        return candidates[0]
    anchor = prefer_small_area_to.rep
    return min(candidates, key=lambda p: (wedge_sq(anchor, p.rep), order_seen[p]))


def line_in_quadric_through(
    form: QuadraticFormQ,
    witness: HyperbolicWitness,
    alpha: ProjPointQ,
    h: ProjSubspaceQ,
    s: int,
    height: int = 6,
    rng: random.Random | None = None,
) -> tuple[ProjSubspaceQ, ProjPointQ]:
    """A totally isotropic rational line through alpha that lowers the score.

    For s = 1 the second generator is an isotropic point of the
    orthogonal complement of alpha outside H, so every other rational
    line point leaves H.  For s = 2 (complement equals H) any isotropic
    line through alpha works; the witness guarantees one exists.
    """
    if s not in (1, 2):
        raise StepPreconditionError(f"line construction needs score 1 or 2, got {s}")
    if not h.contains_point(alpha):
        raise StepPreconditionError("alpha must lie in the subspace")
    if not on_quadric(form, alpha):
        raise NotOnQuadric(f"{alpha} is not on the quadric")
    perp = orth_complement(form, alpha)
    w = witness.vectors()
    seeds = list(w)
    for a, b in itertools.product((w[0], w[1]), (w[2], w[3])):
        seeds.append(tuple(x + y for x, y in zip(a, b)))
        seeds.append(tuple(x - y for x, y in zip(a, b)))
    excluded = h if s == 1 else subspace_span([alpha.rep], form.dim)
    z = isotropic_in_subspace_outside(
        form, perp, excluded, height, seeds=seeds, rng=rng, prefer_small_area_to=alpha
    )
    line = subspace_span([alpha.rep, z.rep], form.dim)
    assert line.rank == 2
    return line, z


# ---------------------------------------------------------------------------
# built-in form and file format


def split4() -> tuple[QuadraticFormQ, HyperbolicWitness]:
    """The split form x0*x1 + x2*x3 on Q^4 with its standard witness."""
    half = Fraction(1, 2)
    zero = Fraction(0)
    gram = (
        (zero, half, zero, zero),
        (half, zero, zero, zero),
        (zero, zero, zero, half),
        (zero, zero, half, zero),
    )
    form = QuadraticFormQ(gram)
    wit = HyperbolicWitness((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))
    return form, wit


def save_form(form: QuadraticFormQ, witness: HyperbolicWitness, path: str) -> None:
    doc = {
        "dim": form.dim,
        "gram": [[str(a) for a in row] for row in form.gram],
        "witness": {
            "u1": [str(a) for a in witness.u1],
            "v1": [str(a) for a in witness.v1],
            "u2": [str(a) for a in witness.u2],
            "v2": [str(a) for a in witness.v2],
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_form(path: str) -> tuple[QuadraticFormQ, HyperbolicWitness]:
    with open(path) as fh:
        doc = json.load(fh)
    gram = tuple(tuple(Fraction(a) for a in row) for row in doc["gram"])
    form = QuadraticFormQ(gram)
    w = doc["witness"]
    wit = HyperbolicWitness(
        tuple(int(a) for a in w["u1"]),
        tuple(int(a) for a in w["v1"]),
        tuple(int(a) for a in w["u2"]),
        tuple(int(a) for a in w["v2"]),
    )
    if not validate_witness(form, wit):
        raise InvalidWitness(f"witness in {path} does not certify two hyperbolic planes")
    return form, wit
