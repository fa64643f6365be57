"""Recursive construction of approximation sequences with a full audit trail.

Each step takes a line through the current point inside the obstruction
subspace, then picks the smallest multiplier b >= 1 such that
x_next = primitive(z + b*x) grows in norm, telescopes the previous
projective distance by 1/3, and lands under the decay target.  Every
inequality is decided in exact rational arithmetic and every value needed
to re-derive it is recorded in the trace.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .exact_geometry import (
    IntVec,
    ProjPointQ,
    ProjSubspaceQ,
    dist_sq,
    dot,
    inth_root,
    ln_bounds,
    norm_sq,
    primitive,
    rank,
    sqrt_bounds,
    subspace_span,
    vec_add,
    vec_scale,
    wedge_sq,
)
from .families import SearchBudget, TracePoint


class InvalidSteps(ValueError):
    pass


class TraceTooShort(ValueError):
    pass


class NoValidMultiplier(RuntimeError):
    pass


class BudgetExceeded(RuntimeError):
    """Raised when a run cannot continue; carries the partial trace."""

    def __init__(self, message: str, partial: "SequenceTrace"):
        super().__init__(message)
        self.partial = partial


# ---------------------------------------------------------------------------
# decay targets


@dataclass(frozen=True)
class ApproxFn:
    """Monotonically decreasing decay target on [1, oo) with values in (0, 1].

    Two variants: ``log3x`` is min(1, log(3X)/X); ``pow`` is X^(-p/q) with
    exponent p/q in (0, 1).  Both provide certified rational bounds
    phi_lo <= phi <= phi_hi with gap at most 2^-precision_bits, and the
    power law additionally decides comparisons against phi^2 exactly by
    cross-multiplied integer powers, with no rounding at all.
    """

    variant: str
    exponent: Fraction | None = None
    precision_bits: int = 64

    def __post_init__(self):
        if self.variant not in ("log3x", "pow"):
            raise ValueError(f"unknown decay variant {self.variant!r}")
        if self.variant == "pow":
            if self.exponent is None or not 0 < self.exponent < 1:
                raise ValueError("power-law exponent must lie strictly between 0 and 1")
        elif self.exponent is not None:
            raise ValueError("log3x takes no exponent")

    def descriptor(self) -> dict:
        d = {"variant": self.variant, "precision_bits": self.precision_bits}
        if self.variant == "pow":
            d["exponent"] = str(self.exponent)
        return d

    @staticmethod
    def from_descriptor(d: dict) -> "ApproxFn":
        exponent = Fraction(d["exponent"]) if d.get("exponent") is not None else None
        return ApproxFn(d["variant"], exponent, int(d.get("precision_bits", 64)))

    def phi_lo(self, x: Fraction) -> Fraction:
        return self._phi_bounds(x)[0]

    def phi_hi(self, x: Fraction) -> Fraction:
        return self._phi_bounds(x)[1]

    def _phi_bounds(self, x: Fraction) -> tuple[Fraction, Fraction]:
        x = Fraction(x)
        if x < 1:
            raise ValueError("decay target is only defined for X >= 1")
        if self.variant == "log3x":
            lo, hi = ln_bounds(3 * x, self.precision_bits + 2)
            return (min(lo / x, Fraction(1)), min(hi / x, Fraction(1)))
        p, q = self.exponent.numerator, self.exponent.denominator
        r = x ** p
        lo_r, hi_r = _nth_root_bounds_frac(r, q, self.precision_bits + 2)
        return (1 / hi_r, 1 / lo_r)

    def le_phi_sq_lo(self, t: Fraction, norm_sq_next, norm_lo: Fraction) -> bool:
        """Decide t <= phi(X)^2 conservatively, X = sqrt(norm_sq_next).

        The power law compares exactly: t <= norm_sq^(-p/q) iff
        t^q * norm_sq^p <= 1.  log3x compares against the certified
        lower bound evaluated at the recorded rational norm bound.
        """
        if t < 0:
            return True
        if self.variant == "pow":
            p, q = self.exponent.numerator, self.exponent.denominator
            return t ** q * Fraction(norm_sq_next) ** p <= 1
        lo = self.phi_lo(max(norm_lo, Fraction(1)))
        return t <= lo * lo

    def le_phi_sq_hi(self, t: Fraction, norm_sq_next, norm_lo: Fraction) -> bool:
        """Decide t <= phi_hi(X)^2 (the auditable upper-bound flavour)."""
        if t < 0:
            return True
        if self.variant == "pow":
            p, q = self.exponent.numerator, self.exponent.denominator
            return t ** q * Fraction(norm_sq_next) ** p <= 1
        hi = self.phi_hi(max(norm_lo, Fraction(1)))
        return t <= hi * hi


def _nth_root_bounds_frac(r: Fraction, n: int, bits: int) -> tuple[Fraction, Fraction]:
    from .exact_geometry import nth_root_bounds

    return nth_root_bounds(r, n, bits)


# ---------------------------------------------------------------------------
# trace data


@dataclass(frozen=True)
class StepData:
    j: int
    h_basis: tuple[IntVec, ...]
    z: ProjPointQ
    z_witness: tuple | None
    b: int
    wedge_sq: int
    dist_sq: Fraction
    norm_lo_next: Fraction
    phi_lo: Fraction | None
    phi_hi: Fraction | None
    tail_spans: bool
    certificate: dict


@dataclass(frozen=True)
class TraceEntry:
    index: int
    x: ProjPointQ
    witness: tuple | None
    step: StepData | None


@dataclass
class SequenceTrace:
    family: dict
    phi: dict
    ambient_dim: int
    seed: int
    entries: list[TraceEntry] = field(default_factory=list)
    partial: bool = False
    budget_note: str | None = None

    def points(self) -> list[ProjPointQ]:
        return [e.x for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class CertifiedLimit:
    """Ball certified to contain the limit of every valid continuation."""

    representative: IntVec
    radius_sq: Fraction


# ---------------------------------------------------------------------------
# construction steps


def compute_hi(points: Sequence[ProjPointQ], ambient_dim: int) -> tuple[ProjSubspaceQ, int]:
    """Largest proper subspace spanned by a suffix of the points.

    Returns (H, j) with H the span of points[j-1:], j the smallest
    1-based index making that span proper.  Always defined for ambient
    dimension >= 2 since a single point spans one dimension.  Suffix
    ranks are nonincreasing in j, so the smallest proper suffix is found
    by binary search over integer rank computations.
    """
    n = len(points)
    reps = [p.rep for p in points]

    def proper(j: int) -> bool:
        return rank(reps[j - 1:]) < ambient_dim

    if ambient_dim < 2:
        raise ValueError("ambient dimension must be at least 2")
    if proper(1):
        j = 1
    else:
        lo, hi = 1, n  # proper(lo) is False, proper(hi) is True (single point)
        while lo + 1 < hi:
            mid = (lo + hi) // 2
            if proper(mid):
                hi = mid
            else:
                lo = mid
        j = hi
    return subspace_span(reps[j - 1:], ambient_dim), j


def _ceil_root(a: int, b: int, r: int) -> int:
    """ceil((a/b)^(1/r)) for a, b > 0."""
    m = inth_root(a // b, r)
    while m ** r * b < a:
        m += 1
    return m


def _select_multiplier(
    x: ProjPointQ,
    z: ProjPointQ,
    phi: ApproxFn,
    dsq_prev: Fraction | None,
    budget: SearchBudget,
) -> tuple[int, ProjPointQ, Fraction, Fraction]:
    """Smallest multiplier b >= 1 meeting the step conditions.

    Returns (b, x_next, dist_sq, norm_lo_next).  Conditions are monotone
    in b on the growing branch of |z + b*x| except at sporadic content
    jumps of the primitive representative; the returned b always passes
    the full exact test even if a smaller sporadic solution was skipped.
    """
    xr, zr = x.rep, z.rep
    n2x = norm_sq(xr)
    dzx = dot(zr, xr)
    n2z = norm_sq(zr)
    w2 = wedge_sq(xr, zr)
    prec = phi.precision_bits
    if dsq_prev is not None:
        p_num, p_den = dsq_prev.numerator, dsq_prev.denominator
    if phi.variant == "pow":
        pp, qq = phi.exponent.numerator, phi.exponent.denominator
        w9q = (9 * w2) ** qq  # decay test: (9 w2)^q * n2p^p <= (4 n2y)^q

    def attempt(b: int):
        # all comparisons are cross-multiplied integers; the one Fraction
        # (the returned distance) is built only for the accepted b
        y = vec_add(zr, vec_scale(b, xr))
        if all(a == 0 for a in y):
            return None
        p = primitive(y)
        n2p = p.norm_sq()
        if n2p <= n2x:
            return None
        n2y = n2z + 2 * b * dzx + b * b * n2x
        norm_lo = sqrt_bounds(n2p, prec)[0]
        if dsq_prev is None:
            return b, p, Fraction(w2, n2x * n2y), norm_lo
        if 9 * w2 * p_den > p_num * n2x * n2y:
            return None
        if phi.variant == "pow":
            if w9q * n2p ** pp > (4 * n2y) ** qq:
                return None
        else:
            lo = phi.phi_lo(max(norm_lo, Fraction(1)))
            if 9 * w2 * lo.denominator ** 2 > 4 * n2y * lo.numerator ** 2:
                return None
        return b, p, Fraction(w2, n2x * n2y), norm_lo

    # exhaust the region where |z + b*x| may still be shrinking
    vertex_end = 0 if dzx >= 0 else (-dzx) // n2x + 1
    scan_end = min(vertex_end, 4096) + 8
    for b in range(1, scan_end + 1):
        r = attempt(b)
        if r is not None:
            return r

    # analytic lower bound on |z + b*x|^2 from the necessary conditions,
    # exact in the model where z + b*x is already primitive
    theta = n2x + 1
    if dsq_prev is not None:
        need = Fraction(9 * w2, n2x) / dsq_prev
        theta = max(theta, need.numerator // need.denominator + 1)
        if phi.variant == "pow":
            p_, q_ = phi.exponent.numerator, phi.exponent.denominator
            val = Fraction(9 * w2, 4) ** q_  # need n2y^(q-p) >= val
            theta = max(theta, _ceil_root(val.numerator, val.denominator, q_ - p_))
    if theta > n2z:
        disc = dzx * dzx + n2x * (theta - n2z)
        b_hint = max(scan_end + 1, (-dzx + inth_root(disc, 2)) // n2x)
    else:
        b_hint = scan_end + 1
    for b in range(b_hint, b_hint + 64):
        r = attempt(b)
        if r is not None:
            return r

    # doubling then bisection on the monotone branch
    lo = b_hint + 63
    b = max(2 * lo, 2)
    while b.bit_length() <= budget.multiplier_bits:
        if attempt(b) is not None:
            hi = b
            break
        lo = b
        b *= 2
    else:
        raise NoValidMultiplier(
            "no multiplier up to 2^%d satisfies the step conditions "
            "(squared wedge area %s forces norm growth beyond the cap)"
            % (budget.multiplier_bits, w2)
        )
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if attempt(mid) is not None:
            hi = mid
        else:
            lo = mid
    result = attempt(hi)
    assert result is not None
    return result


def _reduce_line_generator(x: ProjPointQ, witness, z_tp: TracePoint, cert: dict, adapter):
    """Shift z by a multiple of x to center it on the line.

    Keeps the line and the wedge area, but brings the multiplier search
    into a short monotone range; b >= 1 relative to the reduced z covers
    exactly the norm-growing side of the line.
    """
    from . import multilinear as ml

    n2x = x.norm_sq()
    dzx = dot(z_tp.point.rep, x.rep)
    r = (2 * (-dzx) + n2x) // (2 * n2x)
    if r == 0:
        return z_tp, cert
    y = vec_add(z_tp.point.rep, vec_scale(r, x.rep))
    z_new = primitive(y)
    if z_tp.witness is None:
        return TracePoint(z_new), cert
    line_cert = adapter._cert_from_doc(cert)
    w = ml.line_witness(
        line_cert, ml.WitnessedPoint(x, witness), ml.WitnessedPoint(z_tp.point, z_tp.witness), r
    )
    k = next(i for i, a in enumerate(z_new.rep) if a != 0)
    scale = Fraction(y[k], z_new.rep[k])
    cert = dict(cert)
    cert["z_scale"] = str(scale)
    return TracePoint(z_new, w), cert


def next_point(
    points: list[ProjPointQ],
    witnesses: list,
    adapter,
    phi: ApproxFn,
    dsq_prev: Fraction | None,
    budget: SearchBudget,
    rng: random.Random | None,
) -> tuple[TracePoint, StepData]:
    """Extend the sequence by one audited step."""
    x = points[-1]
    h, j = compute_hi(points, adapter.ambient_dim)
    tp = TracePoint(x, witnesses[-1])
    z_tp, cert = adapter.line_step(tp, h, budget, rng)
    z_tp, cert = _reduce_line_generator(x, witnesses[-1], z_tp, cert, adapter)
    b, x_next, dsq, norm_lo = _select_multiplier(x, z_tp.point, phi, dsq_prev, budget)
    phi_lo = phi_hi = None
    if dsq_prev is not None:
        xeval = max(norm_lo, Fraction(1))
        phi_lo, phi_hi = phi._phi_bounds(xeval)
    next_witness = None
    if z_tp.witness is not None:
        from . import multilinear as ml

        kmap = adapter.kmap
        line_cert = adapter._cert_from_doc(cert)
        next_witness = ml.line_witness(
            line_cert, ml.WitnessedPoint(x, witnesses[-1]), ml.WitnessedPoint(z_tp.point, z_tp.witness), b
        )
    new_points = points + [x_next]
    tail = rank([p.rep for p in new_points[1:]]) == adapter.ambient_dim
    step = StepData(
        j=j,
        h_basis=h.basis,
        z=z_tp.point,
        z_witness=z_tp.witness,
        b=b,
        wedge_sq=wedge_sq(x.rep, z_tp.point.rep),
        dist_sq=dist_sq(x_next.rep, x.rep),
        norm_lo_next=norm_lo,
        phi_lo=phi_lo,
        phi_hi=phi_hi,
        tail_spans=tail,
        certificate=cert,
    )
    return TracePoint(x_next, next_witness), step


def run(
    adapter,
    phi: ApproxFn,
    steps: int,
    seed: int = 0,
    budget: SearchBudget | None = None,
    start: TracePoint | None = None,
) -> SequenceTrace:
    """Construct a trace with the given number of points.

    A budget failure raises BudgetExceeded carrying the partial trace
    built so far, flagged as partial.
    """
    if steps < 2:
        raise InvalidSteps("a run needs at least 2 points")
    budget = budget or SearchBudget()
    rng = random.Random(seed) if seed else None
    tp = start or adapter.start()
    if not adapter.member(tp):
        raise ValueError("start point is not a certified member of the family")
    trace = SequenceTrace(
        family=adapter.descriptor(),
        phi=phi.descriptor(),
        ambient_dim=adapter.ambient_dim,
        seed=seed,
    )
    from .multilinear import BudgetExhausted, DegenerateLine
    from .quadric import HeightExhausted

    points = [tp.point]
    witnesses = [tp.witness]
    entries: list[TraceEntry] = []
    dsq_prev: Fraction | None = None
    for i in range(1, steps):
        try:
            nxt, step = next_point(points, witnesses, adapter, phi,
                                   dsq_prev if i >= 2 else None, budget, rng)
        except (NoValidMultiplier, BudgetExhausted, HeightExhausted, DegenerateLine) as exc:
            trace.entries = entries + [TraceEntry(i, points[-1], witnesses[-1], None)]
            trace.partial = True
            trace.budget_note = f"stopped at point {i}: {exc}"
            raise BudgetExceeded(str(exc), trace) from exc
        entries.append(TraceEntry(i, points[-1], witnesses[-1], step))
        points.append(nxt.point)
        witnesses.append(nxt.witness)
        dsq_prev = step.dist_sq
    entries.append(TraceEntry(steps, points[-1], witnesses[-1], None))
    trace.entries = entries
    return trace


def limit_point(trace: SequenceTrace, precision_bits: int = 64) -> CertifiedLimit:
    """Ball around the last point containing the limit of any valid continuation.

    The telescoping condition bounds the remaining travel by a geometric
    series with ratio 1/3, so (3/2) * dist(x_last, x_prev) is a certified
    radius; its square is exact, no rounding needed.
    """
    if len(trace.entries) < 3:
        raise TraceTooShort("limit extraction needs at least 3 points")
    last = trace.entries[-1].x
    dsq = trace.entries[-2].step.dist_sq
    return CertifiedLimit(representative=last.rep, radius_sq=Fraction(9, 4) * dsq)


# ---------------------------------------------------------------------------
# trace (de)serialization


def _vec_strs(v) -> list[str]:
    return [str(Fraction(a)) for a in v]


def _witness_doc(w):
    if w is None:
        return None
    return [[str(Fraction(c)) for c in vec] for vec in w]


def trace_to_doc(trace: SequenceTrace) -> dict:
    entries = []
    for e in trace.entries:
        doc = {
            "index": e.index,
            "x": _vec_strs(e.x.rep),
            "witness": _witness_doc(e.witness),
            "step": None,
        }
        if e.step is not None:
            s = e.step
            doc["step"] = {
                "j": s.j,
                "H_basis": [_vec_strs(r) for r in s.h_basis],
                "z": _vec_strs(s.z.rep),
                "z_witness": _witness_doc(s.z_witness),
                "b": str(s.b),
                "wedge_sq": str(s.wedge_sq),
                "dist_sq": str(s.dist_sq),
                "norm_lo_next": str(s.norm_lo_next),
                "phi_lo": None if s.phi_lo is None else str(s.phi_lo),
                "phi_hi": None if s.phi_hi is None else str(s.phi_hi),
                "tail_spans": s.tail_spans,
                "certificate": s.certificate,
            }
        entries.append(doc)
    return {
        "version": 1,
        "family": trace.family,
        "phi": trace.phi,
        "ambient_dim": trace.ambient_dim,
        "seed": trace.seed,
        "partial": trace.partial,
        "budget_note": trace.budget_note,
        "entries": entries,
    }


def _parse_witness(doc):
    if doc is None:
        return None
    return tuple(tuple(Fraction(c) for c in vec) for vec in doc)


def trace_from_doc(doc: dict) -> SequenceTrace:
    trace = SequenceTrace(
        family=doc["family"],
        phi=doc["phi"],
        ambient_dim=int(doc["ambient_dim"]),
        seed=int(doc.get("seed", 0)),
        partial=bool(doc.get("partial", False)),
        budget_note=doc.get("budget_note"),
    )
    for e in doc["entries"]:
        step = None
        if e.get("step") is not None:
            s = e["step"]
            step = StepData(
                j=int(s["j"]),
                h_basis=tuple(tuple(int(Fraction(a)) for a in r) for r in s["H_basis"]),
                z=ProjPointQ(tuple(int(Fraction(a)) for a in s["z"])),
                z_witness=_parse_witness(s.get("z_witness")),
                b=int(s["b"]),
                wedge_sq=int(Fraction(s["wedge_sq"])),
                dist_sq=Fraction(s["dist_sq"]),
                norm_lo_next=Fraction(s["norm_lo_next"]),
                phi_lo=None if s.get("phi_lo") is None else Fraction(s["phi_lo"]),
                phi_hi=None if s.get("phi_hi") is None else Fraction(s["phi_hi"]),
                tail_spans=bool(s["tail_spans"]),
                certificate=s["certificate"],
            )
        trace.entries.append(
            TraceEntry(
                index=int(e["index"]),
                x=ProjPointQ(tuple(int(Fraction(a)) for a in e["x"])),
                witness=_parse_witness(e.get("witness")),
                step=step,
            )
        )
    return trace


def save_trace(trace: SequenceTrace, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(trace_to_doc(trace), fh, indent=2)
        fh.write("\n")


def load_trace(path: str) -> SequenceTrace:
    with open(path) as fh:
        return trace_from_doc(json.load(fh))
