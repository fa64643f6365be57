"""Independent auditing of traces.

Nothing recorded is trusted: membership, subspaces, distances and every
inequality of the construction are re-derived from the raw points.  The
best-approximation function is additionally measured against the
certified limit ball by exhaustive lattice enumeration at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt
from typing import Iterator, Sequence

from .builder import ApproxFn, CertifiedLimit, SequenceTrace, TraceTooShort, limit_point
from .exact_geometry import (
    IntVec,
    ProjPointQ,
    ZeroVector,
    dec_str,
    dist_sq,
    dot,
    ln_bounds,
    norm_sq,
    primitive,
    rank,
    sqrt_bounds,
    sqrt_bounds_rel,
    vec_add,
    vec_scale,
)
from .families import TracePoint, adapter_from_descriptor


class MalformedTrace(ValueError):
    pass


class TooLarge(ValueError):
    pass


class IndexOutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class DXiInterval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if not 0 <= self.lo <= self.hi:
            raise ValueError("invalid interval")


# ---------------------------------------------------------------------------
# condition audit


def check_conditions(trace: SequenceTrace, sample_range: int = 20) -> dict:
    """Re-derive every construction inequality from the recorded points.

    Returns a report dict with one record per step index; ``all_pass``
    aggregates them.  Failures carry the offending values.
    """
    if not trace.entries:
        raise MalformedTrace("empty trace")
    if len(trace.entries) < 2 and not trace.partial:
        raise MalformedTrace("a complete trace needs at least 2 points")
    try:
        adapter = adapter_from_descriptor(trace.family)
        phi = ApproxFn.from_descriptor(trace.phi)
    except (KeyError, ValueError) as exc:
        raise MalformedTrace(f"bad family or decay descriptor: {exc}") from exc
    if adapter.ambient_dim != trace.ambient_dim:
        raise MalformedTrace("ambient dimension does not match the family")
    points = trace.points()
    records = []
    all_pass = True
    first = trace.entries[0]
    rec0 = {"index": 0, "failures": []}
    if not adapter.member(TracePoint(first.x, first.witness)):
        rec0["failures"].append("(a) start point is not a certified member")
        all_pass = False
    records.append(rec0)
    dsq_prev = None
    for i, entry in enumerate(trace.entries[:-1], start=1):
        step = entry.step
        rec = {"index": i, "failures": []}
        fails = rec["failures"]
        if step is None:
            fails.append("missing step record")
            records.append(rec)
            all_pass = False
            break
        x, x_next = points[i - 1], points[i]
        # (a) membership with witness
        nxt_entry = trace.entries[i]
        if not adapter.member(TracePoint(nxt_entry.x, nxt_entry.witness)):
            fails.append("(a) next point is not a certified member")
        # subspace bookkeeping
        h_expect, j_expect = _recompute_h(points[:i], trace.ambient_dim)
        if step.j != j_expect or tuple(step.h_basis) != h_expect.basis:
            fails.append(f"recorded subspace differs from recomputation (j={step.j} vs {j_expect})")
        h = h_expect
        # step consistency: x_next == primitive(z + b*x)
        y = vec_add(step.z.rep, vec_scale(step.b, x.rep))
        if all(a == 0 for a in y) or primitive(y) != x_next:
            fails.append("next point is not primitive(z + b*x)")
        from .exact_geometry import wedge_sq as _wsq

        if _wsq(x.rep, step.z.rep) != step.wedge_sq:
            fails.append("recorded wedge area differs from recomputation")
        dsq = dist_sq(x_next.rep, x.rep)
        if dsq != step.dist_sq:
            fails.append("recorded squared distance differs from recomputation")
        # (b) strict norm growth
        if not x_next.norm_sq() > x.norm_sq():
            fails.append(
                f"(b) norm fails to grow: {x_next.norm_sq()} <= {x.norm_sq()}"
            )
        # (c) certified score decrease along the line; corrupt inputs make
        # the exact re-derivations raise, which is itself a failure
        if entry.witness is not None or step.certificate.get("kind") == "quadric":
            try:
                cert_fails = adapter.check_certificate(
                    TracePoint(x, entry.witness),
                    TracePoint(step.z, step.z_witness),
                    step.b,
                    h,
                    step.certificate,
                    sample_range=sample_range,
                )
                fails.extend(f"(c) {m}" for m in cert_fails)
            except (ValueError, RuntimeError, KeyError) as exc:
                fails.append(f"(c) certificate does not re-verify: {exc}")
        # norm bound sanity
        lo_expect = sqrt_bounds(x_next.norm_sq(), phi.precision_bits)[0]
        if step.norm_lo_next != lo_expect:
            fails.append("recorded norm lower bound differs from recomputation")
        # (d) for i >= 2, plus the distance-decay consequence
        if i >= 2:
            if dsq_prev is None:
                fails.append("missing previous distance for the telescoping check")
            else:
                if 9 * dsq > dsq_prev:
                    fails.append(f"(d) telescoping fails: 9*{dsq} > {dsq_prev}")
            t = Fraction(9, 4) * dsq * x.norm_sq()
            xeval = max(step.norm_lo_next, Fraction(1))
            if not phi.le_phi_sq_lo(t, x_next.norm_sq(), xeval):
                fails.append("(d) decay target fails at the recorded bound")
            if not phi.le_phi_sq_hi(t, x_next.norm_sq(), xeval):
                fails.append("(eq2) norm-weighted distance exceeds the decay upper bound")
            lo_b, hi_b = phi._phi_bounds(xeval)
            if step.phi_lo != lo_b or step.phi_hi != hi_b:
                fails.append("recorded decay bounds differ from recomputation")
        # tail spanning flag
        tail = rank([p.rep for p in points[1:i + 1]]) == trace.ambient_dim
        if step.tail_spans != tail:
            fails.append("recorded tail-spanning flag differs from recomputation")
        if fails:
            all_pass = False
        records.append(rec)
        dsq_prev = dsq
    return {"all_pass": all_pass, "conditions": records}


def _recompute_h(points: Sequence[ProjPointQ], ambient: int):
    from .builder import compute_hi

    return compute_hi(points, ambient)


# ---------------------------------------------------------------------------
# certified approximation measurements


def d_xi(limit: CertifiedLimit, x: Sequence, precision_bits: int = 64) -> DXiInterval:
    """Certified interval for the norm-weighted distance from x to the limit.

    Works against the certified ball: D(x) = |x| * dist(limit, [x]) lies in
    |x| * [max(0, d - r), d + r] with d the distance to the center and r
    the ball radius, all square roots outward-rounded.
    """
    if all(a == 0 for a in x):
        raise ZeroVector("zero vector has no projective class")
    dsq = dist_sq(x, limit.representative)
    d_lo, d_hi = sqrt_bounds(dsq, precision_bits + 4)
    r_lo, r_hi = sqrt_bounds(limit.radius_sq, precision_bits + 4)
    n_lo, n_hi = sqrt_bounds(norm_sq(x), precision_bits + 4)
    lo = n_lo * max(Fraction(0), d_lo - r_hi)
    hi = n_hi * (d_hi + r_hi)
    return DXiInterval(lo, hi)


def _primitive_points_in_ball(dim: int, x_max: int) -> Iterator[tuple[IntVec, int]]:
    """Primitive sign-canonical integer points with norm <= x_max, with norm^2."""
    limit_sq = x_max * x_max

    def rec(prefix: list[int], remaining: int, budget: int, started: bool):
        if remaining == 0:
            if started:
                yield tuple(prefix), limit_sq - budget
            return
        lo = 0 if not started else -isqrt(budget)
        hi = isqrt(budget)
        for c in range(lo, hi + 1):
            prefix.append(c)
            yield from rec(prefix, remaining - 1, budget - c * c, started or c > 0)
            prefix.pop()

    for vec, n2 in rec([], dim, limit_sq, False):
        g = 0
        for a in vec:
            g = gcd(g, a)
        if g == 1:
            yield vec, n2


def brute_force_curve(
    limit: CertifiedLimit,
    x_max: int,
    precision_bits: int = 64,
    cost_guard: int = 10 ** 8,
) -> list[dict]:
    """Exhaustive best-approximation intervals at every integer scale <= x_max.

    Enumerates all primitive integer points of norm <= x_max once.  For
    each X the returned row bounds min D over the ball of radius X:
    lo = min of candidate lower bounds, hi = min of candidate upper
    bounds, with the earliest candidate attaining hi as the minimizer.
    """
    dim = len(limit.representative)
    if x_max < 1:
        raise ValueError("x_max must be at least 1")
    est = (2 * x_max + 1) ** dim
    if est > cost_guard:
        raise TooLarge(f"enumeration would visit ~{est} points (guard {cost_guard})")
    rep = limit.representative
    r2 = norm_sq(rep)
    shift = precision_bits + 8
    scale = 1 << shift
    rnum, rden = limit.radius_sq.numerator, limit.radius_sq.denominator
    # r_hi scaled: ceil(sqrt(radius_sq) * 2^shift)
    r_hi_s = isqrt((rnum * scale * scale) // rden) + 1
    best: dict[int, list] = {}
    for vec, n2 in _primitive_points_in_ball(dim, x_max):
        dv = dot(vec, rep)
        wnum = n2 * r2 - dv * dv  # dist^2 = wnum / (n2 * r2)
        dden = n2 * r2
        d_lo_s = isqrt((wnum * scale * scale) // dden)
        d_hi_s = d_lo_s + 1
        n_lo_s = isqrt(n2 * scale * scale)
        n_hi_s = n_lo_s + 1
        lo_s = n_lo_s * max(0, d_lo_s - r_hi_s)
        hi_s = n_hi_s * (d_hi_s + r_hi_s)
        x_bucket = isqrt(n2 - 1) + 1 if n2 > 1 else 1  # smallest integer X with norm <= X
        cur = best.get(x_bucket)
        if cur is None:
            best[x_bucket] = [lo_s, hi_s, vec]
        else:
            if lo_s < cur[0]:
                cur[0] = lo_s
            if hi_s < cur[1]:
                cur[1] = hi_s
                cur[2] = vec
    rows = []
    run_lo, run_hi, run_arg = None, None, None
    for x in range(1, x_max + 1):
        if x in best:
            lo_s, hi_s, vec = best[x]
            if run_hi is None or hi_s < run_hi:
                run_hi, run_arg = hi_s, vec
            if run_lo is None or lo_s < run_lo:
                run_lo = lo_s
        if run_hi is None:
            continue
        rows.append(
            {
                "X": x,
                "lo": Fraction(run_lo, scale * scale),
                "hi": Fraction(run_hi, scale * scale),
                "argmin": run_arg,
            }
        )
    return rows


def brute_force_dmin(
    limit: CertifiedLimit,
    x_max: int,
    precision_bits: int = 64,
    cost_guard: int = 10 ** 8,
) -> tuple[DXiInterval, ProjPointQ]:
    """Certified interval for min D over primitive points of norm <= x_max."""
    rows = brute_force_curve(limit, x_max, precision_bits, cost_guard)
    if not rows:
        raise ValueError("no primitive points within the given norm bound")
    last = rows[-1]
    arg = ProjPointQ(tuple(last["argmin"]))
    exact = d_xi(limit, arg.rep, precision_bits)
    return DXiInterval(min(last["lo"], exact.lo), min(last["hi"], exact.hi)), arg


# ---------------------------------------------------------------------------
# exponent estimates


@dataclass(frozen=True)
class ExponentRow:
    index: int
    x_scale: Fraction     # certified lower bound of |x_{i+1}|, the scale X_i
    d_hi: Fraction        # certified upper bound on D(x_i)
    lambda_lb: Fraction   # certified lower bound: Dmin(X_i) <= X_i^(-lambda_lb)


def exponent_report(trace: SequenceTrace, precision_bits: int = 64) -> list[ExponentRow]:
    """Certified per-scale exponent lower bounds from a trace.

    For each step i >= 2 the telescoping gives
    D(x_i) <= (3/2) |x_i| dist(x_{i+1}, x_i) for every valid
    continuation, and x_i stays feasible at every scale X >= |x_i|, so
    -log(D_hi)/log(X_i) certifies the decay exponent at X_i.
    """
    if len(trace.entries) < 3:
        raise TraceTooShort("exponent estimates need at least 3 points")
    rows = []
    points = trace.points()
    for i in range(2, len(trace.entries)):
        entry = trace.entries[i - 1]
        step = entry.step
        if step is None:
            break
        x = points[i - 1]
        v = Fraction(9, 4) * step.dist_sq * x.norm_sq()
        d_hi = sqrt_bounds_rel(v, precision_bits + 4)[1]
        x_scale = step.norm_lo_next
        if x_scale * x_scale < x.norm_sq():
            x_scale = sqrt_bounds(x.norm_sq(), precision_bits + 4)[1]
        if x_scale <= 1 or d_hi == 0:
            continue
        ln_x_lo, ln_x_hi = ln_bounds(x_scale, precision_bits)
        if d_hi < 1:
            lam = ln_bounds(1 / d_hi, precision_bits)[0] / ln_x_hi
        else:
            lam = -ln_bounds(d_hi, precision_bits)[1] / ln_x_lo
        rows.append(ExponentRow(index=i, x_scale=x_scale, d_hi=d_hi, lambda_lb=lam))
    return rows


def spanning_check(trace: SequenceTrace, i0: int) -> bool:
    """True iff the points from index i0 on span the ambient space."""
    n = len(trace.entries)
    if not 2 <= i0 <= n:
        raise IndexOutOfRange(f"i0 must lie in [2, {n}]")
    return rank([p.rep for p in trace.points()[i0 - 1:]]) == trace.ambient_dim


# ---------------------------------------------------------------------------
# the full audit


def audit_report(
    trace: SequenceTrace,
    precision_bits: int = 64,
    bruteforce_xmax: int | None = None,
    sample_range: int = 20,
) -> dict:
    """Full audit: conditions, exponents, spanning, optional brute force."""
    report = check_conditions(trace, sample_range=sample_range)
    n = len(trace.entries)
    spanning = {str(i0): spanning_check(trace, i0) for i0 in range(2, n + 1)}
    report["spanning"] = spanning
    span_required = range(2, n - trace.ambient_dim + 1)
    span_ok = all(spanning[str(i0)] for i0 in span_required)
    if not span_ok:
        report["all_pass"] = False
    report["spanning_required_ok"] = span_ok
    if n >= 3:
        lim = limit_point(trace, precision_bits)
        report["limit"] = {
            "representative": [str(a) for a in lim.representative],
            "radius_sq": str(lim.radius_sq),
        }
        report["exponents"] = [
            {
                "index": r.index,
                "X": str(r.x_scale),
                "X_dec": dec_str(r.x_scale, 6),
                "D_hi": str(r.d_hi),
                "D_hi_dec": dec_str(r.d_hi, 12),
                "lambda_lb": str(r.lambda_lb),
                "lambda_lb_dec": dec_str(r.lambda_lb, 12),
            }
            for r in exponent_report(trace, precision_bits)
        ]
    else:
        report["limit"] = None
        report["exponents"] = []
    if bruteforce_xmax is not None and n >= 3:
        phi = ApproxFn.from_descriptor(trace.phi)
        lim = limit_point(trace, precision_bits)
        rows = brute_force_curve(lim, bruteforce_xmax, precision_bits)
        x2_norm_sq = trace.points()[1].norm_sq()
        out_rows = []
        all_dominated = True
        for row in rows:
            x = row["X"]
            applicable = x * x >= x2_norm_sq
            dominated = None
            phi_hi = None
            if applicable:
                phi_hi = phi.phi_hi(Fraction(x))
                dominated = row["hi"] <= phi_hi
                if not dominated:
                    all_dominated = False
            out_rows.append(
                {
                    "X": x,
                    "lo": str(row["lo"]),
                    "hi": str(row["hi"]),
                    "hi_dec": dec_str(row["hi"], 12),
                    "argmin": [str(a) for a in row["argmin"]],
                    "phi_hi": None if phi_hi is None else str(phi_hi),
                    "dominated": dominated,
                }
            )
        report["bruteforce"] = {
            "xmax": bruteforce_xmax,
            "rows": out_rows,
            "all_dominated": all_dominated,
        }
        if not all_dominated:
            report["all_pass"] = False
    else:
        report["bruteforce"] = None
    report["partial"] = trace.partial
    return report
