import copy
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from maxsing.builder import CertifiedLimit, limit_point, trace_from_doc, trace_to_doc
from maxsing.exact_geometry import dist_sq, primitive, sqrt_bounds
from maxsing.verifier import (
    DXiInterval,
    IndexOutOfRange,
    MalformedTrace,
    TooLarge,
    audit_report,
    brute_force_curve,
    brute_force_dmin,
    check_conditions,
    d_xi,
    exponent_report,
    spanning_check,
)


def tamper(trace, mutate):
    doc = copy.deepcopy(trace_to_doc(trace))
    mutate(doc)
    return trace_from_doc(doc)


class TestCheckConditions:
    def test_builder_traces_pass(self, split4_log3x_trace, split4_pow_trace,
                                 grassmann_pow_trace, prodforms_pow_trace):
        for tr in (split4_log3x_trace, split4_pow_trace,
                   grassmann_pow_trace, prodforms_pow_trace):
            report = check_conditions(tr)
            assert report["all_pass"], [r for r in report["conditions"] if r["failures"]]

    def test_swapped_points_break_norm_order(self, split4_pow_trace):
        def swap(doc):
            e = doc["entries"]
            e[2]["x"], e[3]["x"] = e[3]["x"], e[2]["x"]

        report = check_conditions(tamper(split4_pow_trace, swap))
        assert not report["all_pass"]
        failing = {r["index"] for r in report["conditions"] if r["failures"]}
        assert failing

    def test_off_variety_point_breaks_membership(self, split4_pow_trace):
        def corrupt(doc):
            doc["entries"][3]["x"] = ["1", "1", "0", "0"]  # q = 1 there

        report = check_conditions(tamper(split4_pow_trace, corrupt))
        bad = [r for r in report["conditions"] if r["failures"]]
        assert any("(a)" in msg for r in bad for msg in r["failures"])

    def test_tampered_distance_detected(self, split4_pow_trace):
        def corrupt(doc):
            doc["entries"][2]["step"]["dist_sq"] = "1/7"

        report = check_conditions(tamper(split4_pow_trace, corrupt))
        assert not report["all_pass"]

    def test_tampered_multiplier_detected(self, grassmann_pow_trace):
        def corrupt(doc):
            doc["entries"][1]["step"]["b"] = str(int(doc["entries"][1]["step"]["b"]) + 1)

        report = check_conditions(tamper(grassmann_pow_trace, corrupt))
        assert not report["all_pass"]

    def test_malformed_trace_rejected(self, split4_pow_trace):
        doc = copy.deepcopy(trace_to_doc(split4_pow_trace))
        doc["family"] = {"kind": "nonsense"}
        with pytest.raises(MalformedTrace):
            check_conditions(trace_from_doc(doc))

    def test_undersized_multiplier_names_condition_d(self, split4_pow_trace):
        # rewrite the last step consistently with a smaller multiplier:
        # the builder chose the minimal one, so the decay or telescoping
        # part of (d) must now fail, and nothing else should
        from maxsing.builder import ApproxFn
        from maxsing.exact_geometry import primitive as prim, rank, sqrt_bounds, vec_add, vec_scale

        tr = trace_from_doc(copy.deepcopy(trace_to_doc(split4_pow_trace)))
        entry = tr.entries[-2]
        x, z, b = entry.x, entry.step.z, entry.step.b
        b_small = next(
            bb for bb in range(1, b)
            if prim(vec_add(z.rep, vec_scale(bb, x.rep))).norm_sq() > x.norm_sq()
        )
        new_last = prim(vec_add(z.rep, vec_scale(b_small, x.rep)))
        phi = ApproxFn.from_descriptor(tr.phi)
        norm_lo = sqrt_bounds(new_last.norm_sq(), phi.precision_bits)[0]
        phi_lo, phi_hi = phi._phi_bounds(max(norm_lo, Fraction(1)))
        pts = [e.x.rep for e in tr.entries[:-1]] + [new_last.rep]
        doc = trace_to_doc(tr)
        step = doc["entries"][-2]["step"]
        step["b"] = str(b_small)
        step["dist_sq"] = str(dist_sq(new_last.rep, x.rep))
        step["norm_lo_next"] = str(norm_lo)
        step["phi_lo"], step["phi_hi"] = str(phi_lo), str(phi_hi)
        step["tail_spans"] = rank(pts[1:]) == tr.ambient_dim
        doc["entries"][-1]["x"] = [str(a) for a in new_last.rep]
        report = check_conditions(trace_from_doc(doc))
        assert not report["all_pass"]
        msgs = [m for r in report["conditions"] for m in r["failures"]]
        assert any(m.startswith("(d)") for m in msgs)
        # nothing unrelated breaks: only (d) and its decay consequence
        assert all(m.startswith(("(d)", "(eq2)")) for m in msgs)


class TestDXi:
    def test_center_of_ball(self, split4_pow_trace):
        lim = limit_point(split4_pow_trace)
        iv = d_xi(lim, lim.representative)
        assert iv.lo == 0
        assert iv.hi > 0

    def test_rational_limit_exact(self):
        lim = CertifiedLimit(representative=(1, 2, 3), radius_sq=Fraction(0))
        iv = d_xi(lim, (1, 2, 3))
        assert iv.lo == iv.hi == 0

    def test_unit_direction_value(self):
        # distance from e1 to [(1,1,1,1)] is sqrt(3)/2, weighted by |e1| = 1
        lim = CertifiedLimit(representative=(1, 1, 1, 1), radius_sq=Fraction(0))
        iv = d_xi(lim, (1, 0, 0, 0), precision_bits=64)
        ref = Fraction(8660254037844386, 10 ** 16)  # sqrt(3)/2 bracket
        assert iv.lo <= ref + Fraction(1, 10 ** 15)
        assert iv.hi >= ref - Fraction(1, 10 ** 15)
        assert iv.hi - iv.lo <= Fraction(1, 2 ** 64)

    def test_scale_consistency(self):
        lim = CertifiedLimit(representative=(3, 1, 4, 1), radius_sq=Fraction(1, 10 ** 8))
        a = d_xi(lim, (1, 2, 0, -1))
        b = d_xi(lim, (3, 6, 0, -3))
        # same true value scaled by 3: intervals must overlap after scaling
        assert max(3 * a.lo, b.lo) <= min(3 * a.hi, b.hi)

    @given(st.tuples(*[st.integers(-20, 20)] * 4).filter(lambda v: any(v)),
           st.integers(min_value=1, max_value=9))
    @settings(max_examples=500, derandomize=True)
    def test_primitive_filter_justification(self, v, lam):
        # D(lam * x) = lam * D(x): non-primitive points never win
        lim = CertifiedLimit(representative=(7, -2, 5, 1), radius_sq=Fraction(1, 10 ** 10))
        a = d_xi(lim, v)
        b = d_xi(lim, tuple(lam * c for c in v))
        assert max(lam * a.lo, b.lo) <= min(lam * a.hi, b.hi)
        assert dist_sq(v, lim.representative) == dist_sq(tuple(lam * c for c in v), lim.representative)

    def test_refinement_soundness(self, split4_pow_trace):
        lim = limit_point(split4_pow_trace)
        x = (1, 2, 3, 4)
        coarse = d_xi(lim, x, precision_bits=16)
        fine = d_xi(lim, x, precision_bits=96)
        assert coarse.lo <= fine.lo and fine.hi <= coarse.hi


class TestBruteForce:
    def test_rational_limit_found_exactly(self):
        lim = CertifiedLimit(representative=(1, 2, 1), radius_sq=Fraction(0))
        iv, arg = brute_force_dmin(lim, 3)
        assert iv.lo == iv.hi == 0
        assert arg.rep == (1, 2, 1)

    def test_unit_ball_minimum(self):
        # over the four signed unit directions the minimum is sqrt(3)/2
        lim = CertifiedLimit(representative=(1, 1, 1, 1), radius_sq=Fraction(0))
        iv, arg = brute_force_dmin(lim, 1)
        ref_sq = Fraction(3, 4)
        assert iv.lo * iv.lo <= ref_sq <= iv.hi * iv.hi
        assert sorted(abs(a) for a in arg.rep) == [0, 0, 0, 1]

    def test_constructed_point_never_beaten_upward(self, split4_log3x_trace):
        lim = limit_point(split4_log3x_trace)
        x2 = split4_log3x_trace.entries[1].x
        n = 1
        while n * n < x2.norm_sq():
            n += 1
        iv, _ = brute_force_dmin(lim, n)
        assert iv.hi <= d_xi(lim, x2.rep).hi

    def test_cost_guard(self):
        lim = CertifiedLimit(representative=(1,) * 8, radius_sq=Fraction(0))
        with pytest.raises(TooLarge):
            brute_force_curve(lim, 100)

    def test_curve_monotone(self, split4_log3x_trace):
        lim = limit_point(split4_log3x_trace)
        rows = brute_force_curve(lim, 8)
        for a, b in zip(rows, rows[1:]):
            assert b["hi"] <= a["hi"]


class TestExponent:
    def test_certified_lower_bound_semantics(self, split4_log3x_trace):
        rows = exponent_report(split4_log3x_trace)
        lim = limit_point(split4_log3x_trace)
        for r in rows:
            # the bound it certifies: Dmin(X) <= D(x_index) <= D_hi <= X^(-lambda)
            assert r.d_hi > 0
            x = split4_log3x_trace.entries[r.index - 1].x
            assert d_xi(lim, x.rep).hi <= r.d_hi + Fraction(1, 2 ** 40)

    def test_exact_reciprocal_gives_exponent_one(self):
        # D = X^-1 pins lambda at 1: test the certified-ratio arithmetic
        from maxsing.exact_geometry import ln_bounds

        x = Fraction(10)
        d = Fraction(1, 10)
        lam = ln_bounds(1 / d, 64)[0] / ln_bounds(x, 64)[1]
        assert Fraction(1) - Fraction(1, 2 ** 50) <= lam <= 1

    def test_short_trace_rejected(self, split4_form):
        from maxsing.builder import ApproxFn, TraceTooShort, run
        from maxsing.families import quadric_adapter

        form, wit = split4_form
        tr = run(quadric_adapter(form, wit), ApproxFn("log3x"), 2)
        with pytest.raises(TraceTooShort):
            exponent_report(tr)

    def test_log3x_trend(self, split4_log3x_trace):
        rows = exponent_report(split4_log3x_trace)
        assert [float(r.lambda_lb) for r in rows] == sorted(float(r.lambda_lb) for r in rows)


class TestSpanning:
    def test_pow_traces_span(self, split4_pow_trace, grassmann_pow_trace, prodforms_pow_trace):
        for tr in (split4_pow_trace, grassmann_pow_trace, prodforms_pow_trace):
            n = len(tr.entries)
            for i0 in range(2, n - tr.ambient_dim + 1):
                assert spanning_check(tr, i0)

    def test_short_suffix_cannot_span(self, split4_pow_trace):
        n = len(split4_pow_trace.entries)
        assert not spanning_check(split4_pow_trace, n)

    def test_truncated_trace(self, split4_log3x_trace):
        assert not spanning_check(split4_log3x_trace, 3)

    def test_index_range(self, split4_pow_trace):
        with pytest.raises(IndexOutOfRange):
            spanning_check(split4_pow_trace, 1)
        with pytest.raises(IndexOutOfRange):
            spanning_check(split4_pow_trace, len(split4_pow_trace.entries) + 1)


class TestAuditReport:
    def test_full_report_structure(self, split4_log3x_trace):
        report = audit_report(split4_log3x_trace, bruteforce_xmax=6)
        assert report["all_pass"]
        assert report["partial"]
        assert report["spanning_required_ok"]
        assert report["limit"] is not None
        assert report["exponents"]
        assert report["bruteforce"]["all_dominated"]
        for row in report["bruteforce"]["rows"]:
            if row["dominated"] is not None:
                assert row["dominated"]

    def test_domination_rows_reference_phi(self, split4_log3x_trace):
        report = audit_report(split4_log3x_trace, bruteforce_xmax=5)
        applicable = [r for r in report["bruteforce"]["rows"] if r["phi_hi"] is not None]
        assert applicable
        for row in applicable:
            assert Fraction(row["hi"]) <= Fraction(row["phi_hi"])
