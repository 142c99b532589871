import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from confbound.bounds import support_upper_bound
from confbound.calibrate import (
    DELTA_GRID,
    CalibrationResult,
    DeltaPair,
    SlackConfig,
    calibrate,
    coupled_width,
    delta2_from_delta1,
    format_report,
    loss,
    loss_gradient,
    optimize_deltas,
    parse_report,
    slack_penalty,
    split_budget,
    threshold_from_delta,
)
from confbound.projection import ClassStats, Projection, ProjectionStats, compute_stats, exclusion_order


def stats(r1, r2, n1, n2, d, mean1=0.0):
    return ProjectionStats(ClassStats(n1, mean1, r1), ClassStats(n2, mean1 + d, r2), d)


REF = stats(1.0, 1.0, 100, 10, 3.0)


def proj(neg, pos):
    s = np.concatenate([neg, pos]).astype(float)
    return Projection.from_scores(s, np.concatenate([-np.ones(len(neg)), np.ones(len(pos))]))


def reference_delta2(d1, st_):
    c1, c2 = st_.class1, st_.class2
    B = st_.d_hat - c1.support - c1.support / math.sqrt(c1.n_included) * (2 + math.sqrt(-2 * math.log(d1))) - c2.support
    z = B * math.sqrt(c2.n_included) / c2.support - 2
    return None if z < 0 else math.exp(-0.5 * z * z)


def brute_min(st_, grid=np.geomspace(1e-12, 1.0, 20001)):
    best = math.inf
    for d1 in grid:
        d2 = reference_delta2(d1, st_)
        if d2 is not None:
            best = min(best, loss(DeltaPair(d1, max(d2, 1e-300)), st_.class1.n_included, st_.class2.n_included))
    return best


class TestDelta2:
    def test_reference(self):
        assert delta2_from_delta1(0.5, REF) == pytest.approx(0.98767, abs=1e-4)

    def test_infeasible(self):
        assert delta2_from_delta1(1.0, stats(1.0, 1.0, 100, 10, 2.0)) is None

    def test_zero_class2_support_infeasible(self):
        assert delta2_from_delta1(0.5, stats(1.0, 0.0, 100, 10, 30.0)) is None

    @pytest.mark.parametrize("d1", [0.0, 1.0000001, -1.0])
    def test_rejects_out_of_range(self, d1):
        with pytest.raises(ValueError):
            delta2_from_delta1(d1, REF)

    @given(st.floats(1e-3, 10), st.floats(1e-3, 10), st.integers(2, 2000), st.integers(2, 2000),
           st.floats(0, 100), st.floats(1e-12, 1.0))
    def test_in_unit_interval_and_meets(self, r1, r2, n1, n2, d, d1):
        s = stats(r1, r2, n1, n2, d)
        d2 = delta2_from_delta1(d1, s)
        if d2 is None:
            return
        assert 0 < d2 <= 1
        if d2 > 1e-250:
            assert coupled_width(DeltaPair(d1, d2), s) == pytest.approx(d, rel=1e-8)


class TestLoss:
    def test_all_ones(self):
        assert loss(DeltaPair(1.0, 1.0), 7, 1234) == 2.0

    def test_small_deltas(self):
        assert loss(DeltaPair(1e-300, 1e-300), 100, 10) == pytest.approx(1 / 101 + 1 / 11, abs=1e-12)
        assert 1 / 101 + 1 / 11 == pytest.approx(0.10081, abs=1e-5)

    def test_reference(self):
        d2 = delta2_from_delta1(0.5, REF)
        assert loss(DeltaPair(0.5, d2), 100, 10) == pytest.approx(1.49377, abs=1e-4)


class TestGradient:
    def test_reference(self):
        assert loss_gradient(0.5, REF) == pytest.approx(0.9141, abs=1e-3)

    def test_matches_finite_difference(self):
        h = 1e-6
        f = lambda d: loss(DeltaPair(d, delta2_from_delta1(d, REF)), 100, 10)
        fd = (f(0.5 + h) - f(0.5 - h)) / (2 * h)
        assert loss_gradient(0.5, REF) == pytest.approx(fd, rel=1e-6)

    def test_printed_form_agrees_only_for_equal_supports_and_counts(self):
        def printed(d1, s):
            c1, c2 = s.class1, s.class2
            n1, n2 = c1.n_included, c2.n_included
            B = s.d_hat - c1.support - c1.support / math.sqrt(n1) * (2 + math.sqrt(-2 * math.log(d1))) - c2.support
            d2 = delta2_from_delta1(d1, s)
            dd2 = -(B * math.sqrt(n1) / c1.support - 2) * math.sqrt(n2) / (d1 * math.sqrt(n1)) \
                / math.sqrt(-2 * math.log(d1)) * d2
            return n1 / (n1 + 1) + dd2 * n2 / (n2 + 1)

        same = stats(1.5, 1.5, 40, 40, 9.0)
        assert printed(0.3, same) == pytest.approx(loss_gradient(0.3, same), rel=1e-12)
        assert printed(0.3, REF) != pytest.approx(loss_gradient(0.3, REF), rel=1e-3)

    @pytest.mark.parametrize("d1", [1.0, 0.0])
    def test_domain(self, d1):
        with pytest.raises(ValueError):
            loss_gradient(d1, REF)

    def test_infeasible_point(self):
        with pytest.raises(ValueError):
            loss_gradient(0.5, stats(1.0, 1.0, 100, 10, 2.0))


class TestOptimize:
    @pytest.mark.parametrize("s", [
        REF,
        stats(1.0, 1.0, 100, 100, 8.0),
        stats(0.3, 2.0, 1000, 10, 8.0),
        stats(2.0, 0.3, 15, 400, 6.0),
        stats(1.0, 1.0, 5, 5, 4.5),
    ])
    def test_not_worse_than_brute_force(self, s):
        sol = optimize_deltas(s)
        assert sol is not None
        assert sol.loss <= brute_min(s) + 1e-6
        assert coupled_width(sol.deltas, s) == pytest.approx(s.d_hat, rel=1e-8)

    def test_infeasible(self):
        assert optimize_deltas(stats(1.0, 1.0, 100, 10, 2.0)) is None

    def test_unrepresentable_separation_clamps(self):
        # the meeting levels would be ~1e-314, below the smallest normal double
        sol = optimize_deltas(stats(1.0, 1.0, 100, 100, 10.0))
        assert sol.deltas.delta2 >= np.finfo(float).tiny
        assert sol.loss == pytest.approx(2 / 101, abs=1e-15)

    def test_symmetric(self):
        sol = optimize_deltas(stats(1.0, 1.0, 200, 200, 12.0))
        assert abs(sol.deltas.delta1 - sol.deltas.delta2) <= 1e-6

    def test_grid_is_sorted_and_bounded(self):
        assert np.all(np.diff(DELTA_GRID) > 0)
        assert DELTA_GRID[0] > 0 and DELTA_GRID[-1] == 1.0

    @settings(max_examples=30)
    @given(st.floats(0.05, 5), st.floats(0.05, 5), st.integers(2, 500), st.integers(2, 500), st.floats(0.1, 40))
    def test_property_vs_brute_force(self, r1, r2, n1, n2, d):
        s = stats(r1, r2, n1, n2, d)
        sol = optimize_deltas(s)
        feasible_ref = reference_delta2(1.0, s) is not None
        assert (sol is not None) == feasible_ref
        if sol is not None:
            assert sol.loss <= brute_min(s, np.geomspace(1e-12, 1.0, 3001)) + 1e-6


class TestSlackPenalty:
    def test_none_excluded(self):
        p = proj([0, 1, 2], [5, 6, 7])
        s = compute_stats(p)
        assert slack_penalty(p, s, SlackConfig("binary")) == 0.0
        assert slack_penalty(p, s, SlackConfig("continuous")) == 0.0

    def test_binary_counts(self):
        p = proj([0, 1, 2, 3, 4], [5, 6, 7, 8]).with_excluded([0, 4, 8])
        assert slack_penalty(p, compute_stats(p), SlackConfig("binary", alpha=1.0)) == 3.0

    def test_continuous_distance(self):
        p = proj([0, 1, 2, 10], [20, 21]).with_excluded([3])
        assert slack_penalty(p, compute_stats(p), SlackConfig("continuous", alpha=1.0)) == 9.0

    def test_alpha_scales(self):
        p = proj([0, 1, 2, 10], [20, 21]).with_excluded([3])
        assert slack_penalty(p, compute_stats(p), SlackConfig("continuous", alpha=0.5)) == 4.5


class TestThreshold:
    def test_examples(self):
        s = stats(1.0, 1.0, 100, 10, 5.0)
        assert threshold_from_delta(1.0, s) == 1.2
        assert threshold_from_delta(0.5, s) == pytest.approx(1.31774, abs=1e-5)

    def test_two_sided_identity(self):
        sol = optimize_deltas(REF)
        t = threshold_from_delta(sol.deltas.delta1, REF)
        other = REF.class2.proj_mean - support_upper_bound(REF.class2.support, 10, sol.deltas.delta2)
        assert t == pytest.approx(other, abs=1e-6 * REF.d_hat)


class TestSplitBudget:
    @pytest.mark.parametrize("m,n1,n2,want", [
        (0, 100, 10, (0, 0)), (11, 100, 10, (10, 1)), (5, 50, 50, (3, 2)), (1, 1000, 10, (1, 0)),
    ])
    def test_proportional(self, m, n1, n2, want):
        assert split_budget(m, n1, n2) == want

    def test_equal(self):
        assert split_budget(5, 100, 10, "equal") == (3, 2)

    def test_floor_of_two(self):
        assert split_budget(200, 100, 10) == (98, 8)


class TestCalibrate:
    def test_separable_needs_no_slack(self):
        rng = np.random.default_rng(0)
        p = proj(rng.uniform(-1, 1, 300), rng.uniform(9, 11, 300))
        r = calibrate(p)
        assert r.feasible and r.best_budget == 0 and r.excluded == ()
        assert r.bias_out == -r.threshold

    def test_stragglers_are_excluded(self):
        rng = np.random.default_rng(1)
        neg = rng.uniform(-1, 1, 60)
        pos = np.concatenate([rng.uniform(9, 11, 30), [-0.5, 0.5]])
        p = proj(neg, pos)
        cfg = SlackConfig(budget="all", allocation="equal")
        r = calibrate(p, cfg)

        # exhaustive oracle over the same sweep
        first_feasible, best = None, math.inf
        ord1, ord2 = exclusion_order(p, 1), exclusion_order(p, 2)
        for m in range(len(p) + 1):
            a, b = split_budget(m, 60, 32, "equal")
            q = p.with_excluded(np.concatenate([ord1[:a], ord2[:b]]))
            s = compute_stats(q, orientation=1)
            if reference_delta2(1.0, s) is None:
                continue
            first_feasible = m if first_feasible is None else first_feasible
            best = min(best, brute_min(s, np.geomspace(1e-12, 1.0, 2001)) + (a + b))
        assert r.feasible
        assert first_feasible is not None and r.best_budget >= first_feasible
        assert r.loss <= best + 1e-6
        assert {60 + 30, 60 + 31} <= set(r.excluded)

    def test_interleaved_is_infeasible(self):
        s = np.arange(40, dtype=float)
        p = proj(s[0::2], s[1::2])
        r = calibrate(p, SlackConfig(budget=20))
        assert not r.feasible and r.best_budget == -1
        assert "retrain" in r.advisory
        assert all(not c.feasible for c in r.curve)
        with pytest.raises(ValueError):
            r.predict([0.0])

    def test_reversed_orientation_predictions(self):
        rng = np.random.default_rng(2)
        p = proj(rng.uniform(9, 11, 50), rng.uniform(-1, 1, 50))
        r = calibrate(p)
        assert r.orientation == -1
        np.testing.assert_array_equal(r.predict(p.scores), p.labels)

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        p = proj(rng.normal(0, 1, 200), rng.normal(3, 1, 20))
        a, b = calibrate(p, SlackConfig(budget="all")), calibrate(p, SlackConfig(budget="all"))
        assert format_report(a) == format_report(b)

    def test_ignores_incoming_exclusions(self):
        rng = np.random.default_rng(4)
        p = proj(rng.normal(0, 1, 50), rng.normal(6, 1, 10))
        assert format_report(calibrate(p)) == format_report(calibrate(p.with_excluded([0, 1, 2])))

    def test_small_class_rejected(self):
        with pytest.raises(ValueError):
            calibrate(proj([0.0], [5.0, 6.0]))

    def test_budget_too_large(self):
        with pytest.raises(ValueError):
            calibrate(proj([0, 1, 2], [5, 6]), SlackConfig(budget=6))

    def test_curve_has_one_point_per_budget(self):
        r = calibrate(proj(np.arange(10.0), np.arange(20.0, 25.0)), SlackConfig(budget=7))
        assert [c.m for c in r.curve] == list(range(8))

    def test_report_round_trip(self):
        rng = np.random.default_rng(5)
        r = calibrate(proj(rng.normal(0, 1, 80), rng.normal(5, 1, 8)))
        back = parse_report(format_report(r))
        assert back["feasible"] is True
        assert back["threshold"] == r.threshold and back["delta1"] == r.deltas.delta1
        assert back["excluded"] == r.excluded and back["best_budget"] == r.best_budget

    @pytest.mark.parametrize("kwargs", [
        {"mode": "fuzzy"}, {"alpha": -1.0}, {"allocation": "random"}, {"budget": "most"}, {"budget": -3},
    ])
    def test_slack_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            SlackConfig(**kwargs)

    @settings(max_examples=25)
    @given(st.lists(st.floats(-5, 5), min_size=3, max_size=30),
           st.lists(st.floats(-5, 5), min_size=3, max_size=10),
           st.floats(0.5, 20))
    def test_feasible_results_meet(self, neg, pos, gap):
        p = proj(neg, np.asarray(pos) + gap)
        r = calibrate(p, SlackConfig(budget="all"))
        assume(r.feasible)
        # below the smallest normal double the meeting level is not representable
        assume(r.deltas.delta2 > np.finfo(float).tiny)
        s = r.stats
        assert coupled_width(r.deltas, s) == pytest.approx(s.d_hat, rel=1e-8)
        other = s.class2.proj_mean - support_upper_bound(s.class2.support, s.class2.n_included, r.deltas.delta2)
        assert r.threshold == pytest.approx(other, abs=1e-6 * s.d_hat)
        assert isinstance(r, CalibrationResult)

    def test_degenerate_supports_hit_the_clamp(self):
        # class 1 collapses to a point and class 2 keeps only rounding noise
        r = calibrate(proj([0.0, 0.0, 0.0], [1.9, 1.9, 1.9]), SlackConfig(budget="all"))
        assert r.feasible
        assert r.deltas.delta2 == np.finfo(float).tiny
        assert coupled_width(r.deltas, r.stats) < r.stats.d_hat
        # a zero-width class-1 support puts t' on the class-1 scores themselves
        assert r.threshold == 0.0
