import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from confbound.baselines import (
    CostPair,
    bmr_decide,
    imbalance_costs,
    interpolate,
    platt_fit,
    smote,
    threshold_search,
)
from confbound.dataset import Dataset, SyntheticSpec, gen_gaussian


def total_cost(scores, labels, t, costs):
    pred = np.where(scores >= t, 1, -1)
    fp = np.sum((pred > 0) & (labels < 0))
    fn = np.sum((pred < 0) & (labels > 0))
    return costs.cost_fp * fp + costs.cost_fn * fn


class TestSmote:
    @pytest.fixture
    def data(self):
        return gen_gaussian(SyntheticSpec((1.0, 1.0, 0.5), 120, 9, 0))

    def test_midpoint(self):
        assert interpolate(np.array([0.0, 0.0]), np.array([1.0, 1.0]), 0.5).tolist() == [0.5, 0.5]

    def test_balances(self, data):
        assert smote(data, k=5, seed=1).class_counts() == (120, 120)

    def test_originals_first_and_unchanged(self, data):
        out = smote(data, seed=2)
        np.testing.assert_array_equal(out.features[: len(data)], data.features)
        np.testing.assert_array_equal(out.labels[: len(data)], data.labels)

    def test_no_new_majority_points(self, data):
        out = smote(data, seed=3)
        assert np.all(out.labels[len(data):] == 1)

    def test_two_points_stay_on_segment(self):
        d = Dataset(np.array([[0.0, 0.0], [1.0, 1.0], [5.0, 0.0], [6.0, 0.0], [7.0, 0.0]]), [1, 1, -1, -1, -1])
        out = smote(d, k=1, seed=0)
        synth = out.features[len(d):]
        assert synth.shape == (1, 2)
        assert synth[0, 0] == pytest.approx(synth[0, 1]) and 0 <= synth[0, 0] <= 1

    def test_minority_can_be_negative_class(self):
        d = gen_gaussian(SyntheticSpec((1.0,), 5, 40, 4))
        out = smote(d, seed=0)
        assert out.class_counts() == (40, 40)
        assert np.all(out.labels[len(d):] == -1)

    def test_already_balanced(self):
        d = gen_gaussian(SyntheticSpec((1.0,), 6, 6, 0))
        assert smote(d) is d

    def test_needs_two_minority(self):
        d = Dataset(np.array([[0.0], [1.0], [2.0]]), [1, -1, -1])
        with pytest.raises(ValueError):
            smote(d)

    def test_deterministic(self, data):
        np.testing.assert_array_equal(smote(data, seed=9).features, smote(data, seed=9).features)


class TestThresholdSearch:
    def test_separated(self):
        s = np.array([0.0, 1.0, 2.0, 5.0, 6.0])
        y = np.array([-1, -1, -1, 1, 1])
        t = threshold_search(s, y, CostPair(1, 1))
        assert t == 3.5
        assert total_cost(s, y, t, CostPair(1, 1)) == 0

    def test_symmetric_equal_costs(self):
        s = np.array([-3.0, -2.0, -1.0, 1.0, 2.0, 3.0])
        y = np.array([-1, -1, 1, -1, 1, 1])
        # -1.5 and +1.5 both cost one error; the larger threshold wins
        t = threshold_search(s, y, CostPair(1, 1))
        assert total_cost(s, y, t, CostPair(1, 1)) == 1
        assert t == 1.5

    def test_costly_false_negatives_lower_the_threshold(self):
        rng = np.random.default_rng(0)
        s = np.concatenate([rng.normal(0, 1, 900), rng.normal(1.5, 1, 100)])
        y = np.concatenate([-np.ones(900), np.ones(100)])
        eq = threshold_search(s, y, CostPair(1, 1))
        skew = threshold_search(s, y, CostPair(1, 9))
        assert skew <= eq
        # exhaustive check that each is optimal for its own costs
        cand = np.concatenate([[-np.inf], np.sort(s), [np.inf]])
        for t, c in ((eq, CostPair(1, 1)), (skew, CostPair(1, 9))):
            assert total_cost(s, y, t, c) == min(total_cost(s, y, u, c) for u in cand)

    @given(st.lists(st.integers(-1000, 1000), min_size=2, max_size=40, unique=True), st.data())
    def test_monotone_transform_keeps_decisions(self, scores, data):
        # integer grid keeps the transformed scores distinct in floating point
        s = np.array(scores) / 7.0
        y = np.array(data.draw(st.lists(st.sampled_from([-1, 1]), min_size=len(s), max_size=len(s))))
        if not ((y > 0).any() and (y < 0).any()):
            y[0], y[1] = -1, 1
        costs = CostPair(1.0, data.draw(st.floats(0.1, 10)))
        t1 = threshold_search(s, y, costs)
        g = lambda v: np.exp(v / 50.0) + v ** 3
        t2 = threshold_search(g(s), y, costs)
        np.testing.assert_array_equal(s >= t1, g(s) >= t2)

    def test_one_class(self):
        with pytest.raises(ValueError):
            threshold_search([0.0, 1.0], [1, 1], CostPair(1, 1))


class TestCosts:
    def test_imbalance(self):
        y = np.array([-1] * 1000 + [1] * 10)
        assert imbalance_costs(y) == CostPair(1.0, 100.0)

    def test_balanced(self):
        assert imbalance_costs(np.array([-1, 1, -1, 1])) == CostPair(1.0, 1.0)

    def test_rejects_non_positive(self):
        with pytest.raises(ValueError):
            CostPair(0.0, 1.0)

    @given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
    def test_scaling_leaves_decisions(self, fp, fn, c):
        p = np.linspace(0.0, 1.0, 101)
        a = bmr_decide(p, CostPair(fp, fn))
        b = bmr_decide(p, CostPair(c * fp, c * fn))
        # the cut c*fp/(c*fp+c*fn) may round differently only at an exact tie
        assert np.sum(a != b) <= 1

    def test_scaling_threshold_search(self):
        rng = np.random.default_rng(1)
        s = rng.normal(size=200)
        y = np.where(rng.random(200) < 0.2, 1, -1)
        for c in (0.5, 4.0, 64.0):
            assert threshold_search(s, y, CostPair(c, 3 * c)) == threshold_search(s, y, CostPair(1, 3))


class TestBmr:
    def test_equal_costs(self):
        assert bmr_decide([0.49, 0.5, 0.51], CostPair(1, 1)).tolist() == [-1, 1, 1]

    def test_nine_to_one(self):
        assert bmr_decide([0.09, 0.1, 0.11], CostPair(1, 9)).tolist() == [-1, 1, 1]

    def test_matches_prior_threshold(self):
        y = np.array([-1] * 90 + [1] * 10)
        p = np.linspace(0, 1, 1001)
        np.testing.assert_array_equal(bmr_decide(p, imbalance_costs(y)), np.where(p >= 10 / 100, 1, -1))


class TestPlatt:
    def test_probabilities_in_open_interval(self):
        rng = np.random.default_rng(0)
        s = np.concatenate([rng.normal(-2, 1, 100), rng.normal(2, 1, 20)])
        y = np.concatenate([-np.ones(100), np.ones(20)])
        params = platt_fit(s, y)
        p = params.predict_proba(np.linspace(-30, 30, 101))
        assert np.all((p > 0) & (p < 1))
        assert params.slope > 0

    def test_separable_stays_finite(self):
        params = platt_fit([-2.0, -1.0, 1.0, 2.0], [-1, -1, 1, 1])
        assert np.isfinite(params.slope) and np.isfinite(params.intercept)

    def test_degenerate_scores(self):
        with pytest.raises(ValueError):
            platt_fit([1.0, 1.0, 1.0], [-1, 1, -1])

    def test_recovers_logistic_map(self):
        rng = np.random.default_rng(5)
        s = rng.normal(0, 2, 20000)
        y = np.where(rng.random(20000) < 1 / (1 + np.exp(-(1.5 * s - 0.5))), 1, -1)
        params = platt_fit(s, y)
        assert params.slope == pytest.approx(1.5, abs=0.1)
        assert params.intercept == pytest.approx(-0.5, abs=0.1)
