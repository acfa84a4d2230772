"""Gradient-boosted trees: splits, leaf weights, training, and prediction."""

import math

import numpy as np
import pytest

from conftest import matrix
from cardiolearn.boosting import (
    BoostConfig,
    BoostedEnsemble,
    BoostMode,
    GradHess,
    TreeNode,
    TreeParams,
    fit_boosted,
    fit_tree,
    grad_hess,
    log_loss,
    sigmoid,
    training_log_loss,
)
from cardiolearn.errors import (
    BadHyperparameter,
    DimensionMismatch,
    EmptyNode,
    SingleClassDataset,
)
from cardiolearn.persistence import _serialize_tree


def oracle_split_candidates(values, g, h, params):
    """Independent exhaustive enumeration of every positive-gain candidate.

    Uses mask sums instead of prefix accumulation, so gain values are an
    arithmetic-independent check of the implementation's search.
    """
    g_sum = float(g.sum())
    h_sum = float(h.sum())
    parent = g_sum * g_sum / (h_sum + params.reg_lambda)
    candidates = []
    for feature in range(values.shape[1]):
        distinct = sorted(set(values[:, feature].tolist()))
        for lo, hi in zip(distinct, distinct[1:]):
            threshold = (lo + hi) / 2.0
            if not lo < threshold <= hi:
                continue
            mask = values[:, feature] < threshold
            hl = float(h[mask].sum())
            hr = float(h[~mask].sum())
            if hl < params.min_child_weight or hr < params.min_child_weight:
                continue
            gl = float(g[mask].sum())
            gr = float(g[~mask].sum())
            gain = 0.5 * (
                gl * gl / (hl + params.reg_lambda)
                + gr * gr / (hr + params.reg_lambda)
                - parent
            ) - params.gamma
            if gain > 0.0:
                candidates.append((feature, threshold, gain))
    return candidates


def check_root_split_against_oracle(node, values, g, h, params, context=""):
    """Exact argmax equality when the optimum is unique; optimality otherwise.

    Distinct features can induce the identical row partition, making their
    true gains exactly equal; which one a search returns then depends only
    on float summation order, so those ties are checked by gain optimality.
    """
    candidates = oracle_split_candidates(values, g, h, params)
    if not candidates:
        assert node.is_leaf, f"{context}: oracle found no positive-gain split"
        return
    assert not node.is_leaf, f"{context}: oracle found a positive-gain split"
    best_gain = max(c[2] for c in candidates)
    tol = 1e-9 * max(1.0, abs(best_gain))
    near = [c for c in candidates if best_gain - c[2] <= tol]
    assert node.gain == pytest.approx(best_gain, rel=1e-9), context
    if len(near) == 1:
        assert (node.feature, node.threshold) == near[0][:2], context
    else:
        assert (node.feature, node.threshold) in {c[:2] for c in near}, context


def separable_toy():
    return matrix([[-2.0], [-1.5], [-1.0], [1.0], [1.5], [2.0]], [0, 0, 0, 1, 1, 1])


def leaf_weights(node):
    if node.is_leaf:
        return [node.weight]
    return leaf_weights(node.left) + leaf_weights(node.right)


class TestGradHess:
    def test_zero_margin(self):
        gh = grad_hess(np.zeros(2), np.array([0.0, 1.0]))
        assert gh.g.tolist() == pytest.approx([0.5, -0.5])
        assert gh.h.tolist() == pytest.approx([0.25, 0.25])

    def test_matches_sigmoid_definition(self):
        margins = np.array([-3.2, -0.1, 0.0, 0.7, 4.5])
        labels = np.array([0.0, 1.0, 1.0, 0.0, 1.0])
        gh = grad_hess(margins, labels)
        for i, z in enumerate(margins):
            p = sigmoid(float(z))
            assert gh.g[i] == pytest.approx(p - labels[i], abs=1e-15)
            assert gh.h[i] == pytest.approx(p * (1.0 - p), abs=1e-15)

    def test_extreme_margins_stay_finite(self):
        gh = grad_hess(np.array([-800.0, 800.0]), np.array([1.0, 0.0]))
        assert np.all(np.isfinite(gh.g)) and np.all(np.isfinite(gh.h))
        assert gh.g[0] == pytest.approx(-1.0)
        assert gh.g[1] == pytest.approx(1.0)

    def test_bounds(self):
        margins = np.linspace(-30, 30, 101)
        gh = grad_hess(margins, np.zeros(101))
        assert np.all(gh.h >= 0.0) and np.all(gh.h <= 0.25)
        assert np.all(gh.g > -1.0) and np.all(gh.g < 1.0)


class TestTreeFitting:
    def test_leaf_weight_formula(self):
        m = matrix([[0.0]], [1])
        gh = GradHess(g=np.array([2.0]), h=np.array([4.0]))
        node = fit_tree(m, gh, TreeParams(max_depth=3, reg_lambda=1.0))
        assert node.is_leaf
        assert node.weight == pytest.approx(-0.4, abs=1e-15)

    def test_gain_arithmetic(self):
        m = matrix([[0.0], [1.0]], [0, 1])
        gh = GradHess(g=np.array([-4.0, 4.0]), h=np.array([4.0, 4.0]))
        node = fit_tree(m, gh, TreeParams(max_depth=1, reg_lambda=1.0, gamma=0.0))
        assert not node.is_leaf
        assert node.feature == 0
        assert node.threshold == pytest.approx(0.5)
        assert node.gain == pytest.approx(3.2, abs=1e-12)
        assert node.left.weight == pytest.approx(0.8)
        assert node.right.weight == pytest.approx(-0.8)

    def test_gamma_can_veto_the_split(self):
        m = matrix([[0.0], [1.0]], [0, 1])
        gh = GradHess(g=np.array([-4.0, 4.0]), h=np.array([4.0, 4.0]))
        node = fit_tree(m, gh, TreeParams(max_depth=1, reg_lambda=1.0, gamma=3.3))
        assert node.is_leaf
        relaxed = fit_tree(m, gh, TreeParams(max_depth=1, reg_lambda=1.0, gamma=3.1))
        assert not relaxed.is_leaf
        assert relaxed.gain == pytest.approx(0.1, abs=1e-12)

    def test_min_child_weight_blocks_low_curvature_children(self):
        m = matrix([[0.0], [1.0]], [0, 1])
        gh = GradHess(g=np.array([-0.5, 0.5]), h=np.array([0.25, 0.25]))
        node = fit_tree(m, gh, TreeParams(max_depth=1, min_child_weight=1.0, reg_lambda=0.0))
        assert node.is_leaf
        open_node = fit_tree(m, gh, TreeParams(max_depth=1, min_child_weight=0.0, reg_lambda=0.0))
        assert not open_node.is_leaf

    def test_constant_feature_yields_leaf(self):
        m = matrix([[1.0], [1.0], [1.0]], [0, 1, 0])
        gh = GradHess(g=np.array([1.0, -1.0, 1.0]), h=np.array([1.0, 1.0, 1.0]))
        node = fit_tree(m, gh, TreeParams(max_depth=3, min_child_weight=0.0))
        assert node.is_leaf

    def test_adjacent_float_midpoint_collapse_is_skipped(self):
        lo = 1.0
        hi = np.nextafter(1.0, 2.0)
        assert (lo + hi) / 2.0 == lo  # midpoint is unrepresentable between them
        m = matrix([[lo], [hi]], [0, 1])
        gh = GradHess(g=np.array([-4.0, 4.0]), h=np.array([4.0, 4.0]))
        node = fit_tree(m, gh, TreeParams(max_depth=1, min_child_weight=0.0))
        assert node.is_leaf

    def test_depth_limit_respected(self):
        gen = np.random.default_rng(5)
        m = matrix(gen.normal(0, 1, (32, 2)), gen.integers(0, 2, 32))
        gh = grad_hess(np.zeros(32), m.labels.astype(float))
        node = fit_tree(m, gh, TreeParams(max_depth=2, min_child_weight=0.0))
        def depth(n):
            return 0 if n.is_leaf else 1 + max(depth(n.left), depth(n.right))
        assert depth(node) <= 2

    def test_empty_node_rejected(self):
        m = matrix(np.empty((0, 1)), [])
        gh = GradHess(g=np.empty(0), h=np.empty(0))
        with pytest.raises(EmptyNode):
            fit_tree(m, gh, TreeParams())

    def test_lambda_shrinks_leaf_magnitude_monotonically(self):
        m = matrix([[0.0]], [1])
        gh = GradHess(g=np.array([3.0]), h=np.array([2.0]))
        magnitudes = [
            abs(fit_tree(m, gh, TreeParams(reg_lambda=lam)).weight)
            for lam in (0.0, 0.5, 1.0, 4.0, 16.0)
        ]
        assert all(a > b for a, b in zip(magnitudes, magnitudes[1:]))

    def test_root_split_matches_exhaustive_oracle(self):
        gen = np.random.default_rng(2024)
        lambdas = (0.0, 1.0, 3.5)
        gammas = (0.0, 0.2)
        mcws = (0.0, 1.0)
        for trial in range(60):
            n = int(gen.integers(2, 17))
            d = int(gen.integers(1, 4))
            values = np.round(gen.normal(0, 1, (n, d)), 3)
            g = gen.normal(0, 2, n)
            h = gen.uniform(0.05, 1.0, n)
            params = TreeParams(
                max_depth=1,
                reg_lambda=lambdas[trial % 3],
                gamma=gammas[trial % 2],
                min_child_weight=mcws[(trial // 2) % 2],
            )
            node = fit_tree(matrix(values, np.zeros(n, dtype=int)), GradHess(g, h), params)
            check_root_split_against_oracle(
                node, values, g, h, params, context=f"trial {trial}"
            )

    def test_leaf_weights_minimize_regularized_objective(self):
        gen = np.random.default_rng(55)
        values = gen.normal(0, 1, (40, 3))
        g = gen.normal(0, 1, 40)
        h = gen.uniform(0.05, 0.5, 40)
        lam = 1.0
        params = TreeParams(max_depth=2, reg_lambda=lam, min_child_weight=0.0)
        node = fit_tree(matrix(values, np.zeros(40, dtype=int)), GradHess(g, h), params)

        def collect(n, rows):
            if n.is_leaf:
                yield n, rows
                return
            mask = values[rows, n.feature] < n.threshold
            yield from collect(n.left, rows[mask])
            yield from collect(n.right, rows[~mask])

        def objective(rows, w):
            return float(g[rows].sum()) * w + 0.5 * (float(h[rows].sum()) + lam) * w * w

        for leaf, rows in collect(node, np.arange(40)):
            best = objective(rows, leaf.weight)
            assert objective(rows, leaf.weight + 1e-3) > best
            assert objective(rows, leaf.weight - 1e-3) > best


class TestRouting:
    def test_strictly_less_goes_left_else_right(self):
        node = TreeNode(
            feature=0,
            threshold=1.5,
            left=TreeNode(weight=-1.0),
            right=TreeNode(weight=2.0),
        )
        assert node.route(np.array([1.4])) == -1.0
        assert node.route(np.array([1.5])) == 2.0
        assert node.route(np.array([1.6])) == 2.0


class TestEnsemblePrediction:
    def test_empty_ensemble_returns_base(self):
        ens = BoostedEnsemble(mode=BoostMode.SECOND_ORDER, base_score=0.3, n_features=2)
        assert ens.predict_margin(np.array([5.0, -5.0])) == 0.3

    def test_single_leaf_tree_adds_weight(self):
        ens = BoostedEnsemble(
            mode=BoostMode.SECOND_ORDER,
            base_score=0.0,
            trees=[TreeNode(weight=-0.4)],
            n_features=1,
        )
        assert ens.predict_margin(np.array([0.0])) == pytest.approx(-0.4)

    def test_margin_to_probability(self):
        ens = BoostedEnsemble(mode=BoostMode.SECOND_ORDER, base_score=0.0, n_features=1)
        assert ens.predict_probability(np.array([0.0])) == pytest.approx(0.5)
        ens_pos = BoostedEnsemble(
            mode=BoostMode.SECOND_ORDER, base_score=math.log(3.0), n_features=1
        )
        assert ens_pos.predict_probability(np.array([0.0])) == pytest.approx(0.75, abs=1e-12)

    def test_very_negative_margin_clamped_above_zero(self):
        ens = BoostedEnsemble(mode=BoostMode.SECOND_ORDER, base_score=-50.0, n_features=1)
        p = ens.predict_probability(np.array([0.0]))
        assert p > 0.0
        assert p >= 1e-12

    def test_dimension_mismatch(self):
        ens = BoostedEnsemble(mode=BoostMode.SECOND_ORDER, base_score=0.0, n_features=3)
        with pytest.raises(DimensionMismatch):
            ens.predict_margin(np.array([1.0]))


class TestFitBoosted:
    def test_base_score_is_log_odds_of_positive_rate(self):
        m = matrix([[0.0], [1.0], [2.0], [3.0]], [1, 1, 1, 0])
        config = BoostConfig(mode=BoostMode.SECOND_ORDER, n_rounds=1)
        ens = fit_boosted(m, config)
        assert ens.base_score == pytest.approx(math.log(3.0), abs=1e-15)

    def test_hyperparameter_validation(self):
        m = separable_toy()
        for bad in (
            dict(n_rounds=0),
            dict(learning_rate=0.0),
            dict(learning_rate=1.5),
            dict(max_depth=0),
            dict(reg_lambda=-1.0),
            dict(gamma=-0.1),
            dict(min_child_weight=-0.5),
        ):
            config = BoostConfig(mode=BoostMode.SECOND_ORDER, **bad)
            with pytest.raises(BadHyperparameter):
                fit_boosted(m, config)

    def test_single_class_rejected(self):
        m = matrix([[0.0], [1.0]], [1, 1])
        with pytest.raises(SingleClassDataset):
            fit_boosted(m, BoostConfig(mode=BoostMode.SECOND_ORDER))

    @pytest.mark.parametrize("mode", [BoostMode.FIRST_ORDER, BoostMode.SECOND_ORDER])
    def test_separable_training_descends_and_separates(self, mode):
        m = separable_toy()
        config = BoostConfig(mode=mode, n_rounds=20, learning_rate=0.3, max_depth=1,
                             min_child_weight=0.0)
        ens = fit_boosted(m, config)
        assert len(ens.trees) == 20
        margins = np.full(m.n_rows, ens.base_score)
        losses = [log_loss(1.0 / (1.0 + np.exp(-margins)), m.labels)]
        for tree in ens.trees:
            margins = margins + np.array([tree.route(row) for row in m.values])
            losses.append(log_loss(1.0 / (1.0 + np.exp(-margins)), m.labels))
        for before, after in zip(losses, losses[1:]):
            assert after < before + 1e-9
        assert losses[-1] < losses[0]
        predictions = [1 if ens.predict_probability(row) >= 0.5 else 0 for row in m.values]
        assert predictions == m.labels.tolist()

    def test_learning_rate_scales_first_tree_leaves(self):
        m = separable_toy()
        base = dict(mode=BoostMode.SECOND_ORDER, n_rounds=1, max_depth=2, min_child_weight=0.0)
        small = fit_boosted(m, BoostConfig(learning_rate=0.1, **base))
        full = fit_boosted(m, BoostConfig(learning_rate=1.0, **base))
        w_small = leaf_weights(small.trees[0])
        w_full = leaf_weights(full.trees[0])
        assert w_small == pytest.approx([0.1 * w for w in w_full], rel=1e-12)

    def test_first_order_ignores_lambda_and_gamma(self):
        m = separable_toy()
        a = fit_boosted(m, BoostConfig(mode=BoostMode.FIRST_ORDER, n_rounds=5,
                                       reg_lambda=9.0, gamma=5.0, min_child_weight=0.0))
        b = fit_boosted(m, BoostConfig(mode=BoostMode.FIRST_ORDER, n_rounds=5,
                                       reg_lambda=0.0, gamma=0.0, min_child_weight=0.0))
        assert [_serialize_tree(t) for t in a.trees] == [_serialize_tree(t) for t in b.trees]
        assert a.reg_lambda == 0.0 and a.gamma == 0.0

    def test_modes_agree_when_regularization_is_zero(self):
        gen = np.random.default_rng(9)
        values = gen.normal(0, 1, (30, 3))
        labels = (values[:, 0] + 0.3 * gen.normal(0, 1, 30) > 0).astype(int)
        labels[0], labels[1] = 0, 1
        m = matrix(values, labels)
        first = fit_boosted(m, BoostConfig(mode=BoostMode.FIRST_ORDER, n_rounds=8,
                                           min_child_weight=0.0))
        second = fit_boosted(m, BoostConfig(mode=BoostMode.SECOND_ORDER, n_rounds=8,
                                            reg_lambda=0.0, gamma=0.0, min_child_weight=0.0))
        assert [_serialize_tree(t) for t in first.trees] == [
            _serialize_tree(t) for t in second.trees
        ]

    def test_stalls_immediately_on_uninformative_features(self):
        m = matrix([[1.0], [1.0], [1.0], [1.0]], [1, 1, 1, 0])
        ens = fit_boosted(m, BoostConfig(mode=BoostMode.SECOND_ORDER, n_rounds=50))
        assert ens.trees == []
        p = ens.predict_probability(np.array([1.0]))
        assert p == pytest.approx(0.75, abs=1e-12)

    def test_deterministic_refit(self):
        gen = np.random.default_rng(31)
        values = gen.normal(0, 1, (40, 4))
        labels = (values[:, 1] > 0).astype(int)
        labels[0], labels[1] = 0, 1
        m = matrix(values, labels)
        config = BoostConfig(mode=BoostMode.SECOND_ORDER, n_rounds=10)
        a = fit_boosted(m, config)
        b = fit_boosted(m, config)
        assert [_serialize_tree(t) for t in a.trees] == [_serialize_tree(t) for t in b.trees]
        assert a.base_score == b.base_score


class TestLogLoss:
    def test_even_odds(self):
        assert log_loss(np.array([0.5, 0.5]), np.array([0, 1])) == pytest.approx(
            math.log(2.0), abs=1e-15
        )

    def test_confident_correct(self):
        assert log_loss(np.array([0.75]), np.array([1])) == pytest.approx(0.28768, abs=1e-5)

    def test_clamped_at_certainty(self):
        exact = log_loss(np.array([1.0]), np.array([1]))
        assert 0.0 <= exact < 1e-11
        wrong = log_loss(np.array([0.0]), np.array([1]))
        assert wrong == pytest.approx(-math.log(1e-12), rel=1e-9)

    def test_training_log_loss_matches_manual(self):
        m = separable_toy()
        ens = fit_boosted(m, BoostConfig(mode=BoostMode.SECOND_ORDER, n_rounds=3,
                                         min_child_weight=0.0))
        probs = np.array([ens.predict_probability(row) for row in m.values])
        assert training_log_loss(ens, m) == pytest.approx(log_loss(probs, m.labels), abs=1e-15)
