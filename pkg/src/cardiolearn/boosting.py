"""Regression-tree weak learners and two log-loss boosting drivers.

Both drivers share the same exact-greedy tree machinery. Per boosting round,
with p = sigmoid(margin):

    gradient   g = p - y
    curvature  h = p * (1 - p)
    leaf       w = -G / (H + lambda)
    split gain = 0.5 * (GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda)) - gamma

where G, H sum g, h over the rows at a node. Second-order mode exposes
lambda and gamma; first-order mode runs the identical machinery with both
pinned to zero, so the two modes differ exactly by regularization.

Split search is exhaustive: every feature, every midpoint between
consecutive distinct sorted values. Equal gains keep the lowest feature
index, then the lowest threshold, so fits are fully deterministic.
"""

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    BadHyperparameter,
    DimensionMismatch,
    EmptyNode,
    SingleClassDataset,
)
from .preprocess import FeatureMatrix

PROB_CLAMP = 1e-12
_STALL_EPS = 1e-12


class BoostMode(enum.Enum):
    FIRST_ORDER = "first_order"
    SECOND_ORDER = "second_order"


@dataclass
class TreeNode:
    """Internal node (feature/threshold/children) or leaf (weight only).

    Routing: value < threshold goes left, otherwise right.
    """
    feature: Optional[int] = None
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    weight: float = 0.0
    gain: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def route(self, x: np.ndarray) -> float:
        node = self
        while not node.is_leaf:
            node = node.left if x[node.feature] < node.threshold else node.right
        return node.weight

    def scale_weights(self, factor: float) -> None:
        if self.is_leaf:
            self.weight *= factor
        else:
            self.left.scale_weights(factor)
            self.right.scale_weights(factor)


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 3
    reg_lambda: float = 1.0
    gamma: float = 0.0
    min_child_weight: float = 1.0


@dataclass(frozen=True)
class BoostConfig:
    mode: BoostMode
    n_rounds: int = 200
    learning_rate: float = 0.1
    max_depth: int = 3
    reg_lambda: float = 1.0
    gamma: float = 0.0
    min_child_weight: float = 1.0

    def validate(self):
        if self.n_rounds < 1:
            raise BadHyperparameter(f"n_rounds must be >= 1, got {self.n_rounds}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise BadHyperparameter(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.max_depth < 1:
            raise BadHyperparameter(f"max_depth must be >= 1, got {self.max_depth}")
        if self.reg_lambda < 0.0:
            raise BadHyperparameter(f"reg_lambda must be >= 0, got {self.reg_lambda}")
        if self.gamma < 0.0:
            raise BadHyperparameter(f"gamma must be >= 0, got {self.gamma}")
        if self.min_child_weight < 0.0:
            raise BadHyperparameter(f"min_child_weight must be >= 0, got {self.min_child_weight}")

    def tree_params(self) -> TreeParams:
        # first-order mode has lambda = gamma = 0 semantics
        if self.mode is BoostMode.FIRST_ORDER:
            return TreeParams(self.max_depth, 0.0, 0.0, self.min_child_weight)
        return TreeParams(self.max_depth, self.reg_lambda, self.gamma, self.min_child_weight)


@dataclass
class BoostedEnsemble:
    mode: BoostMode
    base_score: float
    trees: list = field(default_factory=list)
    learning_rate: float = 0.1
    reg_lambda: float = 0.0
    gamma: float = 0.0
    max_depth: int = 3
    n_rounds: int = 0
    min_child_weight: float = 1.0
    n_features: int = 0

    def predict_margin(self, x: np.ndarray) -> float:
        """Log-odds score; stored leaves already carry the learning rate."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_features,):
            raise DimensionMismatch(
                f"expected feature vector of length {self.n_features}, got {x.shape}"
            )
        return self.base_score + sum(tree.route(x) for tree in self.trees)

    def predict_probability(self, x: np.ndarray) -> float:
        return clamp_probability(sigmoid(self.predict_margin(x)))


def sigmoid(z: float) -> float:
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def clamp_probability(p: float) -> float:
    return min(max(p, PROB_CLAMP), 1.0 - PROB_CLAMP)


def log_loss(probabilities: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy with probabilities clamped away from 0/1."""
    p = np.clip(np.asarray(probabilities, dtype=float), PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = np.asarray(labels, dtype=float)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


@dataclass(frozen=True)
class GradHess:
    g: np.ndarray
    h: np.ndarray


def grad_hess(margins: np.ndarray, labels: np.ndarray) -> GradHess:
    pos = margins >= 0.0
    p = np.empty(margins.shape, dtype=float)
    p[pos] = 1.0 / (1.0 + np.exp(-margins[pos]))
    ez = np.exp(margins[~pos])
    p[~pos] = ez / (1.0 + ez)
    return GradHess(g=p - labels, h=p * (1.0 - p))


def _leaf(g_sum: float, h_sum: float, reg_lambda: float) -> TreeNode:
    return TreeNode(weight=-g_sum / (h_sum + reg_lambda))


def _best_split(values, g, h, rows, params):
    """Exhaustive (feature, midpoint) search; None when no positive gain."""
    g_sum = float(g[rows].sum())
    h_sum = float(h[rows].sum())
    parent_score = g_sum * g_sum / (h_sum + params.reg_lambda)
    best = None
    best_gain = 0.0
    for feature in range(values.shape[1]):
        col = values[rows, feature]
        order = np.argsort(col, kind="stable")
        sorted_rows = rows[order]
        sorted_vals = col[order]
        gl = 0.0
        hl = 0.0
        for i in range(1, len(sorted_rows)):
            gl += float(g[sorted_rows[i - 1]])
            hl += float(h[sorted_rows[i - 1]])
            if sorted_vals[i - 1] == sorted_vals[i]:
                continue
            threshold = (sorted_vals[i - 1] + sorted_vals[i]) / 2.0
            if not sorted_vals[i - 1] < threshold <= sorted_vals[i]:
                continue  # midpoint collapsed onto the left value in float
            hr = h_sum - hl
            if hl < params.min_child_weight or hr < params.min_child_weight:
                continue
            gr = g_sum - gl
            gain = 0.5 * (
                gl * gl / (hl + params.reg_lambda)
                + gr * gr / (hr + params.reg_lambda)
                - parent_score
            ) - params.gamma
            if gain > best_gain:
                best_gain = gain
                best = (feature, threshold, gain)
    return best


def _build_node(values, g, h, rows, params, depth):
    g_sum = float(g[rows].sum())
    h_sum = float(h[rows].sum())
    if depth >= params.max_depth or len(rows) < 2:
        return _leaf(g_sum, h_sum, params.reg_lambda)
    split = _best_split(values, g, h, rows, params)
    if split is None:
        return _leaf(g_sum, h_sum, params.reg_lambda)
    feature, threshold, gain = split
    mask = values[rows, feature] < threshold
    left_rows = rows[mask]
    right_rows = rows[~mask]
    return TreeNode(
        feature=feature,
        threshold=threshold,
        gain=gain,
        left=_build_node(values, g, h, left_rows, params, depth + 1),
        right=_build_node(values, g, h, right_rows, params, depth + 1),
    )


def fit_tree(m: FeatureMatrix, gh: GradHess, params: TreeParams) -> TreeNode:
    """Fit one regression tree to the given gradients and curvatures."""
    if m.n_rows == 0:
        raise EmptyNode("cannot fit a tree on zero rows")
    if params.max_depth < 1:
        raise BadHyperparameter(f"max_depth must be >= 1, got {params.max_depth}")
    rows = np.arange(m.n_rows)
    return _build_node(m.values, gh.g, gh.h, rows, params, depth=0)


def fit_boosted(m: FeatureMatrix, config: BoostConfig) -> BoostedEnsemble:
    """Train an additive tree ensemble on binary log-loss.

    Starts from the base log-odds of the positive rate. Each round fits one
    tree to the current gradients/curvatures and adds it with its leaf
    weights scaled by the learning rate. Rounds stop early when the best
    root split has no positive gain and the root leaf weight is negligible.
    """
    config.validate()
    labels = m.labels.astype(float)
    positive_rate = float(labels.mean())
    if positive_rate in (0.0, 1.0):
        raise SingleClassDataset("boosting needs samples from both classes")
    base_score = math.log(positive_rate / (1.0 - positive_rate))
    params = config.tree_params()
    ensemble = BoostedEnsemble(
        mode=config.mode,
        base_score=base_score,
        trees=[],
        learning_rate=config.learning_rate,
        reg_lambda=params.reg_lambda,
        gamma=params.gamma,
        max_depth=config.max_depth,
        n_rounds=config.n_rounds,
        min_child_weight=config.min_child_weight,
        n_features=m.n_cols,
    )
    margins = np.full(m.n_rows, base_score)
    for _ in range(config.n_rounds):
        gh = grad_hess(margins, labels)
        tree = fit_tree(m, gh, params)
        if tree.is_leaf and abs(tree.weight) < _STALL_EPS:
            break
        tree.scale_weights(config.learning_rate)
        margins += np.array([tree.route(row) for row in m.values])
        ensemble.trees.append(tree)
    return ensemble


def training_log_loss(ensemble: BoostedEnsemble, m: FeatureMatrix) -> float:
    probs = np.array([ensemble.predict_probability(row) for row in m.values])
    return log_loss(probs, m.labels)
