"""Gaussian naive Bayes over the transformed feature matrix.

Each class gets an empirical prior plus per-feature Gaussian likelihood
parameters (population moments). Posteriors are computed entirely in log
space and normalized with log-sum-exp, so extreme likelihoods cannot
underflow. Per-class variances are clamped from below by a relative floor
so constant features keep finite log densities.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, SingleClassDataset
from .preprocess import FeatureMatrix

_LOG_TIE_EPS = 1e-15


@dataclass(frozen=True)
class GaussianNBModel:
    priors: np.ndarray     # shape (2,)
    means: np.ndarray      # shape (2, d)
    variances: np.ndarray  # shape (2, d)
    var_floor: float

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    def log_joint(self, x: np.ndarray) -> np.ndarray:
        """Unnormalized per-class log posterior: log prior + sum of log pdfs."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_features,):
            raise DimensionMismatch(
                f"expected feature vector of length {self.n_features}, got {x.shape}"
            )
        out = np.empty(2)
        for c in (0, 1):
            var = self.variances[c]
            log_pdf = -0.5 * (np.log(2.0 * math.pi * var) + (x - self.means[c]) ** 2 / var)
            out[c] = math.log(self.priors[c]) + float(np.sum(log_pdf))
        return out

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return posterior_from_log_joint(self.log_joint(x))

    def predict(self, x: np.ndarray) -> int:
        """Class with the larger log joint; near-exact ties go to class 1."""
        lj = self.log_joint(x)
        if abs(lj[1] - lj[0]) < _LOG_TIE_EPS:
            return 1
        return int(lj[1] > lj[0])

    def predict_probability(self, x: np.ndarray) -> float:
        """Positive-class posterior (the common model interface)."""
        return float(self.predict_proba(x)[1])


def posterior_from_log_joint(log_joint: np.ndarray) -> np.ndarray:
    """Normalize log joints into probabilities via log-sum-exp."""
    shifted = log_joint - np.max(log_joint)
    weights = np.exp(shifted)
    return weights / np.sum(weights)


def fit_gaussian_nb(m: FeatureMatrix) -> GaussianNBModel:
    """Estimate priors and per-class per-feature Gaussian moments."""
    labels = m.labels
    n = m.n_rows
    if n == 0 or np.all(labels == labels[0]):
        raise SingleClassDataset("Gaussian NB needs samples from both classes")
    d = m.n_cols
    priors = np.empty(2)
    means = np.empty((2, d))
    variances = np.empty((2, d))
    for c in (0, 1):
        rows = m.values[labels == c]
        priors[c] = rows.shape[0] / n
        means[c] = rows.mean(axis=0)
        variances[c] = ((rows - means[c]) ** 2).mean(axis=0)
    overall_var = ((m.values - m.values.mean(axis=0)) ** 2).mean(axis=0)
    max_var = float(overall_var.max()) if d else 0.0
    var_floor = 1e-9 * max_var if max_var > 0.0 else 1e-9
    variances = np.maximum(variances, var_floor)
    return GaussianNBModel(priors=priors, means=means, variances=variances, var_floor=var_floor)
