"""Optimal Bayesian classifier over a posterior sample, and test-set error estimation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .distributions import ParameterError
from .gibbs import PosteriorSamples
from .model import Dataset

__all__ = [
    "ObcClassifier",
    "ErrorEstimate",
    "effective_log_density",
    "classify",
    "decide",
    "estimate_error",
]


@dataclass(frozen=True, eq=False)
class ObcClassifier:
    posterior: PosteriorSamples
    c: float

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            raise ParameterError(f"c must lie in (0, 1), got {self.c}")
        if len(self.posterior) == 0:
            raise ParameterError("posterior must be non-empty")

    def log_scores(self, x) -> np.ndarray:
        """Effective log densities of each row of ``x`` under both classes, ``(N, 2)``."""
        x = np.atleast_2d(np.asarray(x))
        if x.shape[1] != self.posterior.num_genes:
            raise ParameterError("count vectors have the wrong number of genes")
        post = self.posterior
        return kernels.log_scores(x, post.r, post.p0, post.p1)

    def predict(self, x) -> np.ndarray:
        return decide(self.log_scores(x), self.c)


@dataclass(frozen=True)
class ErrorEstimate:
    total: float
    class0_error: float
    class1_error: float
    n_test0: int
    n_test1: int


def effective_log_density(x, posterior: PosteriorSamples, k: int) -> float:
    """Log of the class-``k`` NB likelihood of ``x`` averaged over the posterior draws."""
    if k not in (0, 1):
        raise ParameterError(f"k must be 0 or 1, got {k}")
    x = np.asarray(x)
    if x.ndim != 1 or x.size != posterior.num_genes:
        raise ParameterError("x must be a single count vector of length G")
    return float(kernels.log_scores(x[None, :], posterior.r, posterior.p0, posterior.p1)[0, k])


def decide(log_scores: np.ndarray, c: float) -> np.ndarray:
    """Labels from effective log densities; exact ties go to class 0."""
    left = math.log(c) + log_scores[:, 0]
    right = math.log1p(-c) + log_scores[:, 1]
    return np.where(left >= right, 0, 1)


def classify(clf: ObcClassifier, x) -> int:
    return int(clf.predict(np.asarray(x)[None, :])[0])


def estimate_error(clf: ObcClassifier, test: Dataset) -> ErrorEstimate:
    """Per-class and overall misclassification rates on a labeled test set."""
    if test.n == 0:
        raise ParameterError("test set is empty")
    wrong0 = int(np.count_nonzero(clf.predict(test.counts0) != 0)) if test.n0 else 0
    wrong1 = int(np.count_nonzero(clf.predict(test.counts1) != 1)) if test.n1 else 0
    return ErrorEstimate(
        (wrong0 + wrong1) / test.n,
        wrong0 / test.n0 if test.n0 else 0.0,
        wrong1 / test.n1 if test.n1 else 0.0,
        test.n0,
        test.n1,
    )
