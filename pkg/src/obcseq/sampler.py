"""Error-conditioned choice of the class of the next training point.

For each candidate class k the expected error of the next classifier is
estimated by Monte Carlo: fit the posterior on the current data, then
repeatedly pick a posterior draw, simulate an evaluation set and a hypothetical
class-k point from it, refit on the augmented data and score the refitted OBC
on the simulated set. The class with the smaller estimate is sampled next.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .distributions import ParameterError, RngStream
from .gibbs import GibbsConfig, run_gibbs
from .model import Dataset, Hyperparameters, generate_labeled_set, generate_sample
from .obc import ObcClassifier, estimate_error

__all__ = ["SamplerConfig", "expected_error_if_sampled", "choose_next_class"]


@dataclass(frozen=True)
class SamplerConfig:
    """``candidate_draws`` hypothetical points are averaged per class;
    ``inner_test_size`` points are simulated to score each refit.

    By default the two class evaluations run on independent child streams. With
    ``common_random_numbers`` they share one stream instead: the same posterior
    fit, posterior draws, simulated evaluation sets and refit randomness, so
    their difference reflects only the class of the added point.
    """

    candidate_draws: int = 3
    inner_test_size: int = 500
    gibbs: GibbsConfig = field(default_factory=GibbsConfig)
    common_random_numbers: bool = False

    def __post_init__(self):
        if self.candidate_draws < 1:
            raise ParameterError("candidate_draws must be >= 1")
        if self.inner_test_size < 1:
            raise ParameterError("inner_test_size must be >= 1")


def expected_error_if_sampled(k: int, data: Dataset, hyper: Hyperparameters, cfg: SamplerConfig,
                              rng: RngStream, start: int = 0) -> float:
    """Monte Carlo estimate of the OBC error after adding one class-``k`` point.

    Posterior draws are visited round-robin beginning at index ``start``.
    """
    if k not in (0, 1):
        raise ParameterError(f"k must be 0 or 1, got {k}")
    post = run_gibbs(data, hyper, cfg.gibbs, rng.child("posterior"))
    errors = np.empty(cfg.candidate_draws)
    for m in range(cfg.candidate_draws):
        theta = post.draw((start + m) % len(post))
        sub = rng.child("repeat", m)
        test = generate_labeled_set(theta, hyper.c, cfg.inner_test_size, sub.child("test"))
        candidate = generate_sample(theta, k, sub.child("candidate"))
        refit = run_gibbs(data.with_point(candidate), hyper, cfg.gibbs, sub.child("refit"))
        errors[m] = estimate_error(ObcClassifier(refit, hyper.c), test).total
    return float(errors.mean())


ErrorEstimator = Callable[[int, Dataset, Hyperparameters, SamplerConfig, RngStream], float]


def choose_next_class(data: Dataset, hyper: Hyperparameters, cfg: SamplerConfig, rng: RngStream,
                      estimator: ErrorEstimator = expected_error_if_sampled) -> int:
    """1 if the estimated error after a class-1 point is strictly smaller, else 0."""
    if cfg.common_random_numbers:
        s0 = s1 = rng.child("shared")
    else:
        s0, s1 = rng.child("class", 0), rng.child("class", 1)
    e0 = estimator(0, data, hyper, cfg, s0)
    e1 = estimator(1, data, hyper, cfg, s1)
    return 1 if e1 < e0 else 0
