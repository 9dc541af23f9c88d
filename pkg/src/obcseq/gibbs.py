"""Posterior inference over NB parameters by Gibbs sampling with CRT augmentation.

One sweep draws, in order,

* ``p[k, g] ~ Beta(a0 + sum_j x[g, j, k], b0 + n_k * r[g])``
* latent table totals ``L[g] = sum_{j,k} CRT(x[g, j, k], r[g])``
* ``r[g] ~ Gamma(e0 + L[g], 1 / (f0 - sum_k n_k * log(1 - p[k, g])))``

The chain itself lives in :mod:`obcseq.kernels`; the per-block functions here
expose the same updates one at a time.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .distributions import ParameterError, RngStream
from .model import Dataset, Hyperparameters, ModelParams

__all__ = [
    "GibbsConfig",
    "PosteriorSamples",
    "update_p",
    "sample_latent_tables",
    "r_update_rate",
    "update_r",
    "run_gibbs",
    "write_trace",
]


@dataclass(frozen=True)
class GibbsConfig:
    iterations: int = 300
    burn_in: int = 150
    thin: int = 3

    def __post_init__(self):
        if self.iterations < 1 or self.thin < 1:
            raise ParameterError("iterations and thin must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ParameterError("burn_in must satisfy 0 <= burn_in < iterations")

    @property
    def retained(self) -> int:
        return kernels.retained_count(self.iterations, self.burn_in, self.thin)

    def sweep_indices(self) -> range:
        return range(self.burn_in, self.iterations, self.thin)


@dataclass(frozen=True, eq=False)
class PosteriorSamples:
    """Retained Gibbs draws stored as ``(S, G)`` arrays.

    ``rate_denominators`` holds the dispersion-update denominator of every
    sweep when the chain produced them; it is diagnostic only.
    """

    r: np.ndarray
    p0: np.ndarray
    p1: np.ndarray
    source_n0: int = 0
    source_n1: int = 0
    rate_denominators: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.r.ndim != 2 or self.r.shape[0] == 0:
            raise ParameterError("posterior must hold at least one draw")
        if self.p0.shape != self.r.shape or self.p1.shape != self.r.shape:
            raise ParameterError("r, p0 and p1 draw arrays must have equal shapes")

    @classmethod
    def from_draws(cls, draws, source_n0: int = 0, source_n1: int = 0) -> "PosteriorSamples":
        draws = list(draws)
        return cls(
            np.array([d.r for d in draws], dtype=float),
            np.array([d.p0 for d in draws], dtype=float),
            np.array([d.p1 for d in draws], dtype=float),
            source_n0,
            source_n1,
        )

    def __len__(self) -> int:
        return self.r.shape[0]

    @property
    def num_genes(self) -> int:
        return self.r.shape[1]

    def draw(self, s: int) -> ModelParams:
        return ModelParams(self.r[s], self.p0[s], self.p1[s])

    @property
    def draws(self) -> list[ModelParams]:
        return [self.draw(s) for s in range(len(self))]


def update_p(dataset: Dataset, r, hyper: Hyperparameters, rng: RngStream):
    """Conditional beta draw of the class probabilities. Returns ``(p0, p1)``.

    With no points in class k the draw is from the prior ``Beta(a0, b0)``.
    """
    r = np.asarray(r, dtype=float)
    a = hyper.a0 + dataset.class_sums
    b = hyper.b0 + dataset.class_sizes[:, None] * r[None, :]
    p = np.clip(rng.generator.beta(a, b), kernels.P_LO, kernels.P_HI)
    return p[0], p[1]


def sample_latent_tables(dataset: Dataset, r, rng: RngStream) -> np.ndarray:
    """Per-gene totals of the CRT table counts, one CRT draw per nonzero cell."""
    r = np.asarray(r, dtype=float)
    genes, offsets = dataset.crt_layout
    tables = dataset.occupied_cells.copy()
    if genes.size:
        rg = r[genes]
        hits = rng.generator.random(genes.size) < rg / (rg + offsets)
        tables += np.bincount(genes, weights=hits, minlength=dataset.num_genes)
    return tables


def r_update_rate(p0, p1, n0: int, n1: int, f0: float) -> np.ndarray:
    """``f0 - n0 log(1 - p0) - n1 log(1 - p1)``, the gamma rate of the dispersion update."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    for name, p in (("p0", p0), ("p1", p1)):
        if not np.all((p > 0) & (p < 1)):
            raise ParameterError(f"{name} must lie strictly inside (0, 1)")
    return f0 - n0 * np.log1p(-p0) - n1 * np.log1p(-p1)


def update_r(tables, p0, p1, n0: int, n1: int, hyper: Hyperparameters, rng: RngStream) -> np.ndarray:
    rate = r_update_rate(p0, p1, n0, n1, hyper.f0)
    r = rng.generator.gamma(hyper.e0 + np.asarray(tables, dtype=float), 1.0 / rate)
    return np.maximum(r, kernels.R_LO)


def run_gibbs(dataset: Dataset, hyper: Hyperparameters, config: GibbsConfig | None,
              rng: RngStream, trace: str | os.PathLike | None = None) -> PosteriorSamples:
    """Draw from the posterior over ``(R, P0, P1)`` given ``dataset``.

    The chain starts at ``r = e0 / f0`` with ``p`` drawn from the prior, runs
    ``config.iterations`` sweeps and keeps every ``thin``-th sweep after
    ``burn_in``. If ``trace`` is a path, the retained draws are also written
    there as CSV.
    """
    config = config or GibbsConfig()
    if dataset.num_genes != hyper.num_genes:
        raise ParameterError(
            f"dataset has {dataset.num_genes} genes, hyperparameters expect {hyper.num_genes}"
        )
    genes, offsets = dataset.crt_layout
    r, p0, p1, denom = kernels.gibbs_chain(
        rng.generator, dataset.class_sums, dataset.class_sizes, genes, offsets,
        dataset.occupied_cells, hyper.a0, hyper.b0, hyper.e0, hyper.f0,
        config.iterations, config.burn_in, config.thin,
    )
    post = PosteriorSamples(r, p0, p1, dataset.n0, dataset.n1, denom)
    if trace is not None:
        write_trace(post, config, trace)
    return post


def write_trace(post: PosteriorSamples, config: GibbsConfig, path) -> None:
    g = post.num_genes
    header = (["sweep"] + [f"r_{i}" for i in range(g)] + [f"p0_{i}" for i in range(g)]
              + [f"p1_{i}" for i in range(g)])
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for s, sweep in enumerate(config.sweep_indices()):
                row = [sweep] + [repr(float(v)) for v in
                                 np.concatenate([post.r[s], post.p0[s], post.p1[s]])]
                w.writerow(row)
    except OSError as exc:
        raise OSError(f"cannot write Gibbs trace to {path}: {exc}") from exc
