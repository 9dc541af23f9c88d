"""Scenario definition, ground-truth parameter draws and synthetic count data."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .distributions import ParameterError, RngStream

__all__ = [
    "Hyperparameters",
    "ModelParams",
    "SamplePoint",
    "Dataset",
    "draw_true_params",
    "generate_sample",
    "generate_labeled_set",
]


@dataclass(frozen=True)
class Hyperparameters:
    """Fixed quantities defining an uncertainty class.

    ``c`` is Pr(class 0); ``a0, b0`` parameterize the beta prior on the NB
    probabilities; ``e0, f0`` are shape and rate of the gamma prior on the
    per-gene dispersions.
    """

    c: float
    a0: float
    b0: float
    e0: float
    f0: float
    num_genes: int = 5

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            raise ParameterError(f"c must lie in (0, 1), got {self.c}")
        for name in ("a0", "b0", "e0", "f0"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be finite and > 0, got {v}")
        if int(self.num_genes) != self.num_genes or self.num_genes < 1:
            raise ParameterError(f"num_genes must be a positive integer, got {self.num_genes}")


@dataclass(frozen=True, eq=False)
class ModelParams:
    """One point of the uncertainty class: shared dispersions and per-class probabilities."""

    r: np.ndarray
    p0: np.ndarray
    p1: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        p0 = np.asarray(self.p0, dtype=float)
        p1 = np.asarray(self.p1, dtype=float)
        if r.ndim != 1 or r.shape != p0.shape or r.shape != p1.shape or r.size == 0:
            raise ParameterError("r, p0 and p1 must be non-empty vectors of equal length")
        if np.any(r <= 0) or not np.all(np.isfinite(r)):
            raise ParameterError("dispersions must be finite and > 0")
        for name, p in (("p0", p0), ("p1", p1)):
            if not np.all((p > 0) & (p < 1)):
                raise ParameterError(f"{name} must lie in (0, 1)")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p1", p1)

    @property
    def num_genes(self) -> int:
        return self.r.size

    def p(self, label: int) -> np.ndarray:
        return self.p0 if label == 0 else self.p1


@dataclass(frozen=True, eq=False)
class SamplePoint:
    counts: np.ndarray
    label: int

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1 or np.any(counts < 0):
            raise ParameterError("counts must be a vector of non-negative integers")
        if self.label not in (0, 1):
            raise ParameterError(f"label must be 0 or 1, got {self.label}")
        object.__setattr__(self, "counts", counts.astype(np.int64))


def _as_count_matrix(counts, num_genes: int) -> np.ndarray:
    m = np.asarray(counts, dtype=np.int64)
    if m.size == 0:
        return np.zeros((0, num_genes), dtype=np.int64)
    if m.ndim != 2 or m.shape[1] != num_genes:
        raise ParameterError(f"expected an (n, {num_genes}) count matrix, got shape {m.shape}")
    if np.any(m < 0):
        raise ParameterError("counts must be non-negative")
    return m


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labeled training or test points, stored per class as ``(n_k, G)`` count matrices.

    ``counts0`` holds the class-0 points in arrival order, ``counts1`` the
    class-1 points. Either may be empty.
    """

    counts0: np.ndarray
    counts1: np.ndarray
    num_genes: int = field(default=None)

    def __post_init__(self):
        g = self.num_genes
        if g is None:
            for m in (self.counts0, self.counts1):
                m = np.asarray(m)
                if m.size:
                    g = m.shape[-1]
                    break
            else:
                raise ParameterError("num_genes is required when both classes are empty")
        object.__setattr__(self, "num_genes", int(g))
        object.__setattr__(self, "counts0", _as_count_matrix(self.counts0, g))
        object.__setattr__(self, "counts1", _as_count_matrix(self.counts1, g))
        self.counts0.flags.writeable = False
        self.counts1.flags.writeable = False

    @classmethod
    def empty(cls, num_genes: int) -> "Dataset":
        z = np.zeros((0, num_genes), dtype=np.int64)
        return cls(z, z, num_genes)

    @classmethod
    def from_points(cls, points, num_genes: int | None = None) -> "Dataset":
        points = list(points)
        if num_genes is None:
            if not points:
                raise ParameterError("num_genes is required for an empty point list")
            num_genes = points[0].counts.size
        c0 = [pt.counts for pt in points if pt.label == 0]
        c1 = [pt.counts for pt in points if pt.label == 1]
        return cls(
            np.array(c0, dtype=np.int64).reshape(-1, num_genes),
            np.array(c1, dtype=np.int64).reshape(-1, num_genes),
            num_genes,
        )

    @property
    def n0(self) -> int:
        return self.counts0.shape[0]

    @property
    def n1(self) -> int:
        return self.counts1.shape[0]

    @property
    def n(self) -> int:
        return self.n0 + self.n1

    @property
    def class0(self) -> list[SamplePoint]:
        return [SamplePoint(x, 0) for x in self.counts0]

    @property
    def class1(self) -> list[SamplePoint]:
        return [SamplePoint(x, 1) for x in self.counts1]

    def counts(self, label: int) -> np.ndarray:
        return self.counts0 if label == 0 else self.counts1

    def with_point(self, point: SamplePoint) -> "Dataset":
        if point.counts.size != self.num_genes:
            raise ParameterError("point has the wrong number of genes")
        row = point.counts[None, :]
        if point.label == 0:
            return Dataset(np.vstack([self.counts0, row]), self.counts1, self.num_genes)
        return Dataset(self.counts0, np.vstack([self.counts1, row]), self.num_genes)

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        """All points as one ``(n, G)`` matrix (class 0 first) and the matching labels."""
        x = np.vstack([self.counts0, self.counts1])
        y = np.concatenate([np.zeros(self.n0, np.int64), np.ones(self.n1, np.int64)])
        return x, y

    @cached_property
    def class_sums(self) -> np.ndarray:
        """Per-class, per-gene count totals, shape ``(2, G)``."""
        return np.stack([self.counts0.sum(axis=0), self.counts1.sum(axis=0)]).astype(np.float64)

    @cached_property
    def class_sizes(self) -> np.ndarray:
        return np.array([self.n0, self.n1], dtype=np.float64)

    @cached_property
    def crt_layout(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened Bernoulli trials for one latent-table sweep.

        Every count ``x`` contributes the trials ``t = 2..x`` (``t = 1`` always
        succeeds). Returns ``(gene, t - 1)`` per trial, ordered gene-major,
        then class, then sample, then ``t``.
        """
        genes, offsets = [], []
        for g in range(self.num_genes):
            for m in (self.counts0, self.counts1):
                for x in m[:, g]:
                    if x > 1:
                        offsets.append(np.arange(1, x, dtype=np.float64))
                        genes.append(np.full(x - 1, g, dtype=np.int64))
        if not offsets:
            return np.zeros(0, np.int64), np.zeros(0, np.float64)
        return np.concatenate(genes), np.concatenate(offsets)

    @cached_property
    def occupied_cells(self) -> np.ndarray:
        """Number of nonzero counts per gene; each carries at least one table."""
        return ((self.counts0 > 0).sum(axis=0) + (self.counts1 > 0).sum(axis=0)).astype(np.float64)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.counts0).tobytes())
        h.update(b"|")
        h.update(np.ascontiguousarray(self.counts1).tobytes())
        return h.hexdigest()


def draw_true_params(hyper: Hyperparameters, rng: RngStream) -> ModelParams:
    g = hyper.num_genes
    gen = rng.generator
    r = gen.gamma(hyper.e0, 1.0 / hyper.f0, g)
    p0 = gen.beta(hyper.a0, hyper.b0, g)
    p1 = gen.beta(hyper.a0, hyper.b0, g)
    return ModelParams(_clip_r(r), _clip_p(p0), _clip_p(p1))


def _nb_counts(r: np.ndarray, p: np.ndarray, rng: RngStream, n: int) -> np.ndarray:
    gen = rng.generator
    lam = gen.gamma(np.broadcast_to(r, (n, r.size)), p / (1.0 - p))
    return gen.poisson(lam).astype(np.int64)


def generate_sample(params: ModelParams, label: int, rng: RngStream) -> SamplePoint:
    counts = _nb_counts(params.r, params.p(label), rng, 1)[0]
    return SamplePoint(counts, label)


def generate_labeled_set(params: ModelParams, c: float, n: int, rng: RngStream) -> Dataset:
    """``n`` points with labels drawn i.i.d. with Pr(label = 0) = ``c``."""
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n}")
    if not 0.0 <= c <= 1.0:
        raise ParameterError(f"c must lie in [0, 1], got {c}")
    n_class0 = int(np.count_nonzero(rng.generator.random(n) < c))
    x0 = _nb_counts(params.r, params.p0, rng, n_class0)
    x1 = _nb_counts(params.r, params.p1, rng, n - n_class0)
    return Dataset(x0, x1, params.num_genes)


_P_LO = np.finfo(float).tiny
_P_HI = 1.0 - np.finfo(float).epsneg
_R_LO = np.finfo(float).tiny


def _clip_p(p):
    return np.clip(p, _P_LO, _P_HI)


def _clip_r(r):
    return np.maximum(r, _R_LO)
