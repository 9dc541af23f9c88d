"""Primitive samplers and log-mass functions.

Every sampler takes an :class:`RngStream`. Scalar calls return Python scalars;
passing ``size`` returns an ndarray of independent draws.
"""
from __future__ import annotations

import math
import zlib
from typing import Hashable

import numpy as np
from scipy.special import gammaln

__all__ = [
    "ParameterError",
    "RngStream",
    "sample_gamma",
    "sample_beta",
    "sample_nb",
    "nb_log_pmf",
    "sample_crt",
    "sample_logarithmic",
]

_LOG_CUTOFF = 1.0 - 1e-12


class ParameterError(ValueError):
    """A distribution parameter lies outside its domain."""


def _label_key(label: Hashable) -> int:
    if isinstance(label, (bool, np.bool_)):
        return int(label)
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError(f"stream labels must be non-negative, got {label}")
        return int(label)
    if isinstance(label, str):
        # stable across processes, unlike hash()
        return zlib.crc32(label.encode("utf-8"))
    raise TypeError(f"unsupported stream label type: {type(label).__name__}")


class RngStream:
    """Reproducible random stream identified by a seed and a derivation path.

    Children are derived from labels through ``SeedSequence`` spawn keys, so the
    stream for ``RngStream(7).child("rep", 3)`` is the same in every process.

    Parameters
    ----------
    seed : int
        64-bit unsigned master seed.
    key : tuple of int, optional
        Spawn key of this stream relative to ``seed``.
    """

    __slots__ = ("seed", "key", "generator")

    def __init__(self, seed: int, key: tuple[int, ...] = ()):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.key = tuple(int(k) for k in key)
        self.generator = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(seed, spawn_key=self.key))
        )

    def child(self, *labels: Hashable) -> "RngStream":
        return RngStream(self.seed, self.key + tuple(_label_key(l) for l in labels))

    def random(self, size=None):
        return self.generator.random(size)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, key={self.key})"


def _check_positive(name: str, value) -> None:
    v = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        raise ParameterError(f"{name} must be finite and > 0, got {value}")


def _check_open_unit(name: str, value) -> None:
    v = np.asarray(value, dtype=float)
    if not np.all((v > 0) & (v < 1)):
        raise ParameterError(f"{name} must lie in (0, 1), got {value}")


def _scalar(x):
    return x.item() if isinstance(x, np.ndarray) and x.ndim == 0 else x


def sample_gamma(shape, scale, rng: RngStream, size=None):
    """Gamma draw with the given shape and scale (mean ``shape * scale``).

    numpy's generator handles ``shape < 1`` by rejection, so the whole domain
    is covered.
    """
    _check_positive("shape", shape)
    _check_positive("scale", scale)
    return _scalar(rng.generator.gamma(shape, scale, size))


def sample_beta(a, b, rng: RngStream, size=None):
    _check_positive("a", a)
    _check_positive("b", b)
    return _scalar(rng.generator.beta(a, b, size))


def sample_nb(r, p, rng: RngStream, size=None):
    """Negative-binomial count with mean ``r * p / (1 - p)``.

    Drawn as a gamma-Poisson mixture: ``lam ~ Gamma(r, p / (1 - p))`` then
    ``Poisson(lam)``.
    """
    _check_positive("r", r)
    _check_open_unit("p", p)
    p = np.asarray(p, dtype=float)
    lam = rng.generator.gamma(r, p / (1.0 - p), size)
    out = rng.generator.poisson(lam)
    if np.ndim(out) == 0:
        return int(out)
    return out.astype(np.int64)


def nb_log_pmf(x, r, p):
    """Log mass of ``NB(r, p)`` at ``x``, evaluated in log-gamma form.

    ``log[Gamma(x + r) / (x! Gamma(r)) * p**x * (1 - p)**r]``. Broadcasts over
    array arguments.
    """
    _check_positive("r", r)
    _check_open_unit("p", p)
    x = np.asarray(x)
    if np.any(x < 0) or np.any(np.asarray(x, dtype=float) != np.floor(x)):
        raise ParameterError(f"x must be a non-negative integer, got {x}")
    x = x.astype(float)
    r = np.asarray(r, dtype=float)
    p = np.asarray(p, dtype=float)
    out = gammaln(x + r) - gammaln(x + 1.0) - gammaln(r) + x * np.log(p) + r * np.log1p(-p)
    return _scalar(out)


def sample_crt(n: int, r: float, rng: RngStream, size=None):
    """Chinese Restaurant Table count: sum over t=1..n of Bernoulli(r / (r + t - 1)).

    The t=1 term has success probability one and consumes no randomness.
    """
    if int(n) != n or n < 0:
        raise ParameterError(f"n must be a non-negative integer, got {n}")
    _check_positive("r", r)
    n = int(n)
    shape = () if size is None else (size if isinstance(size, tuple) else (size,))
    if n == 0:
        return 0 if size is None else np.zeros(shape, dtype=np.int64)
    probs = r / (r + np.arange(1, n, dtype=float))
    u = rng.generator.random(shape + (n - 1,))
    out = 1 + np.sum(u < probs, axis=-1, dtype=np.int64)
    return int(out) if size is None else out


def _logarithmic_cdf(p: float) -> np.ndarray:
    norm = -1.0 / math.log1p(-p)
    terms = []
    total = 0.0
    u = 1
    term = p
    while total < _LOG_CUTOFF:
        mass = norm * term / u
        total += mass
        terms.append(total)
        u += 1
        term *= p
        if mass == 0.0:
            break
    return np.asarray(terms)


def sample_logarithmic(p: float, rng: RngStream, size=None):
    """Logarithmic-series draw on ``1, 2, ...`` with mass ``-p**u / (u log(1 - p))``.

    Inverse CDF over a table truncated once the cumulative mass reaches
    ``1 - 1e-12``; uniforms beyond the table map to its last support point.
    """
    _check_open_unit("p", p)
    cdf = _logarithmic_cdf(float(p))
    u = rng.generator.random(size)
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)
    out = idx + 1
    return int(out) if size is None else out.astype(np.int64)
