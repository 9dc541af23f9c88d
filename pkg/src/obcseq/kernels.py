"""Hot loops: the Gibbs chain and the posterior-averaged NB log scores.

Each kernel has a numba implementation (``*_numba``) and a vectorized numpy
implementation (``*_numpy``). Both consume the generator in the same order, so
for a given seed they agree up to floating-point rounding in the transcendental
functions. :func:`gibbs_chain` and :func:`log_scores` dispatch on the backend
picked in :mod:`obcseq._accel`.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, logsumexp

from ._accel import HAVE_NUMBA, njit

P_LO = np.finfo(np.float64).tiny
P_HI = 1.0 - np.finfo(np.float64).epsneg
R_LO = np.finfo(np.float64).tiny

_SCORE_BLOCK = 4096


def retained_count(iterations: int, burn_in: int, thin: int) -> int:
    return len(range(burn_in, iterations, thin))


# ---------------------------------------------------------------- numba


@njit(cache=True)
def _gibbs_chain_nb(gen, sums, sizes, crt_gene, crt_off, occupied, a0, b0, e0, f0,
                    iterations, burn_in, thin, out_r, out_p, out_denom):
    n_genes = sums.shape[1]
    r = np.empty(n_genes)
    p = np.empty((2, n_genes))
    tables = np.empty(n_genes)
    for g in range(n_genes):
        r[g] = e0 / f0
    for k in range(2):
        for g in range(n_genes):
            p[k, g] = gen.beta(a0, b0)
    kept = 0
    for it in range(iterations):
        for k in range(2):
            for g in range(n_genes):
                v = gen.beta(a0 + sums[k, g], b0 + sizes[k] * r[g])
                p[k, g] = min(max(v, P_LO), P_HI)
        for g in range(n_genes):
            tables[g] = occupied[g]
        for i in range(crt_gene.shape[0]):
            g = crt_gene[i]
            if gen.random() < r[g] / (r[g] + crt_off[i]):
                tables[g] += 1.0
        for g in range(n_genes):
            denom = f0 - sizes[0] * math.log1p(-p[0, g]) - sizes[1] * math.log1p(-p[1, g])
            v = gen.gamma(e0 + tables[g], 1.0 / denom)
            r[g] = max(v, R_LO)
            out_denom[it, g] = denom
        if it >= burn_in and (it - burn_in) % thin == 0:
            for g in range(n_genes):
                out_r[kept, g] = r[g]
                out_p[0, kept, g] = p[0, g]
                out_p[1, kept, g] = p[1, g]
            kept += 1


@njit(cache=True)
def _log_scores_nb(x, r, p0, p1):
    n_points, n_genes = x.shape
    n_draws = r.shape[0]
    lgr = np.empty((n_draws, n_genes))
    lp0 = np.empty((n_draws, n_genes))
    lp1 = np.empty((n_draws, n_genes))
    base0 = np.zeros(n_draws)
    base1 = np.zeros(n_draws)
    for s in range(n_draws):
        for g in range(n_genes):
            lgr[s, g] = math.lgamma(r[s, g])
            lp0[s, g] = math.log(p0[s, g])
            lp1[s, g] = math.log(p1[s, g])
            base0[s] += r[s, g] * math.log1p(-p0[s, g])
            base1[s] += r[s, g] * math.log1p(-p1[s, g])
    log_s = math.log(n_draws)
    out = np.empty((n_points, 2))
    t0 = np.empty(n_draws)
    t1 = np.empty(n_draws)
    for i in range(n_points):
        lfact = 0.0
        for g in range(n_genes):
            lfact += math.lgamma(x[i, g] + 1.0)
        m0 = -np.inf
        m1 = -np.inf
        for s in range(n_draws):
            common = -lfact
            a = base0[s]
            b = base1[s]
            for g in range(n_genes):
                xg = x[i, g]
                common += math.lgamma(xg + r[s, g]) - lgr[s, g]
                a += xg * lp0[s, g]
                b += xg * lp1[s, g]
            t0[s] = common + a
            t1[s] = common + b
            if t0[s] > m0:
                m0 = t0[s]
            if t1[s] > m1:
                m1 = t1[s]
        acc0 = 0.0
        acc1 = 0.0
        for s in range(n_draws):
            acc0 += math.exp(t0[s] - m0)
            acc1 += math.exp(t1[s] - m1)
        out[i, 0] = m0 + math.log(acc0) - log_s
        out[i, 1] = m1 + math.log(acc1) - log_s
    return out


def gibbs_chain_numba(gen, sums, sizes, crt_gene, crt_off, occupied, a0, b0, e0, f0,
                      iterations, burn_in, thin):
    if not HAVE_NUMBA:
        raise RuntimeError("numba backend is not available")
    kept = retained_count(iterations, burn_in, thin)
    n_genes = sums.shape[1]
    out_r = np.empty((kept, n_genes))
    out_p = np.empty((2, kept, n_genes))
    out_denom = np.empty((iterations, n_genes))
    _gibbs_chain_nb(gen, sums, sizes, crt_gene, crt_off, occupied, float(a0), float(b0),
                    float(e0), float(f0), int(iterations), int(burn_in), int(thin),
                    out_r, out_p, out_denom)
    return out_r, out_p[0], out_p[1], out_denom


def log_scores_numba(x, r, p0, p1):
    if not HAVE_NUMBA:
        raise RuntimeError("numba backend is not available")
    return _log_scores_nb(np.ascontiguousarray(x, dtype=np.float64), r, p0, p1)


# ---------------------------------------------------------------- numpy


def gibbs_chain_numpy(gen, sums, sizes, crt_gene, crt_off, occupied, a0, b0, e0, f0,
                      iterations, burn_in, thin):
    """Run one Gibbs chain on sufficient statistics.

    Returns ``(r, p0, p1, denom)``: the retained draws, each ``(S, G)``, and
    the dispersion-update rate denominator of every sweep, ``(iterations, G)``.
    """
    n_genes = sums.shape[1]
    kept = retained_count(iterations, burn_in, thin)
    out_r = np.empty((kept, n_genes))
    out_p0 = np.empty((kept, n_genes))
    out_p1 = np.empty((kept, n_genes))
    out_denom = np.empty((iterations, n_genes))
    r = np.full(n_genes, e0 / f0)
    gen.beta(a0, b0, (2, n_genes))  # initial p, overwritten by the first sweep
    shape_a = a0 + sums
    n_trials = crt_gene.shape[0]
    j = 0
    for it in range(iterations):
        p = np.clip(gen.beta(shape_a, b0 + sizes[:, None] * r[None, :]), P_LO, P_HI)
        tables = occupied.copy()
        if n_trials:
            rg = r[crt_gene]
            hits = gen.random(n_trials) < rg / (rg + crt_off)
            tables += np.bincount(crt_gene, weights=hits, minlength=n_genes)
        denom = f0 - sizes[0] * np.log1p(-p[0]) - sizes[1] * np.log1p(-p[1])
        r = np.maximum(gen.gamma(e0 + tables, 1.0 / denom), R_LO)
        out_denom[it] = denom
        if it >= burn_in and (it - burn_in) % thin == 0:
            out_r[j] = r
            out_p0[j] = p[0]
            out_p1[j] = p[1]
            j += 1
    return out_r, out_p0, out_p1, out_denom


def log_scores_numpy(x, r, p0, p1):
    x = np.asarray(x, dtype=np.float64)
    n_draws = r.shape[0]
    lgr = gammaln(r).sum(axis=1)
    lp0, lp1 = np.log(p0), np.log(p1)
    base0 = (r * np.log1p(-p0)).sum(axis=1) - lgr
    base1 = (r * np.log1p(-p1)).sum(axis=1) - lgr
    out = np.empty((x.shape[0], 2))
    for lo in range(0, x.shape[0], _SCORE_BLOCK):
        xb = x[lo:lo + _SCORE_BLOCK]
        common = gammaln(xb[:, None, :] + r[None, :, :]).sum(axis=2)
        common -= gammaln(xb + 1.0).sum(axis=1)[:, None]
        out[lo:lo + _SCORE_BLOCK, 0] = logsumexp(common + xb @ lp0.T + base0, axis=1)
        out[lo:lo + _SCORE_BLOCK, 1] = logsumexp(common + xb @ lp1.T + base1, axis=1)
    out -= math.log(n_draws)
    return out


# ---------------------------------------------------------------- dispatch

if HAVE_NUMBA:
    gibbs_chain = gibbs_chain_numba
    log_scores = log_scores_numba
else:
    gibbs_chain = gibbs_chain_numpy
    log_scores = log_scores_numpy

