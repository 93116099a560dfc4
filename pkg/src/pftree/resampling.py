"""Resampling schemes for the particle filter.

All three schemes invert the cumulative weight function at a set of points
in (0, 1): multinomial uses N independent uniforms, stratified one uniform
per stratum ((i-1)/N, i/N], systematic a single shared offset.  The points
are evaluated in increasing order, so the returned ancestor indices come
out sorted ascending.  Sorting does not change the distribution of the
resampled particle *set*, and it lets offspring counts be read off in a
single pass, but note it does permute ancestor labels relative to a naive
sampler.
"""

import numpy as np

__all__ = ["SCHEMES", "resample", "offspring_counts"]

SCHEMES = ("multinomial", "stratified", "systematic")


def _check_weights(weights):
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a nonempty 1-D array")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-8:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    return w


def resample(weights, scheme, rng):
    """Draw N sorted ancestor indices (1-based) from normalized weights.

    The expected offspring count of particle i is N*weights[i] under every
    scheme; they differ only in how much extra randomness they inject.
    """
    w = _check_weights(weights)
    n = w.size
    if scheme == "multinomial":
        points = np.sort(rng.random(n))
    elif scheme == "stratified":
        points = (np.arange(n) + rng.random(n)) / n
    elif scheme == "systematic":
        points = (np.arange(n) + rng.random()) / n
    else:
        raise ValueError(f"unknown resampling scheme {scheme!r}; pick one of {SCHEMES}")
    cum = np.cumsum(w)
    cum[-1] = 1.0
    return (np.searchsorted(cum, points, side="left") + 1).astype(np.int64)


def offspring_counts(ancestors):
    """Count how many times each particle index appears as an ancestor.

    ``ancestors`` holds N indices in [1, N]; the result has length N and
    sums to N.
    """
    anc = np.asarray(ancestors, dtype=np.int64)
    n = anc.size
    if n == 0:
        raise ValueError("ancestor vector must be nonempty")
    if anc.min() < 1 or anc.max() > n:
        raise ValueError(f"ancestor indices must lie in [1, {n}]")
    return np.bincount(anc - 1, minlength=n)
