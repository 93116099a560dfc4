"""Data-parallel building blocks for the ancestry tree.

The four operations here (gather, scatter, transform_prefix_sum,
lower_bound) are the only array machinery the tree store needs.  They are
deliberately strict: every index is validated against its declared bound
and scatter rejects duplicate targets outright, so that a corrupted tree
surfaces as an exception instead of silently wrong contents.

Index convention: all index arrays in the public contract are 1-based.
Position 1 refers to the first element of the indexed array.  Internals
translate to 0-based numpy indexing at the boundary.
"""

import numpy as np

__all__ = [
    "gather",
    "scatter",
    "transform_prefix_sum",
    "lower_bound",
    "lower_bound_linear",
    "indicator",
]


def _as_index_array(indices):
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim != 1:
        raise ValueError(f"index array must be 1-D, got shape {idx.shape}")
    return idx


def _check_bounds(idx, bound, what):
    if idx.size == 0:
        return
    bad = np.nonzero((idx < 1) | (idx > bound))[0]
    if bad.size:
        i = int(bad[0])
        raise IndexError(
            f"{what}: index {int(idx[i])} at position {i + 1} outside [1, {bound}]"
        )


def indicator(value):
    """Return a vectorized transform mapping elements equal to ``value`` to 1.

    Suitable as the ``f`` argument of :func:`transform_prefix_sum`.
    """

    def f(x):
        return (np.asarray(x) == value).astype(np.int64)

    return f


def gather(source, indices):
    """Read ``source`` at the given 1-based positions.

    Returns an array ``r`` with ``r[i] = source[indices[i]]`` (1-based on the
    right-hand side).  Repeated indices are allowed; every index must lie in
    ``[1, len(source)]``.
    """
    src = np.asarray(source)
    idx = _as_index_array(indices)
    _check_bounds(idx, src.shape[0], "gather")
    return src[idx - 1]


def scatter(source, indices, target):
    """Write ``source`` into a copy of ``target`` at 1-based positions.

    ``result[indices[i]] = source[i]``; all other positions keep the value
    they have in ``target``.  Indices must be pairwise distinct: a duplicate
    would make the write order-dependent, which is never intended here, so
    it raises instead.
    """
    src = np.asarray(source)
    idx = _as_index_array(indices)
    if src.shape[0] != idx.shape[0]:
        raise ValueError(
            f"scatter: {src.shape[0]} values for {idx.shape[0]} indices"
        )
    out = np.array(target)
    _check_bounds(idx, out.shape[0], "scatter")
    if idx.size:
        uniq = np.unique(idx)
        if uniq.size != idx.size:
            counts = np.bincount(idx)
            dup = int(np.nonzero(counts > 1)[0][0])
            raise ValueError(f"scatter: duplicate target index {dup}")
    out[idx - 1] = src
    return out


def transform_prefix_sum(source, f):
    """Inclusive prefix sum of ``f`` applied elementwise to ``source``.

    ``result[i] = sum(f(source[j]) for j <= i)``.  ``f`` should accept an
    ndarray and return integer values of the same length (see
    :func:`indicator`); a scalar-only callable works too and is applied
    element by element.
    """
    arr = np.asarray(source)
    n = arr.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    try:
        vals = np.asarray(f(arr), dtype=np.int64)
        if vals.shape != (n,):
            raise TypeError
    except (TypeError, ValueError):
        vals = np.fromiter((f(v) for v in arr), dtype=np.int64, count=n)
    return np.cumsum(vals)


def lower_bound(haystack, needles):
    """First 1-based position of ``haystack`` reaching each needle.

    ``result[i] = min{j : needles[i] <= haystack[j]}``, computed by binary
    search; ``haystack`` must be nondecreasing.  A needle larger than every
    haystack value has no qualifying position and raises ValueError (for the
    tree this signals that not enough free slots exist and the caller must
    enlarge the buffer first).
    """
    hay = np.asarray(haystack)
    needle = np.asarray(needles)
    if hay.size > 1 and np.any(np.diff(hay) < 0):
        raise ValueError("lower_bound: haystack is not nondecreasing")
    pos = np.searchsorted(hay, needle, side="left")
    over = np.nonzero(pos >= hay.shape[0])[0]
    if over.size:
        i = int(over[0])
        raise ValueError(
            f"lower_bound: needle {needle[i]} at position {i + 1} "
            f"exceeds every haystack value"
        )
    return (pos + 1).astype(np.int64)


def lower_bound_linear(haystack, needles):
    """Linear-scan reference for :func:`lower_bound` (oracle for tests)."""
    hay = np.asarray(haystack)
    out = np.empty(len(needles), dtype=np.int64)
    for i, q in enumerate(needles):
        for j in range(hay.shape[0]):
            if q <= hay[j]:
                out[i] = j + 1
                break
        else:
            raise ValueError(
                f"lower_bound: needle {q} at position {i + 1} "
                f"exceeds every haystack value"
            )
    return out
