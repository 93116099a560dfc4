"""Backward lineage-count chains and tree-size bounds.

Following the ancestry of the current N particles backwards, the number of
distinct ancestors per generation is a nonincreasing chain; once it hits 1
the genealogy has fully coalesced and every older generation contributes a
single trunk node.  This module provides the analytic transition laws of
three such chains, simulators to cross-check them, and Monte-Carlo
verification of the resulting bounds on tree size:

* the *mixed* chain: multinomial resampling decomposed so that each child
  picks a uniformly random parent with probability ``epsilon`` and a
  guaranteed-distinct one otherwise (``epsilon`` measures how flat the
  weights are; ``epsilon = 1`` is exactly the uniform-weights case).  Its
  transition law combines binomial mixing, Stirling numbers of the second
  kind and falling factorials.
* the *uniform* chain: all parents uniform, the classical neutral case.
* the *dominating* chain: decrements by at most one per step with the
  mixed chain's stay probability, giving a tractable upper bound on the
  collapse time whose expectation has a closed form.

Everything combinatorial is evaluated in log space (Stirling numbers
overflow doubles near q = 220) and exponentiated at the end.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numba import njit
from scipy.special import gammaln, logsumexp

from .models import NeutralModel, generate_synthetic
from .smc import KEY_DATA, run_filter, substream

__all__ = [
    "ChainParams",
    "ChainLaw",
    "BoundReport",
    "log_stirling2",
    "stay_probability",
    "lineage_transition_row",
    "uniform_transition_row",
    "uniform_expected_next",
    "sample_image_size",
    "expected_collapse_steps",
    "sample_collapse_steps",
    "sample_coupled_chains",
    "lineage_decay_map",
    "lineage_decay_sequence",
    "verify_bounds",
]


@dataclass(frozen=True)
class ChainParams:
    """Particle count and weight-flatness parameter of the lineage chains."""

    n: int
    epsilon: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"particle count must be >= 1, got {self.n}")
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")


@dataclass(frozen=True)
class ChainLaw:
    """Distribution of the next lineage count given the current one.

    ``probs[i]`` is the probability of moving to ``support[i]``; the
    support is 1..q for a chain currently at q.
    """

    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        if np.any(self.probs < 0):
            raise ValueError("transition row has a negative entry")
        total = float(self.probs.sum())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"transition row sums to {total!r}, not 1")

    def expectation(self):
        return float(self.support @ self.probs)


@dataclass(frozen=True)
class BoundReport:
    """One verified quantity: empirical aggregate vs analytic bound."""

    quantity: str
    n: int
    epsilon: float
    horizon: int
    mean: float
    stderr: float
    bound: float
    constants: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# log-space combinatorics

_log_stirling_table = np.full((1, 1), -np.inf)
_log_stirling_table[0, 0] = 0.0


def _stirling_table(qmax):
    global _log_stirling_table
    if _log_stirling_table.shape[0] > qmax:
        return _log_stirling_table
    table = np.full((qmax + 1, qmax + 1), -np.inf)
    table[0, 0] = 0.0
    logp = np.log(np.arange(1, qmax + 1))
    for q in range(1, qmax + 1):
        table[q, 1 : q + 1] = np.logaddexp(
            logp[: q] + table[q - 1, 1 : q + 1], table[q - 1, 0:q]
        )
    _log_stirling_table = table
    return table


def log_stirling2(q, p):
    """log of the Stirling number of the second kind S(q, p).

    S(q, p) counts the partitions of q labelled items into p nonempty
    blocks; computed through the recurrence S(q, p) = p S(q-1, p) +
    S(q-1, p-1) carried in log space.
    """
    if p < 1 or p > q:
        raise ValueError(f"need 1 <= p <= q, got p={p}, q={q}")
    return float(_stirling_table(q)[q, p])


def _log_falling(n, k):
    # log (n)_k = log n!/(n-k)!
    return gammaln(n + 1) - gammaln(n - np.asarray(k) + 1)


def _log_binom_mix(q, qp, epsilon):
    # log of C(q, q') eps^q' (1-eps)^(q-q'), with 0*log(0) treated as 0
    qp = np.asarray(qp)
    logc = gammaln(q + 1) - gammaln(qp + 1) - gammaln(q - qp + 1)
    if epsilon > 0:
        le = qp * np.log(epsilon)
    else:
        le = np.where(qp > 0, -np.inf, 0.0)
    if epsilon < 1:
        lm = (q - qp) * np.log1p(-epsilon)
    else:
        lm = np.where(q - qp > 0, -np.inf, 0.0)
    return logc + le + lm


@lru_cache(maxsize=65536)
def _cached_stay(n, epsilon, q):
    qp = np.arange(q + 1)
    terms = _log_binom_mix(q, qp, epsilon) + _log_falling(n, qp) - qp * math.log(n)
    return float(np.exp(logsumexp(terms)))


def stay_probability(params, q):
    """Probability that the mixed chain stays at q for one backward step.

    Sum over the number q' of children that picked uniformly at random, of
    the chance those q' uniform picks landed on q' distinct parents.
    """
    if not 1 <= q <= params.n:
        raise ValueError(f"q must lie in [1, {params.n}], got {q}")
    return _cached_stay(params.n, params.epsilon, q)


@lru_cache(maxsize=4096)
def _cached_row(n, epsilon, q):
    params = ChainParams(n, epsilon)
    probs = np.empty(q)
    table = _stirling_table(q)
    for p in range(1, q):
        qp = np.arange(q - p + 1, q + 1)
        pp = qp - q + p  # distinct blocks among the uniform picks
        terms = (
            _log_binom_mix(q, qp, epsilon)
            + table[qp, pp]
            + _log_falling(n, pp)
            - qp * math.log(n)
        )
        probs[p - 1] = np.exp(logsumexp(terms))
    probs[q - 1] = stay_probability(params, q)
    probs.flags.writeable = False
    return probs


def lineage_transition_row(params, q):
    """Full transition law of the mixed chain from q lineages."""
    if not 1 <= q <= params.n:
        raise ValueError(f"q must lie in [1, {params.n}], got {q}")
    probs = _cached_row(params.n, params.epsilon, q)
    return ChainLaw(support=np.arange(1, q + 1), probs=probs.copy())


def uniform_transition_row(n, q):
    """Transition law of the uniform-weights chain: every child picks a
    uniformly random parent, so q lineages merge into p with probability
    S(q, p) (n)_p / n^q."""
    if not 1 <= q <= n:
        raise ValueError(f"q must lie in [1, {n}], got {q}")
    p = np.arange(1, q + 1)
    table = _stirling_table(q)
    logterms = table[q, p] + _log_falling(n, p) - q * math.log(n)
    return ChainLaw(support=p, probs=np.exp(logterms))


def uniform_expected_next(n, q):
    """Closed form for the expected next uniform-chain value:
    n - n (1 - 1/n)^q distinct parents out of q uniform picks."""
    if not 1 <= q <= n:
        raise ValueError(f"q must lie in [1, {n}], got {q}")
    return n - n * (1.0 - 1.0 / n) ** q


# ---------------------------------------------------------------------------
# simulators


def sample_image_size(params, q, rng, size=None):
    """Simulate one backward step of the mixed assignment restricted to q
    children and return how many distinct parents they hit.

    Each child is uniform on {1..n} with probability epsilon; the others
    are assigned the smallest values not taken, hence always distinct from
    everything else.  With ``size`` draws are vectorized and an int array
    comes back.
    """
    n, eps = params.n, params.epsilon
    if not 1 <= q <= n:
        raise ValueError(f"q must lie in [1, {n}], got {q}")
    if size is None:
        uniform = rng.random(q) <= eps
        k = int(uniform.sum())
        distinct = np.unique(rng.integers(1, n + 1, size=k)).size
        return distinct + (q - k)
    uniform = rng.random((size, q)) <= eps
    vals = np.where(uniform, rng.integers(1, n + 1, size=(size, q)), 0)
    vals.sort(axis=1)
    fresh = vals > 0
    fresh[:, 1:] &= vals[:, 1:] != vals[:, :-1]
    return fresh.sum(axis=1) + (q - uniform.sum(axis=1))


def expected_collapse_steps(params):
    """Closed-form expected collapse time of the dominating chain.

    The dominating chain waits a geometric time with success probability
    1 - stay_probability at each level q = n..2, so the expectation is the
    sum of the reciprocals.
    """
    if params.n < 2:
        raise ValueError("collapse needs at least 2 lineages")
    total = 0.0
    for q in range(2, params.n + 1):
        fail = 1.0 - stay_probability(params, q)
        if fail <= 0.0:
            raise ValueError(
                f"stay probability is 1 at q={q}; expected collapse time is infinite"
            )
        total += 1.0 / fail
    return total


def sample_collapse_steps(params, rng, size=None):
    """Simulate the dominating chain's collapse time (sum of geometric
    jump times, one per level).  Vectorized when ``size`` is given."""
    if params.n < 2:
        raise ValueError("collapse needs at least 2 lineages")
    fail = np.array(
        [1.0 - stay_probability(params, q) for q in range(2, params.n + 1)]
    )
    if np.any(fail <= 0.0):
        raise ValueError("a stay probability is 1; collapse time is infinite")
    if size is None:
        return int(rng.geometric(fail).sum())
    return rng.geometric(fail, size=(size, fail.size)).sum(axis=1)


def sample_coupled_chains(params, rng, max_steps=2_000_000):
    """Run the mixed chain and the dominating chain under the coupling that
    makes domination hold pathwise.

    When the two sit at the same level, a single uniform decides whether
    both decrease (the mixed chain then picks its landing level from its
    law conditioned on decreasing); once they differ they move
    independently.  Returns the two trajectories, ending when the
    dominating chain reaches 1.
    """
    n, eps = params.n, params.epsilon
    exact = [n]
    dominating = [n]
    k = l = n
    for _ in range(max_steps):
        if l == 1:
            break
        if k == l:
            q = k
            stay = _cached_stay(n, eps, q)
            if rng.random() < 1.0 - stay:
                l = q - 1
                k = _sample_decrease(n, eps, q, stay, rng)
        else:
            if k > 1:
                stay_k = _cached_stay(n, eps, k)
                if rng.random() < 1.0 - stay_k:
                    k = _sample_decrease(n, eps, k, stay_k, rng)
            if rng.random() < 1.0 - _cached_stay(n, eps, l):
                l -= 1
        exact.append(k)
        dominating.append(l)
    else:
        raise RuntimeError(f"chains did not collapse within {max_steps} steps")
    return np.array(exact), np.array(dominating)


@lru_cache(maxsize=4096)
def _decrease_cdf(n, eps, q):
    probs = _cached_row(n, eps, q)[: q - 1]
    cdf = np.cumsum(probs / probs.sum())
    cdf[-1] = 1.0
    cdf.flags.writeable = False
    return cdf


def _sample_decrease(n, eps, q, stay, rng):
    # landing level of the mixed chain conditioned on decreasing from q
    return int(np.searchsorted(_decrease_cdf(n, eps, q), rng.random(), side="left")) + 1


# ---------------------------------------------------------------------------
# the decay map bounding expected lineage counts


def lineage_decay_map(n, epsilon, x):
    """One-step upper bound on the expected lineage count:
    x - eps^2 x(x-1)/(2n) + eps^3 x(x-1)(x-2)/(6 n^2), for x in [1, n]."""
    if not 1.0 <= x <= n:
        raise ValueError(f"x must lie in [1, {n}], got {x}")
    return (
        x
        - epsilon**2 * x * (x - 1.0) / (2.0 * n)
        + epsilon**3 * x * (x - 1.0) * (x - 2.0) / (6.0 * n**2)
    )


@njit(cache=True)
def _decay_count(n, eps, tol, cap):
    u = float(n)
    count = 1
    while u - 1.0 >= tol and count < cap:
        u = (
            u
            - eps * eps * u * (u - 1.0) / (2.0 * n)
            + eps * eps * eps * u * (u - 1.0) * (u - 2.0) / (6.0 * n * n)
        )
        count += 1
    return count, u


@njit(cache=True)
def _decay_fill(n, eps, out):
    u = float(n)
    out[0] = u
    total = u - 1.0
    for k in range(1, out.shape[0]):
        u = (
            u
            - eps * eps * u * (u - 1.0) / (2.0 * n)
            + eps * eps * eps * u * (u - 1.0) * (u - 2.0) / (6.0 * n * n)
        )
        out[k] = u
        total += u - 1.0
    return total


def lineage_decay_sequence(n, epsilon, tol=1e-9):
    """Iterate the decay map from n down to its fixed point 1.

    Returns (sequence, total) where the sequence is u_0 = n, u_{k+1} =
    decay_map(u_k) truncated at the first u_k - 1 < tol, and total is the
    sum of (u_k - 1) over the sequence plus an analytic bound on the
    discarded tail (geometric with ratio 1 - eps^2/(2n), valid once
    u <= 2), so the reported value upper-bounds the infinite sum.
    """
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    cap = int(2.0 * n / epsilon**2 * (math.log(n / tol) + 8.0)) + 10_000
    count, last = _decay_count(n, epsilon, tol, cap)
    if last - 1.0 >= tol:
        raise RuntimeError(f"decay sequence did not reach 1 + {tol} in {cap} steps")
    seq = np.empty(count)
    total = _decay_fill(n, epsilon, seq)
    ratio = 1.0 - epsilon**2 / (2.0 * n)
    total += (seq[-1] - 1.0) * ratio / (1.0 - ratio)
    return seq, float(total)


# ---------------------------------------------------------------------------
# Monte-Carlo verification of the tree-size bounds


def verify_bounds(params, horizon, runs, scheme="multinomial", model=None, base_seed=0):
    """Run the filter ``runs`` times and compare tree statistics with the
    analytic bounds.

    With no model given the neutral (uniform-weights) model is used, the
    regime the ``epsilon = 1`` theory describes exactly.  Returns
    BoundReport rows for the distance to the most recent common ancestor
    (bounded by (1 + 8/epsilon) n log n), the node count, and the observed
    node-count constant (mean(n_T - T) / (n log n))."""
    if runs < 1:
        raise ValueError("need at least one run")
    if model is None:
        model = NeutralModel()
    d_vals = np.empty(runs)
    n_vals = np.empty(runs)
    for r in range(runs):
        seed = base_seed + r
        _, obs = generate_synthetic(model, horizon, substream(seed, KEY_DATA, 0))
        result = run_filter(model, obs, params.n, scheme=scheme, seed=seed)
        final = result.stats[-1]
        d_vals[r] = final.distance_to_mrca
        n_vals[r] = final.node_count

    def _se(vals):
        return float(vals.std(ddof=1) / math.sqrt(runs)) if runs > 1 else float("nan")

    delta1 = 1.0 + 8.0 / params.epsilon
    nlogn = params.n * math.log(params.n)
    reports = [
        BoundReport(
            quantity="d_T",
            n=params.n,
            epsilon=params.epsilon,
            horizon=horizon,
            mean=float(d_vals.mean()),
            stderr=_se(d_vals),
            bound=delta1 * nlogn,
            constants={"delta1": delta1},
        ),
        BoundReport(
            quantity="n_T",
            n=params.n,
            epsilon=params.epsilon,
            horizon=horizon,
            mean=float(n_vals.mean()),
            stderr=_se(n_vals),
            bound=float("nan"),
            constants={},
        ),
    ]
    if nlogn > 0:
        excess = (n_vals - horizon) / nlogn
        reports.append(
            BoundReport(
                quantity="delta2_hat",
                n=params.n,
                epsilon=params.epsilon,
                horizon=horizon,
                mean=float(excess.mean()),
                stderr=_se(excess),
                bound=float("nan"),
                constants={},
            )
        )
    return reports
