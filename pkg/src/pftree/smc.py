"""Bootstrap particle filter driving the ancestry store.

The filter is generic over a state-space model (see :mod:`pftree.models`)
and a resampling scheme, keeps weights in log space, and feeds every
generation into an :class:`~pftree.tree.AncestryStore` so that full
surviving paths are available at any time.

Randomness: all draws flow from a single integer seed through
``numpy.random.SeedSequence`` spawn keys, one independent stream per
(purpose, step).  Replicated runs with seeds ``base + r`` therefore
parallelize deterministically and never share a stream.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .resampling import offspring_counts, resample
from .tree import AncestryStore, TreeStats

__all__ = ["ParticleSystem", "FilterResult", "substream", "init_filter", "filter_step", "run_filter"]

# spawn-key purpose tags: keep filter streams and synthetic-data streams
# derived from the same seed independent of each other
KEY_FILTER = 0
KEY_DATA = 1


def substream(seed, *key):
    """Independent Generator for the given seed and integer key path."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


@dataclass
class ParticleSystem:
    """One generation of the filter.

    ``log_weights`` are the unnormalized observation log-densities of the
    current states; ``norm_weights`` the normalized weights (summing to 1);
    ``ancestors`` the 1-based indices drawn at the resampling step that
    produced this generation (all zeros at time 0, where nothing was
    resampled).
    """

    states: np.ndarray
    log_weights: np.ndarray
    norm_weights: np.ndarray
    ancestors: np.ndarray
    time: int

    @property
    def n_particles(self):
        return self.states.shape[0]

    def mean(self):
        """Weighted mean of the states."""
        return np.tensordot(self.norm_weights, self.states, axes=(0, 0))


class FilterResult(NamedTuple):
    system: ParticleSystem
    tree: AncestryStore
    stats: list  # TreeStats after init and after each step


def init_filter(model, n_particles, rng, capacity=None):
    """Draw the initial generation and set up its ancestry store."""
    if n_particles < 1:
        raise ValueError("need at least one particle")
    states = model.sample_initial(rng, n_particles)
    system = ParticleSystem(
        states=states,
        log_weights=np.zeros(n_particles),
        norm_weights=np.full(n_particles, 1.0 / n_particles),
        ancestors=np.zeros(n_particles, dtype=np.int64),
        time=0,
    )
    tree = AncestryStore(states, capacity=capacity)
    return system, tree


def filter_step(system, y, model, scheme, rng, tree):
    """Advance the filter one observation: resample, propagate, weight.

    The tree is pruned with the new offspring counts before the new
    generation is inserted, exactly once each.  Raises if every particle
    has zero likelihood under ``y``.
    """
    t = system.time + 1
    ancestors = resample(system.norm_weights, scheme, rng)
    tree.prune(offspring_counts(ancestors))

    states = model.sample_transition(rng, system.states[ancestors - 1])
    log_w = np.asarray(model.log_obs_density(y, states), dtype=np.float64)
    if np.all(np.isneginf(log_w)):
        raise RuntimeError(f"all particle weights are zero at time step {t}")
    norm = np.exp(log_w - logsumexp(log_w))
    norm /= norm.sum()

    tree.insert(states, ancestors)
    return ParticleSystem(
        states=states,
        log_weights=log_w,
        norm_weights=norm,
        ancestors=ancestors,
        time=t,
    )


def run_filter(model, observations, n_particles, scheme="multinomial", seed=0, capacity=None):
    """Run the bootstrap filter over ``observations`` (resampling every step).

    Returns a :class:`FilterResult` with the final particle system, the
    ancestry store, and the list of per-step :class:`TreeStats` (entry 0 is
    the freshly initialized tree).  Deterministic for a given seed.
    """
    obs = np.asarray(observations)
    system, tree = init_filter(model, n_particles, substream(seed, KEY_FILTER, 0), capacity)
    stats = [tree.stats()]
    for t in range(obs.shape[0]):
        rng = substream(seed, KEY_FILTER, t + 1)
        system = filter_step(system, obs[t], model, scheme, rng, tree)
        stats.append(tree.stats())
    return FilterResult(system, tree, stats)
