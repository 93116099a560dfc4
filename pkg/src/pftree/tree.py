"""Compact slot-based storage for particle filter genealogies.

A particle filter that keeps full paths naively needs T*N state slots after
T steps with N particles.  Resampling makes most of those states dead
weight: only nodes with a surviving descendant in the current generation
can ever appear in an output path.  :class:`AncestryStore` keeps exactly
those nodes, in a flat buffer of M slots that is recycled in place:

* ``states[1..M]``     state value held by each slot,
* ``parents[1..M]``    slot index of the parent (0 = empty slot or root),
* ``offspring[1..M]``  number of children of the node in the slot,
* ``leaves[1..N]``     slots holding the youngest generation.

A slot is occupied iff it is a leaf or has offspring > 0; reclaimed slots
are simply left behind (never zeroed) and get overwritten by later
insertions.  Each step of the filter calls :meth:`prune` with the offspring
counts of the new generation and then :meth:`insert` with the new states
and their ancestor indices; dead branches are walked up and released, and
the new leaves drop into the freed slots found by a prefix-sum scan.

The expected number of live nodes is T + O(N log N), so with the default
growth policy the buffer settles to a small multiple of that rather than
the naive T*N.
"""

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .primitives import gather, indicator, lower_bound, scatter, transform_prefix_sum

__all__ = ["AncestryStore", "TreeStats"]


@njit(cache=True)
def _prune_walk(offspring, parents, leaves):
    # For each leaf with no offspring, release it and decrement its parent,
    # walking up while the parent's count reaches zero as well.  Slot
    # numbers are 1-based; 0 terminates a chain.
    for i in range(leaves.shape[0]):
        j = leaves[i]
        while j > 0 and offspring[j - 1] == 0:
            j = parents[j - 1]
            if j > 0:
                offspring[j - 1] -= 1


@dataclass(frozen=True)
class TreeStats:
    """Size and shape summary of a stored genealogy.

    ``survivors[s]`` counts the distinct time-s ancestors of the current
    leaves.  ``coalescence_time`` is the largest s such that every
    generation up to s has exactly one survivor (0 if generation 0 already
    has several), ``distance_to_mrca`` its complement T - s, ``crown_size``
    the node count above the single-branch trunk, and ``adjusted_nodes``
    the crown size per particle, (n - T) / N.
    """

    node_count: int
    coalescence_time: int
    distance_to_mrca: int
    crown_size: int
    adjusted_nodes: float
    survivors: np.ndarray = field(repr=False, compare=False)


class AncestryStore:
    """Recycling buffer holding the surviving paths of a particle filter.

    Parameters
    ----------
    initial_states : array-like, length N
        Generation-0 states.  Rows may be scalars or fixed-size vectors.
    capacity : int, optional
        Initial number of slots M (must be >= N).  Defaults to 3*N; the
        buffer grows on demand by max(N, M/2) whenever an insertion finds
        fewer than N free slots.
    """

    def __init__(self, initial_states, capacity=None):
        states = np.asarray(initial_states)
        n = states.shape[0]
        if n < 1:
            raise ValueError("need at least one particle")
        if capacity is None:
            capacity = 3 * n
        if capacity < n:
            raise ValueError(f"capacity {capacity} < particle count {n}")
        self._n = n
        self._capacity = int(capacity)
        self._states = np.empty((self._capacity,) + states.shape[1:], dtype=states.dtype)
        self._states[:n] = states
        self._parents = np.zeros(self._capacity, dtype=np.int64)
        self._offspring = np.zeros(self._capacity, dtype=np.int64)
        self._generation = np.zeros(self._capacity, dtype=np.int64)
        self._leaves = np.arange(1, n + 1, dtype=np.int64)
        self._time = 0
        self._awaiting_insert = False

    # -- read-only views -------------------------------------------------

    @property
    def n_particles(self):
        return self._n

    @property
    def capacity(self):
        return self._capacity

    @property
    def current_time(self):
        return self._time

    @property
    def leaves(self):
        """Slot numbers (1-based) of the current generation."""
        return self._leaves.copy()

    @property
    def parents(self):
        return self._parents.copy()

    @property
    def offspring(self):
        return self._offspring.copy()

    @property
    def generations(self):
        return self._generation.copy()

    @property
    def states(self):
        return self._states.copy()

    def leaf_states(self):
        """States of the current generation, ordered as the leaves."""
        return self._states[self._leaves - 1].copy()

    def _occupied_mask(self):
        mask = self._offspring > 0
        mask[self._leaves - 1] = True
        return mask

    # -- mutation --------------------------------------------------------

    def prune(self, new_offspring):
        """Release every branch with no descendant in the next generation.

        ``new_offspring[i]`` is the number of children the i-th current
        leaf will have; the counts must sum to N.  Must be called exactly
        once before each :meth:`insert`.
        """
        if self._awaiting_insert:
            raise RuntimeError("prune called twice without an insert in between")
        counts = np.asarray(new_offspring, dtype=np.int64)
        if counts.shape != (self._n,):
            raise ValueError(
                f"offspring counts must have length {self._n}, got shape {counts.shape}"
            )
        if np.any(counts < 0):
            raise ValueError("offspring counts must be nonnegative")
        if counts.sum() != self._n:
            raise ValueError(
                f"offspring counts must sum to {self._n}, got {int(counts.sum())}"
            )
        self._offspring = scatter(counts, self._leaves, self._offspring)
        _prune_walk(self._offspring, self._parents, self._leaves)
        self._awaiting_insert = True

    def insert(self, new_states, ancestors):
        """Place the next generation into the freed slots.

        ``ancestors[i]`` is the 1-based rank (among the current leaves) of
        the parent of the i-th new particle.  Requires the matching
        :meth:`prune` call to have happened; enlarges the buffer if fewer
        than N slots are free.
        """
        if not self._awaiting_insert:
            raise RuntimeError("insert requires a preceding prune for this generation")
        anc = np.asarray(ancestors, dtype=np.int64)
        if anc.shape != (self._n,):
            raise ValueError(f"need {self._n} ancestor indices, got shape {anc.shape}")
        if anc.size and (anc.min() < 1 or anc.max() > self._n):
            raise ValueError("ancestor indices must lie in [1, N]")
        states = np.asarray(new_states)
        if states.shape != (self._n,) + self._states.shape[1:]:
            raise ValueError(
                f"new states must have shape {(self._n,) + self._states.shape[1:]}, "
                f"got {states.shape}"
            )

        parent_slots = gather(self._leaves, anc)
        free_rank = transform_prefix_sum(self._offspring, indicator(0))
        while int(free_rank[-1]) < self._n:
            self.enlarge()
            free_rank = transform_prefix_sum(self._offspring, indicator(0))
        new_slots = lower_bound(free_rank, np.arange(1, self._n + 1, dtype=np.int64))

        self._parents = scatter(parent_slots, new_slots, self._parents)
        self._states = scatter(states, new_slots, self._states)
        self._generation[new_slots - 1] = self._time + 1
        self._leaves = new_slots
        self._time += 1
        self._awaiting_insert = False

    def enlarge(self):
        """Grow the buffer by max(N, M/2) slots, preserving slot numbers."""
        new_capacity = self._capacity + max(self._n, self._capacity // 2)
        for name in ("_parents", "_offspring", "_generation"):
            old = getattr(self, name)
            grown = np.zeros(new_capacity, dtype=np.int64)
            grown[: self._capacity] = old
            setattr(self, name, grown)
        grown_states = np.empty(
            (new_capacity,) + self._states.shape[1:], dtype=self._states.dtype
        )
        grown_states[: self._capacity] = self._states
        self._states = grown_states
        self._capacity = new_capacity

    # -- queries ---------------------------------------------------------

    def extract_path(self, leaf_rank):
        """Full path of the leaf with 1-based rank ``leaf_rank``.

        Follows parent links from the leaf to its root and returns the
        states oldest-first, one per generation (length current_time + 1).
        """
        if not 1 <= leaf_rank <= self._n:
            raise ValueError(f"leaf rank {leaf_rank} outside [1, {self._n}]")
        slots = np.empty(self._time + 1, dtype=np.int64)
        j = int(self._leaves[leaf_rank - 1])
        for back in range(self._time + 1):
            if j == 0:
                raise RuntimeError(
                    f"ancestry chain of leaf {leaf_rank} broke {back} generations back"
                )
            slots[self._time - back] = j
            j = int(self._parents[j - 1])
        if j != 0:
            raise RuntimeError(
                f"ancestry chain of leaf {leaf_rank} is longer than the run"
            )
        return self._states[slots - 1].copy()

    def stats(self):
        """Current :class:`TreeStats`; does not mutate the store."""
        occ = self._occupied_mask()
        survivors = np.bincount(self._generation[occ], minlength=self._time + 1)
        n_nodes = int(survivors.sum())
        ones = survivors == 1
        if not ones[0]:
            c = 0
        elif ones.all():
            c = self._time
        else:
            c = int(np.argmin(ones)) - 1
        return TreeStats(
            node_count=n_nodes,
            coalescence_time=c,
            distance_to_mrca=self._time - c,
            crown_size=n_nodes - c,
            adjusted_nodes=(n_nodes - self._time) / self._n,
            survivors=survivors,
        )

    def validate(self):
        """Walk the whole structure and raise on any broken invariant."""
        leaves = self._leaves
        if np.unique(leaves).size != leaves.size:
            raise AssertionError("leaf slots are not pairwise distinct")
        if leaves.min() < 1 or leaves.max() > self._capacity:
            raise AssertionError("leaf slot out of range")
        if not self._awaiting_insert and np.any(self._offspring[leaves - 1] != 0):
            raise AssertionError("a leaf has nonzero offspring count")

        occ = self._occupied_mask()
        occ_idx = np.nonzero(occ)[0]
        gen = self._generation
        par = self._parents

        # parent links: occupied, one generation older, roots only at time 0
        for i in occ_idx:
            p = par[i]
            if gen[i] == 0:
                if p != 0:
                    raise AssertionError(f"generation-0 slot {i + 1} has a parent")
                continue
            if p == 0:
                raise AssertionError(f"slot {i + 1} at generation {gen[i]} lacks a parent")
            if not occ[p - 1]:
                raise AssertionError(f"slot {i + 1} points at unoccupied parent {p}")
            if gen[p - 1] != gen[i] - 1:
                raise AssertionError(
                    f"slot {i + 1} (gen {gen[i]}) has parent at gen {gen[p - 1]}"
                )

        # offspring counts match the occupied children actually present
        child_counts = np.zeros(self._capacity, dtype=np.int64)
        parents_of_occ = par[occ_idx]
        parents_of_occ = parents_of_occ[parents_of_occ > 0]
        np.add.at(child_counts, parents_of_occ - 1, 1)
        if not self._awaiting_insert:
            mismatch = np.nonzero(occ & (child_counts != self._offspring))[0]
            leafset = set(leaves.tolist())
            for i in mismatch:
                if i + 1 in leafset:
                    continue
                raise AssertionError(
                    f"slot {i + 1} claims {self._offspring[i]} offspring, "
                    f"has {child_counts[i]}"
                )
            non_leaf_occ = occ.copy()
            non_leaf_occ[leaves - 1] = False
            if np.any(self._offspring[non_leaf_occ] < 1):
                raise AssertionError("occupied non-leaf slot with zero offspring")

        # no orphans: everything occupied sits on some leaf-to-root path
        reach = np.zeros(self._capacity, dtype=bool)
        for j in leaves:
            j = int(j)
            while j > 0 and not reach[j - 1]:
                reach[j - 1] = True
                j = int(par[j - 1])
        if np.any(reach != occ):
            extra = np.nonzero(occ & ~reach)[0]
            raise AssertionError(
                f"occupied slots unreachable from the leaves: {(extra + 1).tolist()}"
            )

    def snapshot(self):
        """JSON-ready dict of the occupied slots.

        Layout: ``{capacity, current_time, slots: [{index, state, parent,
        offspring, generation}, ...], leaves: [...]}`` with slots listed in
        increasing index order.
        """
        occ_idx = np.nonzero(self._occupied_mask())[0]
        slots = []
        for i in occ_idx:
            state = np.asarray(self._states[i]).tolist()
            slots.append(
                {
                    "index": int(i + 1),
                    "state": state,
                    "parent": int(self._parents[i]),
                    "offspring": int(self._offspring[i]),
                    "generation": int(self._generation[i]),
                }
            )
        return {
            "capacity": self._capacity,
            "current_time": self._time,
            "slots": slots,
            "leaves": self._leaves.tolist(),
        }
