"""Experiment harness: replicated sweeps, timing benchmark, CSV output.

Every command here is deterministic given its configuration: replicate r
of any sweep uses seed = base_seed + r, data generation and filtering use
separate streams derived from that seed, and output rows are emitted in a
fixed (scheme, N, T, replicate) order no matter how many workers computed
them.  The only nondeterminism anywhere is the wall-clock readings of the
benchmark.
"""

import csv
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .models import LinearGaussianModel, NeutralModel, PZModel, generate_synthetic
from .resampling import SCHEMES, offspring_counts, resample
from .smc import KEY_DATA, KEY_FILTER, init_filter, filter_step, run_filter, substream
from .theory import (
    ChainParams,
    lineage_decay_sequence,
    lineage_transition_row,
    sample_coupled_chains,
    uniform_transition_row,
    verify_bounds,
)

__all__ = [
    "ExperimentConfig",
    "make_model",
    "tree_stats_rows",
    "bench_rows",
    "theory_laws_rows",
    "theory_bounds_rows",
    "theory_lemma1_rows",
    "theory_coupling_rows",
    "write_csv",
    "TREE_STATS_HEADER",
    "TREE_STATS_PER_STEP_HEADER",
    "BENCH_HEADER",
    "LAWS_HEADER",
    "REPORT_HEADER",
    "LEMMA1_HEADER",
    "COUPLING_HEADER",
]

MODELS = ("pz", "linear-gaussian", "neutral")

TREE_STATS_HEADER = ["model", "scheme", "N", "T", "replicate", "n_T", "c_T", "d_T", "m_T", "adjusted"]
TREE_STATS_PER_STEP_HEADER = TREE_STATS_HEADER[:5] + ["t"] + TREE_STATS_HEADER[5:]
BENCH_HEADER = ["N", "T", "t_bucket", "mean_step_us"]
LAWS_HEADER = ["N", "epsilon", "q", "p", "prob"]
REPORT_HEADER = ["quantity", "N", "epsilon", "T", "mean", "stderr", "bound"]
LEMMA1_HEADER = ["N", "epsilon", "iterations", "sum_excess", "ratio_nlogn"]
COUPLING_HEADER = ["N", "epsilon", "runs", "violations"]


@dataclass
class ExperimentConfig:
    """Knobs of a sweep; seed + config fully determine all outputs."""

    model: str = "pz"
    n_values: tuple = (256,)
    t_values: tuple = (1000,)
    schemes: tuple = ("multinomial",)
    replicates: int = 25
    base_seed: int = 0
    workers: int = 1
    substeps: int = 100
    capacity_multiple: int = 3
    per_step: bool = False

    def __post_init__(self):
        self.n_values = tuple(int(n) for n in self.n_values)
        self.t_values = tuple(int(t) for t in self.t_values)
        self.schemes = tuple(self.schemes)
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; pick one of {MODELS}")
        if not self.n_values or not self.t_values or not self.schemes:
            raise ValueError("N, T and scheme lists must be nonempty")
        if min(self.n_values) < 1 or min(self.t_values) < 0:
            raise ValueError("particle counts must be >= 1 and horizons >= 0")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ValueError(f"unknown resampling scheme {s!r}; pick from {SCHEMES}")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.substeps < 1 or self.capacity_multiple < 1:
            raise ValueError("substeps and capacity_multiple must be >= 1")


def make_model(name, substeps=100):
    if name == "pz":
        return PZModel(substeps=substeps)
    if name == "linear-gaussian":
        return LinearGaussianModel()
    if name == "neutral":
        return NeutralModel()
    raise ValueError(f"unknown model {name!r}; pick one of {MODELS}")


# ---------------------------------------------------------------------------
# tree-stats sweep


def _tree_stats_task(task):
    model_name, scheme, n, horizon, replicate, seed, substeps, cap_mult, per_step = task
    model = make_model(model_name, substeps)
    _, obs = generate_synthetic(model, horizon, substream(seed, KEY_DATA, 0))
    result = run_filter(model, obs, n, scheme=scheme, seed=seed, capacity=cap_mult * n)
    base = [model_name, scheme, n, horizon, replicate]
    if per_step:
        return [
            base + [t, s.node_count, s.coalescence_time, s.distance_to_mrca,
                    s.crown_size, s.adjusted_nodes]
            for t, s in enumerate(result.stats)
        ]
    s = result.stats[-1]
    return [base + [s.node_count, s.coalescence_time, s.distance_to_mrca,
                    s.crown_size, s.adjusted_nodes]]


def _run_tasks(task_fn, tasks, workers):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(task_fn, tasks))
    return [task_fn(t) for t in tasks]


def tree_stats_rows(config):
    """Final (or per-step) tree statistics for the whole sweep."""
    tasks = [
        (config.model, scheme, n, horizon, r, config.base_seed + r,
         config.substeps, config.capacity_multiple, config.per_step)
        for scheme in config.schemes
        for n in config.n_values
        for horizon in config.t_values
        for r in range(config.replicates)
    ]
    chunks = _run_tasks(_tree_stats_task, tasks, config.workers)
    return [row for chunk in chunks for row in chunk]


# ---------------------------------------------------------------------------
# timing benchmark


def _bench_task(task):
    model_name, scheme, n, horizon, replicate, seed, substeps, cap_mult = task
    model = make_model(model_name, substeps)
    _, obs = generate_synthetic(model, horizon, substream(seed, KEY_DATA, 0))
    system, tree = init_filter(model, n, substream(seed, KEY_FILTER, 0), capacity=cap_mult * n)
    step_ns = np.empty(horizon)
    for t in range(horizon):
        rng = substream(seed, KEY_FILTER, t + 1)
        ancestors = resample(system.norm_weights, scheme, rng)
        counts = offspring_counts(ancestors)
        t0 = time.perf_counter_ns()
        tree.prune(counts)
        elapsed = time.perf_counter_ns() - t0
        states = model.sample_transition(rng, system.states[ancestors - 1])
        log_w = np.asarray(model.log_obs_density(obs[t], states), dtype=np.float64)
        norm = np.exp(log_w - log_w.max())
        norm /= norm.sum()
        t0 = time.perf_counter_ns()
        tree.insert(states, ancestors)
        elapsed += time.perf_counter_ns() - t0
        step_ns[t] = elapsed
        system = type(system)(states=states, log_weights=log_w, norm_weights=norm,
                              ancestors=ancestors, time=t + 1)
    return step_ns


def bench_rows(config, buckets=10):
    """Mean prune+insert wall time per step, bucketed over t.

    The first 5% of steps are treated as warm-up and excluded.  Model
    propagation and weighting are not timed; this measures the path
    storage alone.  Uses the first configured scheme.
    """
    scheme = config.schemes[0]
    rows = []
    for n in config.n_values:
        for horizon in config.t_values:
            if horizon < buckets:
                raise ValueError(f"horizon {horizon} too short for {buckets} buckets")
            per_rep = [
                _bench_task((config.model, scheme, n, horizon, r, config.base_seed + r,
                             config.substeps, config.capacity_multiple))
                for r in range(config.replicates)
            ]
            step_ns = np.mean(per_rep, axis=0)
            warmup = max(1, horizon // 20)
            kept = step_ns[warmup:]
            if np.median(kept) == 0:
                print(
                    "warning: timer resolution too coarse for per-step times; "
                    "bucket means may be unreliable",
                    file=sys.stderr,
                )
            edges = np.linspace(warmup, horizon, buckets + 1).astype(int)
            for b in range(buckets):
                lo, hi = edges[b], edges[b + 1]
                if hi <= lo:
                    continue
                rows.append([n, horizon, int(lo), float(kept[lo - warmup : hi - warmup].mean() / 1e3)])
    return rows


# ---------------------------------------------------------------------------
# theory tables


def theory_laws_rows(n, epsilon, q, chain="mixed"):
    params = ChainParams(n, epsilon)
    if chain == "mixed":
        law = lineage_transition_row(params, q)
    elif chain == "uniform":
        law = uniform_transition_row(n, q)
    else:
        raise ValueError(f"unknown chain {chain!r}; pick 'mixed' or 'uniform'")
    return [[n, epsilon, q, int(p), float(prob)] for p, prob in zip(law.support, law.probs)]


def theory_bounds_rows(n, epsilon, horizon, runs, scheme="multinomial", model_name="neutral",
                       base_seed=0, substeps=100):
    params = ChainParams(n, epsilon)
    model = make_model(model_name, substeps)
    reports = verify_bounds(params, horizon, runs, scheme=scheme, model=model,
                            base_seed=base_seed)
    return [
        [rep.quantity, rep.n, rep.epsilon, rep.horizon, rep.mean, rep.stderr, rep.bound]
        for rep in reports
    ]


def theory_lemma1_rows(n_values, epsilon, tol=1e-9):
    rows = []
    for n in n_values:
        seq, total = lineage_decay_sequence(n, epsilon, tol=tol)
        rows.append([n, epsilon, seq.size, total, total / (n * np.log(n))])
    return rows


def theory_coupling_rows(n, epsilon, runs, base_seed=0):
    params = ChainParams(n, epsilon)
    violations = 0
    for r in range(runs):
        exact, dominating = sample_coupled_chains(params, substream(base_seed + r, 2, 0))
        violations += int(np.any(exact > dominating))
    return [[n, epsilon, runs, violations]]


# ---------------------------------------------------------------------------
# CSV plumbing


def _format(v):
    if isinstance(v, float):
        return repr(float(v))
    if isinstance(v, (np.integer, np.floating)):
        return _format(v.item())
    return str(v)


def write_csv(path, header, rows):
    """Write rows as UTF-8 CSV with a header; path '-' means stdout."""
    fh = sys.stdout if path == "-" else open(path, "w", newline="", encoding="utf-8")
    try:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format(v) for v in row])
    finally:
        if fh is not sys.stdout:
            fh.close()
