"""pftree: compact ancestry-tree storage for particle filter paths.

The package provides the storage structure itself (:mod:`pftree.tree`), the
array primitives it is built on (:mod:`pftree.primitives`), a bootstrap
particle filter with pluggable resampling (:mod:`pftree.smc`,
:mod:`pftree.resampling`), the state-space models used by the experiments
(:mod:`pftree.models`), analytic machinery for the coalescence behaviour of
genealogies (:mod:`pftree.theory`), and a sweep/benchmark harness with a
CLI (:mod:`pftree.experiments`, :mod:`pftree.cli`).
"""

from .tree import AncestryStore, TreeStats
from .resampling import SCHEMES, offspring_counts, resample
from .smc import FilterResult, ParticleSystem, filter_step, init_filter, run_filter, substream
from .models import (
    LinearGaussianModel,
    NeutralModel,
    PZModel,
    PZParams,
    generate_synthetic,
    kalman_filter,
)
from .theory import (
    BoundReport,
    ChainLaw,
    ChainParams,
    expected_collapse_steps,
    lineage_decay_map,
    lineage_decay_sequence,
    lineage_transition_row,
    log_stirling2,
    sample_collapse_steps,
    sample_coupled_chains,
    sample_image_size,
    stay_probability,
    uniform_expected_next,
    uniform_transition_row,
    verify_bounds,
)

__version__ = "0.1.0"

__all__ = [
    "AncestryStore",
    "TreeStats",
    "SCHEMES",
    "offspring_counts",
    "resample",
    "FilterResult",
    "ParticleSystem",
    "filter_step",
    "init_filter",
    "run_filter",
    "substream",
    "LinearGaussianModel",
    "NeutralModel",
    "PZModel",
    "PZParams",
    "generate_synthetic",
    "kalman_filter",
    "BoundReport",
    "ChainLaw",
    "ChainParams",
    "expected_collapse_steps",
    "lineage_decay_map",
    "lineage_decay_sequence",
    "lineage_transition_row",
    "log_stirling2",
    "sample_collapse_steps",
    "sample_coupled_chains",
    "sample_image_size",
    "stay_probability",
    "uniform_expected_next",
    "uniform_transition_row",
    "verify_bounds",
    "__version__",
]
