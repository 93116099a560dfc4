"""Storing particle filter paths without keeping every generation.

Runs the bootstrap filter on the plankton model and compares what the
compact ancestry store actually holds against the T*N states a naive
full-history filter would keep.  Also shows path extraction and the JSON
snapshot used by the CLI's --dump-tree flag.
"""

import json

import numpy as np

from pftree import PZModel, generate_synthetic, run_filter, substream
from pftree.smc import KEY_DATA

N = 128
T = 500
SEED = 7

model = PZModel()
hidden, obs = generate_synthetic(model, T, substream(SEED, KEY_DATA, 0))
result = run_filter(model, obs, N, scheme="multinomial", seed=SEED)

stats = result.stats[-1]
print(f"filter run: N={N} particles, T={T} steps")
print(f"naive full history would store : {N * (T + 1):7d} states")
print(f"ancestry store keeps           : {stats.node_count:7d} states "
      f"(buffer capacity {result.tree.capacity})")
print(f"coalescence time c_T = {stats.coalescence_time}, "
      f"distance to MRCA d_T = {stats.distance_to_mrca}")
print(f"crown size m_T = {stats.crown_size}, "
      f"adjusted node count (n_T - T)/N = {stats.adjusted_nodes:.2f}")

# the trunk: every generation before c_T has exactly one surviving node
survivors = stats.survivors
print(f"\nsurvivors per generation (first 10): {survivors[:10]}")
print(f"survivors around the coalescence time: "
      f"{survivors[max(0, stats.coalescence_time - 2):stats.coalescence_time + 3]}")

# full path of the highest-weight particle, reconstructed from the tree
best = int(np.argmax(result.system.norm_weights)) + 1
path = result.tree.extract_path(best)
print(f"\npath of leaf {best}: {path.shape[0]} states, "
      f"P ranges {path[:, 0].min():.2f}..{path[:, 0].max():.2f}")

snap = result.tree.snapshot()
print(f"\nJSON snapshot: {len(snap['slots'])} occupied slots, "
      f"{len(json.dumps(snap)) / 1024:.0f} KiB serialized")
