"""Sanity-checking the particle filter against an exactly solvable model.

On the scalar linear-Gaussian model the filtering posterior is available
in closed form through the Kalman recursion, so the particle
approximation's error is directly measurable.
"""

import numpy as np

from pftree import LinearGaussianModel, generate_synthetic, kalman_filter, run_filter, substream
from pftree.smc import KEY_DATA, KEY_FILTER, filter_step, init_filter

T = 40
N = 5000
model = LinearGaussianModel()
_, obs = generate_synthetic(model, T, substream(3, KEY_DATA, 0))
k_means, k_vars = kalman_filter(obs, model)

system, tree = init_filter(model, N, substream(3, KEY_FILTER, 0))
pf_means = []
for t, y in enumerate(obs):
    system = filter_step(system, y, model, "multinomial", substream(3, KEY_FILTER, t + 1), tree)
    pf_means.append(float(system.norm_weights @ system.states[:, 0]))
pf_means = np.array(pf_means)

err = np.abs(pf_means - k_means)
print(f"linear-Gaussian model, N={N}, T={T}")
print(f"{'t':>4} {'kalman mean':>12} {'filter mean':>12} {'|error|':>9} {'post. std':>10}")
for t in range(0, T, 5):
    print(f"{t + 1:4d} {k_means[t]:12.4f} {pf_means[t]:12.4f} {err[t]:9.4f} "
          f"{np.sqrt(k_vars[t]):10.4f}")
print(f"\nmax |error| = {err.max():.4f}  "
      f"(about {err.max() / np.sqrt(k_vars).mean():.2f} posterior standard deviations;"
      f" shrinks like 1/sqrt(N))")

final = tree.stats()
print(f"\nand the genealogy of the run: {final.node_count} stored nodes vs "
      f"{N * (T + 1)} naive, d_T = {final.distance_to_mrca}")
