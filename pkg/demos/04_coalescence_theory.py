"""The backward lineage-count chains behind the tree-size bounds.

Walking backwards from the leaves, the number of distinct ancestors per
generation is a Markov chain.  This script shows its analytic transition
law against simulation, the closed-form expected collapse time of the
dominating chain with its (1 + 8/eps) N log N bound, and the decay-map
sums that bound the crown size.
"""

import math

import numpy as np

from pftree.theory import (
    ChainParams,
    expected_collapse_steps,
    lineage_decay_sequence,
    lineage_transition_row,
    sample_collapse_steps,
    sample_image_size,
)

rng = np.random.default_rng(0)

print("transition law from q=4 lineages (N=5, eps=0.5) vs 10^5 simulations")
params = ChainParams(5, 0.5)
law = lineage_transition_row(params, 4)
sizes = sample_image_size(params, 4, rng, size=100_000)
emp = np.bincount(sizes, minlength=5)[1:] / 100_000
print(f"{'p':>3} {'analytic':>10} {'simulated':>10}")
for p, a, e in zip(law.support, law.probs, emp):
    print(f"{p:3d} {a:10.4f} {e:10.4f}")

print("\nexpected collapse time of the dominating chain (eps=0.5)")
print(f"{'N':>6} {'closed form':>12} {'simulated':>10} {'(1+8/eps) N ln N':>17}")
for n in (10, 50, 100):
    params = ChainParams(n, 0.5)
    closed = expected_collapse_steps(params)
    sim = sample_collapse_steps(params, rng, size=20_000).mean()
    bound = (1 + 8 / 0.5) * n * math.log(n)
    print(f"{n:6d} {closed:12.1f} {sim:10.1f} {bound:17.0f}")

print("\ndecay-map sums: sum(u_k - 1) stays proportional to N log N")
print(f"{'N':>7} {'sum':>12} {'sum/(N ln N)':>13}")
for n in (10, 100, 1000, 10_000):
    _, total = lineage_decay_sequence(n, 0.5)
    print(f"{n:7d} {total:12.1f} {total / (n * math.log(n)):13.3f}")
