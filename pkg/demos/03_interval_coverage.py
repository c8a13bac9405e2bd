"""
Confidence intervals for the hyperplane intensity
==================================================

One-sample intervals from the vertex count, their coverage over many
replicates, and the planar two-sided test.
"""

import math

from hyperflat import inference as inf
from hyperflat import montecarlo as mc
from hyperflat import statistics as st
from hyperflat.sampling import sample_hyperplane_process

# a single realisation in a disk of radius 100
sample = sample_hyperplane_process(1.0, 100.0, d=2, seed=11)
lam_hat = st.intensity_estimators(sample, 0)[0]
print("vertex intensity estimate:", lam_hat, " (truth 1/pi =", 1 / math.pi, ")")
print("interval for lambda_0:", inf.ci_I(lam_hat, 2, 0, 100.0, 0.05).to_dict())
print("interval for lambda:  ", inf.ci_J(lam_hat, 2, 0, 100.0, 0.05).to_dict())

# the road-length bounds use only the raw crossing count
count = st.k_flat_summary(sample, 0).count
print("road bounds:          ", inf.road_bounds(count, 100.0, 0.05).to_dict())

# coverage over 500 replicates
cfg = mc.ExperimentConfig(d=2, k=(0,), r=100.0, replicates=500, master_seed=12, alpha=0.05)
for method in ("I", "J", "road"):
    res = mc.coverage_experiment(cfg, method)
    print(f"coverage {method:>4}: {res.fraction:.3f} +- {res.se:.3f}")

# the test of lambda = 1 keeps its level and has power against lambda = 1.5
print("size  :", mc.rejection_rate(cfg, 1.0).fraction)
print("power :", mc.rejection_rate(cfg.replace(lam=1.5, replicates=200), 1.0).fraction)
