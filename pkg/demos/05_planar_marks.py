"""
Crossings with marked angles
============================

Count line crossings whose two angles fall in a rectangle B(a, b), compare
with the closed-form mean and kernel moment, and look at the version
normalised by the realised number of lines.
"""

import math

from hyperflat import closed_forms as cf
from hyperflat import montecarlo as mc
from hyperflat.statistics import PlanarAngleRectangle

a, b = math.pi / 2, math.pi
print("mu(a, b)    =", cf.planar_mu(a, b))
print("sigma(a, b) =", cf.planar_sigma(a, b))

# Monte Carlo value of the kernel moment with one shared line
est = mc.estimate_sigma_jd(2, 1, PlanarAngleRectangle(a, b), draws=400_000, seed=1)
print(f"MC sigma    = {est.value:.5f} +- {est.se:.5f}")

cfg = mc.ExperimentConfig(d=2, r=50.0, replicates=500, master_seed=2, a=a, b=b,
                          statistics=("planar_count", "planar_marked_Z", "planar_Z"))
report = mc.summarize(mc.replicate(cfg))
for name in cfg.statistics:
    e = report[name]
    print(f"{name:16s} mean={e['mean']:10.4f}  var={e['variance']:.5f}  "
          f"reference mean={e.get('analytic_mean', float('nan')):10.4f}  "
          f"reference var={e.get('analytic_variance', float('nan')):.5f}")
