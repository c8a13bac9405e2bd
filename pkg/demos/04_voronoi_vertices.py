"""
Vertices of a planar Poisson-Voronoi tessellation
==================================================

Extract vertices in the unit square from nuclei sampled in a guarded
window, check them against the all-triples route, and estimate the nuclei
intensity from the vertex count.
"""

import numpy as np

from hyperflat import inference as inf
from hyperflat import montecarlo as mc
from hyperflat.voronoi import extract_vertices, extract_vertices_brute, sample_voronoi_nuclei

nuclei = sample_voronoi_nuclei(100.0, seed=3)
vertices = extract_vertices(nuclei)
print(f"{nuclei.n} nuclei in the guarded window, {len(vertices)} vertices in the core")
print("first vertices:", [v.location for v in vertices[:3]])

# the Delaunay route and the O(n^3) route agree on a small sample
small = sample_voronoi_nuclei(30.0, delta=0.4, seed=4)
fast, slow = extract_vertices(small), extract_vertices_brute(small)
print("Delaunay vs brute force:", len(fast), len(slow),
      np.allclose([v.location for v in fast], [v.location for v in slow]))

# interval for the nuclei intensity from one vertex count
print("interval:", inf.pvt_ci(len(vertices), nuclei.core.area, 2, 0.05).to_dict())

# standardised vertex count over replicates
cfg = mc.ExperimentConfig(d=2, lam=100.0, replicates=300, master_seed=5,
                          statistics=("pvt_count", "pvt_Z"))
report = mc.summarize(mc.replicate(cfg))
print("mean vertex count:", report["pvt_count"]["mean"], " expected:", report["pvt_count"]["analytic_mean"])
print("variance of Z:", report["pvt_Z"]["variance"])
