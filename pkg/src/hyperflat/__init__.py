"""Simulation and inference for stationary Poisson hyperplane processes.

Modules
-------
geometry       hyperplanes, flats and their sections with balls
closed_forms   intensities, limit variances and other exact constants
sampling       seeded sampling of hyperplane processes and Poisson nuclei
statistics     k-flat counts and volumes, CLT statistics, estimators
inference      confidence intervals and the planar intensity test
montecarlo     replication harness and verification experiments
voronoi        planar Poisson-Voronoi vertices
cli            the ``hyperflat`` command
"""
from ._version import __version__
from . import closed_forms, geometry, inference, montecarlo, sampling, statistics, voronoi

__all__ = ["__version__", "closed_forms", "geometry", "inference", "montecarlo",
           "sampling", "statistics", "voronoi"]
