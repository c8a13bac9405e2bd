"""Planar Poisson-Voronoi vertices and the vertex-count CLT.

A Voronoi vertex is the circumcentre of three nuclei whose open circumdisk
contains no other nucleus.  Nuclei are sampled in the core window dilated by
a guard margin so that vertices inside the core are decided by nuclei that
were actually sampled.

Two extraction routes are provided.  :func:`extract_vertices` gets candidate
triples from a Delaunay triangulation and re-checks each one against the
full nucleus set with a k-d tree.  :func:`extract_vertices_brute` scans all
triples and tests emptiness by direct distances; it is the small-n oracle.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay, QhullError, cKDTree

from . import closed_forms as cf
from .inference import PVT_SIGMA2
from .sampling import Box, SeedContract, sample_nuclei

__all__ = [
    "COLLINEAR_TOL",
    "EMPTY_DISK_RTOL",
    "NucleiSample",
    "VoronoiVertex",
    "default_guard",
    "sample_voronoi_nuclei",
    "circumcircles",
    "extract_vertices",
    "extract_vertices_brute",
    "pvt_intensity_estimate",
    "pvt_standardized_Z",
    "write_vertices_csv",
]

COLLINEAR_TOL = 1e-12
EMPTY_DISK_RTOL = 1e-9


def default_guard(lam: float) -> float:
    return 5.0 / math.sqrt(lam)


@dataclass(frozen=True)
class NucleiSample:
    points: np.ndarray
    lam: float
    core: Box
    delta: float
    seed: SeedContract | None = None

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"guard margin must be positive, got {self.delta!r}")
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if pts.size and not np.all(self.window.contains(pts)):
            raise ValueError("nuclei outside the guarded window")
        object.__setattr__(self, "points", pts)

    @property
    def window(self) -> Box:
        return self.core.dilate(self.delta)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def shifted(self, vec) -> "NucleiSample":
        vec = np.asarray(vec, dtype=float)
        return NucleiSample(self.points + vec, self.lam, self.core.shift(vec), self.delta, self.seed)


@dataclass(frozen=True)
class VoronoiVertex:
    location: tuple[float, float]
    nuclei: tuple[int, int, int]
    circumradius: float


def sample_voronoi_nuclei(lam: float, core: Box | None = None, delta: float | None = None,
                          seed: SeedContract | int = 0) -> NucleiSample:
    core = Box.unit(2) if core is None else core
    delta = default_guard(lam) if delta is None else float(delta)
    if not isinstance(seed, SeedContract):
        seed = SeedContract(int(seed))
    pts = sample_nuclei(lam, core.dilate(delta), seed)
    return NucleiSample(pts, float(lam), core, delta, seed)


def circumcircles(a: np.ndarray, b: np.ndarray, c: np.ndarray):
    """Circumcentres and radii of triangles ``(a, b, c)`` given as ``(n, 2)`` arrays.

    Returns ``(centre, radius, ok)`` where ``ok`` is False for (near) collinear
    triples, whose area is below ``COLLINEAR_TOL`` times the squared diameter.
    """
    bb = b - a
    cc = c - a
    den = 2.0 * (bb[:, 0] * cc[:, 1] - bb[:, 1] * cc[:, 0])
    diam2 = np.maximum.reduce([np.einsum("ij,ij->i", bb, bb), np.einsum("ij,ij->i", cc, cc),
                               np.einsum("ij,ij->i", c - b, c - b)])
    ok = 0.25 * np.abs(den) > COLLINEAR_TOL * diam2
    b2 = np.einsum("ij,ij->i", bb, bb)
    c2 = np.einsum("ij,ij->i", cc, cc)
    with np.errstate(divide="ignore", invalid="ignore"):
        ux = (cc[:, 1] * b2 - bb[:, 1] * c2) / den
        uy = (bb[:, 0] * c2 - cc[:, 0] * b2) / den
    u = np.column_stack([ux, uy])
    return a + u, np.hypot(ux, uy), ok


def _build(centres, radii, triples):
    order = np.lexsort((centres[:, 1], centres[:, 0]))
    return [VoronoiVertex((float(centres[i, 0]), float(centres[i, 1])),
                          tuple(int(t) for t in triples[i]), float(radii[i])) for i in order]


def extract_vertices(sample: NucleiSample) -> list[VoronoiVertex]:
    """Voronoi vertices inside the core window, sorted by location."""
    pts = sample.points
    if pts.shape[0] < 3:
        return []
    try:
        tri = Delaunay(pts)
    except QhullError:
        # all nuclei collinear (or coincident): no vertices
        return []
    simp = np.sort(tri.simplices, axis=1)
    centre, rad, ok = circumcircles(pts[simp[:, 0]], pts[simp[:, 1]], pts[simp[:, 2]])
    keep = ok & sample.core.contains(np.where(ok[:, None], centre, np.inf))
    centre, rad, simp = centre[keep], rad[keep], simp[keep]
    if not centre.shape[0]:
        return []
    # independent empty-disk check against every nucleus: at most three of the
    # four nearest can belong to the triple, so the nearest outsider is among them
    kq = min(4, pts.shape[0])
    dist, idx = cKDTree(pts).query(centre, k=kq)
    outsider = ~np.any(idx[:, :, None] == simp[:, None, :], axis=2)
    nearest_other = np.where(outsider, dist, np.inf).min(axis=1)
    keep = nearest_other >= rad * (1.0 - EMPTY_DISK_RTOL)
    return _build(centre[keep], rad[keep], simp[keep])


def extract_vertices_brute(sample: NucleiSample, chunk: int = 1 << 16) -> list[VoronoiVertex]:
    """All-triples extraction; O(n^3), for small samples.

    Triples whose circumcentre falls outside the core box are dropped before
    the emptiness test, which compares each remaining centre with every nucleus.
    """
    pts = sample.points
    n = pts.shape[0]
    if n < 3:
        return []
    lo = np.asarray(sample.core.lower)
    hi = np.asarray(sample.core.upper)
    tri = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(n), 3)),
                      dtype=np.intp, count=3 * math.comb(n, 3)).reshape(-1, 3)
    out_c, out_r, out_t = [], [], []
    for s in range(0, tri.shape[0], chunk):
        t = tri[s:s + chunk]
        a, b, c = pts[t[:, 0]], pts[t[:, 1]], pts[t[:, 2]]
        centre, rad, ok = circumcircles(a, b, c)
        ok &= np.all((centre >= lo) & (centre <= hi), axis=1)
        if not ok.any():
            continue
        centre, rad, t = centre[ok], rad[ok], t[ok]
        d2 = ((centre[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        d2[np.arange(t.shape[0])[:, None], t] = np.inf
        empty = d2.min(axis=1) >= (rad * (1.0 - EMPTY_DISK_RTOL)) ** 2
        out_c.append(centre[empty])
        out_r.append(rad[empty])
        out_t.append(t[empty])
    if not out_c:
        return []
    return _build(np.concatenate(out_c), np.concatenate(out_r), np.concatenate(out_t))


def pvt_intensity_estimate(sample: NucleiSample,
                           vertices: list[VoronoiVertex] | None = None) -> tuple[float, float]:
    """``(lambda0_hat, lambda_hat)``: vertex count per core area and the implied nuclei intensity."""
    area = sample.core.area
    if not area > 0:
        raise ValueError("core window has zero area")
    count = len(extract_vertices(sample) if vertices is None else vertices)
    lam0 = count / area
    return lam0, lam0 / cf.pvt_vertex_constant(2)


def pvt_standardized_Z(sample: NucleiSample, vertices: list[VoronoiVertex] | None = None,
                       lam: float | None = None) -> float:
    """Vertex count centred at ``c_2 lam area``, scaled to unit asymptotic variance."""
    lam = sample.lam if lam is None else lam
    if lam is None or not lam > 0:
        raise ValueError("analytic centering needs the true nuclei intensity")
    area = sample.core.area
    count = len(extract_vertices(sample) if vertices is None else vertices)
    c = cf.pvt_vertex_constant(2)
    lam0 = c * lam
    return (count - lam0 * area) / math.sqrt(area) / math.sqrt(lam0 * (1.0 + c * PVT_SIGMA2[2]))


def write_vertices_csv(vertices: list[VoronoiVertex], dest=None, header: dict | None = None) -> str:
    """Write ``x, y, circumradius`` rows (17 significant digits); returns the text.

    ``header`` entries are written first as ``# key=value`` comment lines.
    """
    buf = io.StringIO()
    for key, val in (header or {}).items():
        buf.write(f"# {key}={val}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "circumradius"])
    for v in vertices:
        w.writerow([f"{v.location[0]:.17g}", f"{v.location[1]:.17g}", f"{v.circumradius:.17g}"])
    text = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(text)
    return text
