"""Observables of one realisation: k-flat counts and volumes, marked vertex
counts, standardised CLT statistics and intensity estimators.

All statistics enumerate the ``(d - k)``-subsets of the sampled hyperplanes
(each subset is one candidate ``k``-flat).  Subsets with linearly dependent
normals are parallel configurations and contribute nothing.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from . import closed_forms as cf
from .geometry import flat_sq_distances, section_volume, unit_ball_volume
from .sampling import HyperplaneProcessSample

__all__ = [
    "DEFAULT_ENUMERATION_CAP",
    "EnumerationBudgetExceeded",
    "UndefinedForSmallSample",
    "MarkPredicate",
    "AllPass",
    "PlanarAngleRectangle",
    "KFlatSummary",
    "canonical_sort",
    "planar_angles",
    "k_flat_summary",
    "marked_vertex_count",
    "standardized_count_Z",
    "standardized_volume_Z",
    "intensity_estimators",
    "planar_marked_Z",
    "planar_random_normalized_Z",
]

DEFAULT_ENUMERATION_CAP = 10 ** 7
_CHUNK = 1 << 18


class EnumerationBudgetExceeded(RuntimeError):
    pass


class UndefinedForSmallSample(ValueError):
    pass


@lru_cache(maxsize=32)
def _combinations(n: int, m: int) -> np.ndarray:
    if m == 1:
        out = np.arange(n)[:, None]
    elif m == 2:
        out = np.column_stack(np.triu_indices(n, 1))
    else:
        total = math.comb(n, m)
        flat = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(n), m)),
                           dtype=np.intp, count=total * m)
        out = flat.reshape(total, m)
    out.setflags(write=False)
    return out


def _subsets(n: int, m: int, cap: int) -> np.ndarray:
    total = math.comb(n, m)
    if total > cap:
        raise EnumerationBudgetExceeded(
            f"{total} subsets of size {m} from {n} hyperplanes exceed the enumeration cap {cap}; "
            f"raise the cap to at least {total}")
    return _combinations(n, m)


def _sections(sample: HyperplaneProcessSample, m: int,
              cap: int) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(subset_indices, squared_distance)`` chunk by chunk; degenerate subsets get ``inf``."""
    if sample.n < m:
        return
    idx = _subsets(sample.n, m, cap)
    for start in range(0, idx.shape[0], _CHUNK):
        chunk = idx[start:start + _CHUNK]
        sq, _ = flat_sq_distances(sample.p[chunk], sample.v[chunk])
        yield chunk, sq


class MarkPredicate:
    """Boolean test on the sorted normals of the ``d`` hyperplanes through a vertex.

    Subclasses implement :meth:`__call__` on an ``(n, d, d)`` array whose
    second axis is already in canonical (lexicographic) order.
    """

    def __call__(self, dirs: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class AllPass(MarkPredicate):
    def __call__(self, dirs):
        return np.ones(dirs.shape[0], dtype=bool)

    def __repr__(self):
        return "AllPass()"


@dataclass(frozen=True)
class PlanarAngleRectangle(MarkPredicate):
    """``B(a, b)``: the smaller line angle lies in ``[0, a]`` and the larger in ``[0, b]``.

    Angles are measured as ``atan2(v_2, v_1)`` in ``[0, pi)``.  The test only
    uses the min and max of the two angles, so it does not depend on how the
    pair is ordered.
    """

    a: float
    b: float

    def __post_init__(self):
        if not 0 <= self.a <= self.b <= math.pi:
            raise ValueError(f"need 0 <= a <= b <= pi, got a={self.a!r}, b={self.b!r}")

    def __call__(self, dirs):
        g = planar_angles(dirs)
        return (g.min(axis=1) <= self.a) & (g.max(axis=1) <= self.b)


def planar_angles(v: np.ndarray) -> np.ndarray:
    """Angle in ``[0, pi)`` of planar upper-hemisphere normals (last axis of length 2)."""
    v = np.asarray(v, dtype=float)
    return np.arctan2(v[..., 1], v[..., 0])


def canonical_sort(dirs: np.ndarray) -> np.ndarray:
    """Sort the vectors of each tuple (axis 1) lexicographically by coordinates."""
    dirs = np.asarray(dirs)
    n, m, d = dirs.shape
    order = np.broadcast_to(np.arange(m), (n, m))
    rows = np.arange(n)[:, None]
    for c in reversed(range(d)):
        key = dirs[rows, order, c]
        order = np.take_along_axis(order, np.argsort(key, axis=1, kind="stable"), axis=1)
    return dirs[rows, order]


@dataclass(frozen=True)
class KFlatSummary:
    """Number of induced ``k``-flats hitting ``B_r`` and their total ``k``-volume inside it."""

    k: int
    count: int
    volume: float
    subsets_examined: int


def k_flat_summary(sample: HyperplaneProcessSample, k: int,
                   cap: int = DEFAULT_ENUMERATION_CAP) -> KFlatSummary:
    d = sample.d
    if not 0 <= k <= d - 1:
        raise ValueError(f"k must lie in [0, {d - 1}], got {k!r}")
    r2 = sample.r * sample.r
    count, volume, examined = 0, 0.0, 0
    for chunk, sq in _sections(sample, d - k, cap):
        hit = sq <= r2
        count += int(hit.sum())
        if k == 0:
            volume += float(hit.sum())
        else:
            volume += math.fsum(section_volume(k, sq[hit], sample.r))
        examined += chunk.shape[0]
    return KFlatSummary(k, count, volume, examined)


def marked_vertex_count(sample: HyperplaneProcessSample, predicate: MarkPredicate | None = None,
                        cap: int = DEFAULT_ENUMERATION_CAP) -> int:
    """Number of vertices in ``B_r`` whose sorted normals satisfy ``predicate``."""
    predicate = AllPass() if predicate is None else predicate
    r2 = sample.r * sample.r
    total = 0
    for chunk, sq in _sections(sample, sample.d, cap):
        hit = chunk[sq <= r2]
        if hit.size:
            dirs = canonical_sort(sample.v[hit])
            total += int(np.count_nonzero(predicate(dirs)))
    return total


def _centre(sample, analytic_mean, centering, mean):
    if centering == "analytic":
        if not sample.is_isotropic:
            raise ValueError("analytic centering needs an isotropic orientation law; "
                             "use centering='plug-in' with an estimated mean")
        return analytic_mean()
    if centering == "plug-in":
        if mean is None:
            raise ValueError("plug-in centering needs an externally supplied mean")
        return float(mean)
    raise ValueError(f"unknown centering {centering!r}")


def _scale(sample, k):
    m = sample.d - k
    return math.factorial(m - 1) / (2.0 * sample.lam * sample.r) ** (m - 0.5)


def standardized_count_Z(sample: HyperplaneProcessSample, k: int, centering: str = "analytic",
                         mean: float | None = None, summary: KFlatSummary | None = None) -> float:
    """Centred, scaled ``k``-flat count; asymptotically ``N(0, sigma_chi(d, k))``."""
    s = summary if summary is not None else k_flat_summary(sample, k)
    mu = _centre(sample, lambda: cf.mean_psi(sample.d, k, sample.lam, sample.r), centering, mean)
    return _scale(sample, k) * (s.count - mu)


def standardized_volume_Z(sample: HyperplaneProcessSample, k: int, centering: str = "analytic",
                          mean: float | None = None, summary: KFlatSummary | None = None) -> float:
    """Centred, scaled total ``k``-volume; asymptotically ``N(0, sigma_nu(d, k))``."""
    s = summary if summary is not None else k_flat_summary(sample, k)
    mu = _centre(sample, lambda: cf.mean_zeta(sample.d, k, sample.lam, sample.r), centering, mean)
    return _scale(sample, k) * sample.r ** (-k) * (s.volume - mu)


def intensity_estimators(sample: HyperplaneProcessSample, k: int,
                         summary: KFlatSummary | None = None) -> tuple[float, float]:
    """Unbiased estimates of ``lambda_k`` from the count and from the volume."""
    s = summary if summary is not None else k_flat_summary(sample, k)
    d, r = sample.d, sample.r
    return (s.count / (unit_ball_volume(d - k) * r ** (d - k)),
            s.volume / (unit_ball_volume(d) * r ** d))


def _require_planar(sample):
    if sample.d != 2:
        raise ValueError(f"planar statistic needs d = 2, got d = {sample.d}")


def planar_marked_Z(sample: HyperplaneProcessSample, a: float, b: float,
                    count: int | None = None) -> float:
    """Crossings with angles in ``B(a, b)``, centred at their mean and scaled by ``(2 lam r)^{-3/2}``."""
    _require_planar(sample)
    if count is None:
        count = marked_vertex_count(sample, PlanarAngleRectangle(a, b))
    n = 2.0 * sample.lam * sample.r
    return (count - 0.5 * n * n * cf.planar_mu(a, b)) / n ** 1.5


def planar_random_normalized_Z(sample: HyperplaneProcessSample, a: float, b: float,
                               count: int | None = None) -> float:
    """``(N(N-1))^{-3/4} sum_{i<j} (f_B(X_i, X_j) - mu_B)`` with the realised line count ``N``."""
    _require_planar(sample)
    n = sample.n
    if n < 2:
        raise UndefinedForSmallSample(f"need at least two lines, got {n}")
    if count is None:
        count = marked_vertex_count(sample, PlanarAngleRectangle(a, b))
    pairs = n * (n - 1) / 2.0
    return (count - pairs * cf.planar_mu(a, b)) / (n * (n - 1.0)) ** 0.75
