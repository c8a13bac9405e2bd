"""Hyperplanes, affine flats and their sections with origin-centred balls.

A hyperplane is stored as ``H(p, v) = {x : <x, v> = p}`` with ``v`` on the
upper unit hemisphere (last coordinate non-negative).  Intersections of
``m`` hyperplanes are represented by their foot point (the point of the flat
nearest to the origin) together with an orthonormal frame of the flat's
direction space, which makes distances and section volumes cheap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._tolerances import DEGENERACY_TOL, NORM_TOL, ORTHO_TOL

__all__ = [
    "DegenerateConfiguration",
    "UnitDirection",
    "Hyperplane",
    "Flat",
    "Ball",
    "to_upper_hemisphere",
    "unit_ball_volume",
    "intersect_hyperplanes",
    "flat_hits_ball",
    "flat_ball_volume",
    "section_volume",
    "flat_sq_distances",
    "parallelotope_volume",
    "ball_set_covariance_2d",
]

MAX_DIMENSION = 30


class DegenerateConfiguration(ValueError):
    """Raised when hyperplane normals are (numerically) linearly dependent."""


def to_upper_hemisphere(x: np.ndarray) -> np.ndarray:
    """Reflect vectors (rows of ``x``) onto the upper hemisphere.

    A row with negative last coordinate is negated.  When the last
    coordinate is exactly zero the last *nonzero* coordinate decides, so the
    map is deterministic on the hemisphere boundary as well.
    """
    x = np.array(x, dtype=float, copy=True)
    flat = x.reshape(-1, x.shape[-1])
    nonzero = flat != 0.0
    has_nonzero = nonzero.any(axis=1)
    # index of the last nonzero coordinate in each row
    last = flat.shape[1] - 1 - np.argmax(nonzero[:, ::-1], axis=1)
    sign = np.where(flat[np.arange(flat.shape[0]), last] < 0.0, -1.0, 1.0)
    sign[~has_nonzero] = 1.0
    flat *= sign[:, None]
    return flat.reshape(x.shape)


@dataclass(frozen=True)
class UnitDirection:
    """A unit vector on the upper hemisphere ``S_+^{d-1}``."""

    coords: tuple[float, ...]

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coords must be a non-empty vector")
        if abs(np.linalg.norm(c) - 1.0) > NORM_TOL:
            raise ValueError(f"direction is not unit length: |v| = {np.linalg.norm(c)!r}")
        if not np.allclose(to_upper_hemisphere(c), c, rtol=0.0, atol=0.0):
            raise ValueError("direction is not on the upper hemisphere")
        object.__setattr__(self, "coords", tuple(float(t) for t in c))

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> "UnitDirection":
        """Normalize ``x`` and reflect it onto the upper hemisphere."""
        x = np.asarray(x, dtype=float)
        n = np.linalg.norm(x)
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(tuple(to_upper_hemisphere(x / n)))

    @property
    def d(self) -> int:
        return len(self.coords)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)


@dataclass(frozen=True)
class Hyperplane:
    """``H(p, v) = {x : <x, v> = p}``; ``p`` is the signed distance to the origin."""

    p: float
    v: UnitDirection

    @classmethod
    def from_arrays(cls, p: float, v: Sequence[float]) -> "Hyperplane":
        return cls(float(p), UnitDirection(tuple(v)))

    @property
    def normal(self) -> np.ndarray:
        return np.asarray(self.v.coords)

    def residual(self, x: Sequence[float]) -> float:
        return float(np.dot(np.asarray(x, dtype=float), self.normal) - self.p)

    def contains(self, x: Sequence[float], tol: float = 1e-9) -> bool:
        return abs(self.residual(x)) <= tol * max(1.0, abs(self.p))


@dataclass(frozen=True)
class Flat:
    """Affine ``dim``-flat ``foot + span(frame)``.

    ``foot`` is the point of the flat closest to the origin and ``frame`` is a
    ``(dim, d)`` array of orthonormal direction vectors.
    """

    dim: int
    foot: np.ndarray
    frame: np.ndarray

    def __post_init__(self):
        foot = np.asarray(self.foot, dtype=float)
        frame = np.asarray(self.frame, dtype=float).reshape(self.dim, foot.size)
        if self.dim < 0 or self.dim > foot.size:
            raise ValueError(f"flat dimension {self.dim} outside [0, {foot.size}]")
        if self.dim:
            if np.max(np.abs(frame @ foot)) > ORTHO_TOL * max(1.0, np.linalg.norm(foot)):
                raise ValueError("foot point is not orthogonal to the frame")
            if np.max(np.abs(frame @ frame.T - np.eye(self.dim))) > ORTHO_TOL:
                raise ValueError("frame is not orthonormal")
        object.__setattr__(self, "foot", foot)
        object.__setattr__(self, "frame", frame)

    @property
    def ambient_dim(self) -> int:
        return self.foot.size

    @property
    def distance(self) -> float:
        """Euclidean distance from the origin to the flat."""
        return float(np.linalg.norm(self.foot))


@dataclass(frozen=True)
class Ball:
    """Closed ball of the given radius centred at the origin."""

    radius: float

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"ball radius must be finite and positive, got {self.radius!r}")


def unit_ball_volume(d: int) -> float:
    """Volume ``kappa_d = pi^(d/2) / Gamma(d/2 + 1)`` of the unit ``d``-ball."""
    if int(d) != d or not 0 <= d <= MAX_DIMENSION:
        raise ValueError(f"dimension must be an integer in [0, {MAX_DIMENSION}], got {d!r}")
    return math.pi ** (0.5 * d) / math.gamma(0.5 * d + 1.0)


def intersect_hyperplanes(planes: Sequence[Hyperplane], d: int | None = None) -> Flat:
    """Intersect ``m`` hyperplanes in ``R^d`` into a ``(d - m)``-flat.

    The foot point is the minimum-norm solution of ``V x = p`` computed from
    a QR factorisation of ``V^T``; the frame spans the null space of ``V``.

    Raises
    ------
    DegenerateConfiguration
        If the Gram determinant of the normals is below ``DEGENERACY_TOL``.
    """
    planes = list(planes)
    m = len(planes)
    if m == 0:
        raise ValueError("need at least one hyperplane")
    if d is None:
        d = planes[0].v.d
    if m > d:
        raise ValueError(f"cannot intersect {m} hyperplanes in R^{d} into a flat")
    V = np.array([h.normal for h in planes])
    if V.shape[1] != d:
        raise ValueError("hyperplane dimension does not match d")
    p = np.array([h.p for h in planes], dtype=float)

    Q, R = np.linalg.qr(V.T, mode="complete")
    Rm = R[:m, :m]
    gram_det = float(np.prod(np.diag(Rm)) ** 2)
    if gram_det < DEGENERACY_TOL:
        raise DegenerateConfiguration(
            f"Gram determinant {gram_det:.3e} of the normals is below {DEGENERACY_TOL:g}")
    y = np.linalg.solve(Rm.T, p)
    foot = Q[:, :m] @ y
    frame = Q[:, m:].T
    return Flat(d - m, foot, frame)


def flat_hits_ball(f: Flat, r: float) -> bool:
    return f.distance <= r


def section_volume(k: int, sq_dist, r: float):
    """``k``-volume of the section of ``B_r`` with a ``k``-flat at squared distance ``sq_dist``.

    The section is a ``k``-ball of radius ``sqrt(r^2 - delta^2)``; for ``k = 0``
    this is the counting value 1 (or 0 when the flat misses the ball).
    Vectorised over ``sq_dist``.
    """
    sq = np.asarray(sq_dist, dtype=float)
    slack = np.clip(r * r - sq, 0.0, None)
    if k == 0:
        out = (sq <= r * r).astype(float)
    else:
        out = unit_ball_volume(k) * slack ** (0.5 * k)
    return out if out.ndim else float(out)


def flat_ball_volume(f: Flat, r: float) -> float:
    return section_volume(f.dim, float(f.foot @ f.foot), r)


def flat_sq_distances(P: np.ndarray, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Squared origin distances of many flats at once.

    Parameters
    ----------
    P : (n, m) array
        Signed distances of the ``m`` hyperplanes defining each flat.
    V : (n, m, d) array
        Their unit normals.

    Returns
    -------
    sq_dist : (n,) array
        ``p^T G^{-1} p`` with ``G = V V^T``; ``inf`` for degenerate subsets.
    valid : (n,) bool array
        False where the Gram determinant is below ``DEGENERACY_TOL``.
    """
    P = np.asarray(P, dtype=float)
    V = np.asarray(V, dtype=float)
    n, m = P.shape
    if m == 1:
        return P[:, 0] ** 2, np.ones(n, dtype=bool)
    if m == 2:
        c = np.einsum("ij,ij->i", V[:, 0], V[:, 1])
        det = 1.0 - c * c
        valid = det >= DEGENERACY_TOL
        p1, p2 = P[:, 0], P[:, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            sq = (p1 * p1 + p2 * p2 - 2.0 * c * p1 * p2) / det
        return np.where(valid, sq, np.inf), valid
    G = np.einsum("nid,njd->nij", V, V)
    det = np.linalg.det(G)
    valid = det >= DEGENERACY_TOL
    sq = np.full(n, np.inf)
    if valid.any():
        y = np.linalg.solve(G[valid], P[valid][..., None])[..., 0]
        sq[valid] = np.einsum("ni,ni->n", P[valid], y)
    return sq, valid


def parallelotope_volume(vectors: Sequence[Sequence[float]]) -> float:
    """``m``-volume of the parallelotope spanned by ``m`` vectors in ``R^d``."""
    A = np.atleast_2d(np.asarray(vectors, dtype=float))
    if A.shape[0] > A.shape[1]:
        return 0.0
    return math.sqrt(max(float(np.linalg.det(A @ A.T)), 0.0))


def ball_set_covariance_2d(r: float, u: float) -> float:
    """Area of ``B_r ∩ (B_r + (u, 0))`` in the plane (lens area)."""
    u = abs(float(u))
    if u >= 2.0 * r:
        return 0.0
    return 2.0 * r * r * math.acos(u / (2.0 * r)) - 0.5 * u * math.sqrt(4.0 * r * r - u * u)
