"""Seeded sampling of Poisson hyperplane processes and Poisson nuclei.

Reproducibility contract: every sample is a pure function of its inputs and
a :class:`SeedContract` ``(master_seed, stream_index)``.  The generator for a
contract is ``Philox(SeedSequence(master_seed, spawn_key=(stream_index,)))``;
Philox is counter based and ``SeedSequence`` hashes the pair, so distinct
stream indices give independent streams and equal pairs give bit-identical
draws regardless of execution order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._tolerances import DEGENERACY_TOL, NORM_TOL
from .geometry import Hyperplane, UnitDirection, to_upper_hemisphere

__all__ = [
    "DegenerateLaw",
    "OrientationLaw",
    "SeedContract",
    "HyperplaneProcessSample",
    "Box",
    "sample_direction",
    "sample_directions",
    "sample_poisson_count",
    "sample_hyperplane_process",
    "sample_nuclei",
]

# below this mean the Poisson sampler inverts the cdf, above it uses PTRS
POISSON_INVERSION_LIMIT = 30.0


class DegenerateLaw(ValueError):
    """The orientation law puts all mass on one hyperplane through the origin."""


@dataclass(frozen=True)
class SeedContract:
    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed!r}")
        if int(self.stream_index) < 0:
            raise ValueError(f"stream_index must be non-negative, got {self.stream_index!r}")

    def rng(self) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_index),))
        return np.random.Generator(np.random.Philox(seq))

    def with_stream(self, stream_index: int) -> "SeedContract":
        return SeedContract(self.master_seed, stream_index)


@dataclass(frozen=True)
class OrientationLaw:
    """Distribution of hyperplane normals on the upper hemisphere.

    Use :meth:`isotropic` or :meth:`discrete` to build one.  Discrete laws are
    checked for nondegeneracy on construction: the atoms carrying positive
    weight must span ``R^d``.
    """

    d: int
    kind: str = "isotropic"
    atoms: np.ndarray | None = field(default=None, compare=False)
    weights: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d!r}")
        if self.kind == "isotropic":
            return
        if self.kind != "discrete":
            raise ValueError(f"unknown orientation law kind {self.kind!r}")
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if atoms.shape[1] != self.d or atoms.shape[0] != w.size:
            raise ValueError("atoms must be (n, d) with one weight per atom")
        if np.any(w < 0) or abs(w.sum() - 1.0) > NORM_TOL:
            raise ValueError("weights must be non-negative and sum to 1")
        atoms = np.array([UnitDirection.from_vector(a).coords for a in atoms])
        support = atoms[w > 0]
        s = np.linalg.svd(support, compute_uv=False)
        rank = int(np.sum(s > DEGENERACY_TOL * max(1.0, s[0])))
        if rank < self.d:
            raise DegenerateLaw(
                f"atoms span only a {rank}-dimensional subspace of R^{self.d}; "
                "all hyperplanes would share a common direction")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", w)

    @classmethod
    def isotropic(cls, d: int) -> "OrientationLaw":
        return cls(d, "isotropic")

    @classmethod
    def discrete(cls, atoms, weights=None) -> "OrientationLaw":
        atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
        if weights is None:
            weights = np.full(atoms.shape[0], 1.0 / atoms.shape[0])
        return cls(atoms.shape[1], "discrete", atoms, np.asarray(weights, dtype=float))

    @property
    def is_isotropic(self) -> bool:
        return self.kind == "isotropic"

    def to_dict(self) -> dict:
        if self.is_isotropic:
            return {"kind": "isotropic", "d": self.d}
        return {"kind": "discrete", "d": self.d,
                "atoms": self.atoms.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, data: dict, d: int | None = None) -> "OrientationLaw":
        kind = data.get("kind", "isotropic")
        if kind == "isotropic":
            return cls.isotropic(int(data.get("d", d)))
        return cls.discrete(data["atoms"], data.get("weights"))


def sample_directions(law: OrientationLaw, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` normals from ``law`` as an ``(n, d)`` array."""
    if law.is_isotropic:
        z = rng.standard_normal((n, law.d))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        return to_upper_hemisphere(z)
    idx = rng.choice(law.weights.size, size=n, p=law.weights)
    return law.atoms[idx].copy()


def sample_direction(law: OrientationLaw, d: int, rng: np.random.Generator) -> UnitDirection:
    if d != law.d:
        raise ValueError(f"law is {law.d}-dimensional, asked for d={d}")
    return UnitDirection(tuple(sample_directions(law, 1, rng)[0]))


def sample_poisson_count(mean: float, rng: np.random.Generator) -> int:
    """Poisson variate: cdf inversion for small means, Hörmann's PTRS otherwise."""
    if not mean >= 0 or not math.isfinite(mean):
        raise ValueError(f"Poisson mean must be finite and non-negative, got {mean!r}")
    if mean == 0:
        return 0
    if mean < POISSON_INVERSION_LIMIT:
        u = rng.random()
        k, prob = 0, math.exp(-mean)
        cdf = prob
        # the cap guards against cdf rounding short of u
        while u > cdf and k < 1000:
            k += 1
            prob *= mean / k
            cdf += prob
        return k
    return _poisson_ptrs(mean, rng)


def _poisson_ptrs(lam: float, rng: np.random.Generator) -> int:
    slam = math.sqrt(lam)
    loglam = math.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = rng.random() - 0.5
        v = rng.random()
        us = 0.5 - abs(u)
        k = math.floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= vr:
            return int(k)
        if k < 0 or (us < 0.013 and v > us):
            continue
        if (math.log(v) + math.log(inv_alpha) - math.log(a / (us * us) + b)
                <= -lam + k * loglam - math.lgamma(k + 1.0)):
            return int(k)


@dataclass(frozen=True)
class HyperplaneProcessSample:
    """One realisation of the process restricted to hyperplanes hitting ``B_r``.

    ``p[i]`` and ``v[i]`` are the signed distance and unit normal of the
    ``i``-th hyperplane.
    """

    d: int
    lam: float
    r: float
    p: np.ndarray
    v: np.ndarray
    seed: SeedContract | None = None
    law: OrientationLaw | None = None

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).ravel()
        v = np.asarray(self.v, dtype=float).reshape(p.size, self.d)
        if p.size and np.max(np.abs(p)) > self.r:
            raise ValueError("hyperplane outside the sampling ball")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        """Number ``N_r`` of hyperplanes hitting the ball."""
        return int(self.p.size)

    @property
    def hyperplanes(self) -> list[Hyperplane]:
        return [Hyperplane(float(pi), UnitDirection(tuple(vi))) for pi, vi in zip(self.p, self.v)]

    @property
    def is_isotropic(self) -> bool:
        return self.law is None or self.law.is_isotropic

    def scaled(self, t: float) -> "HyperplaneProcessSample":
        """Dilate the realisation by ``t`` (distances and radius); the intensity scales by ``1/t``."""
        return HyperplaneProcessSample(self.d, self.lam / t, self.r * t, self.p * t, self.v,
                                       self.seed, self.law)

    def permuted(self, order) -> "HyperplaneProcessSample":
        order = np.asarray(order)
        return HyperplaneProcessSample(self.d, self.lam, self.r, self.p[order], self.v[order],
                                       self.seed, self.law)


def sample_hyperplane_process(lam: float, r: float, law: OrientationLaw | None = None,
                              d: int | None = None,
                              seed: SeedContract | int = 0) -> HyperplaneProcessSample:
    """Sample the hyperplanes of a stationary Poisson process that hit ``B_r^d``.

    The count is Poisson with mean ``2 lam r``; given the count, distances are
    i.i.d. uniform on ``[-r, r]`` and normals i.i.d. from ``law``.
    """
    if not (lam > 0 and math.isfinite(lam)):
        raise ValueError(f"intensity must be positive, got {lam!r}")
    if not (r > 0 and math.isfinite(r)):
        raise ValueError(f"radius must be positive, got {r!r}")
    if law is None:
        if d is None:
            raise ValueError("give either an orientation law or a dimension")
        law = OrientationLaw.isotropic(d)
    if d is not None and d != law.d:
        raise ValueError(f"law is {law.d}-dimensional, asked for d={d}")
    if not isinstance(seed, SeedContract):
        seed = SeedContract(int(seed))
    rng = seed.rng()
    n = sample_poisson_count(2.0 * lam * r, rng)
    p = rng.uniform(-r, r, size=n)
    v = sample_directions(law, n, rng)
    return HyperplaneProcessSample(law.d, float(lam), float(r), p, v, seed, law)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lower, upper]``."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(x) for x in self.lower)
        hi = tuple(float(x) for x in self.upper)
        if len(lo) != len(hi) or any(h < l for l, h in zip(lo, hi)):
            raise ValueError(f"empty box: lower={lo}, upper={hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unit(cls, d: int = 2) -> "Box":
        return cls((0.0,) * d, (1.0,) * d)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))

    area = volume

    def dilate(self, delta: float) -> "Box":
        return Box(tuple(x - delta for x in self.lower), tuple(x + delta for x in self.upper))

    def shift(self, vec) -> "Box":
        return Box(tuple(np.add(self.lower, vec)), tuple(np.add(self.upper, vec)))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)


def sample_nuclei(lam: float, window: Box, seed: SeedContract | int = 0) -> np.ndarray:
    """Homogeneous Poisson points of intensity ``lam`` in ``window`` as an ``(n, d)`` array."""
    if not lam > 0:
        raise ValueError(f"intensity must be positive, got {lam!r}")
    if not isinstance(seed, SeedContract):
        seed = SeedContract(int(seed))
    rng = seed.rng()
    n = sample_poisson_count(lam * window.volume, rng)
    lo, hi = np.asarray(window.lower), np.asarray(window.upper)
    return lo + (hi - lo) * rng.random((n, lo.size))
