"""Confidence intervals and a test for intensities built on the CLTs.

The interval ``I`` covers ``lambda_k`` and uses the variance-stabilising map
``x -> x^{1/(2m)}`` with ``m = d - k``.  Mapping it through
``lambda = (lambda_k / a_{d,k})^{1/m}`` gives ``J``, an interval for the
hyperplane intensity itself.  Whenever a stabilised root would go negative
it is clamped at zero before being raised back to an even power, so the
endpoints stay monotone in the estimate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from . import closed_forms as cf

__all__ = [
    "ConfidenceInterval",
    "TestResult",
    "PVT_SIGMA2",
    "normal_cdf",
    "normal_quantile",
    "ci_I",
    "ci_J",
    "road_bounds",
    "test_lambda",
    "pvt_ci",
]

# Variance constants of the Poisson-Voronoi vertex count, taken as the
# rounded literature values.  They are stored here, not recomputed.
PVT_SIGMA2 = {2: 0.5, 3: 5.084}


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float
    target: str
    method: str
    estimate: float

    def __post_init__(self):
        if not 0.0 <= self.lower <= self.upper:
            raise ValueError(f"invalid interval [{self.lower!r}, {self.upper!r}]")

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "lower": self.lower, "upper": self.upper,
                "level": self.level, "method": self.method, "target": self.target}


@dataclass(frozen=True)
class TestResult:
    """Outcome of the two-sided test of ``H0: lambda = lambda_star``."""

    reject: bool
    statistic: float
    lower_threshold: float
    upper_threshold: float
    alpha: float

    __test__ = False  # keep pytest from collecting this class

    @property
    def decision(self) -> str:
        return "reject" if self.reject else "retain"

    def to_dict(self) -> dict:
        return {"decision": self.decision, "estimate": self.statistic,
                "lower": self.lower_threshold, "upper": self.upper_threshold,
                "level": 1.0 - self.alpha, "method": "test_lambda"}


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


# Acklam's rational approximation to the normal quantile
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _acklam(q: float) -> float:
    if q < _P_LOW:
        t = math.sqrt(-2.0 * math.log(q))
        return ((((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5])
                / ((((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0))
    if q > 1.0 - _P_LOW:
        return -_acklam(1.0 - q)
    s = q - 0.5
    t = s * s
    return ((((((_A[0] * t + _A[1]) * t + _A[2]) * t + _A[3]) * t + _A[4]) * t + _A[5]) * s
            / (((((_B[0] * t + _B[1]) * t + _B[2]) * t + _B[3]) * t + _B[4]) * t + 1.0))


def normal_quantile(q: float) -> float:
    """Standard normal quantile: rational approximation refined by one Halley step."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {q!r}")
    if q > 0.5:
        # 1 - q is exact here; refining in the lower tail avoids cancellation
        return -normal_quantile(1.0 - q)
    x = _acklam(q)
    e = normal_cdf(x) - q
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def _z(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    return normal_quantile(1.0 - 0.5 * alpha)


def _check_common(estimate, d, k, r):
    cf._check_dk(d, k)
    if not estimate >= 0:
        raise ValueError(f"estimate must be non-negative, got {estimate!r}")
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r!r}")


def ci_I(estimate: float, d: int, k: int, r: float, alpha: float) -> ConfidenceInterval:
    """Interval for ``lambda_k`` from the unbiased estimate ``lambda_hat_{k,r}``."""
    _check_common(estimate, d, k, r)
    m = d - k
    half = cf.stabilizer_a(d, k) ** (1.0 / (2 * m)) * cf.stabilizer_b(m) * _z(alpha) / math.sqrt(r)
    root = estimate ** (1.0 / (2 * m))
    lo = max(root - half, 0.0) ** (2 * m)
    hi = (root + half) ** (2 * m)
    return ConfidenceInterval(lo, hi, 1.0 - alpha, f"lambda_{k}", "I", float(estimate))


def ci_J(estimate: float, d: int, k: int, r: float, alpha: float) -> ConfidenceInterval:
    """Interval for the hyperplane intensity ``lambda`` from ``lambda_hat_{k,r}``."""
    _check_common(estimate, d, k, r)
    m = d - k
    half = cf.stabilizer_b(m) * _z(alpha) / math.sqrt(r)
    root = (estimate / cf.stabilizer_a(d, k)) ** (1.0 / (2 * m))
    lo = max(root - half, 0.0) ** 2
    hi = (root + half) ** 2
    return ConfidenceInterval(lo, hi, 1.0 - alpha, "lambda", "J", float(estimate))


def road_bounds(count: float, r: float, alpha: float) -> ConfidenceInterval:
    """Bounds for the mean line length per unit area from the crossing count in a disc.

    ``(1/r)(count^{1/4} -+ 2 z / (pi sqrt 3))^2``; the lower root is clamped at 0.
    """
    if not count >= 0:
        raise ValueError(f"count must be non-negative, got {count!r}")
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r!r}")
    half = 2.0 * _z(alpha) / (math.pi * math.sqrt(3.0))
    root = count ** 0.25
    lo = max(root - half, 0.0) ** 2 / r
    hi = (root + half) ** 2 / r
    return ConfidenceInterval(lo, hi, 1.0 - alpha, "lambda", "road", float(count) / (math.pi * r * r))


def test_lambda(estimate: float, lambda_star: float, r: float, alpha: float) -> TestResult:
    """Two-sided test of ``lambda = lambda_star`` from the planar vertex intensity estimate."""
    if not lambda_star > 0:
        raise ValueError(f"lambda_star must be positive, got {lambda_star!r}")
    if not estimate >= 0:
        raise ValueError(f"estimate must be non-negative, got {estimate!r}")
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r!r}")
    half = 2.0 * _z(alpha) / (math.pi * math.sqrt(3.0 * r))
    root = math.sqrt(lambda_star)
    lo = max(root - half, 0.0) ** 4 / math.pi
    hi = (root + half) ** 4 / math.pi
    return TestResult(estimate < lo or estimate > hi, float(estimate), lo, hi, alpha)


def pvt_ci(vertex_count: float, window_area: float, d: int, alpha: float) -> ConfidenceInterval:
    """Interval for the nuclei intensity of a Poisson-Voronoi tessellation from its vertex count."""
    if d not in PVT_SIGMA2:
        raise ValueError(f"only d in {sorted(PVT_SIGMA2)} is supported, got {d!r}")
    if not window_area > 0:
        raise ValueError(f"window area must be positive, got {window_area!r}")
    if not vertex_count >= 0:
        raise ValueError(f"vertex count must be non-negative, got {vertex_count!r}")
    c = cf.pvt_vertex_constant(d)
    half = 0.5 * _z(alpha) * math.sqrt(1.0 + c * PVT_SIGMA2[d])
    root = math.sqrt(vertex_count)
    scale = c * window_area
    lo = max(root - half, 0.0) ** 2 / scale
    hi = (root + half) ** 2 / scale
    return ConfidenceInterval(lo, hi, 1.0 - alpha, "lambda", "pvt", vertex_count / scale)
