"""Closed-form intensities, moments and asymptotic variances.

Everything here is a deterministic function of the dimension ``d``, the
flat dimension ``k`` and (where relevant) the hyperplane intensity ``lam``
and ball radius ``r``; all formulas assume an isotropic orientation law.

Products of unit-ball volumes are evaluated exactly: ``kappa_n`` is always a
rational multiple of ``pi^floor(n/2)``, so each constant is carried as a
``Fraction`` coefficient times an integer power of pi and converted to float
once at the end.  This keeps high-dimensional constants such as
``kappa_{d^2}`` free of overflow/underflow and makes identities like
``c_2 = 2`` hold exactly in floating point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate

from .geometry import ball_set_covariance_2d

__all__ = [
    "kappa",
    "intensity_lambda_k",
    "stabilizer_a",
    "stabilizer_b",
    "hitting_probability",
    "mean_psi",
    "mean_zeta",
    "sigma_chi",
    "sigma_nu",
    "sigma_chi_mixed",
    "sigma_nu_mixed",
    "covariance_matrix",
    "g_chi_kernel",
    "g_nu_kernel",
    "ball_power_integral",
    "matheron_terms",
    "matheron_second_moment_zeta",
    "exact_var_psi0_2d",
    "var_psi0_pair_correlation_2d",
    "pair_corr_coeff",
    "pair_correlation_g0",
    "planar_mu",
    "planar_sigma",
    "pvt_vertex_constant",
    "beta_function",
]


@dataclass(frozen=True)
class _PiMonomial:
    """Exact value ``coef * pi**power``."""

    coef: Fraction
    power: int = 0

    def __mul__(self, other):
        if isinstance(other, _PiMonomial):
            return _PiMonomial(self.coef * other.coef, self.power + other.power)
        return _PiMonomial(self.coef * Fraction(other), self.power)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, _PiMonomial):
            return _PiMonomial(self.coef / other.coef, self.power - other.power)
        return _PiMonomial(self.coef / Fraction(other), self.power)

    def __rtruediv__(self, other):
        return _PiMonomial(Fraction(other) / self.coef, -self.power)

    def __pow__(self, n: int):
        return _PiMonomial(self.coef ** n, self.power * n)

    def __float__(self):
        return float(self.coef) * math.pi ** self.power


_ONE = _PiMonomial(Fraction(1))
_PI = _PiMonomial(Fraction(1), 1)


@lru_cache(maxsize=None)
def _kappa(n: int) -> _PiMonomial:
    if n < 0:
        raise ValueError(f"unit-ball volume needs n >= 0, got {n}")
    m, odd = divmod(n, 2)
    if odd:
        return _PiMonomial(Fraction(2 * math.factorial(m) * 4 ** m, math.factorial(2 * m + 1)), m)
    return _PiMonomial(Fraction(1, math.factorial(m)), m)


def kappa(n: int) -> float:
    """Volume of the unit ``n``-ball for any integer ``n >= 0``."""
    return float(_kappa(int(n)))


def _check_dk(d: int, k: int, name: str = "k") -> None:
    if int(d) != d or d < 1:
        raise ValueError(f"dimension d must be a positive integer, got {d!r}")
    if int(k) != k or not 0 <= k <= d - 1:
        raise ValueError(f"{name} must be an integer in [0, {d - 1}], got {k!r}")


def _direction_ratio(d: int) -> _PiMonomial:
    # kappa_{d-1} / (d kappa_d): the mean projection constant of the isotropic law
    return _kappa(d - 1) / (d * _kappa(d))


def _a(d: int, k: int) -> _PiMonomial:
    return math.comb(d, k) * _kappa(d) / _kappa(k) * _direction_ratio(d) ** (d - k)


def stabilizer_a(d: int, k: int) -> float:
    """``a_{d,k} = lambda_k / lambda^{d-k}`` for the isotropic process."""
    _check_dk(d, k)
    return float(_a(d, k))


def intensity_lambda_k(d: int, k: int, lam: float) -> float:
    """Intensity of the induced ``k``-flat process of an isotropic hyperplane process."""
    _check_dk(d, k)
    if not lam > 0:
        raise ValueError(f"intensity must be positive, got {lam!r}")
    return float(_a(d, k)) * lam ** (d - k)


def stabilizer_b(j: int) -> float:
    """Variance-stabilisation constant ``b_j``.

    ``b_j^2 = (2^{j-1} (j-1)! kappa_{j-1})^2 / (2 (2j-1)! kappa_j^2)``, which is
    the unique value making ``r Var(lambda_hat_{k,r}) / (4 (d-k)^2)`` converge
    to ``lambda^{2(d-k)-1} a_{d,k}^2 b_{d-k}^2``.
    """
    if int(j) != j or j < 1:
        raise ValueError(f"j must be a positive integer, got {j!r}")
    sq = (2 ** (j - 1) * math.factorial(j - 1) * _kappa(j - 1)) ** 2 / (
        2 * math.factorial(2 * j - 1) * _kappa(j) ** 2)
    return math.sqrt(float(sq))


def _hitting_probability(d: int, k: int) -> _PiMonomial:
    return (Fraction(math.factorial(d), 2 ** (d - k) * math.factorial(k))
            * _kappa(d) * _kappa(d - k) / _kappa(k) * _direction_ratio(d) ** (d - k))


def hitting_probability(d: int, k: int) -> float:
    """Probability that ``d - k`` i.i.d. hyperplanes hitting ``B_r`` meet inside it."""
    _check_dk(d, k)
    return float(_hitting_probability(d, k))


def mean_psi(d: int, k: int, lam: float, r: float) -> float:
    """``E Psi_k(B_r) = lambda_k kappa_{d-k} r^{d-k}``."""
    return intensity_lambda_k(d, k, lam) * kappa(d - k) * r ** (d - k)


def mean_zeta(d: int, k: int, lam: float, r: float) -> float:
    """``E zeta_k(B_r) = lambda_k kappa_d r^d``."""
    return intensity_lambda_k(d, k, lam) * kappa(d) * r ** d


def _kernel_scale(d: int, k: int) -> _PiMonomial:
    return math.factorial(d) * _kappa(d) / (math.factorial(k) * _kappa(k))


def sigma_chi(d: int, k: int) -> float:
    """Asymptotic variance of the standardised ``k``-flat count."""
    _check_dk(d, k)
    m = d - k
    val = ((_kappa(m - 1) * math.factorial(m - 1)) ** 2 / math.factorial(2 * m - 1)
           * _kernel_scale(d, k) ** 2 * _direction_ratio(d) ** (2 * m))
    return float(val)


def sigma_nu(d: int, k: int) -> float:
    """Asymptotic variance of the standardised total ``k``-volume."""
    _check_dk(d, k)
    val = ((2 ** k * _kappa(d - 1) * math.factorial(d - 1)) ** 2 / math.factorial(2 * d - 1)
           * _kernel_scale(d, k) ** 2 * _direction_ratio(d) ** (2 * (d - k)))
    return float(val)


def beta_function(s: float, t: float) -> float:
    """Euler's Beta function ``Gamma(s) Gamma(t) / Gamma(s + t)``."""
    if not (s > 0 and t > 0):
        raise ValueError(f"Beta function needs positive arguments, got ({s!r}, {t!r})")
    return math.exp(math.lgamma(s) + math.lgamma(t) - math.lgamma(s + t))


def sigma_chi_mixed(d: int, k: int, l: int, form: str = "product") -> float:
    """Limit covariance of the standardised ``k``- and ``l``-flat counts.

    ``form="product"`` evaluates the explicit unit-ball-volume product,
    ``form="beta"`` the equivalent Beta-function ratio
    ``sqrt(s_k s_l) B(m, m) / sqrt(B(d-k, d-k) B(d-l, d-l))`` with
    ``m = (2d - k - l)/2``.  The two routes share no code beyond
    :func:`sigma_chi`, so comparing them is a genuine consistency check.
    """
    _check_dk(d, k)
    _check_dk(d, l, "l")
    if form == "product":
        s = 2 * d - k - l
        val = (_kernel_scale(d, k) * _kernel_scale(d, l)
               * _kappa(d - k - 1) * _kappa(d - l - 1) * _kappa(s - 1)
               / (2 ** (s - 1) * _kappa(s - 2)) * _direction_ratio(d) ** s)
        return float(val)
    if form == "beta":
        half = (2 * d - k - l) / 2.0
        return (math.sqrt(sigma_chi(d, k) * sigma_chi(d, l)) * beta_function(half, half)
                / math.sqrt(beta_function(d - k, d - k) * beta_function(d - l, d - l)))
    raise ValueError(f"unknown form {form!r}")


def sigma_nu_mixed(d: int, k: int, l: int, form: str = "product") -> float:
    """Limit covariance of the standardised total ``k``- and ``l``-volumes.

    The ``"sqrt"`` form returns ``sqrt(sigma_nu(d, k) sigma_nu(d, l))``; the
    ``"product"`` form evaluates the explicit expression independently.
    """
    _check_dk(d, k)
    _check_dk(d, l, "l")
    if form == "product":
        val = ((_kappa(d) * _kappa(d - 1) * math.factorial(d) * math.factorial(d - 1)) ** 2
               * 2 ** (k + l)
               / (math.factorial(k) * math.factorial(l) * _kappa(k) * _kappa(l)
                  * math.factorial(2 * d - 1))
               * _direction_ratio(d) ** (2 * d - k - l))
        return float(val)
    if form == "sqrt":
        return math.sqrt(sigma_nu(d, k) * sigma_nu(d, l))
    raise ValueError(f"unknown form {form!r}")


def covariance_matrix(d: int, kind: str) -> np.ndarray:
    """Limit covariance matrix of ``(Z_0, ..., Z_{d-1})`` for ``kind`` in {"chi", "nu"}."""
    fn = {"chi": sigma_chi_mixed, "nu": sigma_nu_mixed}.get(kind)
    if fn is None:
        raise ValueError(f"kind must be 'chi' or 'nu', got {kind!r}")
    return np.array([[fn(d, k, l) for l in range(d)] for k in range(d)])


def g_chi_kernel(d: int, k: int, p, r: float = 1.0):
    """Probability that ``H(p, v)`` and ``d-k-1`` further random hyperplanes meet in ``B_r``."""
    _check_dk(d, k)
    m = d - k
    c = float(_kappa(m - 1) / 2 ** (m - 1) * _kernel_scale(d, k) * _direction_ratio(d) ** m)
    x = np.clip(1.0 - (np.asarray(p, dtype=float) / r) ** 2, 0.0, None)
    return c * x ** (0.5 * (m - 1))


def g_nu_kernel(d: int, k: int, p, r: float = 1.0):
    """Expected ``r^{-k}``-scaled ``k``-volume in ``B_r`` of the flat through ``H(p, v)``."""
    _check_dk(d, k)
    m = d - k
    c = float(_kappa(d - 1) / 2 ** (m - 1) * _kernel_scale(d, k) * _direction_ratio(d) ** m)
    x = np.clip(1.0 - (np.asarray(p, dtype=float) / r) ** 2, 0.0, None)
    return c * x ** (0.5 * (d - 1))


def ball_power_integral(s: int) -> float:
    """``int_0^1 (1 - p^2)^s dp = (s! 2^s)^2 / (2s + 1)!`` for integer ``s >= 0``."""
    if int(s) != s or s < 0:
        raise ValueError(f"s must be a non-negative integer, got {s!r}")
    return float(Fraction((math.factorial(s) * 2 ** s) ** 2, math.factorial(2 * s + 1)))


def matheron_terms(d: int, k: int, lam: float, r: float) -> list[float]:
    """Summands ``j = 0..d-k`` of the second moment of ``zeta_k(B_r)``.

    The ``j = 0`` term is the squared mean; summing ``j >= 1`` gives the variance.
    """
    _check_dk(d, k)
    if not (lam > 0 and r > 0):
        raise ValueError("lam and r must be positive")
    terms = []
    for j in range(d - k + 1):
        const = (Fraction(math.factorial(d) * math.factorial(d - j),
                          math.factorial(j) * (math.factorial(k) * math.factorial(d - k - j)) ** 2)
                 * _kappa(2 * d - j) * _kappa(d) * _kappa(d - j) ** 3
                 / (_kappa(2 * (d - j)) * _kappa(k) ** 2)
                 * _direction_ratio(d) ** (2 * (d - k) - j))
        terms.append(float(const) * r ** (2 * d - j) * lam ** (2 * (d - k) - j))
    return terms


def matheron_second_moment_zeta(d: int, k: int, lam: float, r: float) -> float:
    """``E zeta_k(B_r)^2`` for the isotropic process."""
    return math.fsum(matheron_terms(d, k, lam, r))


def exact_var_psi0_2d(lam: float, r: float) -> float:
    """Exact variance of the number of line crossings in a disk of radius ``r``.

    Only the first two kernel moments enter in the plane; the second one
    equals the kernel mean because the kernel is an indicator.
    """
    n = 2.0 * lam * r
    return n ** 3 * sigma_chi(2, 0) + 0.5 * n ** 2 * hitting_probability(2, 0)


def pair_corr_coeff(d: int, j: int) -> float:
    """Coefficient of ``(lam r)^{-j}`` in the vertex pair-correlation function."""
    if int(d) != d or d < 2:
        raise ValueError(f"d must be an integer >= 2, got {d!r}")
    if int(j) != j or not 1 <= j <= d - 1:
        raise ValueError(f"j must be an integer in [1, {d - 1}], got {j!r}")
    val = (math.comb(d - 1, j) * (_kappa(d - j) / _kappa(d)) ** 2
           * (d * _kappa(d) / _kappa(d - 1)) ** j)
    return float(val)


def pair_correlation_g0(d: int, lam: float, r_arg: float) -> float:
    """Pair-correlation function of the vertex process at distance ``r_arg``."""
    if not r_arg > 0:
        raise ValueError(f"distance must be positive, got {r_arg!r}")
    x = lam * r_arg
    return 1.0 + math.fsum(pair_corr_coeff(d, j) * x ** (-j) for j in range(1, d))


def var_psi0_pair_correlation_2d(lam: float, r: float) -> float:
    """Variance of the planar vertex count from the pair-correlation function.

    Integrates the set covariance of the disk against ``g_0 - 1`` numerically;
    independent of :func:`exact_var_psi0_2d`.
    """
    lam0 = intensity_lambda_k(2, 0, lam)

    def integrand(u):
        return ball_set_covariance_2d(r, u) * (pair_correlation_g0(2, lam, u) - 1.0) * u

    val, _ = integrate.quad(integrand, 0.0, 2.0 * r, epsabs=0.0, epsrel=1e-12, limit=200)
    return 2.0 * math.pi * lam0 ** 2 * val + lam0 * math.pi * r * r


def _check_angles(a: float, b: float) -> None:
    eps = 1e-12
    if not (-eps <= a <= b + eps and b <= math.pi + eps):
        raise ValueError(f"need 0 <= a <= b <= pi, got a={a!r}, b={b!r}")


def planar_mu(a: float, b: float) -> float:
    """Probability that two random lines meet in the unit disk with (sorted) angles in ``[0,a] x [0,b]``.

    The event is ``min(g1, g2) <= a`` and ``max(g1, g2) <= b``; the result is
    ``(a - sin b + sin(b - a)) / (2 pi)``.
    """
    _check_angles(a, b)
    return (a - math.sin(b) + math.sin(b - a)) / (2.0 * math.pi)


def planar_sigma(a: float, b: float) -> float:
    """Second kernel moment with one shared line for the angle rectangle ``B(a, b)``.

    Conditioning on the shared line's angle ``t`` gives
    ``2/(3 pi^3) [int_0^a (2 - cos t - cos(b - t))^2 dt + int_a^b (cos(t - a) - cos t)^2 dt]``,
    evaluated here in closed form.
    """
    _check_angles(a, b)
    sa, sb, ca, cb = math.sin(a), math.sin(b), math.cos(a), math.cos(b)
    bracket = (4.0 * a + b + (a - b) * ca + a * cb
               - 3.5 * (sa + sb)
               + 0.5 * math.sin(2.0 * b) + 0.5 * math.sin(a - 2.0 * b)
               + 4.0 * math.sin(b - a) + 0.5 * math.sin(2.0 * a - b))
    return 2.0 / (3.0 * math.pi ** 3) * bracket


def pvt_vertex_constant(d: int) -> float:
    """Ratio ``c_d`` of vertex intensity to nucleus intensity in a Poisson-Voronoi tessellation."""
    if int(d) != d or not 2 <= d <= 10:
        raise ValueError(f"d must be an integer in [2, 10], got {d!r}")
    val = (Fraction(2 ** d, d + 1) * _PI ** (d - 1)
           * _kappa(d * d) / _kappa(d * d - 1) * (_kappa(d - 1) / _kappa(d)) ** d)
    return float(val)
