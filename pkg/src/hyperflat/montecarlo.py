"""Replication harness and the verification experiments.

An :class:`ExperimentConfig` names a model, a replicate count and a list of
statistics.  :func:`replicate` evaluates every statistic on replicate ``i``
drawn from stream ``SeedContract(master_seed, i)`` and returns the values in
stream order.  :func:`summarize` folds such a table into an
:class:`ExperimentReport` whose JSON form depends only on the config.

Statistic names are ``base`` or ``base_k``; a bare base is expanded over the
config's ``k`` values.  Bases:

===================  ========================================================
``N``                number of hyperplanes hitting the ball
``psi``, ``zeta``    k-flat count and total k-volume in ``B_r``
``Z_chi``, ``Z_nu``  their standardised versions
``lambda_hat``       intensity estimate from the count
``lambda_tilde``     intensity estimate from the volume
``planar_count``     crossings with angles in ``B(a, b)`` (d = 2)
``planar_marked_Z``  the same count, centred and scaled by ``(2 lam r)^{3/2}``
``planar_Z``         randomly normalised U-statistic (d = 2)
``pvt_count``        Voronoi vertices in the unit core window
``pvt_Z``            standardised Voronoi vertex count
``pvt_lambda_hat``   implied nuclei intensity
===================  ========================================================
"""
from __future__ import annotations

import dataclasses
import hashlib
import io
import csv
import json
import math
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import closed_forms as cf
from . import inference as inf
from . import statistics as st
from ._version import __version__
from .geometry import flat_sq_distances, section_volume
from .sampling import OrientationLaw, SeedContract, sample_directions, sample_hyperplane_process
from .voronoi import extract_vertices, pvt_standardized_Z, sample_voronoi_nuclei

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ReplicateTable",
    "ExperimentReport",
    "CoverageResult",
    "SigmaEstimate",
    "KernelCheck",
    "CovarianceComparison",
    "STATISTICS",
    "FAILURE_THRESHOLD",
    "replicate",
    "summarize",
    "run_experiment",
    "ks_normal",
    "ks_critical_value",
    "kolmogorov_sf",
    "estimate_sigma_jd",
    "verify_g_kernel",
    "empirical_covariance_matrix",
    "coverage_experiment",
    "rejection_rate",
    "qq_data",
    "histogram_data",
]

# a batch with more than this fraction of failed replicates is not usable
FAILURE_THRESHOLD = 1e-3


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending entry."""

    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field = field_path


# ----------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class ExperimentConfig:
    d: int = 2
    k: tuple[int, ...] = (0,)
    lam: float = 1.0
    r: float = 10.0
    replicates: int = 100
    master_seed: int = 0
    statistics: tuple[str, ...] = ("psi",)
    centering: str = "analytic"
    law: dict | None = None
    alpha: float = 0.05
    a: float = math.pi
    b: float = math.pi
    guard: float | None = None
    means: dict | None = None
    enumeration_cap: int = st.DEFAULT_ENUMERATION_CAP

    def __post_init__(self):
        k = (self.k,) if isinstance(self.k, (int, np.integer)) else tuple(self.k)
        object.__setattr__(self, "k", tuple(int(x) for x in k))
        object.__setattr__(self, "statistics", tuple(self.statistics))
        self.validate()

    def validate(self) -> None:
        if int(self.d) != self.d or self.d < 1:
            raise ConfigError("config.d", f"must be a positive integer, got {self.d!r}")
        if not self.k:
            raise ConfigError("config.k", "needs at least one value")
        for i, k in enumerate(self.k):
            if not 0 <= k <= self.d - 1:
                raise ConfigError(f"config.k[{i}]", f"must lie in [0, {self.d - 1}], got {k}")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ConfigError("config.lam", f"must be positive, got {self.lam!r}")
        if not (self.r > 0 and math.isfinite(self.r)):
            raise ConfigError("config.r", f"must be positive, got {self.r!r}")
        if int(self.replicates) != self.replicates or self.replicates < 2:
            raise ConfigError("config.replicates", f"must be an integer >= 2, got {self.replicates!r}")
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ConfigError("config.master_seed", "must be a 64-bit unsigned integer")
        if self.centering not in ("analytic", "plug-in"):
            raise ConfigError("config.centering", f"must be 'analytic' or 'plug-in', got {self.centering!r}")
        if not 0 < self.alpha < 1:
            raise ConfigError("config.alpha", f"must lie in (0, 1), got {self.alpha!r}")
        if not 0 <= self.a <= self.b <= math.pi + 1e-12:
            raise ConfigError("config.a", "need 0 <= a <= b <= pi")
        if self.centering == "plug-in" and not self.means:
            raise ConfigError("config.means", "plug-in centering needs means for psi_k / zeta_k")
        if self.guard is not None and not self.guard > 0:
            raise ConfigError("config.guard", "must be positive")
        if not self.statistics:
            raise ConfigError("config.statistics", "needs at least one statistic")
        for i, name in enumerate(self.statistics):
            base, _ = _split_name(name)
            if base not in STATISTICS:
                raise ConfigError(f"config.statistics[{i}]", f"unknown statistic {name!r}")
        kinds = {STATISTICS[_split_name(n)[0]].model for n in self.statistics}
        if len(kinds) > 1:
            raise ConfigError("config.statistics", "cannot mix Voronoi and hyperplane statistics")
        try:
            self.orientation_law()
        except ValueError as exc:
            raise ConfigError("config.law", str(exc)) from exc

    def orientation_law(self) -> OrientationLaw:
        if self.law is None:
            return OrientationLaw.isotropic(self.d)
        law = OrientationLaw.from_dict(self.law, d=self.d)
        if law.d != self.d:
            raise ValueError(f"law is {law.d}-dimensional but d = {self.d}")
        return law

    @property
    def expanded_statistics(self) -> tuple[str, ...]:
        out = []
        for name in self.statistics:
            base, k = _split_name(name)
            if k is None and STATISTICS[base].takes_k:
                out.extend(f"{base}_{kk}" for kk in self.k)
            else:
                out.append(name)
        return tuple(dict.fromkeys(out))

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["k"] = list(self.k)
        out["statistics"] = list(self.statistics)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        for key in data:
            if key not in names:
                raise ConfigError(f"config.{key}", "unknown field")
        kw = dict(data)
        if "statistics" in kw and isinstance(kw["statistics"], str):
            kw["statistics"] = (kw["statistics"],)
        try:
            return cls(**kw)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError("config", str(exc)) from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config", "must be a JSON object")
        return cls.from_dict(data)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


# ----------------------------------------------------------------------------
# statistics registry

_NAME_RE = re.compile(r"^(?P<base>[A-Za-z_]+?)(?:_(?P<k>\d+))?$")


def _split_name(name: str) -> tuple[str, int | None]:
    if name in STATISTICS:
        return name, None
    m = _NAME_RE.match(name)
    if not m or m.group("base") not in STATISTICS:
        return name, None
    k = m.group("k")
    return m.group("base"), None if k is None else int(k)


class _Context:
    """Lazily computed per-replicate quantities shared between statistics."""

    def __init__(self, cfg: ExperimentConfig, stream: int, model: str):
        self.cfg = cfg
        seed = SeedContract(cfg.master_seed, stream)
        if model == "voronoi":
            self.nuclei = sample_voronoi_nuclei(cfg.lam, delta=cfg.guard, seed=seed)
            self._vertices = None
        else:
            self.sample = sample_hyperplane_process(cfg.lam, cfg.r, cfg.orientation_law(), seed=seed)
        self._summaries: dict[int, st.KFlatSummary] = {}
        self._planar = None

    def summary(self, k: int) -> st.KFlatSummary:
        if k not in self._summaries:
            self._summaries[k] = st.k_flat_summary(self.sample, k, cap=self.cfg.enumeration_cap)
        return self._summaries[k]

    def planar_count(self) -> int:
        if self._planar is None:
            pred = st.PlanarAngleRectangle(self.cfg.a, self.cfg.b)
            self._planar = st.marked_vertex_count(self.sample, pred, cap=self.cfg.enumeration_cap)
        return self._planar

    def vertices(self):
        if self._vertices is None:
            self._vertices = extract_vertices(self.nuclei)
        return self._vertices


@dataclass(frozen=True)
class _Statistic:
    fn: Callable[[_Context, int | None], float]
    takes_k: bool = True
    model: str = "hyperplane"
    mean: Callable[[ExperimentConfig, int | None], float] | None = None
    variance: Callable[[ExperimentConfig, int | None], float] | None = None
    # asymptotically normal, so the report carries a KS check
    normal: bool = False


def _plugin_mean(ctx, key):
    if ctx.cfg.centering == "analytic":
        return None
    try:
        return float(ctx.cfg.means[key])
    except KeyError:
        raise ConfigError(f"config.means.{key}", "missing plug-in mean") from None


def _psi_mean(cfg, k):
    return cf.mean_psi(cfg.d, k, cfg.lam, cfg.r)


def _zeta_mean(cfg, k):
    return cf.mean_zeta(cfg.d, k, cfg.lam, cfg.r)


def _lam_k(cfg, k):
    return cf.intensity_lambda_k(cfg.d, k, cfg.lam)


def _planar_count_mean(cfg, k):
    n = 2.0 * cfg.lam * cfg.r
    return 0.5 * n * n * cf.planar_mu(cfg.a, cfg.b)


STATISTICS: dict[str, _Statistic] = {
    "N": _Statistic(lambda c, k: float(c.sample.n), takes_k=False,
                    mean=lambda cfg, k: 2.0 * cfg.lam * cfg.r,
                    variance=lambda cfg, k: 2.0 * cfg.lam * cfg.r),
    "psi": _Statistic(lambda c, k: float(c.summary(k).count), mean=_psi_mean),
    "zeta": _Statistic(lambda c, k: c.summary(k).volume, mean=_zeta_mean),
    "Z_chi": _Statistic(
        lambda c, k: st.standardized_count_Z(c.sample, k, c.cfg.centering,
                                             _plugin_mean(c, f"psi_{k}"), c.summary(k)),
        mean=lambda cfg, k: 0.0, variance=lambda cfg, k: cf.sigma_chi(cfg.d, k), normal=True),
    "Z_nu": _Statistic(
        lambda c, k: st.standardized_volume_Z(c.sample, k, c.cfg.centering,
                                              _plugin_mean(c, f"zeta_{k}"), c.summary(k)),
        mean=lambda cfg, k: 0.0, variance=lambda cfg, k: cf.sigma_nu(cfg.d, k), normal=True),
    "lambda_hat": _Statistic(lambda c, k: st.intensity_estimators(c.sample, k, c.summary(k))[0],
                             mean=_lam_k),
    "lambda_tilde": _Statistic(lambda c, k: st.intensity_estimators(c.sample, k, c.summary(k))[1],
                               mean=_lam_k),
    "planar_count": _Statistic(lambda c, k: float(c.planar_count()), takes_k=False,
                               mean=_planar_count_mean),
    "planar_marked_Z": _Statistic(
        lambda c, k: st.planar_marked_Z(c.sample, c.cfg.a, c.cfg.b, count=c.planar_count()),
        takes_k=False, mean=lambda cfg, k: 0.0,
        variance=lambda cfg, k: cf.planar_sigma(cfg.a, cfg.b), normal=True),
    "planar_Z": _Statistic(
        lambda c, k: st.planar_random_normalized_Z(c.sample, c.cfg.a, c.cfg.b, count=c.planar_count()),
        takes_k=False, mean=lambda cfg, k: 0.0,
        variance=lambda cfg, k: cf.planar_sigma(cfg.a, cfg.b) - cf.planar_mu(cfg.a, cfg.b) ** 2,
        normal=True),
    "pvt_count": _Statistic(lambda c, k: float(len(c.vertices())), takes_k=False, model="voronoi",
                            mean=lambda cfg, k: cf.pvt_vertex_constant(2) * cfg.lam),
    "pvt_Z": _Statistic(lambda c, k: pvt_standardized_Z(c.nuclei, c.vertices()), takes_k=False,
                        model="voronoi", mean=lambda cfg, k: 0.0, variance=lambda cfg, k: 1.0,
                        normal=True),
    "pvt_lambda_hat": _Statistic(
        lambda c, k: len(c.vertices()) / (cf.pvt_vertex_constant(2) * c.nuclei.core.area),
        takes_k=False, model="voronoi", mean=lambda cfg, k: cfg.lam),
}


# ----------------------------------------------------------------------------
# replication

@dataclass
class ReplicateTable:
    """Per-replicate values; row ``i`` comes from stream index ``i``."""

    config: ExperimentConfig
    names: tuple[str, ...]
    values: np.ndarray
    failures: list[tuple[int, str]] = field(default_factory=list)
    elapsed: float = 0.0

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def ok_column(self, name: str) -> np.ndarray:
        col = self.column(name)
        return col[np.isfinite(col)]

    @property
    def failure_fraction(self) -> float:
        return len({i for i, _ in self.failures}) / self.values.shape[0]

    @property
    def batch_ok(self) -> bool:
        return self.failure_fraction <= FAILURE_THRESHOLD

    def to_csv(self) -> str:
        """Long format ``replicate, statistic, value`` with provenance comment lines."""
        buf = io.StringIO()
        buf.write(f"# hyperflat_version={__version__}\n")
        buf.write(f"# config_hash={self.config.config_hash}\n")
        buf.write(f"# master_seed={self.config.master_seed}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replicate", "statistic", "value"])
        for i in range(self.values.shape[0]):
            for j, name in enumerate(self.names):
                w.writerow([i, name, f"{self.values[i, j]:.17g}"])
        return buf.getvalue()


def _run_one(cfg: ExperimentConfig, names, models, stream: int):
    try:
        ctx = _Context(cfg, stream, models)
        row = []
        for name in names:
            base, k = _split_name(name)
            row.append(float(STATISTICS[base].fn(ctx, k)))
        return row, None
    except Exception as exc:  # recorded per replicate, batch continues
        return [math.nan] * len(names), f"{type(exc).__name__}: {exc}"


def replicate(cfg: ExperimentConfig, threads: int = 1, streams=None) -> ReplicateTable:
    """Evaluate the configured statistics on ``cfg.replicates`` independent samples.

    ``streams`` optionally gives the execution order of the stream indices;
    the returned table is always sorted by stream index.
    """
    names = cfg.expanded_statistics
    model = STATISTICS[_split_name(names[0])[0]].model
    n = int(cfg.replicates)
    order = list(range(n)) if streams is None else [int(s) for s in streams]
    if sorted(order) != list(range(n)):
        raise ValueError("streams must be a permutation of range(replicates)")
    t0 = time.perf_counter()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            results = list(pool.map(lambda s: _run_one(cfg, names, model, s), order))
    else:
        results = [_run_one(cfg, names, model, s) for s in order]
    values = np.empty((n, len(names)))
    failures = []
    for s, (row, err) in zip(order, results):
        values[s] = row
        if err is not None:
            failures.append((s, err))
    failures.sort()
    return ReplicateTable(cfg, names, values, failures, time.perf_counter() - t0)


# ----------------------------------------------------------------------------
# Kolmogorov-Smirnov

def kolmogorov_sf(x: float, terms: int = 100) -> float:
    """``P(K > x)`` for the Kolmogorov distribution, ``2 sum (-1)^{j-1} exp(-2 j^2 x^2)``."""
    if x <= 0:
        return 1.0
    s = math.fsum((-1) ** (j - 1) * math.exp(-2.0 * j * j * x * x) for j in range(1, terms + 1))
    return min(max(2.0 * s, 0.0), 1.0)


def ks_normal(values) -> tuple[float, float]:
    """One-sample KS statistic against ``N(0, 1)`` and its asymptotic p-value."""
    x = np.sort(np.asarray(values, dtype=float).ravel())
    n = x.size
    if n < 20:
        raise ValueError(f"need at least 20 values, got {n}")
    cdf = np.array([inf.normal_cdf(t) for t in x])
    i = np.arange(1, n + 1)
    stat = float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))
    return stat, kolmogorov_sf(math.sqrt(n) * stat)


def ks_critical_value(n: int, alpha: float = 0.01) -> float:
    """Asymptotic KS critical value: the ``x / sqrt(n)`` with ``kolmogorov_sf(x) = alpha``."""
    lo, hi = 0.1, 5.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if kolmogorov_sf(mid) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi) / math.sqrt(n)


# ----------------------------------------------------------------------------
# report

def _moments(x: np.ndarray) -> dict:
    n = x.size
    mean = float(np.mean(x)) if n else math.nan
    var = float(np.var(x, ddof=1)) if n > 1 else math.nan
    c = x - mean
    m2 = float(np.mean(c ** 2)) if n else math.nan
    m4 = float(np.mean(c ** 4)) if n else math.nan
    skew = float(np.mean(c ** 3) / m2 ** 1.5) if n and m2 > 0 else 0.0
    se_var = math.sqrt(max(m4 - m2 * m2, 0.0) / n) if n > 1 else math.nan
    return {"n": n, "mean": mean, "variance": var, "skewness": skew,
            "se_mean": math.sqrt(var / n) if n > 1 else math.nan, "se_variance": se_var}


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    statistics: dict[str, dict]
    failures: list[tuple[int, str]]
    replicates: int
    elapsed: float = 0.0   # kept off the serialised form so reports stay byte-identical

    @property
    def batch_ok(self) -> bool:
        return len({i for i, _ in self.failures}) / self.replicates <= FAILURE_THRESHOLD

    def __getitem__(self, name: str) -> dict:
        return self.statistics[name]

    def to_dict(self) -> dict:
        return {
            "tool": "hyperflat",
            "version": __version__,
            "config": self.config.to_dict(),
            "config_hash": self.config.config_hash,
            "master_seed": int(self.config.master_seed),
            "replicates": self.replicates,
            "stream_indices": {"start": 0, "stop": self.replicates},
            "failures": [{"stream": i, "error": msg} for i, msg in self.failures],
            "failure_fraction": len({i for i, _ in self.failures}) / self.replicates,
            "batch_ok": self.batch_ok,
            "statistics": self.statistics,
        }

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), sort_keys=True, indent=2) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def summarize(table: ReplicateTable) -> ExperimentReport:
    """Moments, analytic references and KS normality checks per statistic."""
    cfg = table.config
    isotropic = cfg.orientation_law().is_isotropic
    stats = {}
    for name in table.names:
        base, k = _split_name(name)
        spec = STATISTICS[base]
        x = table.ok_column(name)
        entry = _moments(x)
        # closed forms exist only for the isotropic model (the count N and the
        # Voronoi statistics do not depend on the orientation law)
        known = isotropic or spec.model == "voronoi" or base == "N"
        mean_ref = spec.mean(cfg, k) if known and spec.mean is not None else None
        var_ref = spec.variance(cfg, k) if known and spec.variance is not None else None
        if mean_ref is not None:
            entry["analytic_mean"] = float(mean_ref)
        if var_ref is not None:
            entry["analytic_variance"] = float(var_ref)
            if spec.normal and x.size >= 20 and var_ref > 0:
                ks, p = ks_normal((x - (mean_ref or 0.0)) / math.sqrt(var_ref))
                entry["ks_statistic"] = ks
                entry["ks_pvalue"] = p
                entry["ks_critical_1pct"] = ks_critical_value(x.size, 0.01)
        stats[name] = entry
    return ExperimentReport(cfg, stats, list(table.failures), table.values.shape[0], table.elapsed)


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> tuple[ReplicateTable, ExperimentReport]:
    table = replicate(cfg, threads=threads)
    return table, summarize(table)


# ----------------------------------------------------------------------------
# kernel moments and kernel functions

@dataclass(frozen=True)
class SigmaEstimate:
    value: float
    se: float
    draws: int


def _kernel_hits(P, V, predicate):
    """Indicator that ``d`` hyperplanes meet in the unit ball with sorted normals in the predicate."""
    sq, _ = flat_sq_distances(P, V)
    hit = sq <= 1.0
    if predicate is not None and hit.any():
        ok = np.zeros_like(hit)
        ok[hit] = predicate(st.canonical_sort(V[hit]))
        hit = ok
    return hit


def estimate_sigma_jd(d: int, j: int, predicate: st.MarkPredicate | None = None,
                      draws: int = 10 ** 6, seed: SeedContract | int = 0,
                      law: OrientationLaw | None = None, chunk: int = 1 << 17) -> SigmaEstimate:
    """MC estimate of the kernel moment with ``j`` shared arguments, at ``r = 1``.

    Draws ``2d - j`` i.i.d. hyperplanes hitting the unit ball; the first
    kernel uses hyperplanes ``0..d-1`` and the second ``d-j..2d-j-1``.
    """
    if int(d) != d or d < 1:
        raise ValueError(f"d must be a positive integer, got {d!r}")
    if int(j) != j or not 1 <= j <= d:
        raise ValueError(f"j must be an integer in [1, {d}], got {j!r}")
    law = OrientationLaw.isotropic(d) if law is None else law
    seed = seed if isinstance(seed, SeedContract) else SeedContract(int(seed))
    rng = seed.rng()
    m = 2 * d - j
    total, total_sq, done = 0.0, 0.0, 0
    while done < draws:
        c = min(chunk, draws - done)
        P = rng.uniform(-1.0, 1.0, size=(c, m))
        V = sample_directions(law, c * m, rng).reshape(c, m, d)
        f1 = _kernel_hits(P[:, :d], V[:, :d], predicate)
        f2 = _kernel_hits(P[:, d - j:], V[:, d - j:], predicate)
        prod = (f1 & f2).astype(float)
        total += prod.sum()
        total_sq += (prod * prod).sum()
        done += c
    mean = total / draws
    var = max(total_sq / draws - mean * mean, 0.0) * draws / (draws - 1)
    return SigmaEstimate(float(mean), math.sqrt(var / draws), int(draws))


@dataclass(frozen=True)
class KernelCheck:
    """Pointwise MC check of a conditional kernel on a grid of distances."""

    kind: str
    p_grid: np.ndarray
    estimate: np.ndarray
    se: np.ndarray
    closed_form: np.ndarray

    @property
    def deviation(self) -> np.ndarray:
        return np.abs(self.estimate - self.closed_form)

    @property
    def max_deviation(self) -> float:
        return float(self.deviation.max())

    @property
    def within_envelope(self) -> bool:
        # exact points (se = 0) must match to rounding
        return bool(np.all(self.deviation <= 3.0 * self.se + 1e-12))


def verify_g_kernel(d: int, k: int, p_grid, draws: int = 10 ** 5,
                    seed: SeedContract | int = 0) -> dict[str, KernelCheck]:
    """Compare MC estimates of the count and volume kernels with their closed forms.

    For each grid value ``p`` the hyperplane ``H(p, e_d)`` is intersected with
    ``d - k - 1`` i.i.d. isotropic hyperplanes hitting ``B_1``; the mean
    hitting indicator estimates ``g_chi`` and the mean section volume ``g_nu``.
    """
    cf._check_dk(d, k)
    p_grid = np.asarray(p_grid, dtype=float)
    if np.any(np.abs(p_grid) > 1.0):
        raise ValueError("grid points must satisfy |p| <= 1")
    m = d - k
    seed = seed if isinstance(seed, SeedContract) else SeedContract(int(seed))
    rng = seed.rng()
    law = OrientationLaw.isotropic(d)
    e_d = np.zeros(d)
    e_d[-1] = 1.0
    est = {"chi": [], "nu": []}
    ses = {"chi": [], "nu": []}
    for p in p_grid:
        if m == 1:
            sq = np.full(draws, p * p)
        else:
            P = np.empty((draws, m))
            P[:, 0] = p
            P[:, 1:] = rng.uniform(-1.0, 1.0, size=(draws, m - 1))
            V = np.empty((draws, m, d))
            V[:, 0] = e_d
            V[:, 1:] = sample_directions(law, draws * (m - 1), rng).reshape(draws, m - 1, d)
            sq, _ = flat_sq_distances(P, V)
        for kind, vals in (("chi", (sq <= 1.0).astype(float)),
                           ("nu", np.asarray(section_volume(k, sq, 1.0), dtype=float))):
            est[kind].append(vals.mean())
            ses[kind].append(vals.std(ddof=1) / math.sqrt(draws))
    closed = {"chi": cf.g_chi_kernel(d, k, p_grid), "nu": cf.g_nu_kernel(d, k, p_grid)}
    return {kind: KernelCheck(kind, p_grid, np.array(est[kind]), np.array(ses[kind]),
                              np.asarray(closed[kind], dtype=float)) for kind in ("chi", "nu")}


# ----------------------------------------------------------------------------
# multivariate structure and coverage

@dataclass(frozen=True)
class CovarianceComparison:
    kind: str
    empirical: np.ndarray
    analytic: np.ndarray
    replicates: int
    table: ReplicateTable = field(repr=False, compare=False, default=None)

    @property
    def correlation(self) -> np.ndarray:
        s = np.sqrt(np.diag(self.empirical))
        return self.empirical / np.outer(s, s)


def empirical_covariance_matrix(cfg: ExperimentConfig, kind: str = "chi",
                                threads: int = 1) -> CovarianceComparison:
    """Sample covariance of ``(Z_0, ..., Z_{d-1})`` against the limit matrix."""
    if kind not in ("chi", "nu"):
        raise ValueError(f"kind must be 'chi' or 'nu', got {kind!r}")
    if cfg.replicates < cfg.d + 1:
        raise ValueError("need more replicates than statistics for a covariance matrix")
    cfg = cfg.replace(k=tuple(range(cfg.d)), statistics=(f"Z_{kind}",))
    table = replicate(cfg, threads=threads)
    vals = table.values[np.all(np.isfinite(table.values), axis=1)]
    emp = np.atleast_2d(np.cov(vals, rowvar=False))
    return CovarianceComparison(kind, emp, cf.covariance_matrix(cfg.d, kind), vals.shape[0], table)


@dataclass(frozen=True)
class CoverageResult:
    method: str
    fraction: float
    se: float
    replicates: int
    truth: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _binomial(hits: np.ndarray):
    n = hits.size
    frac = float(hits.mean())
    return frac, math.sqrt(frac * (1.0 - frac) / n)


def coverage_experiment(cfg: ExperimentConfig, method: str, truth: float | None = None,
                        threads: int = 1) -> CoverageResult:
    """Fraction of replicates whose interval contains ``truth``.

    ``method`` is ``I`` (target ``lambda_k``), ``J`` or ``road`` (target
    ``lambda``), or ``pvt`` (target: nuclei intensity).  ``k`` is ``cfg.k[0]``.
    """
    k = cfg.k[0]
    if method == "pvt":
        table = replicate(cfg.replace(statistics=("pvt_count",)), threads=threads)
        counts = table.ok_column("pvt_count")
        truth = cfg.lam if truth is None else truth
        hits = np.array([inf.pvt_ci(c, 1.0, 2, cfg.alpha).contains(truth) for c in counts])
        return CoverageResult(method, *_binomial(hits), hits.size, float(truth))
    if method not in ("I", "J", "road"):
        raise ValueError(f"unknown interval method {method!r}")
    if method == "road" and (cfg.d, k) != (2, 0):
        raise ValueError("road bounds need d = 2, k = 0")
    stat = "psi" if method == "road" else "lambda_hat"
    table = replicate(cfg.replace(statistics=(f"{stat}_{k}",)), threads=threads)
    est = table.ok_column(f"{stat}_{k}")
    if method == "I":
        truth = cf.intensity_lambda_k(cfg.d, k, cfg.lam) if truth is None else truth
        hits = np.array([inf.ci_I(e, cfg.d, k, cfg.r, cfg.alpha).contains(truth) for e in est])
    elif method == "J":
        truth = cfg.lam if truth is None else truth
        hits = np.array([inf.ci_J(e, cfg.d, k, cfg.r, cfg.alpha).contains(truth) for e in est])
    else:
        truth = cfg.lam if truth is None else truth
        hits = np.array([inf.road_bounds(e, cfg.r, cfg.alpha).contains(truth) for e in est])
    return CoverageResult(method, *_binomial(hits), hits.size, float(truth))


def rejection_rate(cfg: ExperimentConfig, lambda_star: float, threads: int = 1) -> CoverageResult:
    """Fraction of replicates in which the planar test rejects ``lambda = lambda_star``."""
    if cfg.d != 2:
        raise ValueError("the intensity test needs d = 2")
    table = replicate(cfg.replace(k=(0,), statistics=("lambda_hat_0",)), threads=threads)
    est = table.ok_column("lambda_hat_0")
    hits = np.array([inf.test_lambda(e, lambda_star, cfg.r, cfg.alpha).reject for e in est])
    return CoverageResult("test_lambda", *_binomial(hits), hits.size, float(lambda_star))


# ----------------------------------------------------------------------------
# plot data

def qq_data(values) -> tuple[np.ndarray, np.ndarray]:
    """Sorted values against standard normal quantiles at ``(i - 1/2) / n``."""
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    q = np.array([inf.normal_quantile((i + 0.5) / n) for i in range(n)])
    return q, x


def histogram_data(values, bins: int = 40) -> tuple[np.ndarray, np.ndarray]:
    """Bin centres and density estimates."""
    dens, edges = np.histogram(np.asarray(values, dtype=float), bins=bins, density=True)
    return 0.5 * (edges[:-1] + edges[1:]), dens
