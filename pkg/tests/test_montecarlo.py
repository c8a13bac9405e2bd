import csv
import io
import json
import math

import numpy as np
import pytest
from scipy import stats

from hyperflat import closed_forms as cf
from hyperflat.montecarlo import (
    FAILURE_THRESHOLD, ConfigError, ExperimentConfig, coverage_experiment, empirical_covariance_matrix,
    estimate_sigma_jd, histogram_data, kolmogorov_sf, ks_critical_value, ks_normal, qq_data, replicate,
    run_experiment, summarize, verify_g_kernel,
)
from hyperflat.statistics import PlanarAngleRectangle


class TestConfig:
    def test_round_trip(self):
        cfg = ExperimentConfig(d=3, k=(0, 1), lam=0.5, r=7.0, replicates=10, master_seed=99,
                               statistics=("Z_chi", "zeta_2"), alpha=0.1)
        back = ExperimentConfig.from_json(cfg.to_json())
        assert back == cfg and back.config_hash == cfg.config_hash

    def test_hash_tracks_content(self):
        a = ExperimentConfig(replicates=10)
        assert a.config_hash == ExperimentConfig(replicates=10).config_hash
        assert a.config_hash != a.replace(master_seed=1).config_hash
        assert len(a.config_hash) == 16

    @pytest.mark.parametrize("kw, path", [
        ({"k": (0, 2), "d": 2}, "config.k[1]"),
        ({"lam": -1.0}, "config.lam"),
        ({"r": 0.0}, "config.r"),
        ({"replicates": 1}, "config.replicates"),
        ({"centering": "median"}, "config.centering"),
        ({"alpha": 1.5}, "config.alpha"),
        ({"statistics": ("psi", "bogus")}, "config.statistics[1]"),
        ({"statistics": ("psi", "pvt_count")}, "config.statistics"),
        ({"centering": "plug-in"}, "config.means"),
        ({"law": {"kind": "discrete", "atoms": [[1.0, 0.0]]}}, "config.law"),
        ({"a": 2.0, "b": 1.0}, "config.a"),
    ])
    def test_field_paths(self, kw, path):
        with pytest.raises(ConfigError) as exc:
            ExperimentConfig(**kw)
        assert exc.value.field == path
        assert str(exc.value).startswith(path)

    def test_unknown_field_and_bad_json(self):
        with pytest.raises(ConfigError) as exc:
            ExperimentConfig.from_dict({"radius": 3})
        assert exc.value.field == "config.radius"
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json("{not json")
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json("[1, 2]")

    def test_expanded_statistics(self):
        cfg = ExperimentConfig(d=3, k=(0, 2), replicates=2, statistics=("psi", "Z_nu_1", "N", "psi_0"))
        assert cfg.expanded_statistics == ("psi_0", "psi_2", "Z_nu_1", "N")


class TestReplication:
    cfg = ExperimentConfig(d=2, k=(0, 1), r=6.0, replicates=30, master_seed=17,
                           statistics=("N", "psi", "Z_chi", "lambda_hat"))

    def test_deterministic(self):
        a, b = replicate(self.cfg), replicate(self.cfg)
        assert np.array_equal(a.values, b.values)
        assert a.to_csv() == b.to_csv()

    def test_order_and_threads_do_not_matter(self):
        base = replicate(self.cfg)
        order = np.random.default_rng(0).permutation(self.cfg.replicates)
        assert np.array_equal(replicate(self.cfg, streams=order).values, base.values)
        assert np.array_equal(replicate(self.cfg, threads=3).values, base.values)

    def test_bad_streams(self):
        with pytest.raises(ValueError):
            replicate(self.cfg, streams=[0, 0, 1])

    def test_rows_are_per_stream(self):
        t = replicate(self.cfg)
        one = replicate(self.cfg.replace(replicates=2))
        assert np.array_equal(t.values[:2], one.values)

    def test_failures_are_recorded(self):
        cfg = ExperimentConfig(d=2, lam=0.05, r=10.0, replicates=200, master_seed=3, statistics=("planar_Z",))
        t = replicate(cfg)
        assert 0 < len(t.failures) < 200
        assert all("UndefinedForSmallSample" in msg for _, msg in t.failures)
        assert t.failure_fraction > FAILURE_THRESHOLD and not t.batch_ok
        assert np.isnan(t.column("planar_Z")).sum() == len(t.failures)
        assert t.ok_column("planar_Z").size == 200 - len(t.failures)

    def test_enumeration_cap_failure(self):
        cfg = ExperimentConfig(d=3, k=(0,), r=10.0, replicates=5, statistics=("psi",), enumeration_cap=10)
        t = replicate(cfg)
        assert len(t.failures) == 5 and "EnumerationBudgetExceeded" in t.failures[0][1]

    def test_discrete_law_plugin(self):
        law = {"kind": "discrete", "atoms": [[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]]}
        cfg = ExperimentConfig(d=2, k=(0,), replicates=20, law=law, statistics=("Z_chi",),
                               centering="plug-in", means={"psi_0": 50.0})
        rep = summarize(replicate(cfg))
        assert "analytic_variance" not in rep["Z_chi_0"]
        assert rep["Z_chi_0"]["n"] == 20
        missing = replicate(cfg.replace(replicates=2, means={"psi_1": 1.0}))
        assert len(missing.failures) == 2 and "config.means.psi_0" in missing.failures[0][1]
        analytic = replicate(cfg.replace(replicates=2, centering="analytic", means=None))
        assert len(analytic.failures) == 2 and "isotropic" in analytic.failures[0][1]

    def test_csv(self):
        text = replicate(self.cfg.replace(replicates=3)).to_csv()
        lines = text.splitlines()
        assert lines[0].startswith("# hyperflat_version=")
        assert lines[1] == f"# config_hash={self.cfg.replace(replicates=3).config_hash}"
        assert lines[2] == "# master_seed=17"
        rows = list(csv.DictReader(io.StringIO("\n".join(lines[3:]))))
        assert len(rows) == 3 * len(self.cfg.expanded_statistics)
        assert {r["statistic"] for r in rows} == set(self.cfg.expanded_statistics)


class TestKolmogorovSmirnov:
    def test_constant_sample(self):
        for c in (-0.7, 0.0, 1.3):
            stat, _ = ks_normal(np.full(50, c))
            phi = stats.norm.cdf(c)
            assert stat == pytest.approx(max(phi, 1 - phi), abs=1e-14)

    def test_too_few(self):
        with pytest.raises(ValueError):
            ks_normal(np.zeros(19))

    def test_matches_library(self):
        x = np.random.default_rng(1).standard_normal(500) * 1.1
        stat, p = ks_normal(x)
        ref = stats.kstest(x, "norm")
        assert stat == pytest.approx(ref.statistic, abs=1e-14)
        assert p == pytest.approx(stats.kstwobign.sf(math.sqrt(500) * stat), rel=1e-10)

    def test_kolmogorov_sf(self):
        for x in (0.3, 0.8, 1.2, 1.6276, 2.5):
            assert kolmogorov_sf(x) == pytest.approx(stats.kstwobign.sf(x), abs=1e-12)
        assert kolmogorov_sf(0.0) == 1.0

    def test_critical_value(self):
        assert ks_critical_value(2000) == pytest.approx(stats.kstwobign.isf(0.01) / math.sqrt(2000), rel=1e-9)
        assert ks_critical_value(2000) == pytest.approx(0.0364, abs=1e-4)
        assert ks_critical_value(1000) == pytest.approx(0.0515, abs=1e-4)

    def test_self_calibration(self):
        g = np.random.default_rng(2024)
        runs = 400
        crit = ks_critical_value(2000, 0.01)
        rejects = sum(ks_normal(g.standard_normal(2000))[0] > crit for _ in range(runs))
        # binomial(400, 0.01): mean 4, sd 2
        assert rejects <= 4 + 3 * 2


class TestReport:
    def test_fields_and_bytes(self):
        cfg = ExperimentConfig(d=2, k=(0, 1), r=10.0, replicates=40, master_seed=5, statistics=("Z_chi", "N"))
        t, rep = run_experiment(cfg)
        text = rep.to_json()
        data = json.loads(text)
        assert data["config_hash"] == cfg.config_hash and data["master_seed"] == 5
        assert "elapsed" not in text
        assert data["stream_indices"] == {"start": 0, "stop": 40}
        z = data["statistics"]["Z_chi_0"]
        assert {"ks_statistic", "ks_pvalue", "ks_critical_1pct", "analytic_variance"} <= set(z)
        assert "ks_statistic" not in data["statistics"]["N"]
        assert data["statistics"]["N"]["analytic_mean"] == 20.0
        assert text == summarize(replicate(cfg)).to_json()
        assert text == json.dumps(json.loads(text), sort_keys=True, indent=2) + "\n"

    def test_nan_becomes_null(self):
        cfg = ExperimentConfig(d=2, lam=0.01, r=10.0, replicates=3, master_seed=1, statistics=("planar_Z",))
        data = json.loads(summarize(replicate(cfg)).to_json())
        st = data["statistics"]["planar_Z"]
        assert st["n"] < 3 or st["variance"] is not None


class TestKernelMoments:
    def test_sigma_one_shared(self):
        est = estimate_sigma_jd(3, 1, draws=400_000, seed=11)
        assert abs(est.value - cf.sigma_chi(3, 0)) < 4 * est.se

    def test_sigma_planar_marks(self):
        a, b = math.pi / 2, math.pi
        est = estimate_sigma_jd(2, 1, PlanarAngleRectangle(a, b), draws=400_000, seed=12)
        assert abs(est.value - cf.planar_sigma(a, b)) < 4 * est.se

    def test_sigma_fully_shared_is_mean(self):
        est = estimate_sigma_jd(2, 2, draws=200_000, seed=13)
        assert abs(est.value - cf.hitting_probability(2, 0)) < 4 * est.se

    def test_ranges(self):
        with pytest.raises(ValueError):
            estimate_sigma_jd(2, 3)
        with pytest.raises(ValueError):
            estimate_sigma_jd(0, 1)

    def test_kernel_checks(self):
        res = verify_g_kernel(3, 1, np.linspace(-0.9, 0.9, 7), draws=40_000, seed=14)
        # 14 pointwise comparisons: a 4 SE bound keeps the family-wise false alarm rate below 0.1%
        for kind in ("chi", "nu"):
            assert np.all(res[kind].deviation <= 4 * res[kind].se), kind
        top = verify_g_kernel(2, 1, [0.0, 0.5], draws=100, seed=1)
        assert np.allclose(top["chi"].estimate, 1.0) and top["chi"].max_deviation == 0.0
        assert top["chi"].within_envelope and top["nu"].within_envelope


class TestExperiments:
    def test_covariance_matrix(self):
        cfg = ExperimentConfig(d=2, k=(0, 1), r=20.0, replicates=600, master_seed=15)
        cmp = empirical_covariance_matrix(cfg, "chi")
        assert cmp.empirical.shape == (2, 2)
        assert np.allclose(cmp.empirical, cmp.analytic, rtol=0.25)
        assert np.allclose(np.diag(cmp.correlation), 1.0)

    def test_coverage_at_half_level(self):
        cfg = ExperimentConfig(d=2, k=(0,), r=100.0, replicates=400, master_seed=16, alpha=0.5)
        res = coverage_experiment(cfg, "J")
        assert abs(res.fraction - 0.5) < 4 * math.sqrt(0.25 / 400) + 0.02

    def test_coverage_collapses(self):
        cfg = ExperimentConfig(d=2, k=(0,), r=30.0, replicates=100, master_seed=16, alpha=1 - 1e-9)
        assert coverage_experiment(cfg, "I").fraction == 0.0

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            coverage_experiment(ExperimentConfig(replicates=2), "K")
        with pytest.raises(ValueError):
            coverage_experiment(ExperimentConfig(d=3, replicates=2), "road")

    def test_variance_approaches_limit(self):
        # Var Psi_0 / r^3 = 8 sigma_chi(2, 0) + 2 / r decreases towards its limit
        exact = [cf.exact_var_psi0_2d(1.0, r) / r ** 3 for r in (10.0, 20.0, 40.0)]
        assert exact[0] > exact[1] > exact[2] > 8 * cf.sigma_chi(2, 0)
        for r, target in zip((10.0, 20.0, 40.0), exact):
            cfg = ExperimentConfig(d=2, k=(0,), r=r, replicates=1500, master_seed=int(r), statistics=("psi",))
            x = replicate(cfg).column("psi_0") / r ** 1.5
            var = x.var(ddof=1)
            se = math.sqrt(((x - x.mean()) ** 4).mean() - var ** 2) / math.sqrt(x.size)
            assert abs(var - target) < 4 * se


def test_plot_data():
    q, x = qq_data([3.0, 1.0, 2.0])
    assert list(x) == [1.0, 2.0, 3.0]
    assert q[1] == 0.0 and q[0] == pytest.approx(-q[2])
    centres, dens = histogram_data(np.random.default_rng(0).standard_normal(1000), bins=20)
    assert centres.size == 20
    assert np.sum(dens) * (centres[1] - centres[0]) == pytest.approx(1.0)
