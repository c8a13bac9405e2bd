import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as hst
from scipy import stats

from hyperflat import closed_forms as cf
from hyperflat.geometry import DegenerateConfiguration, flat_ball_volume, intersect_hyperplanes
from hyperflat.sampling import HyperplaneProcessSample, OrientationLaw, SeedContract, sample_hyperplane_process
from hyperflat.statistics import (
    AllPass, EnumerationBudgetExceeded, PlanarAngleRectangle, UndefinedForSmallSample, canonical_sort,
    intensity_estimators, k_flat_summary, marked_vertex_count, planar_angles, planar_marked_Z,
    planar_random_normalized_Z, standardized_count_Z, standardized_volume_Z,
)


def handmade(d, p, v, r=1.0, lam=1.0):
    return HyperplaneProcessSample(d, lam, r, np.array(p, float), np.array(v, float))


def brute_summary(sample, k):
    """Count and k-volume by explicit QR intersection of every subset."""
    count, volume = 0, 0.0
    hs = sample.hyperplanes
    for sub in itertools.combinations(hs, sample.d - k):
        try:
            f = intersect_hyperplanes(list(sub))
        except DegenerateConfiguration:
            continue
        if float(f.foot @ f.foot) <= sample.r ** 2:
            count += 1
            volume += flat_ball_volume(f, sample.r)
    return count, volume


class TestHandConstructions:
    def test_coordinate_planes(self):
        s = handmade(3, [0, 0, 0], np.eye(3))
        assert k_flat_summary(s, 2).count == 3
        assert k_flat_summary(s, 2).volume == pytest.approx(3 * math.pi)
        assert k_flat_summary(s, 1).count == 3
        assert k_flat_summary(s, 1).volume == pytest.approx(6.0)
        assert k_flat_summary(s, 0).count == 1

    def test_parallel_lines(self):
        s = handmade(2, [-0.5, 0.5], [[0, 1], [0, 1]])
        assert k_flat_summary(s, 0).count == 0

    def test_crossing_outside(self):
        # x = 0.9 and y = 0.9 cross at distance 1.27 > 1
        s = handmade(2, [0.9, 0.9], [[1, 0], [0, 1]])
        assert k_flat_summary(s, 0).count == 0
        assert k_flat_summary(s, 1).count == 2

    def test_fewer_hyperplanes_than_needed(self):
        s = handmade(3, [0.1], [[0, 0, 1]])
        out = k_flat_summary(s, 0)
        assert out.count == 0 and out.volume == 0.0 and out.subsets_examined == 0

    def test_k_range(self):
        with pytest.raises(ValueError):
            k_flat_summary(handmade(2, [0.0], [[0, 1]]), 2)


class TestAgainstBruteForce:
    @settings(max_examples=25, deadline=None)
    @given(hst.integers(0, 2 ** 32 - 1), hst.integers(2, 4), hst.data())
    def test_count_and_volume(self, seed, d, data):
        k = data.draw(hst.integers(0, d - 1))
        s = sample_hyperplane_process(1.0, 3.0 if d < 4 else 1.5, d=d, seed=SeedContract(seed))
        fast = k_flat_summary(s, k)
        count, volume = brute_summary(s, k)
        assert fast.count == count
        assert fast.volume == pytest.approx(volume, rel=1e-9, abs=1e-12)

    def test_all_pass_counts_vertices(self):
        for i in range(20):
            s = sample_hyperplane_process(1.0, 6.0, d=2, seed=SeedContract(5, i))
            n0 = k_flat_summary(s, 0).count
            assert marked_vertex_count(s) == n0
            assert marked_vertex_count(s, AllPass()) == n0
            assert marked_vertex_count(s, PlanarAngleRectangle(math.pi, math.pi)) == n0
            assert n0 <= math.comb(s.n, 2)


class TestInvariances:
    @settings(max_examples=20, deadline=None)
    @given(hst.integers(0, 2 ** 32 - 1), hst.floats(0.2, 5.0))
    def test_scaling(self, seed, t):
        s = sample_hyperplane_process(1.0, 3.0, d=3, seed=SeedContract(seed))
        u = s.scaled(t)
        for k in range(3):
            a, b = k_flat_summary(s, k), k_flat_summary(u, k)
            assert a.count == b.count
            assert b.volume == pytest.approx(t ** k * a.volume, rel=1e-9, abs=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(hst.integers(0, 2 ** 32 - 1), hst.randoms(use_true_random=False))
    def test_permutation(self, seed, rnd):
        s = sample_hyperplane_process(1.0, 8.0, d=2, seed=SeedContract(seed))
        order = list(range(s.n))
        rnd.shuffle(order)
        u = s.permuted(order)
        pred = PlanarAngleRectangle(1.0, 2.0)
        assert marked_vertex_count(s, pred) == marked_vertex_count(u, pred)
        assert k_flat_summary(s, 1).volume == pytest.approx(k_flat_summary(u, 1).volume, rel=1e-12)

    @settings(max_examples=40)
    @given(hst.integers(0, 2 ** 32 - 1))
    def test_canonical_sort_ignores_input_order(self, seed):
        g = np.random.default_rng(seed)
        dirs = g.integers(-2, 3, (5, 3, 2)).astype(float)
        perm = g.permutation(3)
        assert np.array_equal(canonical_sort(dirs), canonical_sort(dirs[:, perm]))

    def test_canonical_sort_order(self):
        dirs = np.array([[[0.6, 0.8], [-0.6, 0.8], [1.0, 0.0]]])
        assert canonical_sort(dirs)[0].tolist() == [[-0.6, 0.8], [0.6, 0.8], [1.0, 0.0]]


class TestMarks:
    def test_angles(self):
        assert planar_angles(np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 1e-300]])) == pytest.approx(
            [0.0, math.pi / 2, math.pi])

    @settings(max_examples=20, deadline=None)
    @given(hst.integers(0, 2 ** 32 - 1), hst.lists(hst.floats(0, math.pi), min_size=4, max_size=4))
    def test_monotone_in_rectangle(self, seed, xs):
        a1, b1 = sorted(xs[:2])
        a2, b2 = max(a1, xs[2]), max(b1, xs[3])
        a2 = min(a2, b2)
        s = sample_hyperplane_process(1.0, 5.0, d=2, seed=SeedContract(seed))
        small = marked_vertex_count(s, PlanarAngleRectangle(a1, b1))
        big = marked_vertex_count(s, PlanarAngleRectangle(a2, b2))
        if a1 <= a2 and b1 <= b2:
            assert small <= big

    def test_predicate_validation(self):
        with pytest.raises(ValueError):
            PlanarAngleRectangle(2.0, 1.0)

    def test_marked_mean(self):
        # Monte Carlo check of E N_B = (2 lam r)^2 / 2 * mu(a, b) including Poisson N
        a, b, r = math.pi / 2, math.pi / 2, 10.0
        pred = PlanarAngleRectangle(a, b)
        x = np.array([marked_vertex_count(sample_hyperplane_process(1.0, r, d=2, seed=SeedContract(17, i)), pred)
                      for i in range(2000)])
        expected = 0.5 * (2 * r) ** 2 * cf.planar_mu(a, b)
        assert abs(x.mean() - expected) < 4 * x.std(ddof=1) / math.sqrt(x.size)


class TestStandardisation:
    def test_top_dimension_is_poisson_z(self):
        for i in range(10):
            s = sample_hyperplane_process(1.0, 10.0, d=2, seed=SeedContract(3, i))
            assert standardized_count_Z(s, 1) == pytest.approx((s.n - 20) / math.sqrt(20), rel=1e-12)

    def test_at_mean_is_zero(self):
        s = sample_hyperplane_process(1.0, 5.0, d=3, seed=1)
        sm = k_flat_summary(s, 1)
        assert standardized_count_Z(s, 1, "plug-in", mean=sm.count, summary=sm) == 0.0
        assert standardized_volume_Z(s, 1, "plug-in", mean=sm.volume, summary=sm) == 0.0

    def test_volume_scaling(self):
        s = sample_hyperplane_process(1.0, 5.0, d=3, seed=2)
        sm = k_flat_summary(s, 1)
        mu = cf.mean_zeta(3, 1, 1.0, 5.0)
        assert standardized_volume_Z(s, 1, summary=sm) == pytest.approx(
            math.factorial(1) / 10 ** 1.5 / 5.0 * (sm.volume - mu), rel=1e-12)

    def test_analytic_centering_requires_isotropy(self):
        law = OrientationLaw.discrete([[1.0, 0.0], [0.0, 1.0]])
        s = sample_hyperplane_process(1.0, 5.0, law, seed=0)
        with pytest.raises(ValueError, match="isotropic"):
            standardized_count_Z(s, 0)
        assert math.isfinite(standardized_count_Z(s, 0, "plug-in", mean=12.5))

    def test_centering_errors(self):
        s = sample_hyperplane_process(1.0, 5.0, d=2, seed=0)
        with pytest.raises(ValueError):
            standardized_count_Z(s, 0, "plug-in")
        with pytest.raises(ValueError):
            standardized_count_Z(s, 0, "median")

    def test_intensity_estimators(self):
        s = handmade(2, [0.0, 0.0], [[1, 0], [0, 1]], r=2.0)
        lh, lt = intensity_estimators(s, 0)
        assert lh == pytest.approx(1 / (4 * math.pi))
        assert lt == pytest.approx(1 / (4 * math.pi))
        empty = handmade(2, [], np.zeros((0, 2)))
        assert intensity_estimators(empty, 0) == (0.0, 0.0)

    def test_intensity_estimators_unbiased(self):
        vals = np.array([intensity_estimators(sample_hyperplane_process(1.0, 8.0, d=3, seed=SeedContract(8, i)), 1)
                         for i in range(400)])
        target = cf.intensity_lambda_k(3, 1, 1.0)
        for col in vals.T:
            assert abs(col.mean() - target) < 4 * col.std(ddof=1) / math.sqrt(col.size)


class TestEnumerationCap:
    def test_cap_error_names_requirement(self):
        s = sample_hyperplane_process(1.0, 10.0, d=3, seed=0)
        need = math.comb(s.n, 3)
        with pytest.raises(EnumerationBudgetExceeded, match=str(need)):
            k_flat_summary(s, 0, cap=need - 1)
        assert k_flat_summary(s, 0, cap=need).subsets_examined == need

    def test_vertex_count_cap(self):
        s = sample_hyperplane_process(1.0, 10.0, d=2, seed=0)
        with pytest.raises(EnumerationBudgetExceeded):
            marked_vertex_count(s, cap=1)


class TestPlanarStatistics:
    def test_random_normalisation_example(self):
        s = handmade(2, [0.9, 0.9], [[1, 0], [0, 1]])
        assert planar_random_normalized_Z(s, math.pi, math.pi) == pytest.approx(2 ** -0.75 * (0 - 0.5))

    def test_small_sample(self):
        with pytest.raises(UndefinedForSmallSample):
            planar_random_normalized_Z(handmade(2, [0.1], [[0, 1]]), 1.0, 2.0)

    def test_planar_only(self):
        s = sample_hyperplane_process(1.0, 2.0, d=3, seed=0)
        with pytest.raises(ValueError):
            planar_marked_Z(s, 1.0, 2.0)

    def test_marked_z_formula(self):
        s = sample_hyperplane_process(1.0, 10.0, d=2, seed=3)
        c = marked_vertex_count(s, PlanarAngleRectangle(1.0, 2.0))
        assert planar_marked_Z(s, 1.0, 2.0) == pytest.approx((c - 200 * cf.planar_mu(1.0, 2.0)) / 20 ** 1.5)
        assert planar_marked_Z(s, 1.0, 2.0, count=c) == planar_marked_Z(s, 1.0, 2.0)

    def test_random_normalised_moments(self):
        z = np.array([planar_random_normalized_Z(sample_hyperplane_process(1.0, 30.0, d=2, seed=SeedContract(23, i)),
                                                 math.pi, math.pi) for i in range(2000)])
        assert abs(z.mean()) < 4 * z.std(ddof=1) / math.sqrt(z.size)
        # U-statistic projection: the limit variance is E[g^2] - (E g)^2 = sigma_B - mu_B^2
        target = cf.planar_sigma(math.pi, math.pi) - cf.planar_mu(math.pi, math.pi) ** 2
        assert target == pytest.approx(0.02019, abs=1e-5)
        assert z.var(ddof=1) == pytest.approx(target, rel=0.15)


def test_skewness_decays_with_radius():
    # finite-radius skewness of Z_chi in d = 3 shrinks roughly like r^{-1/2}
    def skew(r, base):
        z = [standardized_count_Z(sample_hyperplane_process(1.0, r, d=3, seed=SeedContract(base, i)), 1)
             for i in range(1500)]
        return stats.skew(z)

    s_small, s_large = skew(5.0, 41), skew(20.0, 42)
    assert s_large < s_small
    assert s_large / s_small == pytest.approx(0.5, abs=0.25)
