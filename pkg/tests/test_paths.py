import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from feyncoh.core import C, DetectorSpec, Geometry, SourceSpec, Spectrum, Statistics, UsageError
from feyncoh.paths import (INDISTINGUISHABLE, DetectionPoint, Experiment, Reason, UnsupportedOrderError,
                           boson_path_oracle, classify, ensemble_probability, enumerate_ways,
                           fermion_path_oracle, matrix_path_sum, path_amplitude, way_amplitude)

W0 = 3.5e15
LAM = 2 * math.pi * C / W0
GEO = Geometry.for_photons(1.0, W0)


def thermal(**kw):
    return SourceSpec("thermal", Spectrum.rectangular(W0, 1e12), **kw)


def laser(**kw):
    return SourceSpec("laser", Spectrum.monochromatic(W0), **kw)


def single(**kw):
    return SourceSpec("single_photon", Spectrum.rectangular(W0, 1e12), **kw)


def ryser(a):
    """Permanent by Ryser's inclusion-exclusion formula."""
    n = a.shape[0]
    total = 0j
    for mask in range(1, 1 << n):
        cols = [j for j in range(n) if mask >> j & 1]
        total += (-1) ** len(cols) * np.prod(a[:, cols].sum(axis=1))
    return (-1) ** n * total


def random_phases(way, rng):
    return {s: rng.uniform(0, 2 * np.pi) for p in way.paths for s in p.phase_symbols}


def random_k(way, n, rng):
    keys = {f for p in way.paths for f in p.factors}
    return {k: complex(rng.normal(), rng.normal()) for k in keys}


class TestEnumeration:
    def test_thermal_pair(self):
        ways = enumerate_ways([thermal()], 2, 2)
        assert len(ways) == 1 and len(ways[0].paths) == 2

    def test_thermal_triple(self):
        ways = enumerate_ways([thermal()], 3, 3)
        assert len(ways) == 1 and len(ways[0].paths) == 6

    def test_two_lasers(self):
        ways = enumerate_ways([laser(), laser(position=1e-3)], 2, 2)
        by_counts = {w.emissions: w for w in ways}
        assert set(by_counts) == {(2, 0), (0, 2), (1, 1)}
        assert by_counts[(2, 0)].probability_weight == pytest.approx(0.25)
        assert by_counts[(0, 2)].probability_weight == pytest.approx(0.25)
        assert by_counts[(1, 1)].probability_weight == pytest.approx(0.5)
        assert len(by_counts[(1, 1)].paths) == 2
        assert len(by_counts[(2, 0)].paths) == 1  # identical paths collapse

    def test_three_single_photon(self):
        ways = enumerate_ways([single(), single(position=1e-3), single(position=2e-3)], 2, 2)
        assert len(ways) == 3
        for w in ways:
            assert len(w.paths) == 2
            assert w.probability_weight == pytest.approx(1 / 3)
            assert sorted(w.emissions) == [0, 1, 1]

    def test_no_collapse_keeps_all_assignments(self):
        ways = enumerate_ways([laser()], 2, 2, collapse=False)
        assert len(ways[0].paths) == 2

    @pytest.mark.parametrize("stages,order,n", [(1, 2, 2), (3, 2, 8), (2, 3, 36), (2, 4, 576)])
    def test_cascade_paths(self, stages, order, n):
        src = SourceSpec("superbunching_cascade", Spectrum.rectangular(W0, 1e12), stages=stages)
        (way,) = enumerate_ways([src], order, order)
        assert len(way.paths) == n

    def test_cascade_cap(self):
        src = SourceSpec("superbunching_cascade", Spectrum.rectangular(W0, 1e12), stages=3)
        with pytest.raises(UnsupportedOrderError):
            enumerate_ways([src], 4, 4)

    def test_order_cap(self):
        with pytest.raises(UnsupportedOrderError):
            enumerate_ways([thermal()], 5, 5)

    def test_no_sources(self):
        with pytest.raises(UsageError):
            enumerate_ways([], 2, 2)

    @given(st.lists(st.sampled_from(["thermal", "laser", "single_photon"]), min_size=1, max_size=3),
           st.lists(st.floats(0.1, 5.0), min_size=3, max_size=3), st.integers(1, 3))
    @settings(max_examples=60, deadline=None)
    def test_weights_and_invariants(self, kinds, weights, order):
        srcs = [SourceSpec(k, Spectrum.rectangular(W0, 1e12), intensity_weight=w, position=i * 1e-3)
                for i, (k, w) in enumerate(zip(kinds, weights))]
        try:
            ways = enumerate_ways(srcs, order, order)
        except UsageError:
            assert sum(k == "single_photon" for k in kinds) < order and all(k == "single_photon" for k in kinds)
            return
        assert sum(w.probability_weight for w in ways) == pytest.approx(1.0, abs=1e-12)
        for w in ways:
            assert sum(w.emissions) == order
            for p in w.paths:
                assert sorted(a[2] for a in p.assignment) == list(range(order))
                assert p.emissions == w.emissions

    def test_fermion_sign_is_parity(self):
        src = thermal(statistics=Statistics.FERMION)
        (way,) = enumerate_ways([src], 3, 3)
        for p in way.paths:
            perm = [a[2] for a in p.assignment]
            inversions = sum(perm[i] > perm[j] for i in range(3) for j in range(i + 1, 3))
            assert p.sign == (-1) ** inversions


class TestClassify:
    DX = 1e-4
    DETS = (DetectorSpec(dx=DX, id=0), DetectorSpec(dx=DX, id=1))

    def cross_paths(self, d):
        srcs = [laser(), laser(position=d)]
        ways = enumerate_ways(srcs, 2, 2)
        (cross,) = [w for w in ways if w.emissions == (1, 1)]
        return srcs, cross.paths

    def test_close_lasers_indistinguishable(self):
        srcs, (a, b) = self.cross_paths(LAM * GEO.L / (2 * self.DX))
        assert classify(a, b, GEO, self.DETS, srcs) == INDISTINGUISHABLE
        assert not classify(a, b, GEO, self.DETS, srcs).distinguishable

    def test_far_lasers_momentum_resolvable(self):
        srcs, (a, b) = self.cross_paths(2 * LAM * GEO.L / self.DX)
        v = classify(a, b, GEO, self.DETS, srcs)
        assert v.distinguishable and v.reason is Reason.MOMENTUM_RESOLVABLE

    def test_single_photon_status(self):
        srcs = [single(), single(position=1e-9), single(position=2e-9)]
        ways = enumerate_ways(srcs, 2, 2)
        v = classify(ways[0].paths[0], ways[1].paths[0], GEO, self.DETS, srcs)
        assert v.distinguishable and v.reason is Reason.SOURCE_STATUS_MEASURABLE

    def test_different_configurations(self):
        (w2,) = enumerate_ways([thermal()], 2, 2)
        (w3,) = enumerate_ways([thermal()], 3, 3)
        with pytest.raises(UsageError):
            classify(w2.paths[0], w3.paths[0], GEO, self.DETS, [thermal()])


class TestWayAmplitude:
    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_thermal_common_phase(self, seed):
        rng = np.random.default_rng(seed)
        (way,) = enumerate_ways([thermal()], 2, 2)
        K = random_k(way, 2, rng)
        a = way_amplitude(way, random_phases(way, rng), K)
        b = way_amplitude(way, random_phases(way, rng), K)
        assert abs(a) == pytest.approx(abs(b), rel=1e-12)

    def test_laser_collapse_flat(self):
        (way,) = enumerate_ways([laser()], 2, 2)
        assert len(way.paths) == 1
        rng = np.random.default_rng(1)
        K = random_k(way, 2, rng)
        vals = [abs(way_amplitude(way, random_phases(way, rng), K)) for _ in range(5)]
        assert np.ptp(vals) < 1e-12

    def test_fermion_coincident_zero(self):
        (way,) = enumerate_ways([thermal(statistics="fermion")], 2, 2)
        table = {((0, 0), 0): 0.3 + 0.2j, ((0, 0), 1): 0.3 + 0.2j,
                 ((0, 1), 0): -0.7j, ((0, 1), 1): -0.7j}
        phases = {("phi", 0, 0): 0.4, ("phi", 0, 1): 1.9}
        assert abs(way_amplitude(way, phases, table)) < 1e-15

    def test_in_phase_paths_add(self):
        (way,) = enumerate_ways([thermal()], 2, 2)
        table = {((0, i), j): 1.0 for i in range(2) for j in range(2)}
        phases = {("phi", 0, 0): 0.0, ("phi", 0, 1): 0.0}
        total = way_amplitude(way, phases, table) * math.sqrt(2)
        assert abs(total) ** 2 == pytest.approx(4 * abs(path_amplitude(way.paths[0], phases, table)) ** 2)

    def test_missing_symbol(self):
        (way,) = enumerate_ways([thermal()], 2, 2)
        table = {((0, i), j): 1.0 for i in range(2) for j in range(2)}
        with pytest.raises(UsageError):
            way_amplitude(way, {("phi", 0, 0): 0.0}, table)

    def test_reflection_phase(self):
        ways = enumerate_ways([single(), single(position=1e-9)], 2, 2, beam_splitter=True)
        (way,) = ways
        refl = sorted(p.reflection_count for p in way.paths)
        assert refl == [0, 2]
        table = {((s, 0), d): 1.0 for s in range(2) for d in range(2)}
        phases = {("phi", 0, 0): 0.0, ("phi", 1, 0): 0.0}
        assert abs(way_amplitude(way, phases, table)) < 1e-15  # HOM cancellation

    @given(st.integers(0, 2 ** 32 - 1), st.floats(0, 2 * np.pi))
    @settings(max_examples=50, deadline=None)
    def test_global_phase_of_one_source(self, seed, shift):
        rng = np.random.default_rng(seed)
        ways = enumerate_ways([thermal(), thermal(position=1e-3)], 2, 2)
        totals = []
        for delta in (0.0, shift):
            rng2 = np.random.default_rng(seed)
            s = 0.0
            for w in ways:
                ph = random_phases(w, rng2)
                ph = {k: v + (delta if k[1] == 0 else 0.0) for k, v in ph.items()}
                K = random_k(w, 2, np.random.default_rng(seed + 1))
                s += w.probability_weight * abs(way_amplitude(w, ph, K)) ** 2
            totals.append(s)
        assert totals[0] == pytest.approx(totals[1], rel=1e-10)


class TestOracles:
    def test_ones(self):
        assert boson_path_oracle(np.ones((3, 3))) == pytest.approx(6)
        assert abs(fermion_path_oracle(np.ones((3, 3)))) < 1e-15

    def test_identity(self):
        assert boson_path_oracle(np.eye(3)) == pytest.approx(1)
        assert fermion_path_oracle(np.eye(3)) == pytest.approx(1)

    def test_non_square(self):
        with pytest.raises(UsageError):
            boson_path_oracle(np.ones((2, 3)))
        with pytest.raises(UsageError):
            matrix_path_sum(np.ones((3, 2)))

    @given(st.integers(2, 4), st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_path_sum_is_permanent_or_determinant(self, n, seed):
        rng = np.random.default_rng(seed)
        K = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        assert abs(matrix_path_sum(K) - ryser(K)) < 1e-12 * max(1, abs(ryser(K)))
        det = np.linalg.det(K)
        assert abs(matrix_path_sum(K, Statistics.FERMION) - det) < 1e-12 * max(1, abs(det))
        assert abs(boson_path_oracle(K) - ryser(K)) < 1e-12 * max(1, abs(ryser(K)))

    @given(arrays(np.float64, (3, 1), elements=st.floats(-3, 3)), arrays(np.float64, (1, 3), elements=st.floats(-3, 3)))
    @settings(max_examples=40, deadline=None)
    def test_fermion_rank_one_zero(self, u, v):
        assert abs(matrix_path_sum(u @ v, Statistics.FERMION)) < 1e-12


class TestEnsemble:
    def test_thermal_hbt_zero_delay(self):
        ex = Experiment((thermal(),), GEO, 2)
        r = ensemble_probability(ex, [DetectionPoint(0, 0), DetectionPoint(0, 0)], 100_000, seed=3)
        assert abs(r.value - 2.0) <= 0.02

    def test_thermal_far_delay(self):
        ex = Experiment((thermal(),), GEO, 2)
        r = ensemble_probability(ex, [DetectionPoint(0, 1e-10), DetectionPoint(0, 0)], 50_000, seed=3)
        assert abs(r.value - 1.0) < 3 * r.stderr + 1e-3

    def test_forced_distinguishable_is_rule_three(self):
        ex = Experiment((thermal(), thermal(position=1e-4)), GEO, 2)
        pts = [DetectionPoint(1e-4, 0), DetectionPoint(0, 0)]
        r = ensemble_probability(ex, pts, 8192, seed=1, force_distinguishable=True)
        assert r.value == pytest.approx(1.0, abs=1e-12)
        assert r.raw == pytest.approx(r.baseline, rel=1e-12)

    def test_fermion_coincident(self):
        src = thermal(statistics="fermion", extent=1e-5)
        ex = Experiment((src,), GEO, 2)
        r = ensemble_probability(ex, [DetectionPoint(2e-4, 0), DetectionPoint(2e-4, 0)], 4096, seed=0)
        assert abs(r.value) < 1e-12

    def test_third_order_thermal(self):
        ex = Experiment((thermal(),), GEO, 3)
        r = ensemble_probability(ex, [DetectionPoint(0, 0)] * 3, 4096, seed=0)
        assert r.value == pytest.approx(6.0, rel=1e-9)

    def test_determinism_across_workers(self):
        ex = Experiment((thermal(extent=1e-3),), GEO, 2)
        pts = [DetectionPoint(2e-4, 0), DetectionPoint(0, 0)]
        a = ensemble_probability(ex, pts, 20_000, seed=9, workers=1)
        b = ensemble_probability(ex, pts, 20_000, seed=9, workers=4)
        c = ensemble_probability(ex, pts, 20_000, seed=9, workers=4)
        assert a.value == b.value == c.value and a.stderr == b.stderr

    def test_sample_count_checks(self):
        ex = Experiment((thermal(),), GEO, 2)
        with pytest.raises(UsageError):
            ensemble_probability(ex, [DetectionPoint(0, 0)] * 2, 0)
        with pytest.raises(UsageError):
            ensemble_probability(ex, [DetectionPoint(0, 0)] * 3, 10)
