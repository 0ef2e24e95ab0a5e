import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from feyncoh import analytic as an
from feyncoh.core import C, Geometry, SourceSpec, Spectrum, UsageError
from feyncoh.paths import DetectionPoint, Experiment, ensemble_probability

W0 = 3.5e15
DW = 1e12
LAM = 2 * math.pi * C / W0
GEO = Geometry.for_photons(1.0, W0)


class TestFirstOrder:
    def test_mz_monochromatic(self):
        p = an.mz_first_order(Spectrum.monochromatic(W0), [0.0, math.pi / W0])
        assert p.values == pytest.approx([2.0, 0.0], abs=1e-12)

    @pytest.mark.parametrize("variant", ["paper", "standard"])
    def test_mz_gaussian_washes_out(self, variant):
        sigma = 1e13
        tau = np.linspace(20 / sigma, 40 / sigma, 101)
        p = an.mz_first_order(Spectrum.gaussian(W0, sigma), tau, variant=variant)
        assert np.allclose(p.values, 1.0, atol=1e-6)

    def test_mz_variants_differ_at_zero(self):
        g = Spectrum.gaussian(W0, 1e13)
        assert an.mz_first_order(g, [0.0], "standard").values[0] == pytest.approx(2.0)
        assert an.mz_first_order(g, [0.0], "paper").values[0] == pytest.approx(1.5)

    def test_two_thermal(self):
        srcs = [SourceSpec("thermal", Spectrum.monochromatic(W0)),
                SourceSpec("thermal", Spectrum.monochromatic(W0), position=1e-3)]
        r = an.multi_beam_first_order(srcs, GEO, np.linspace(-2e-3, 2e-3, 401), n_detected=100)
        assert r.visibility == pytest.approx(0.1)
        assert r.pattern.visibility() == pytest.approx(0.1, rel=1e-3)

    def test_two_lasers_period(self):
        d = 1e-3
        srcs = [SourceSpec("laser", Spectrum.monochromatic(W0)),
                SourceSpec("laser", Spectrum.monochromatic(W0), position=d)]
        period = LAM * GEO.L / d
        x = np.array([0.0, period / 2, period])
        r = an.multi_beam_first_order(srcs, GEO, x)
        assert r.visibility == 1.0
        assert r.pattern.values == pytest.approx([2.0, 0.0, 2.0], abs=1e-9)
        assert an.multi_beam_first_order(srcs, GEO, x, long_average=True).visibility == 0.0

    def test_two_single_photon(self):
        srcs = [SourceSpec("single_photon", Spectrum.monochromatic(W0)),
                SourceSpec("single_photon", Spectrum.monochromatic(W0), position=1e-3)]
        r = an.multi_beam_first_order(srcs, GEO, [0.0], n_detected=100, n_simultaneous=4)
        assert r.visibility == pytest.approx(0.02)

    def test_three_lasers_equal_spacing(self):
        d = math.sqrt(2 * LAM * GEO.L)
        srcs = [SourceSpec("laser", Spectrum.monochromatic(W0), position=i * d) for i in range(3)]
        x = np.linspace(-20 * LAM * GEO.L / d, 20 * LAM * GEO.L / d, 20001)
        r = an.multi_beam_first_order(srcs, GEO, x)
        assert r.pattern.values.min() == pytest.approx(0.0, abs=1e-3)
        assert r.visibility == pytest.approx(1.0, abs=1e-3)

    def test_too_many_sources(self):
        srcs = [SourceSpec("laser", Spectrum.monochromatic(W0), position=i * 1e-3) for i in range(4)]
        with pytest.raises(UsageError):
            an.multi_beam_first_order(srcs, GEO, [0.0])


TAU = np.linspace(-60 / DW, 60 / DW, 1201)


class TestHBT:
    def test_thermal_peak(self):
        assert an.hbt_second_order("thermal", "temporal", [0.0], delta_omega=DW).values[0] == 2.0

    def test_cascade(self):
        assert an.hbt_second_order("superbunching_cascade", "temporal", [0.0], delta_omega=DW,
                                   stages=3).values[0] == pytest.approx(8.0)

    def test_fermion(self):
        p = an.hbt_second_order("cold_atom_cloud", "temporal", TAU, delta_omega=DW, statistics="fermion")
        assert p.values[np.argmin(np.abs(TAU))] == 0.0
        assert np.all((p.values >= 0) & (p.values <= 1 + 1e-12))

    def test_laser_flat(self):
        assert np.all(an.hbt_second_order("laser", "temporal", TAU).values == 1.0)

    def test_modulated(self):
        src = SourceSpec("superbunching_modulated", Spectrum.rectangular(W0, DW),
                         gamma_tau=(0.0, 1e-11, 1e-9), gamma_values=(1.5, 1.2, 1.0))
        p = an.hbt_second_order("superbunching_modulated", "temporal", [0.0], delta_omega=DW, source=src)
        assert p.values[0] == pytest.approx(3.0)

    def test_unknown_kind(self):
        with pytest.raises(UsageError):
            an.hbt_second_order("mystery", "temporal", TAU, delta_omega=DW)

    def test_spatial_first_zero(self):
        D = 1e-3
        dx = LAM * GEO.L / D
        p = an.hbt_second_order("thermal", "spatial", [dx], size=D, L=GEO.L, wavelength=LAM)
        assert p.values[0] == pytest.approx(1.0, abs=1e-12)


class TestHOM:
    def test_entangled(self):
        p = an.hom_second_order("entangled_pair", "entangled_pair", grid=TAU, delta_omega=DW)
        assert p.values[np.argmin(np.abs(TAU))] == 0.0
        assert np.all((p.values >= 0) & (p.values <= 1))

    def test_two_lasers(self):
        assert an.hom_second_order("laser", "laser", grid=[0.0], delta_omega=DW).values[0] == pytest.approx(0.5)

    def test_laser_thermal(self):
        p = an.hom_second_order("laser", "thermal", domain="spatial", grid=[0.0], size=1e-3, L=1.0,
                                wavelength=LAM, separation=2e-3)
        assert p.values[0] == pytest.approx(0.75)

    def test_bec(self):
        assert an.hom_second_order("bec", "bec", grid=[0.0], delta_omega=DW).values[0] == pytest.approx(0.5)

    def test_fermion_pair(self):
        p = an.hom_second_order("single_photon", "single_photon", "fermion", grid=[0.0], delta_omega=DW)
        assert p.values[0] == pytest.approx(2.0)

    def test_dip_width_scales(self):
        w1 = an.hom_dip_width(an.hom_second_order("entangled_pair", "entangled_pair", grid=TAU, delta_omega=DW))
        w2 = an.hom_dip_width(an.hom_second_order("entangled_pair", "entangled_pair", grid=TAU,
                                                  delta_omega=2 * DW))
        assert w2 == pytest.approx(w1 / 2, rel=0.01)

    def test_unsupported(self):
        with pytest.raises(UsageError):
            an.hom_second_order("laser", "bec", grid=TAU, delta_omega=DW)


class TestMultiSource:
    def test_baselines(self):
        dx = np.linspace(-1, 1, 200001)
        for kind, base in (("single_photon", 3.0), ("laser", 4.5)):
            p = an.multi_source_second_order(kind, 1e-3, 2.3e-3, GEO, dx)
            assert p.values.mean() == pytest.approx(base, abs=0.01)
            assert p.meta["baseline"] == base

    def test_equal_spacing_at_zero(self):
        d = 1e-3
        p = an.multi_source_second_order("single_photon", d, d, GEO, [0.0])
        assert p.values[0] == pytest.approx(4 + 2 * math.cos(math.pi * d * d / (GEO.L * LAM)), abs=1e-9)


class TestSubwavelength:
    GEO800 = Geometry(1.0, 800e-9)
    D = 1e-3

    def test_periods(self):
        fix = an.subwavelength_decomposition("fix_one", "random_relative", self.D, self.GEO800)
        opp = an.subwavelength_decomposition("opposite_directions", "random_relative", self.D, self.GEO800)
        same = an.subwavelength_decomposition("same_direction", "equal_fixed", self.D, self.GEO800)
        assert fix.effective_period == pytest.approx(800e-6)
        assert opp.effective_period == pytest.approx(400e-6)
        assert same.effective_period == pytest.approx(400e-6)

    def test_random_relative_terms(self):
        r = an.subwavelength_decomposition("fix_one", "random_relative", self.D, self.GEO800)
        assert sorted((a, b) for _, a, b in r.terms) == [(0, 0), (1, -1)]
        x = np.linspace(0, 800e-6, 1001)
        vals = r.evaluate(x, 0.0) / 4
        v = (vals.max() - vals.min()) / (vals.max() + vals.min())
        assert v == pytest.approx(0.5, abs=1e-6)

    def test_random_relative_matches_phase_average(self):
        """Averaging the five-term expansion over a uniform relative phase leaves 4 + 2cos."""
        q = 2 * np.pi * self.D / (800e-9)
        x1, x2 = 1.3e-4, -0.4e-4
        phi = np.linspace(0, 2 * np.pi, 4001)[:-1]
        full = (4 + 4 * np.cos(q * x2 + phi) + 4 * np.cos(q * x1 + phi) + 2 * np.cos(q * (x1 + x2) + 2 * phi)
                + 2 * np.cos(q * (x1 - x2)))
        r = an.subwavelength_decomposition("fix_one", "random_relative", self.D, self.GEO800)
        assert full.mean() == pytest.approx(float(r.evaluate(x1, x2)), abs=1e-9)


class TestThirdOrder:
    def test_thermal_six(self):
        p = an.third_order_pattern("thermal_hbt3_temporal", [0.0], [0.0], delta_omega=DW)
        assert p.values[0, 0] == pytest.approx(6.0)

    def test_fermion_zero(self):
        assert float(an.third_order_value("fermion_hbt3", 0.0, 0.0, 0.0, delta_omega=DW)) == pytest.approx(0.0)

    def test_single_photon_plus_laser_ratio(self):
        kw = dict(L=1.0, wavelength=LAM, d=1e-3, I1=1.0, I2=1.0)
        near = float(an.third_order_value("single_photon_plus_laser", 0.0, 0.0, 0.0, **kw))
        far = 3 * 3 + 1
        assert near / far == pytest.approx(2.8)
        x = np.linspace(0, 1, 400001)
        avg = np.mean(an.third_order_value("single_photon_plus_laser", x, 0.37 * x, -1.9 * x, **kw))
        assert avg == pytest.approx(far, abs=0.05)

    def test_far_limit(self):
        big = 1e5 / DW
        assert float(an.third_order_value("thermal_hbt3_temporal", big, 0.0, -big * 2.7,
                                          delta_omega=DW)) == pytest.approx(1.0, abs=1e-3)

    def test_burt(self):
        assert an.burt_ratio() == pytest.approx(6.0)

    def test_grid_shape(self):
        p = an.third_order_pattern("thermal_hbt3_spatial", np.linspace(-1e-3, 1e-3, 11),
                                   np.linspace(-1e-3, 1e-3, 7), size=1e-3, L=1.0, wavelength=LAM)
        assert p.values.shape == (11, 7)
        assert np.all(p.values >= 0)


PATTERNS = {
    "thermal_temporal": lambda g: an.hbt_second_order("thermal", "temporal", g, delta_omega=DW),
    "fermion_temporal": lambda g: an.hbt_second_order("thermal", "temporal", g, delta_omega=DW,
                                                      statistics="fermion"),
    "cascade": lambda g: an.hbt_second_order("superbunching_cascade", "temporal", g, delta_omega=DW, stages=2),
    "hom_entangled": lambda g: an.hom_second_order("entangled_pair", "entangled_pair", grid=g, delta_omega=DW),
    "hom_bec": lambda g: an.hom_second_order("bec", "bec", grid=g, delta_omega=DW),
    "hom_fermion": lambda g: an.hom_second_order("single_photon", "single_photon", "fermion", grid=g,
                                                 delta_omega=DW),
}


@pytest.mark.parametrize("name", sorted(PATTERNS))
def test_baseline_even_and_bounded(name):
    grid = np.linspace(-400 / DW, 400 / DW, 4001)
    p = PATTERNS[name](grid)
    far = np.abs(grid) > 380 / DW
    assert np.allclose(p.values[far], 1.0, atol=1e-3)
    assert np.allclose(p.values, p.values[::-1], atol=1e-12)
    assert np.all(p.values >= 0)


@given(st.floats(-1e-10, 1e-10))
@settings(max_examples=100, deadline=None)
def test_fermion_hbt_bounds(tau):
    v = an.hbt_second_order("thermal", "temporal", [tau], delta_omega=DW, statistics="fermion").values[0]
    assert -1e-12 <= v <= 1 + 1e-12


# Monte Carlo ensemble versus closed form at five delays.
RECT = Spectrum.rectangular(W0, DW)
ORACLE_CASES = {
    "thermal_temporal": ((SourceSpec("thermal", RECT),), False, PATTERNS["thermal_temporal"]),
    "fermion_temporal": ((SourceSpec("thermal", RECT, statistics="fermion"),), False,
                         PATTERNS["fermion_temporal"]),
    "cascade": ((SourceSpec("superbunching_cascade", RECT, stages=2),), False, PATTERNS["cascade"]),
    "hom_single_photon": ((SourceSpec("single_photon", RECT), SourceSpec("single_photon", RECT)), True,
                          PATTERNS["hom_entangled"]),
    "hom_bec": ((SourceSpec("bec", RECT, phase_model=None), SourceSpec("bec", RECT)), True,
                PATTERNS["hom_bec"]),
}


@pytest.mark.parametrize("name", sorted(ORACLE_CASES))
def test_ensemble_matches_closed_form(name):
    srcs, bs, pattern = ORACLE_CASES[name]
    ex = Experiment(srcs, GEO, 2, bs)
    taus = np.array([0.0, 1.1, 2.5, 4.7, 9.0]) / DW
    analytic = pattern(taus).values
    for tau, a in zip(taus, analytic):
        r = ensemble_probability(ex, [DetectionPoint(0.0, float(tau)), DetectionPoint(0.0, 0.0)], 100_000, seed=11)
        assert abs(r.value - a) <= 3 * r.stderr + 1e-9, (name, tau, r.value, r.stderr, a)


def test_ensemble_spatial_and_third_order():
    D = 1e-3
    src = SourceSpec("thermal", Spectrum.monochromatic(W0), extent=D)
    fringe = LAM * GEO.L / D
    ex2 = Experiment((src,), GEO, 2)
    ex3 = Experiment((src,), GEO, 3)
    for u in np.array([0.0, 0.2, 0.45, 0.8, 1.5]) * fringe:
        a2 = an.hbt_second_order("thermal", "spatial", [u], size=D, L=GEO.L, wavelength=LAM).values[0]
        r2 = ensemble_probability(ex2, [DetectionPoint(float(u), 0), DetectionPoint(0.0, 0)], 100_000, seed=2)
        assert abs(r2.value - a2) <= 3 * r2.stderr + 1e-9
        a3 = float(an.third_order_value("thermal_hbt3_spatial", 0.0, -u, 0.0, size=D, L=GEO.L, wavelength=LAM))
        r3 = ensemble_probability(ex3, [DetectionPoint(0.0, 0), DetectionPoint(float(-u), 0),
                                        DetectionPoint(0.0, 0)], 100_000, seed=2)
        assert abs(r3.value - a3) <= 3 * r3.stderr + 1e-9
