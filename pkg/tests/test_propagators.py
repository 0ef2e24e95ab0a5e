import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from feyncoh.core import C, H, HBAR, DomainError, Spectrum
from feyncoh.propagators import (CausalityError, QuadratureError, SingularityError, SpacetimePoint,
                                 adaptive_simpson, de_broglie_wavelength, extended_source_propagator,
                                 free_particle_propagator, point_propagator, source_cross_correlation,
                                 spectral_envelope)

W0 = 3.5e15
LAM = 2 * math.pi * C / W0
P0 = SpacetimePoint(0.0, 0.0, 0.0)


class TestPointPropagator:
    def test_half_wavelength_antialigned(self):
        a = point_propagator(P0, SpacetimePoint(0.0, 1.0, 0.0), W0)
        b = point_propagator(P0, SpacetimePoint(0.0, 1.0 + LAM / 2, 0.0), W0)
        rel = np.angle(b / a)
        assert abs(abs(rel) - math.pi) < 1e-6

    def test_inverse_distance(self):
        a = point_propagator(P0, SpacetimePoint(0.0, 1.0, 0.0), W0)
        b = point_propagator(P0, SpacetimePoint(0.0, 2.0, 0.0), W0)
        assert abs(b) == pytest.approx(abs(a) / 2, rel=1e-14)

    def test_mach_zehnder_fringe(self):
        """Two arms whose lengths differ by cτ give 1 + cos(ω0 τ)."""
        taus = np.linspace(0, 4 * math.pi / W0, 41)
        for tau in taus:
            k1 = point_propagator(P0, SpacetimePoint(0.0, 1.0, 1e-8), W0)
            k2 = point_propagator(P0, SpacetimePoint(0.0, 1.0 + C * tau, 1e-8), W0)
            p = abs(k1 / abs(k1) + k2 / abs(k2)) ** 2 / 2
            assert p == pytest.approx(1 + math.cos(W0 * tau), abs=1e-6)

    def test_errors(self):
        with pytest.raises(SingularityError):
            point_propagator(P0, P0, W0)
        with pytest.raises(CausalityError):
            point_propagator(SpacetimePoint(0, 0, 1.0), SpacetimePoint(0, 1.0, 0.0), W0)
        with pytest.raises(DomainError):
            SpacetimePoint(math.inf, 0.0, 0.0)

    @given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0, 1e-8), st.floats(0, 1e-8))
    @settings(max_examples=50, deadline=None)
    def test_phase_additive_over_segments(self, l1, l2, t1, t2):
        b = SpacetimePoint(0.0, l1, t1)
        c = SpacetimePoint(0.0, l1 + l2, t1 + t2)
        ab = point_propagator(P0, b, W0)
        bc = point_propagator(b, c, W0)
        ac = point_propagator(P0, c, W0)
        k = W0 / C
        expected = k * (l1 + l2) - W0 * (t1 + t2)
        assert np.angle(ab * bc / np.exp(1j * expected)) == pytest.approx(0.0, abs=1e-6)
        assert np.angle(ac / np.exp(1j * expected)) == pytest.approx(0.0, abs=1e-6)

    def test_broadcasts(self):
        x = np.linspace(-1e-3, 1e-3, 7)
        k = point_propagator(P0, SpacetimePoint(x, 1.0, 0.0), W0, paraxial=True)
        assert k.shape == (7,)


class TestSpectralEnvelope:
    SPECTRA = [Spectrum.monochromatic(W0), Spectrum.rectangular(W0, 1e12), Spectrum.gaussian(W0, 1e12),
               Spectrum.lorentzian(W0, 1e12)]

    @pytest.mark.parametrize("spec", SPECTRA, ids=lambda s: s.kind.value)
    def test_unit_at_zero(self, spec):
        assert abs(spectral_envelope(spec, 0.0)) == pytest.approx(1.0, abs=1e-15)

    def test_rectangular_is_sinc(self):
        tau = np.linspace(-1e-11, 1e-11, 101)
        env = spectral_envelope(Spectrum.rectangular(W0, 1e12), tau)
        assert np.allclose(np.abs(env) ** 2, np.sinc(1e12 * tau / 2 / np.pi) ** 2, atol=1e-14)

    def test_gaussian_against_quadrature(self):
        sigma = 1e12
        w = np.linspace(W0 - 12 * sigma, W0 + 12 * sigma, 200001)
        f = np.exp(-((w - W0) ** 2) / (2 * sigma ** 2))
        for tau in (0.0, 3e-13, 1e-12, 2.5e-12):
            num = np.trapezoid(f * np.exp(-1j * w * tau), w) / np.trapezoid(f, w)
            env = spectral_envelope(Spectrum.gaussian(W0, sigma), tau)
            assert abs(env - num) < 1e-6

    def test_lorentzian_decay(self):
        env = spectral_envelope(Spectrum.lorentzian(W0, 1e12), 2e-12)
        assert abs(env) == pytest.approx(math.exp(-1.0), rel=1e-12)

    @given(st.sampled_from(range(4)), st.floats(-1e-10, 1e-10))
    @settings(max_examples=200, deadline=None)
    def test_bounded_and_hermitian(self, i, tau):
        spec = self.SPECTRA[i]
        e = spectral_envelope(spec, tau)
        assert abs(e) <= 1 + 1e-12
        if i and tau != 0 and abs(tau) > 1e-15:
            assert abs(e) < 1
        assert spectral_envelope(spec, -tau) == pytest.approx(np.conj(e), abs=1e-9)


class TestExtendedSource:
    L = 1.0
    D = 1e-3

    def test_cross_correlation_is_sinc(self):
        for dx in (0.0, 1e-4, 3e-4, 5.32e-4, 8e-4):
            g = source_cross_correlation(dx, 0.0, self.D, W0, self.L)
            arg = math.pi * self.D * dx / (LAM * self.L)
            expected = (math.sin(arg) / arg) ** 2 if arg else 1.0
            assert abs(g) ** 2 == pytest.approx(expected, abs=1e-8)

    def test_point_limit(self):
        det = SpacetimePoint(2e-4, self.L, 0.0)
        ext = extended_source_propagator(1e-9, det, W0, self.L)
        pt = point_propagator(P0, det, W0, paraxial=True)
        r = math.hypot(2e-4, self.L)
        ref = self.L / (1j * LAM * r) * pt
        assert abs(ext - ref) / abs(ref) < 1e-6

    def test_mirror_symmetry(self):
        a = extended_source_propagator(self.D, SpacetimePoint(3e-4, self.L, 0.0), W0, self.L)
        b = extended_source_propagator(self.D, SpacetimePoint(-3e-4, self.L, 0.0), W0, self.L)
        assert abs(a) == pytest.approx(abs(b), rel=1e-9)

    def test_quadrature_failure(self):
        with pytest.raises(QuadratureError):
            adaptive_simpson(lambda x: np.exp(1j * 1e4 * x * x), 0.0, 10.0, rtol=1e-12, max_depth=3)

    def test_simpson_accuracy(self):
        assert adaptive_simpson(np.sin, 0.0, math.pi) == pytest.approx(2.0, rel=1e-9)

    def test_domain(self):
        with pytest.raises(DomainError):
            extended_source_propagator(0.0, SpacetimePoint(0.0, 1.0, 0.0), W0, 1.0)


class TestFreeParticle:
    M = 1.44e-25

    def test_magnitude(self):
        a = SpacetimePoint(0.0, 0.0, 0.0)
        for x in (0.0, 1e-6, 1e-3):
            k = free_particle_propagator(self.M, a, SpacetimePoint(x, 0.0, 1e-3))
            assert abs(k) == pytest.approx(math.sqrt(self.M / (2 * math.pi * HBAR * 1e-3)), rel=1e-12)

    def test_branch(self):
        k = free_particle_propagator(self.M, P0, SpacetimePoint(0.0, 0.0, 1e-3))
        assert np.angle(k) == pytest.approx(-math.pi / 4)

    def test_time_reversal(self):
        a, b = SpacetimePoint(1e-6, 0, 0.0), SpacetimePoint(4e-6, 0, 2e-3)
        fwd = free_particle_propagator(self.M, a, b)
        rev = free_particle_propagator(self.M, b, a, causal=False)
        assert rev == pytest.approx(np.conj(fwd), rel=1e-12)

    def test_causality(self):
        with pytest.raises(CausalityError):
            free_particle_propagator(self.M, SpacetimePoint(0, 0, 1.0), SpacetimePoint(0, 0, 1.0))
        with pytest.raises(DomainError):
            free_particle_propagator(0.0, P0, SpacetimePoint(0, 0, 1.0))

    def test_path_slicing(self):
        """K(a→b) = ∫ K(a→m) K(m→b) dx_m, with a weak Gaussian convergence factor."""
        m = HBAR                         # units with m/ħ = 1
        a, b = SpacetimePoint(0.0, 0, 0.0), SpacetimePoint(0.7, 0, 2.0)
        x = np.linspace(-150, 150, 400001)
        mid = SpacetimePoint(x, 0, 1.0)
        k1 = free_particle_propagator(m, a, mid)
        k2 = free_particle_propagator(m, mid, b)
        damp = np.exp(-1e-4 * x * x)
        total = np.trapezoid(k1 * k2 * damp, x)
        direct = free_particle_propagator(m, a, b)
        assert abs(total - direct) / abs(direct) < 0.01

    def test_two_pinhole_fringes(self):
        v, L, d = 10.0, 1.0, 20e-6
        lam = de_broglie_wavelength(self.M, v)
        T = L / v
        x = np.linspace(-2e-5, 2e-5, 201)
        k1 = free_particle_propagator(self.M, SpacetimePoint(-d / 2, 0, 0.0), SpacetimePoint(x, 0, T))
        k2 = free_particle_propagator(self.M, SpacetimePoint(d / 2, 0, 0.0), SpacetimePoint(x, 0, T))
        p = np.abs(k1 + k2) ** 2 / (2 * np.abs(k1) ** 2)
        assert np.allclose(p, 1 + np.cos(2 * np.pi * d * x / (L * lam)), atol=1e-9)


def test_de_broglie():
    assert de_broglie_wavelength(1.44e-25, 10) == pytest.approx(4.6e-10, rel=0.01)
    assert de_broglie_wavelength(1.44e-25, 20) == pytest.approx(de_broglie_wavelength(1.44e-25, 10) / 2)
    assert de_broglie_wavelength(3 * 1.44e-25, 10) == pytest.approx(H / (3 * 1.44e-24))
    with pytest.raises(DomainError):
        de_broglie_wavelength(1.0, 0.0)
