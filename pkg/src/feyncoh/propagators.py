"""Single-particle propagators and spectral envelopes.

Global prefactors are fixed to 1 except where a closed form is requested
explicitly (free particles); every physical output downstream is a
normalized probability, so constants cancel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import C, H, HBAR, DomainError, Spectrum, SpectrumKind, sinc


class CausalityError(ValueError):
    """Detection precedes emission (or the interval is empty)."""


class SingularityError(ValueError):
    """Emission and detection points coincide."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class SpacetimePoint:
    x: float = 0.0  # m, transverse
    z: float = 0.0  # m, longitudinal
    t: float = 0.0  # s

    def __post_init__(self):
        if not all(np.all(np.isfinite(v)) for v in (self.x, self.z, self.t)):
            raise DomainError("spacetime coordinates must be finite")


def point_propagator(emit: SpacetimePoint, detect: SpacetimePoint, omega,
                     k=None, paraxial: bool = False):
    """Point-source kernel e^{i(k r - ω Δt)} / r.

    ``k`` defaults to ω/c. With ``paraxial`` the phase uses the Fresnel
    expansion r ≈ Δz + Δx²/(2Δz) while the magnitude keeps 1/r. Coordinates
    and ω may be numpy arrays; they broadcast.
    """
    omega = np.asarray(omega, dtype=float)
    k = omega / C if k is None else np.asarray(k, dtype=float)
    dx = np.asarray(detect.x, dtype=float) - emit.x
    dz = np.asarray(detect.z, dtype=float) - emit.z
    dt = np.asarray(detect.t, dtype=float) - emit.t
    if np.any(dt < 0):
        raise CausalityError("detection time precedes emission time")
    r = np.hypot(dx, dz)
    if np.any(r == 0):
        raise SingularityError("zero separation between emission and detection")
    if paraxial:
        if np.any(dz <= 0):
            raise DomainError("paraxial propagation needs a positive longitudinal distance")
        path = dz + dx * dx / (2 * dz)
    else:
        path = r
    return np.exp(1j * (k * path - omega * dt)) / r


def spectral_envelope(spectrum: Spectrum, tau):
    """Normalized ∫ f(ω) e^{-iωτ} dω, unit magnitude at τ = 0."""
    tau = np.asarray(tau, dtype=float)
    carrier = np.exp(-1j * spectrum.omega0 * tau)
    kind = spectrum.kind
    if kind is SpectrumKind.MONOCHROMATIC:
        return carrier
    if kind is SpectrumKind.RECTANGULAR:
        return carrier * sinc(spectrum.width * tau / 2)
    if kind is SpectrumKind.GAUSSIAN:
        return carrier * np.exp(-0.5 * (spectrum.width * tau) ** 2)
    return carrier * np.exp(-0.5 * spectrum.width * np.abs(tau))


def free_particle_propagator(m: float, a: SpacetimePoint, b: SpacetimePoint,
                             causal: bool = True):
    """Free-particle kernel √(m/(2πiħT)) exp(i m Δx² / (2ħT)).

    √i is taken as e^{iπ/4}. ``causal=False`` continues the kernel to T < 0
    with √(-i) = e^{-iπ/4}, so that K(b, a) = conj(K(a, b)).
    """
    if not m > 0:
        raise DomainError("mass must be positive")
    T = np.asarray(b.t, dtype=float) - a.t
    if causal and np.any(T <= 0):
        raise CausalityError("free-particle propagator needs t_b > t_a")
    if np.any(T == 0):
        raise CausalityError("free-particle propagator is singular at T = 0")
    dx = np.asarray(b.x, dtype=float) - a.x
    branch = np.where(T > 0, np.exp(-1j * np.pi / 4), np.exp(1j * np.pi / 4))
    mag = np.sqrt(m / (2 * np.pi * HBAR * np.abs(T)))
    return mag * branch * np.exp(1j * m * dx * dx / (2 * HBAR * T))


def de_broglie_wavelength(m: float, v: float) -> float:
    if not (m > 0 and v > 0):
        raise DomainError("mass and speed must be positive")
    return H / (m * v)


# ---------------------------------------------------------------------------
# Extended sources
# ---------------------------------------------------------------------------

def adaptive_simpson(f: Callable[[float], complex], a: float, b: float,
                     rtol: float = 1e-9, max_depth: int = 30) -> complex:
    """Adaptive Simpson quadrature of a complex integrand.

    Raises QuadratureError if any subinterval still changes by more than
    ``rtol`` (relative to the running integral scale) at ``max_depth``.
    """
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6 * (fa + 4 * fm + fb)
    scale = max(abs(whole), (b - a) * max(abs(fa), abs(fm), abs(fb)), 1e-300)
    failed = []

    def recurse(a, fa, m, fm, b, fb, whole, depth):
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6 * (fa + 4 * flm + fm)
        right = (b - m) / 6 * (fm + 4 * frm + fb)
        delta = left + right - whole
        if abs(delta) <= 15 * rtol * scale * (b - a) / span:
            return left + right + delta / 15
        if depth >= max_depth:
            failed.append((a, b))
            return left + right + delta / 15
        return (recurse(a, fa, lm, flm, m, fm, left, depth + 1)
                + recurse(m, fm, rm, frm, b, fb, right, depth + 1))

    span = b - a
    # force a few initial splits so oscillatory integrands are not accepted early
    n0 = 8
    edges = np.linspace(a, b, n0 + 1)
    total = 0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        flo, fhi = f(lo), f(hi)
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        w = (hi - lo) / 6 * (flo + 4 * fmid + fhi)
        total += recurse(lo, flo, mid, fmid, hi, fhi, w, 1)
    if failed:
        raise QuadratureError(
            f"adaptive Simpson did not converge on {len(failed)} subinterval(s) "
            f"at depth {max_depth} (rtol={rtol:g})"
        )
    return total


def _uniform(_x):
    return 1.0


def extended_source_propagator(d: float, detect: SpacetimePoint, omega: float, L: float,
                               weight: Optional[Callable[[float], float]] = None,
                               paraxial: bool = True, rtol: float = 1e-9,
                               max_depth: int = 30) -> complex:
    """Green-function amplitude of a 1-D source of length ``d`` centred on x = 0.

    Evaluates (L/(iλ)) ∫ s(x_s) e^{ik r}/r² dx_s / ∫ s(x_s) dx_s. Normalizing
    by the source weight makes the d → 0 limit equal (L/(iλ r)) times the
    point propagator.
    """
    if not d > 0:
        raise DomainError("source extent must be positive")
    if not L > 0:
        raise DomainError("L must be positive")
    s = weight or _uniform
    k = omega / C
    lam = 2 * np.pi / k
    x1 = float(detect.x)

    def integrand(xs):
        dx = x1 - xs
        r = math.hypot(dx, L)
        phase_path = L + dx * dx / (2 * L) if paraxial else r
        return s(xs) * np.exp(1j * k * phase_path) / (r * r)

    num = adaptive_simpson(integrand, -d / 2, d / 2, rtol, max_depth)
    norm = adaptive_simpson(lambda xs: complex(s(xs)), -d / 2, d / 2, rtol, max_depth).real
    if norm <= 0:
        raise DomainError("source weight must have positive integral")
    return (L / (1j * lam)) * num / norm * np.exp(-1j * omega * float(detect.t))


def source_cross_correlation(x1: float, x2: float, d: float, omega: float, L: float,
                             weight: Optional[Callable[[float], float]] = None,
                             rtol: float = 1e-9, max_depth: int = 30) -> complex:
    """Normalized ∫ s K(x_s→x1) K*(x_s→x2) dx_s / ∫ s over a 1-D source.

    Its squared magnitude is the exchange term of the two-detector thermal
    correlation; for a uniform source it is sinc²(π d (x1 - x2)/(λ L)).
    """
    s = weight or _uniform
    k = omega / C

    def integrand(xs):
        p1 = (x1 - xs) ** 2 / (2 * L)
        p2 = (x2 - xs) ** 2 / (2 * L)
        return s(xs) * np.exp(1j * k * (p1 - p2))

    num = adaptive_simpson(integrand, -d / 2, d / 2, rtol, max_depth)
    norm = adaptive_simpson(lambda xs: complex(s(xs)), -d / 2, d / 2, rtol, max_depth).real
    return num / norm
