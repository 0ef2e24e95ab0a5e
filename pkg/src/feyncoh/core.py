"""Constants, shared domain types and small closed-form coherence utilities."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import constants as _sc


class DomainError(ValueError):
    """Raised when a physical quantity is outside its allowed domain."""


class UsageError(ValueError):
    """Raised when an operation is called with an unsupported combination of inputs."""


@dataclass(frozen=True)
class PhysicalConstants:
    h: float = _sc.h
    hbar: float = _sc.hbar
    c: float = _sc.c
    k_B: float = _sc.k


CONSTANTS = PhysicalConstants()
H = CONSTANTS.h
HBAR = CONSTANTS.hbar
C = CONSTANTS.c
K_B = CONSTANTS.k_B


def sinc(x):
    """Unnormalized sinc, sin(x)/x with sinc(0) = 1."""
    return np.sinc(np.asarray(x, dtype=float) / np.pi)


# ---------------------------------------------------------------------------
# Spectra
# ---------------------------------------------------------------------------

class SpectrumKind(str, enum.Enum):
    MONOCHROMATIC = "monochromatic"
    RECTANGULAR = "rectangular"
    GAUSSIAN = "gaussian"
    LORENTZIAN = "lorentzian"


@dataclass(frozen=True)
class Spectrum:
    """Frequency distribution of a source.

    ``width`` is the full band Δω for rectangular spectra, the standard
    deviation σ for Gaussian spectra and the FWHM Γ for Lorentzian spectra.
    All values are angular frequencies in rad/s.
    """

    kind: SpectrumKind
    omega0: float
    width: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", SpectrumKind(self.kind))
        if not (self.omega0 > 0 and math.isfinite(self.omega0)):
            raise DomainError(f"omega0 must be positive, got {self.omega0!r}")
        if self.kind is SpectrumKind.MONOCHROMATIC:
            if self.width != 0.0:
                raise DomainError("monochromatic spectrum takes no width")
            return
        if not (self.width > 0 and math.isfinite(self.width)):
            raise DomainError(f"spectral width must be positive, got {self.width!r}")
        if self.width >= self.omega0 / 10:
            raise DomainError(
                f"spectral width {self.width:g} rad/s violates the quasi-monochromatic "
                f"limit width < omega0/10 = {self.omega0 / 10:g} rad/s"
            )

    @classmethod
    def monochromatic(cls, omega0: float) -> "Spectrum":
        return cls(SpectrumKind.MONOCHROMATIC, omega0)

    @classmethod
    def rectangular(cls, omega0: float, delta_omega: float) -> "Spectrum":
        return cls(SpectrumKind.RECTANGULAR, omega0, delta_omega)

    @classmethod
    def gaussian(cls, omega0: float, sigma: float) -> "Spectrum":
        return cls(SpectrumKind.GAUSSIAN, omega0, sigma)

    @classmethod
    def lorentzian(cls, omega0: float, gamma: float) -> "Spectrum":
        return cls(SpectrumKind.LORENTZIAN, omega0, gamma)

    def coherence_time(self) -> float:
        """Integral of |g1(τ)|² over τ; infinite for a monochromatic line."""
        if self.kind is SpectrumKind.MONOCHROMATIC:
            return math.inf
        if self.kind is SpectrumKind.RECTANGULAR:
            return 2 * math.pi / self.width
        if self.kind is SpectrumKind.GAUSSIAN:
            return math.sqrt(math.pi) / self.width
        return 2.0 / self.width

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Draw angular frequencies distributed according to the spectrum."""
        if self.kind is SpectrumKind.MONOCHROMATIC:
            return np.full(size, self.omega0)
        if self.kind is SpectrumKind.RECTANGULAR:
            return self.omega0 + self.width * (rng.random(size) - 0.5)
        if self.kind is SpectrumKind.GAUSSIAN:
            return self.omega0 + self.width * rng.standard_normal(size)
        return self.omega0 + 0.5 * self.width * rng.standard_cauchy(size)


# ---------------------------------------------------------------------------
# Phase models and statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseModel:
    """How initial phases are assigned to emitted quanta.

    ``coherent`` sources share one phase per coherence interval of length
    ``tau_c``; otherwise every emission gets its own uniform phase.
    """

    coherent: bool
    tau_c: Optional[float] = None

    def __post_init__(self):
        if self.coherent:
            if self.tau_c is None or not self.tau_c > 0:
                raise DomainError("CoherentPhase requires tau_c > 0")
        elif self.tau_c is not None:
            raise DomainError("RandomPerPhoton takes no coherence interval")

    @classmethod
    def coherent_phase(cls, tau_c: float) -> "PhaseModel":
        return cls(True, tau_c)

    @classmethod
    def random_per_photon(cls) -> "PhaseModel":
        return cls(False)

    @property
    def name(self) -> str:
        return "coherent" if self.coherent else "random"

    @staticmethod
    def sample_phases(rng: np.random.Generator, size) -> np.ndarray:
        return rng.uniform(0.0, 2 * math.pi, size)

    def interval_index(self, t):
        """Coherence-interval bucket ⌊t/τ_c⌋ of time(s) ``t``."""
        if not self.coherent:
            raise DomainError("random-phase sources have no coherence intervals")
        return np.floor(np.asarray(t) / self.tau_c).astype(np.int64)


class Statistics(str, enum.Enum):
    BOSON = "boson"
    FERMION = "fermion"

    @property
    def exchange_sign(self) -> int:
        return 1 if self is Statistics.BOSON else -1


# ---------------------------------------------------------------------------
# Sources, detectors, geometry
# ---------------------------------------------------------------------------

class SourceKind(str, enum.Enum):
    THERMAL = "thermal"
    LASER = "laser"
    SINGLE_PHOTON = "single_photon"
    SUPERBUNCHING_CASCADE = "superbunching_cascade"
    SUPERBUNCHING_MODULATED = "superbunching_modulated"
    ENTANGLED_PAIR = "entangled_pair"
    COLD_ATOM_CLOUD = "cold_atom_cloud"
    BEC = "bec"


COHERENT_KINDS = frozenset({SourceKind.LASER, SourceKind.BEC})
# kinds that emit at most one quantum per coherence interval
SINGLE_EMITTER_KINDS = frozenset({SourceKind.SINGLE_PHOTON, SourceKind.ENTANGLED_PAIR})


@dataclass(frozen=True)
class SourceSpec:
    kind: SourceKind
    spectrum: Spectrum
    phase_model: Optional[PhaseModel] = None
    position: float = 0.0
    extent: float = 0.0
    intensity_weight: float = 1.0
    statistics: Statistics = Statistics.BOSON
    particle_mass: float = 0.0
    particle_speed: float = C
    stages: Optional[int] = None
    gamma_tau: Optional[Tuple[float, ...]] = None
    gamma_values: Optional[Tuple[float, ...]] = None
    label: str = ""

    def __post_init__(self):
        kind = SourceKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "statistics", Statistics(self.statistics))
        if self.phase_model is None:
            default = (
                PhaseModel.coherent_phase(self.spectrum.coherence_time()
                                          if math.isfinite(self.spectrum.coherence_time())
                                          else 1.0)
                if kind in COHERENT_KINDS
                else PhaseModel.random_per_photon()
            )
            object.__setattr__(self, "phase_model", default)
        if (kind in COHERENT_KINDS) != self.phase_model.coherent:
            want = "CoherentPhase" if kind in COHERENT_KINDS else "RandomPerPhoton"
            raise DomainError(
                f"source kind {kind.value!r} requires phase model {want}: laser and BEC "
                "sources share one phase per coherence interval, all others draw a "
                "random phase per emitted quantum"
            )
        if self.statistics is Statistics.FERMION and kind in COHERENT_KINDS:
            raise DomainError(f"fermion statistics is incompatible with kind {kind.value!r}")
        if not (self.extent >= 0 and math.isfinite(self.extent)):
            raise DomainError("source extent must be >= 0")
        if not (self.intensity_weight >= 0 and math.isfinite(self.intensity_weight)):
            raise DomainError("intensity_weight must be >= 0")
        if self.particle_mass < 0:
            raise DomainError("particle_mass must be >= 0")
        if not self.particle_speed > 0:
            raise DomainError("particle_speed must be > 0")
        if kind is SourceKind.SUPERBUNCHING_CASCADE:
            if self.stages is None or int(self.stages) != self.stages or self.stages < 1:
                raise DomainError("SuperbunchingCascade needs a positive integer 'stages'")
        elif self.stages is not None:
            raise DomainError("'stages' only applies to SuperbunchingCascade sources")
        if kind is SourceKind.SUPERBUNCHING_MODULATED:
            self._check_gamma_table()
        elif self.gamma_tau is not None or self.gamma_values is not None:
            raise DomainError("gamma table only applies to SuperbunchingModulated sources")

    def _check_gamma_table(self):
        if self.gamma_tau is None or self.gamma_values is None:
            raise DomainError("SuperbunchingModulated needs a sampled gamma(tau) table")
        tau = np.asarray(self.gamma_tau, dtype=float)
        g = np.asarray(self.gamma_values, dtype=float)
        if tau.shape != g.shape or tau.ndim != 1 or tau.size < 2:
            raise DomainError("gamma table needs matching 1-D tau/value arrays (>= 2 points)")
        if tau[0] != 0.0 or np.any(np.diff(tau) <= 0):
            raise DomainError("gamma tau samples must start at 0 and increase strictly")
        if not np.all(np.isfinite(g)) or np.any(g < 0):
            raise DomainError("gamma values must be finite and non-negative")
        if g[0] < 1.0:
            raise DomainError(f"gamma(0) must be >= 1, got {g[0]:g}")
        if abs(g[-1] - 1.0) > 1e-2:
            raise DomainError(f"gamma(tau) must tend to 1 at large tau, last sample {g[-1]:g}")

    @property
    def is_coherent(self) -> bool:
        return self.phase_model.coherent

    @property
    def max_emissions(self) -> Optional[int]:
        return 1 if self.kind in SINGLE_EMITTER_KINDS else None

    @property
    def is_massive(self) -> bool:
        return self.particle_mass > 0

    def gamma(self, tau):
        """Intensity-modulation correlation γ(τ), linear interpolation in |τ|."""
        if self.kind is not SourceKind.SUPERBUNCHING_MODULATED:
            return np.ones_like(np.asarray(tau, dtype=float))
        return np.interp(np.abs(tau), self.gamma_tau, self.gamma_values)


@dataclass(frozen=True)
class DetectorSpec:
    position: float = 0.0
    dx: float = 1e-10
    id: int = 0

    def __post_init__(self):
        if not self.dx > 0:
            raise DomainError("detector position uncertainty must be > 0")


@dataclass(frozen=True)
class Geometry:
    L: float
    wavelength: float
    paraxial: bool = True

    def __post_init__(self):
        if not self.L > 0:
            raise DomainError("L must be > 0")
        if not self.wavelength > 0:
            raise DomainError("wavelength must be > 0")

    @classmethod
    def for_photons(cls, L: float, omega0: float, paraxial: bool = True) -> "Geometry":
        return cls(L, 2 * math.pi * C / omega0, paraxial)

    @classmethod
    def for_matter(cls, L: float, mass: float, speed: float, paraxial: bool = True) -> "Geometry":
        return cls(L, H / (mass * speed), paraxial)

    @property
    def k(self) -> float:
        return 2 * math.pi / self.wavelength

    def check_extent(self, sources=(), detectors=()) -> None:
        if not self.paraxial:
            return
        extent = [abs(s.position) + s.extent / 2 for s in sources]
        extent += [abs(d.position) for d in detectors]
        if extent and max(extent) >= self.L / 10:
            raise DomainError(
                f"paraxial mode requires transverse extent < L/10 ({self.L / 10:g} m), "
                f"got {max(extent):g} m"
            )


# ---------------------------------------------------------------------------
# Closed-form utilities
# ---------------------------------------------------------------------------

def degeneracy_factor_blackbody(nu: float, T: float) -> float:
    """Mean photon number per mode of blackbody radiation, 1/(e^{hν/kT} - 1)."""
    if not (nu > 0 and T > 0):
        raise DomainError("frequency and temperature must be positive")
    x = H * nu / (K_B * T)
    if x > 700:
        warnings.warn(f"h*nu/(k_B*T) = {x:.1f} > 700; degeneracy factor underflows to 0",
                      RuntimeWarning, stacklevel=2)
        return 0.0
    return 1.0 / math.expm1(x)


def degeneracy_factor_laser(power: float, nu: float, delta_nu: float) -> float:
    """Photons per coherence time of a single-mode laser, P/(hν·Δν)."""
    if not (power > 0 and nu > 0 and delta_nu > 0):
        raise DomainError("power, frequency and linewidth must be positive")
    return power / (H * nu * delta_nu)


def coherence_time(delta_nu: float) -> float:
    if not delta_nu > 0:
        raise DomainError("bandwidth must be positive")
    return 1.0 / delta_nu


def coherence_length(delta_nu: float) -> float:
    return C * coherence_time(delta_nu)
