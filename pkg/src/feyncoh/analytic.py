"""Closed-form interference and coherence patterns.

These evaluators are the reference against which the path engine and the
Monte Carlo engines are checked. Functions return a ``PatternSamples``
holding the grid, the values and how they were normalized.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import (DomainError, Geometry, SourceKind, SourceSpec, Spectrum, SpectrumKind,
                   Statistics, UsageError, sinc)
from .propagators import spectral_envelope


class Normalization(str, enum.Enum):
    RAW = "raw"
    BASELINE_ONE = "baseline_one"


@dataclass
class PatternSamples:
    """Values of a pattern sampled on one or more grid axes.

    ``axes`` holds one strictly increasing array per dimension; ``values``
    has shape ``tuple(len(a) for a in axes)``.
    """

    axis: str                      # "time", "position", "position_pair", ...
    axes: Tuple[np.ndarray, ...]
    values: np.ndarray
    normalization: Normalization = Normalization.BASELINE_ONE
    labels: Tuple[str, ...] = ()
    meta: Dict = field(default_factory=dict)

    def __post_init__(self):
        self.axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        self.values = np.asarray(self.values, dtype=float)
        for a in self.axes:
            if a.ndim != 1 or (a.size > 1 and np.any(np.diff(a) <= 0)):
                raise ValueError("grid axes must be strictly increasing 1-D arrays")
        if self.values.shape != tuple(a.size for a in self.axes):
            raise ValueError("values shape does not match the grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("pattern values must be finite")

    @property
    def grid(self) -> np.ndarray:
        return self.axes[0]

    def visibility(self) -> float:
        hi, lo = float(self.values.max()), float(self.values.min())
        return (hi - lo) / (hi + lo) if hi + lo > 0 else 0.0


def _pattern(axis, grid, values, norm=Normalization.BASELINE_ONE, label="", **meta):
    grid = np.asarray(grid, dtype=float)
    return PatternSamples(axis, (grid,), np.broadcast_to(values, grid.shape).copy(), norm,
                          (label or axis,), meta)


def default_time_grid(spectrum: Spectrum, n: int = 512, units: float = 10.0) -> np.ndarray:
    tc = spectrum.coherence_time()
    if not math.isfinite(tc):
        tc = 2 * np.pi / spectrum.omega0
    return np.linspace(-units * tc, units * tc, n)


# ---------------------------------------------------------------------------
# First order
# ---------------------------------------------------------------------------

def mz_first_order(spectrum: Spectrum, tau, variant: str = "paper", t2: float = 0.0) -> PatternSamples:
    """Mach-Zehnder single-detector pattern versus arm delay τ = t1 - t2.

    Monochromatic light gives 1 + cos(ω0τ). For a Gaussian spectrum
    ``variant="paper"`` uses the published envelope
    e^{-σ²(t1²+t2²)/2} / (e^{-σ²t1²} + e^{-σ²t2²}) with t1 = t2 + τ, and
    ``variant="standard"`` uses 1 + Re g1(τ).
    """
    tau = np.asarray(tau, dtype=float)
    if variant not in ("paper", "standard"):
        raise UsageError("variant must be 'paper' or 'standard'")
    if spectrum.kind is SpectrumKind.MONOCHROMATIC:
        vals = 1 + np.cos(spectrum.omega0 * tau)
    elif variant == "paper" and spectrum.kind is SpectrumKind.GAUSSIAN:
        s2 = spectrum.width ** 2
        t1 = t2 + tau
        env = np.exp(-s2 * (t1 ** 2 + t2 ** 2) / 2) / (np.exp(-s2 * t1 ** 2) + np.exp(-s2 * t2 ** 2))
        vals = 1 + env * np.cos(spectrum.omega0 * tau)
    else:
        vals = 1 + np.real(spectral_envelope(spectrum, tau))
    return _pattern("time", tau, vals, Normalization.RAW, "tau_s", variant=variant)


def _first_order_k(geometry: Geometry) -> float:
    return 2 * np.pi / (geometry.wavelength * geometry.L)


@dataclass
class FirstOrderResult:
    pattern: PatternSamples
    visibility: float


LASER_LIKE = {SourceKind.LASER, SourceKind.BEC}
THERMAL_LIKE = {SourceKind.THERMAL, SourceKind.COLD_ATOM_CLOUD}


def multi_beam_first_order(sources: Sequence[SourceSpec], geometry: Geometry, x,
                           n_detected: int = 1, phases: Optional[Sequence[float]] = None,
                           n_simultaneous: Optional[int] = None, long_average: bool = False,
                           common_phase: float = 0.0) -> FirstOrderResult:
    """Single-detector pattern of two or three independent beams.

    Two lasers: 1 + cos(2πd x/(λL) + Δφ) while the relative phase holds
    (flat after ``long_average``). Two thermal beams after N photons:
    1 + cos(...)/√N. Two single-photon sources with N2 simultaneous
    emissions: 1 + (N2/N)(1/√N2) cos(...). Three lasers follow the printed
    three-beam expression including its d/2 offsets.
    """
    x = np.asarray(x, dtype=float)
    if len(sources) not in (2, 3):
        raise UsageError("first-order patterns are implemented for 2 or 3 sources")
    if n_detected < 1:
        raise DomainError("n_detected must be >= 1")
    kinds = {s.kind for s in sources}
    q = _first_order_k(geometry)
    pos = sorted(s.position for s in sources)
    ph = list(phases) if phases is not None else [0.0] * len(sources)

    if len(sources) == 3:
        if not kinds <= LASER_LIKE:
            raise UsageError("three-beam first order is implemented for laser-like sources")
        d12, d23 = pos[1] - pos[0], pos[2] - pos[1]
        d13 = d12 + d23
        if long_average:
            vals = np.full_like(x, 1.5)
        else:
            vals = (1.5 + np.cos(q * d12 * (x - d23 / 2) + ph[0] - ph[1])
                    + np.cos(q * d23 * (x + d12 / 2) + ph[1] - ph[2])
                    + np.cos(q * d13 * x + ph[0] - ph[2]))
        pat = _pattern("position", x, vals, Normalization.RAW, "x_m", d12=d12, d23=d23)
        return FirstOrderResult(pat, pat.visibility())

    d = pos[1] - pos[0]
    arg = q * d * x
    if kinds <= LASER_LIKE:
        V = 0.0 if long_average else 1.0
        vals = 1 + V * np.cos(arg + ph[0] - ph[1])
    elif kinds <= THERMAL_LIKE:
        V = 1 / math.sqrt(n_detected)
        vals = 1 + V * np.cos(arg + common_phase)
    elif kinds == {SourceKind.SINGLE_PHOTON}:
        n2 = 0 if n_simultaneous is None else int(n_simultaneous)
        if not 0 <= n2 <= n_detected:
            raise DomainError("n_simultaneous must lie in [0, n_detected]")
        V = (n2 / n_detected) / math.sqrt(n2) if n2 > 0 else 0.0
        vals = 1 + V * np.cos(arg + common_phase)
    else:
        raise UsageError(f"unsupported source combination {sorted(k.value for k in kinds)}")
    return FirstOrderResult(_pattern("position", x, vals, Normalization.RAW, "x_m", d=d), V)


# ---------------------------------------------------------------------------
# Second order, one beam
# ---------------------------------------------------------------------------

def _spatial_arg(size: float, L: float, wavelength: float, dx):
    return np.pi * size * np.asarray(dx, dtype=float) / (L * wavelength)


def _exchange(domain: str, grid, delta_omega=None, size=None, L=None, wavelength=None):
    """Squared exchange term sinc²: temporal Δωτ/2, spatial π D Δx/(λL)."""
    if domain == "temporal":
        if delta_omega is None or not delta_omega > 0:
            raise DomainError("temporal patterns need delta_omega > 0")
        return sinc(delta_omega * np.asarray(grid, dtype=float) / 2)
    if domain == "spatial":
        if None in (size, L, wavelength) or not (size > 0 and L > 0 and wavelength > 0):
            raise DomainError("spatial patterns need size, L and wavelength > 0")
        return sinc(_spatial_arg(size, L, wavelength, grid))
    raise UsageError("domain must be 'temporal' or 'spatial'")


_HBT_KINDS = {"thermal", "laser", "superbunching_cascade", "superbunching_modulated",
              "cold_atom_cloud", "fermion_beam", "bec"}


def hbt_second_order(kind, domain: str, grid, *, delta_omega=None, size=None, L=None,
                     wavelength=None, stages: Optional[int] = None, source: Optional[SourceSpec] = None,
                     statistics=Statistics.BOSON) -> PatternSamples:
    """Normalized two-detector correlation of one beam.

    Thermal and cold-atom beams: 1 + sinc²; laser and BEC: 1; a cascade of
    N random stages: (1 + sinc²)^N; intensity-modulated: γ(τ)(1 + sinc²);
    fermions: 1 - sinc².
    """
    name = kind.value if isinstance(kind, SourceKind) else str(kind)
    if name in ("thermal", "cold_atom_cloud") and Statistics(statistics) is Statistics.FERMION:
        name = "fermion_beam"
    if name not in _HBT_KINDS:
        raise UsageError(f"unknown HBT source kind {name!r}")
    grid = np.asarray(grid, dtype=float)
    label = "tau_s" if domain == "temporal" else "dx_m"
    axis = "time" if domain == "temporal" else "position"
    if name in ("laser", "bec"):
        if domain not in ("temporal", "spatial"):
            raise UsageError("domain must be 'temporal' or 'spatial'")
        return _pattern(axis, grid, 1.0, label=label, kind=name)
    s2 = _exchange(domain, grid, delta_omega, size, L, wavelength) ** 2
    if name in ("thermal", "cold_atom_cloud"):
        vals = 1 + s2
    elif name == "fermion_beam":
        vals = 1 - s2
    elif name == "superbunching_cascade":
        n = stages if stages is not None else (source.stages if source else None)
        if n is None or int(n) != n or n < 1:
            raise DomainError("cascade needs a positive integer stage count")
        vals = (1 + s2) ** int(n)
    else:
        if source is None or source.kind is not SourceKind.SUPERBUNCHING_MODULATED:
            raise UsageError("modulated superbunching needs its SourceSpec (gamma table)")
        if domain != "temporal":
            raise UsageError("modulated superbunching is a temporal effect")
        vals = source.gamma(grid) * (1 + s2)
    return _pattern(axis, grid, vals, label=label, kind=name)


# ---------------------------------------------------------------------------
# Second order, two beams (HOM)
# ---------------------------------------------------------------------------

def _norm_kind(k):
    return k.value if isinstance(k, SourceKind) else str(k)


def hom_second_order(src1, src2, statistics=Statistics.BOSON, domain: str = "temporal", grid=None, *,
                     delta_omega=None, size=None, L=None, wavelength=None, separation=None,
                     variant: str = "paper") -> PatternSamples:
    """Normalized coincidence pattern behind a 50:50 beam splitter.

    Supported pairs: entangled pair, two single-particle sources, two lasers
    (Δω is the detuning), laser with thermal (spatial; ``size`` is the
    thermal source length, ``separation`` the laser offset), two BECs,
    and two single fermions.
    """
    a, b = sorted((_norm_kind(src1), _norm_kind(src2)))
    stats = Statistics(statistics)
    grid = np.asarray(grid, dtype=float)
    label = "tau_s" if domain == "temporal" else "dx_m"
    axis = "time" if domain == "temporal" else "position"
    pair = (a, b)
    if stats is Statistics.FERMION:
        if pair not in (("single_photon", "single_photon"), ("cold_atom_cloud", "cold_atom_cloud")):
            raise UsageError("fermion HOM is implemented for two single-particle sources")
        s = _exchange(domain, grid, delta_omega, size, L, wavelength)
        return _pattern(axis, grid, 1 + s ** 2, label=label, pair="fermion")
    if pair in (("entangled_pair", "entangled_pair"), ("single_photon", "single_photon")):
        s = _exchange(domain, grid, delta_omega, size, L, wavelength)
        return _pattern(axis, grid, 1 - s ** 2, label=label, pair=f"{a}+{b}")
    if pair == ("laser", "laser"):
        if domain != "temporal":
            raise UsageError("two-laser beating is a temporal pattern")
        if delta_omega is None:
            raise DomainError("two-laser beating needs the detuning delta_omega")
        return _pattern(axis, grid, 1 - 0.5 * np.cos(delta_omega * grid), label=label, pair="laser+laser")
    if pair == ("bec", "bec"):
        s = _exchange(domain, grid, delta_omega, size, L, wavelength)
        return _pattern(axis, grid, 1 - 0.5 * s ** 2, label=label, pair="bec+bec")
    if pair == ("laser", "thermal"):
        if domain != "spatial":
            raise UsageError("laser+thermal pattern is given in the spatial domain")
        if separation is None:
            raise DomainError("laser+thermal needs the laser-to-thermal separation")
        s = _exchange(domain, grid, size=size, L=L, wavelength=wavelength)
        c = np.cos(2 * np.pi * separation * grid / (L * wavelength))
        if variant == "paper":
            vals = 1 + 0.25 * s ** 2 * (1 - 2 * c)
        elif variant == "derived":
            vals = 1 + 0.25 * s ** 2 - 0.5 * s * c
        else:
            raise UsageError("variant must be 'paper' or 'derived'")
        return _pattern(axis, grid, vals, label=label, pair="laser+thermal", variant=variant)
    raise UsageError(f"unsupported HOM pair {pair}")


def hom_dip_width(pattern: PatternSamples, level: float = 0.5) -> float:
    """Full width of the central dip where the pattern crosses ``level``."""
    x, y = pattern.grid, pattern.values
    i0 = int(np.argmin(np.abs(x)))

    def crossing(step):
        i = i0
        while 0 <= i + step < x.size and y[i + step] < level:
            i += step
        j = i + step
        if not 0 <= j < x.size:
            raise ValueError("dip does not reach the requested level within the grid")
        return x[i] + (level - y[i]) * (x[j] - x[i]) / (y[j] - y[i])

    return crossing(1) - crossing(-1)


# ---------------------------------------------------------------------------
# Three sources, second order
# ---------------------------------------------------------------------------

def multi_source_second_order(kind, d12: float, d23: float, geometry: Geometry, dx) -> PatternSamples:
    """Three collinear sources, two detectors, as printed (raw, unnormalized)."""
    name = _norm_kind(kind)
    base = {"single_photon": 3.0, "laser": 4.5}.get(name)
    if base is None:
        raise UsageError("three-source pattern is defined for single-photon or laser sources")
    dx = np.asarray(dx, dtype=float)
    q = _first_order_k(geometry)
    d13 = d12 + d23
    vals = (base + np.cos(q * d12 * (dx - d23 / 2)) + np.cos(q * d13 * dx)
            + np.cos(q * d23 * (dx + d12 / 2)))
    return _pattern("position", dx, vals, Normalization.RAW, "dx_m", kind=name, baseline=base)


# ---------------------------------------------------------------------------
# Subwavelength
# ---------------------------------------------------------------------------

class Scan(str, enum.Enum):
    FIX_ONE = "fix_one"
    SAME_DIRECTION = "same_direction"
    OPPOSITE_DIRECTIONS = "opposite_directions"


class PhaseMode(str, enum.Enum):
    EQUAL_FIXED = "equal_fixed"
    RANDOM_RELATIVE = "random_relative"


# (coefficient, c1, c2): term coefficient * cos(q*(c1*x1 + c2*x2)), q = 2πd/(λL)
_SUB_TERMS = [(4.0, 0, 0), (4.0, 0, 1), (4.0, 1, 0), (2.0, 1, 1), (2.0, 1, -1)]


@dataclass
class SubwavelengthResult:
    terms: List[Tuple[float, int, int]]
    effective_period: float
    spatial_frequency: float  # q = 2πd/(λL)

    def evaluate(self, x1, x2) -> np.ndarray:
        x1, x2 = np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)
        out = 0.0
        for c, a, b in self.terms:
            out = out + c * np.cos(self.spatial_frequency * (a * x1 + b * x2))
        return out


def subwavelength_decomposition(scan, phase_mode, d: float, geometry: Geometry) -> SubwavelengthResult:
    """Surviving terms of the two-laser two-detector expansion and the fringe period.

    The effective period is that of the highest spatial frequency left
    along the scan line (x2 fixed, x2 = x1, or x2 = -x1); infinite when
    only constants survive.
    """
    scan, mode = Scan(scan), PhaseMode(phase_mode)
    q = 2 * np.pi * d / (geometry.wavelength * geometry.L)
    terms = list(_SUB_TERMS)
    if mode is PhaseMode.RANDOM_RELATIVE:
        terms = [t for t in terms if (t[1], t[2]) in ((0, 0), (1, -1))]
    best = 0
    for c, a, b in terms:
        if (a, b) == (0, 0):
            continue
        if scan is Scan.FIX_ONE:
            m = abs(a)
        elif scan is Scan.SAME_DIRECTION:
            m = abs(a + b)
        else:
            m = abs(a - b)
        best = max(best, m)
    period = math.inf if best == 0 else 2 * np.pi / (q * best)
    return SubwavelengthResult(terms, period, q)


# ---------------------------------------------------------------------------
# Third order
# ---------------------------------------------------------------------------

class ThirdOrderConfig(str, enum.Enum):
    THERMAL_SPATIAL = "thermal_hbt3_spatial"
    THERMAL_TEMPORAL = "thermal_hbt3_temporal"
    FERMION = "fermion_hbt3"
    SINGLE_PHOTON_PLUS_LASER = "single_photon_plus_laser"
    THREE_SINGLE_PHOTON = "three_single_photon"
    THREE_SINGLE_PHOTON_SLICE = "three_single_photon_slice"


def thermal_g3(s12, s23, s31, sign: int = 1):
    """1 ± (s12² + s23² + s31²) + 2 s12 s23 s31 from pairwise exchange terms."""
    return 1 + sign * (s12 ** 2 + s23 ** 2 + s31 ** 2) + 2 * s12 * s23 * s31


def third_order_value(config, x1, x2, x3=None, *, delta_omega=None, size=None, L=None,
                      wavelength=None, d=None, d12=None, d23=None, I1=1.0, I2=1.0):
    """Pointwise evaluation of the third-order expressions (broadcasting)."""
    cfg = ThirdOrderConfig(config)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    x3 = x2 if x3 is None else np.asarray(x3, dtype=float)
    if cfg in (ThirdOrderConfig.THERMAL_TEMPORAL, ThirdOrderConfig.FERMION):
        if delta_omega is None or not delta_omega > 0:
            raise DomainError("temporal third order needs delta_omega > 0")
        f = lambda u: sinc(delta_omega * u / 2)
        sign = -1 if cfg is ThirdOrderConfig.FERMION else 1
        return thermal_g3(f(x1 - x2), f(x2 - x3), f(x3 - x1), sign)
    if cfg is ThirdOrderConfig.THERMAL_SPATIAL:
        f = lambda u: sinc(_spatial_arg(size, L, wavelength, u))
        return thermal_g3(f(x1 - x2), f(x2 - x3), f(x3 - x1))
    q = 2 * np.pi / (L * wavelength)
    if cfg is ThirdOrderConfig.SINGLE_PHOTON_PLUS_LASER:
        c = (np.cos(q * d * (x1 - x2)) + np.cos(q * d * (x2 - x3)) + np.cos(q * d * (x1 - x3)))
        return 3 * I1 ** 2 * (3 + 2 * c) + I2 ** 2
    if cfg is ThirdOrderConfig.THREE_SINGLE_PHOTON:
        d13 = d12 + d23
        A = lambda u: np.cos(q * d13 * u)
        B = lambda u: np.cos(q * d12 * (u - d23 / 2))
        Cc = lambda u: np.cos(q * d23 * (u + d12 / 2))
        return (6 + 6 * np.cos(q * d12 * (x1 - x2)) + 6 * np.cos(q * d13 * (x1 - x3))
                + 6 * np.cos(q * d23 * (x2 - x3))
                + 2 * A(x1) * B(x2) * Cc(x3) + 2 * A(x1) * B(x3) * Cc(x2)
                + 2 * A(x2) * B(x1) * Cc(x3) + 2 * A(x2) * B(x3) * Cc(x1)
                + 2 * A(x3) * B(x1) * Cc(x2) + 2 * A(x3) * B(x2) * Cc(x1))
    # slice: d12 = d23 = d, x3 = x2
    B = lambda u: np.cos(q * d * (u - d / 2))
    Cc = lambda u: np.cos(q * d * (u + d / 2))
    A2 = lambda u: np.cos(2 * q * d * u)
    return (1 + np.cos(q * d * (x1 - x2))
            + A2(x1) * B(x2) * Cc(x2) / 3
            + A2(x2) * B(x1) * Cc(x2) / 3
            + A2(x2) * B(x2) * Cc(x1) / 3)


def third_order_pattern(config, axis1, axis2, **params) -> PatternSamples:
    """Two-dimensional third-order pattern.

    Thermal, fermion and single-photon-plus-laser configs are laid out
    over (x1 - x2, x1 - x3) or (t1 - t2, t2 - t3); the three-single-photon
    configs over absolute (x1, x2), with x3 from ``params`` or x3 = x2.
    """
    cfg = ThirdOrderConfig(config)
    a1 = np.asarray(axis1, dtype=float)
    a2 = np.asarray(axis2, dtype=float)
    U, W = np.meshgrid(a1, a2, indexing="ij")
    norm = Normalization.BASELINE_ONE
    if cfg in (ThirdOrderConfig.THERMAL_TEMPORAL, ThirdOrderConfig.FERMION):
        # t1 - t2 = U, t2 - t3 = W
        vals = third_order_value(cfg, U, 0.0, -W, **params)
        labels = ("t1_minus_t2_s", "t2_minus_t3_s")
    elif cfg in (ThirdOrderConfig.THERMAL_SPATIAL, ThirdOrderConfig.SINGLE_PHOTON_PLUS_LASER):
        vals = third_order_value(cfg, 0.0, -U, -W, **params)
        labels = ("x1_minus_x2_m", "x1_minus_x3_m")
        if cfg is ThirdOrderConfig.SINGLE_PHOTON_PLUS_LASER:
            norm = Normalization.RAW
    else:
        x3 = params.pop("x3", None)
        vals = third_order_value(cfg, U, W, W if x3 is None else x3, **params)
        labels = ("x1_m", "x2_m")
        norm = Normalization.RAW
    return PatternSamples("position_pair" if "x" in labels[0] else "time_pair", (a1, a2), vals,
                          norm, labels, {"config": cfg.value})


def burt_ratio() -> float:
    """Thermal-boson over BEC third-order coincidence ratio, g3_thermal(0)/g3_BEC(0)."""
    g3_thermal = float(thermal_g3(1.0, 1.0, 1.0))
    g3_bec = 1.0
    return g3_thermal / g3_bec
