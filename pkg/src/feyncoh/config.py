"""Experiment configuration files: parsing, validation and serialization.

Format::

    # comment
    [experiment]
    name = thermal_hbt
    type = hbt

    [geometry]
    L = 1 m

    [source]            # repeat the section for every source
    kind = thermal
    omega0 = 3.54e15 rad/s
    delta_omega = 1 THz

Values are ``key = number [unit]``. Bare numbers are SI. Frequency units
given for an angular-frequency key are multiplied by 2π. ``preset = name``
in ``[experiment]`` loads a bundled preset first and overlays the file.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .core import (C, HBAR, DomainError, Geometry, PhaseModel, SourceKind, SourceSpec, Spectrum,
                   SpectrumKind, Statistics)

# unit -> (dimension, factor to SI)
UNITS: Dict[str, Tuple[str, float]] = {
    "s": ("time", 1.0), "ms": ("time", 1e-3), "us": ("time", 1e-6), "ns": ("time", 1e-9),
    "ps": ("time", 1e-12), "fs": ("time", 1e-15),
    "m": ("length", 1.0), "mm": ("length", 1e-3), "um": ("length", 1e-6), "nm": ("length", 1e-9),
    "Hz": ("frequency", 1.0), "kHz": ("frequency", 1e3), "MHz": ("frequency", 1e6),
    "GHz": ("frequency", 1e9), "THz": ("frequency", 1e12),
    "rad/s": ("angular", 1.0),
    "K": ("temperature", 1.0), "W": ("power", 1.0), "mW": ("power", 1e-3),
    "kg": ("mass", 1.0), "m/s": ("speed", 1.0),
}
BASE_UNIT = {"time": "s", "length": "m", "frequency": "Hz", "angular": "rad/s",
             "temperature": "K", "power": "W", "mass": "kg", "speed": "m/s"}


class ExperimentType(str, enum.Enum):
    HBT = "hbt"
    HOM = "hom"
    FIRST_ORDER = "first_order"
    MZ = "mz"
    MULTI_SOURCE = "multi_source"
    SUBWAVELENGTH = "subwavelength"
    THIRD_ORDER = "third_order"
    NTH_ORDER = "nth_order"
    DEGENERACY = "degeneracy"
    ORACLE = "oracle"
    BURT = "burt"


class Mode(str, enum.Enum):
    ANALYTIC = "analytic"
    MONTECARLO = "montecarlo"
    BOTH = "both"


def _f(dim=None, choices=None, **kw):
    """Dataclass field carrying its unit dimension / allowed values."""
    return field(metadata={"dim": dim, "choices": choices}, **kw)


@dataclass
class ExperimentSection:
    name: str = _f(default="experiment")
    type: str = _f(choices=[t.value for t in ExperimentType], default="hbt")
    mode: str = _f(choices=[m.value for m in Mode], default="both")
    seed: int = _f(default=0)
    samples: int = _f(default=20000)
    out_dir: str = _f(default="")
    domain: str = _f(choices=["temporal", "spatial"], default="temporal")
    order: int = _f(default=2)
    grid_points: int = _f(default=512)
    tau_span: float = _f(dim="time", default=0.0)    # half-width; 0 = ±10 coherence times
    x_span: float = _f(dim="length", default=0.0)    # half-width; 0 = ±10 fringe periods
    mc_points: int = _f(default=9)
    engine: str = _f(choices=["ensemble", "events"], default="ensemble")
    duration: float = _f(dim="time", default=0.1)
    rate: float = _f(dim="frequency", default=1e7)
    window: float = _f(dim="time", default=0.0)
    variant: str = _f(choices=["paper", "standard", "derived"], default="paper")
    force_distinguishable: bool = _f(default=False)
    beam_splitter: bool = _f(default=True)
    scan: str = _f(choices=["fix_one", "same_direction", "opposite_directions"], default="fix_one")
    phase_mode: str = _f(choices=["equal_fixed", "random_relative"], default="random_relative")
    n_photons: int = _f(default=10000)
    n_intervals: int = _f(default=1)
    p_simultaneous: float = _f(default=0.0)
    third_config: str = _f(choices=["thermal_hbt3_spatial", "thermal_hbt3_temporal", "fermion_hbt3",
                                    "single_photon_plus_laser", "three_single_photon",
                                    "three_single_photon_slice"], default="thermal_hbt3_temporal")
    d12: float = _f(dim="length", default=0.0)
    d23: float = _f(dim="length", default=0.0)
    separation: float = _f(dim="length", default=0.0)
    trials: int = _f(default=200)


@dataclass
class GeometrySection:
    L: float = _f(dim="length", default=1.0)
    wavelength: float = _f(dim="length", default=0.0)   # 0 = derive from the first source
    paraxial: bool = _f(default=True)


@dataclass
class SourceSection:
    kind: str = _f(choices=[k.value for k in SourceKind], default="thermal")
    spectrum: str = _f(choices=[k.value for k in SpectrumKind], default="rectangular")
    omega0: float = _f(dim="angular", default=0.0)
    wavelength: float = _f(dim="length", default=0.0)
    delta_omega: float = _f(dim="angular", default=0.0)
    phase_model: str = _f(choices=["auto", "coherent", "random"], default="auto")
    tau_c: float = _f(dim="time", default=0.0)
    position: float = _f(dim="length", default=0.0)
    extent: float = _f(dim="length", default=0.0)
    intensity_weight: float = _f(default=1.0)
    statistics: str = _f(choices=["boson", "fermion"], default="boson")
    stages: int = _f(default=0)
    mass: float = _f(dim="mass", default=0.0)
    speed: float = _f(dim="speed", default=0.0)
    gamma_peak: float = _f(default=0.0)
    gamma_width: float = _f(dim="time", default=0.0)


@dataclass
class DegeneracySection:
    temperature: float = _f(dim="temperature", default=5500.0)
    frequency: float = _f(dim="frequency", default=5.635e14)
    laser_power: float = _f(dim="power", default=1e-3)
    laser_frequency: float = _f(dim="frequency", default=4.74e14)
    linewidth: float = _f(dim="frequency", default=1.06e6)


SECTIONS = {"experiment": ExperimentSection, "geometry": GeometrySection,
            "degeneracy": DegeneracySection}


@dataclass
class ConfigError:
    line: int
    key: str
    message: str

    def __str__(self):
        where = f"line {self.line}" if self.line else "config"
        return f"{where}: {self.key}: {self.message}" if self.key else f"{where}: {self.message}"


class ConfigErrors(ValueError):
    def __init__(self, errors: List[ConfigError]):
        self.errors = errors
        super().__init__("\n".join(str(e) for e in errors))


@dataclass
class ExperimentConfig:
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    geometry: GeometrySection = field(default_factory=GeometrySection)
    sources: List[SourceSection] = field(default_factory=list)
    degeneracy: DegeneracySection = field(default_factory=DegeneracySection)
    # line numbers of the keys that were set, for error reporting
    lines: Dict[Tuple[str, int, str], int] = field(default_factory=dict, compare=False, repr=False)

    # -- building domain objects ------------------------------------------------

    def build_sources(self) -> Tuple[SourceSpec, ...]:
        return tuple(_build_source(s) for s in self.sources)

    def build_geometry(self) -> Geometry:
        g = self.geometry
        lam = g.wavelength
        if lam <= 0 and self.sources:
            s = self.sources[0]
            if s.mass > 0:
                lam = Geometry.for_matter(g.L, s.mass, s.speed or C).wavelength
            else:
                lam = 2 * math.pi * C / _omega0(s)
        return Geometry(g.L, lam, g.paraxial)

    def validate(self) -> List[ConfigError]:
        errs: List[ConfigError] = []
        e = self.experiment
        ln = lambda sec, key, idx=0: self.lines.get((sec, idx, key), self.lines.get((sec, idx, ""), 0))
        for key in ("samples", "grid_points", "mc_points", "n_photons", "n_intervals", "trials"):
            if getattr(e, key) < 1:
                errs.append(ConfigError(ln("experiment", key), key, "must be >= 1"))
        if not 1 <= e.order <= 4:
            errs.append(ConfigError(ln("experiment", "order"), "order", "must satisfy 1 <= n <= 4"))
        if not 0 <= e.p_simultaneous <= 1:
            errs.append(ConfigError(ln("experiment", "p_simultaneous"), "p_simultaneous", "must lie in [0, 1]"))
        for key in ("tau_span", "x_span", "duration", "rate", "window", "d12", "d23", "separation"):
            if getattr(e, key) < 0:
                errs.append(ConfigError(ln("experiment", key), key, "must be >= 0"))
        if self.geometry.L <= 0:
            errs.append(ConfigError(ln("geometry", "L"), "L", "must be > 0"))
        if self.geometry.wavelength < 0:
            errs.append(ConfigError(ln("geometry", "wavelength"), "wavelength", "must be > 0"))
        for key in ("temperature", "frequency", "laser_power", "laser_frequency", "linewidth"):
            if getattr(self.degeneracy, key) <= 0:
                errs.append(ConfigError(ln("degeneracy", key), key, "must be > 0"))
        for i, s in enumerate(self.sources):
            for key in ("omega0", "wavelength", "delta_omega", "tau_c", "extent", "intensity_weight",
                        "mass", "speed", "stages", "gamma_width"):
                if getattr(s, key) < 0:
                    errs.append(ConfigError(ln("source", key, i), key, f"must be >= 0 (source {i + 1})"))
            if s.omega0 <= 0 and s.wavelength <= 0 and s.mass <= 0:
                errs.append(ConfigError(ln("source", "", i), "omega0",
                                        f"source {i + 1} needs omega0 or wavelength"))
            if errs:
                continue
            try:
                _build_source(s)
            except DomainError as exc:
                key = "phase_model" if "phase model" in str(exc) else ""
                errs.append(ConfigError(ln("source", key, i), key, f"source {i + 1}: {exc}"))
        needs = _REQUIRED_SOURCES.get(ExperimentType(e.type))
        if needs is not None and len(self.sources) not in needs:
            errs.append(ConfigError(ln("experiment", "type"), "type",
                                    f"{e.type} needs {' or '.join(map(str, needs))} [source] section(s), "
                                    f"got {len(self.sources)}"))
        if not errs and self.sources:
            try:
                self.build_geometry()
            except DomainError as exc:
                errs.append(ConfigError(ln("geometry", ""), "", str(exc)))
        return errs

    # -- serialization ---------------------------------------------------------

    def serialize(self) -> str:
        out = []
        for name, obj in (("experiment", self.experiment), ("geometry", self.geometry)):
            out.append(f"[{name}]")
            out += [_format_kv(f, getattr(obj, f.name)) for f in fields(obj)]
            out.append("")
        for s in self.sources:
            out.append("[source]")
            out += [_format_kv(f, getattr(s, f.name)) for f in fields(s)]
            out.append("")
        out.append("[degeneracy]")
        out += [_format_kv(f, getattr(self.degeneracy, f.name)) for f in fields(self.degeneracy)]
        return "\n".join(out) + "\n"


_REQUIRED_SOURCES = {
    ExperimentType.HBT: (1,), ExperimentType.HOM: (2,), ExperimentType.FIRST_ORDER: (2, 3),
    ExperimentType.MZ: (1,), ExperimentType.MULTI_SOURCE: (3,), ExperimentType.SUBWAVELENGTH: (2,),
    ExperimentType.NTH_ORDER: (1,),
}


def _omega0(s: SourceSection) -> float:
    if s.omega0 > 0:
        return s.omega0
    if s.wavelength > 0:
        return 2 * math.pi * C / s.wavelength
    raise DomainError("source needs omega0 or wavelength")


def _build_source(s: SourceSection) -> SourceSpec:
    if s.mass > 0 and s.omega0 <= 0 and s.wavelength <= 0:
        # matter wave: carrier frequency only enters through the spectrum width ratio
        w0 = s.mass * (s.speed or 1.0) ** 2 / (2 * HBAR)
    else:
        w0 = _omega0(s)
    if s.delta_omega > 0:
        spec = Spectrum(SpectrumKind(s.spectrum), w0, s.delta_omega)
    else:
        spec = Spectrum.monochromatic(w0)
    kind = SourceKind(s.kind)
    pm = None
    if s.phase_model == "coherent":
        tc = s.tau_c or (spec.coherence_time() if math.isfinite(spec.coherence_time()) else 1.0)
        pm = PhaseModel.coherent_phase(tc)
    elif s.phase_model == "random":
        pm = PhaseModel.random_per_photon()
    elif s.tau_c > 0 and kind in (SourceKind.LASER, SourceKind.BEC):
        pm = PhaseModel.coherent_phase(s.tau_c)
    gt = gv = None
    if kind is SourceKind.SUPERBUNCHING_MODULATED:
        w = s.gamma_width or (spec.coherence_time() if math.isfinite(spec.coherence_time()) else 1.0)
        tau = np.linspace(0, 8 * w, 161)
        gt = tuple(tau)
        gv = tuple(1 + (s.gamma_peak - 1) * np.exp(-(tau / w) ** 2)) if s.gamma_peak else None
    return SourceSpec(kind, spec, pm, s.position, s.extent, s.intensity_weight,
                      Statistics(s.statistics), s.mass, s.speed or C,
                      s.stages or (None if kind is not SourceKind.SUPERBUNCHING_CASCADE else 0),
                      gt, gv)


def _format_kv(f, value) -> str:
    dim = f.metadata.get("dim")
    if isinstance(value, bool):
        return f"{f.name} = {'true' if value else 'false'}"
    if isinstance(value, float):
        text = repr(value)
        return f"{f.name} = {text} {BASE_UNIT[dim]}" if dim else f"{f.name} = {text}"
    return f"{f.name} = {value}"


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _convert(f, raw: str):
    """Return the typed value of ``raw`` for dataclass field ``f``; raise ValueError."""
    typ = f.type if isinstance(f.type, type) else {"str": str, "int": int, "float": float,
                                                    "bool": bool}[f.type]
    choices = f.metadata.get("choices")
    dim = f.metadata.get("dim")
    if typ is str:
        if choices and raw not in choices:
            raise ValueError(f"must be one of {', '.join(choices)}; got {raw!r}")
        return raw
    if typ is bool:
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    parts = raw.split()
    if len(parts) > 2:
        raise ValueError(f"expected 'number [unit]', got {raw!r}")
    try:
        num = float(parts[0])
    except ValueError:
        raise ValueError(f"not a number: {parts[0]!r}") from None
    if not math.isfinite(num):
        raise ValueError("value must be finite")
    if len(parts) == 2:
        unit = parts[1]
        if unit not in UNITS:
            raise ValueError(f"unknown unit {unit!r}")
        udim, factor = UNITS[unit]
        if dim is None:
            raise ValueError(f"takes no unit, got {unit!r}")
        if udim == dim:
            num *= factor
        elif dim == "angular" and udim == "frequency":
            num *= 2 * math.pi * factor
        else:
            raise ValueError(f"unit {unit!r} is a {udim}; expected a {dim} ({BASE_UNIT[dim]})")
    if typ is int:
        if num != int(num):
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(num)
    return num


def _preset_text(name: str) -> str:
    try:
        return resources.files("feyncoh.presets").joinpath(f"{name}.cfg").read_text(encoding="utf-8")
    except (FileNotFoundError, OSError):
        raise KeyError(name) from None


def list_presets() -> List[str]:
    return sorted(p.name[:-4] for p in resources.files("feyncoh.presets").iterdir()
                  if p.name.endswith(".cfg"))


def parse_text(text: str, base: Optional[ExperimentConfig] = None) -> Tuple[ExperimentConfig, List[ConfigError]]:
    """Parse config text, collecting every error with its line number."""
    cfg = dataclasses.replace(base) if base is not None else ExperimentConfig()
    if base is not None:
        cfg.experiment = dataclasses.replace(base.experiment)
        cfg.geometry = dataclasses.replace(base.geometry)
        cfg.degeneracy = dataclasses.replace(base.degeneracy)
        cfg.sources = [dataclasses.replace(s) for s in base.sources]
        cfg.lines = {}
    errors: List[ConfigError] = []
    section: Optional[str] = None
    target = None
    src_index = -1
    file_sources: List[SourceSection] = []
    preset_name = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section == "source":
                src_index += 1
                target = SourceSection()
                file_sources.append(target)
                cfg.lines[("source", src_index, "")] = lineno
            elif section in SECTIONS:
                target = getattr(cfg, section)
                cfg.lines[(section, 0, "")] = lineno
            else:
                errors.append(ConfigError(lineno, "", f"unknown section [{section}]"))
                target = None
            continue
        if "=" not in line:
            errors.append(ConfigError(lineno, "", f"expected 'key = value', got {line!r}"))
            continue
        key, raw = (p.strip() for p in line.split("=", 1))
        if section is None:
            errors.append(ConfigError(lineno, key, "key outside of any section"))
            continue
        if target is None:
            continue
        if section == "experiment" and key == "preset":
            preset_name = (raw, lineno)
            continue
        fmap = {f.name: f for f in fields(target)}
        if key not in fmap:
            errors.append(ConfigError(lineno, key, f"unknown key in [{section}]"))
            continue
        try:
            setattr(target, key, _convert(fmap[key], raw))
        except ValueError as exc:
            errors.append(ConfigError(lineno, key, str(exc)))
            continue
        cfg.lines[(section, max(src_index, 0) if section == "source" else 0, key)] = lineno
    if preset_name is not None:
        name, lineno = preset_name
        try:
            base_cfg, base_errs = parse_text(_preset_text(name))
        except KeyError:
            errors.append(ConfigError(lineno, "preset", f"unknown preset {name!r}; "
                                                        f"available: {', '.join(list_presets())}"))
        else:
            errors += base_errs
            over, more = parse_text(_strip_preset(text), base_cfg)
            return over, errors + more
    if file_sources:
        cfg.sources = file_sources
    return cfg, errors


def _strip_preset(text: str) -> str:
    return "\n".join("" if ln.split("#", 1)[0].strip().replace(" ", "").startswith("preset=") else ln
                     for ln in text.splitlines())


def parse_config(path) -> ExperimentConfig:
    """Parse and validate a config file; raise ConfigErrors listing every problem."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigErrors([ConfigError(0, "", f"cannot read {p}: {exc}")]) from None
    return parse_string(text)


def parse_string(text: str) -> ExperimentConfig:
    cfg, errors = parse_text(text)
    if not errors:
        errors = cfg.validate()
    if errors:
        raise ConfigErrors(sorted(errors, key=lambda e: e.line))
    return cfg


def load_preset(name: str) -> ExperimentConfig:
    return parse_string(_preset_text(name))
