"""Datasets behind the reproduced figures, each with shape checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from . import analytic as an
from . import montecarlo as mc
from .core import Geometry, SourceKind, SourceSpec, Spectrum, UsageError

FIGURES = ("fig4", "fig6", "fig9", "fig12", "fig19", "fig23", "fig29a", "fig32", "fig35")

OMEGA0 = 3.5e15          # rad/s, visible light
DELTA_OMEGA = 1e12       # rad/s, base bandwidth for the multi-bandwidth figures


@dataclass
class FigureData:
    figure: str
    tables: Dict[str, Dict[str, np.ndarray]]
    checks: List[Tuple[str, bool]] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.checks)

    def check(self, text: str, ok) -> None:
        self.checks.append((text, bool(ok)))

    def write(self, out_dir) -> List[Path]:
        from .runner import write_csv
        d = Path(out_dir) / self.figure
        d.mkdir(parents=True, exist_ok=True)
        files = []
        for name, cols in self.tables.items():
            p = d / f"{name}.csv"
            write_csv(p, cols)
            files.append(p)
        lines = [f"{'PASS' if ok else 'FAIL'}  {text}" for text, ok in self.checks] + self.notes
        (d / "checks.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
        return files


def _even(y, tol=1e-9) -> bool:
    return bool(np.allclose(y, y[::-1], atol=tol, rtol=0))


def fig4() -> FigureData:
    """Single-photon Mach-Zehnder pattern, Gaussian spectrum."""
    sigma = OMEGA0 / 40
    spec = Spectrum.gaussian(OMEGA0, sigma)
    tau = np.linspace(-8 / sigma, 8 / sigma, 4001)
    paper = an.mz_first_order(spec, tau, "paper").values
    std = an.mz_first_order(spec, tau, "standard").values
    f = FigureData("fig4", {"mz": {"tau_s": tau, "paper": paper, "standard": std}})
    i0 = tau.size // 2
    f.check("paper form peaks at zero delay with 1.5", abs(paper[i0] - 1.5) < 1e-12 and paper.max() <= paper[i0] + 1e-12)
    f.check("standard form peaks at zero delay with 2", abs(std[i0] - 2.0) < 1e-12)
    f.check("both even in delay", _even(paper) and _even(std))
    f.check("fringes wash out to 1 at large delay", abs(paper[0] - 1) < 1e-3 and abs(std[0] - 1) < 1e-3)
    f.check("values within [0, 2]", paper.min() >= 0 and std.min() >= -1e-12 and std.max() <= 2 + 1e-12)
    return f


def visibility_table(ns=(100, 1000, 10000), seeds: int = 100, seed0: int = 0, L=1.0,
                     wavelength=532e-9, d=1e-3, bins=64) -> Dict[str, np.ndarray]:
    """Median fitted visibility over ``seeds`` runs for each photon count."""
    med, q1, q3 = [], [], []
    for n in ns:
        vs = [mc.simulate_first_order(mc.FirstOrderConfig(SourceKind.THERMAL, int(n), d, L, wavelength,
                                                          bins=bins, seed=seed0 + s)).visibility
              for s in range(seeds)]
        med.append(np.median(vs))
        q1.append(np.percentile(vs, 25))
        q3.append(np.percentile(vs, 75))
    ns = np.asarray(ns, dtype=float)
    return {"n_photons": ns, "median_visibility": np.array(med), "q25": np.array(q1),
            "q75": np.array(q3), "inv_sqrt_n": 1 / np.sqrt(ns)}


def fig6(seeds: int = 100, seed0: int = 0) -> FigureData:
    """First-order visibility of two thermal beams versus detected photons."""
    t = visibility_table(seeds=seeds, seed0=seed0)
    f = FigureData("fig6", {"visibility": t})
    ratio = t["median_visibility"] / t["inv_sqrt_n"]
    slope = np.polyfit(np.log(t["n_photons"]), np.log(t["median_visibility"]), 1)[0]
    f.check("median V within 30% of 1/sqrt(N) at every N", np.all(np.abs(ratio - 1) < 0.3))
    f.check(f"log-log slope {slope:.3f} within -0.5 +/- 0.05", abs(slope + 0.5) < 0.05)
    f.check("median V decreases with N", np.all(np.diff(t["median_visibility"]) < 0))
    f.notes.append(f"{seeds} seeds per N; visibility fitted with the fringe frequency fixed")
    return f


def fig9() -> FigureData:
    """Transient three-laser first-order pattern, unequal and equal spacing."""
    L, lam = 1.0, 500e-9
    d = math.sqrt(2 * lam * L)             # d²/(λL) = 2 puts the offsets on whole periods
    du = math.sqrt(1.5 * lam * L)          # d12 = du, d23 = 2du: periodic, offsets of 3π
    geo = Geometry(L, lam)
    x = np.linspace(-4 * lam * L / du, 4 * lam * L / du, 4001)
    laser = lambda p: SourceSpec(SourceKind.LASER, Spectrum.monochromatic(OMEGA0), position=p)
    unequal = an.multi_beam_first_order([laser(-du), laser(0.0), laser(2 * du)], geo, x)
    equal = an.multi_beam_first_order([laser(-d), laser(0.0), laser(d)], geo, x)
    f = FigureData("fig9", {"unequal_spacing": {"x_m": x, "pattern": unequal.pattern.values},
                            "equal_spacing": {"x_m": x, "pattern": equal.pattern.values}})
    f.check(f"unequal spacing visibility {unequal.visibility:.3f} < 1", unequal.visibility < 0.98)
    f.check(f"equal spacing visibility {equal.visibility:.4f} reaches 1", equal.visibility > 0.999)
    f.check("equal spacing peaks at x = 0 with 4.5", abs(equal.pattern.values[x.size // 2] - 4.5) < 1e-9)
    f.check("patterns non-negative", unequal.pattern.values.min() >= -1e-9 and equal.pattern.values.min() >= -1e-9)
    return f


def _three_bandwidths(fn: Callable[[float, np.ndarray], np.ndarray]):
    tau = np.linspace(-20 * np.pi / DELTA_OMEGA, 20 * np.pi / DELTA_OMEGA, 4001)
    cols = {"tau_s": tau}
    for m in (1, 2, 4):
        cols[f"bandwidth_{m}x"] = fn(m * DELTA_OMEGA, tau)
    return tau, cols


def fig12() -> FigureData:
    """Thermal HBT for Δω, 2Δω and 4Δω."""
    tau, cols = _three_bandwidths(lambda dw, t: an.hbt_second_order("thermal", "temporal", t,
                                                                    delta_omega=dw).values)
    f = FigureData("fig12", {"hbt_temporal": cols})
    i0 = tau.size // 2
    widths = []
    for m in (1, 2, 4):
        y = cols[f"bandwidth_{m}x"]
        f.check(f"{m}x: peak 2 at zero delay", abs(y[i0] - 2) < 1e-12 and y.max() <= 2 + 1e-12)
        f.check(f"{m}x: even in delay", _even(y))
        widths.append(_half_width(tau, y - 1, 0.5))
    f.check("all curves approach 1 far from zero", all(abs(cols[k][0] - 1) < 0.02 for k in cols if k != "tau_s"))
    f.check("peak width halves with each bandwidth doubling",
            abs(widths[0] / widths[1] - 2) < 0.1 and abs(widths[1] / widths[2] - 2) < 0.1)
    return f


def _half_width(x, y, level):
    """Full width where y first drops below ``level`` on either side of the centre."""
    i0 = int(np.argmin(np.abs(x)))
    right = i0 + int(np.argmax(y[i0:] < level))
    left = i0 - int(np.argmax(y[i0::-1] < level))
    interp = lambda i, j: x[i] + (level - y[i]) * (x[j] - x[i]) / (y[j] - y[i])
    return interp(right - 1, right) - interp(left + 1, left)


def fig19() -> FigureData:
    """Entangled-pair HOM dip for Δω, 2Δω and 4Δω."""
    tau, cols = _three_bandwidths(lambda dw, t: an.hom_second_order("entangled_pair", "entangled_pair",
                                                                    grid=t, delta_omega=dw).values)
    f = FigureData("fig19", {"hom_dip": cols})
    i0 = tau.size // 2
    widths = []
    for m in (1, 2, 4):
        y = cols[f"bandwidth_{m}x"]
        f.check(f"{m}x: minimum 0 at zero delay", abs(y[i0]) < 1e-12 and y.min() >= -1e-12)
        f.check(f"{m}x: even and within [0, 1]", _even(y) and y.max() <= 1 + 1e-12)
        pat = an.PatternSamples("time", (tau,), y, an.Normalization.BASELINE_ONE, ("tau_s",))
        widths.append(an.hom_dip_width(pat))
    f.check("dip width halves with each bandwidth doubling",
            abs(widths[0] / widths[1] - 2) < 0.2 and abs(widths[1] / widths[2] - 2) < 0.2)
    return f


def fig23() -> FigureData:
    """Three-source second-order patterns, single-photon and laser beams."""
    L, lam, d = 1.0, 500e-9, 1e-3
    geo = Geometry(L, lam)
    dx = np.linspace(-4 * lam * L / d, 4 * lam * L / d, 2001)
    sp = an.multi_source_second_order("single_photon", d, d, geo, dx)
    la = an.multi_source_second_order("laser", d, d, geo, dx)
    f = FigureData("fig23", {"three_sources": {"dx_m": dx, "single_photon": sp.values, "laser": la.values}})
    f.check("single-photon pattern within 3 +/- 3", sp.values.min() >= -1e-9 and sp.values.max() <= 6 + 1e-9)
    f.check("laser pattern within 4.5 +/- 3", la.values.min() >= 1.5 - 1e-9 and la.values.max() <= 7.5 + 1e-9)
    f.check("laser visibility below single-photon visibility", la.visibility() < sp.visibility())
    period = lam * L / d
    shift = np.interp(dx[:500] + period, dx, sp.values)
    f.check("periodic with lambda L / d", np.allclose(shift, sp.values[:500], atol=1e-3))
    return f


def fig29a() -> FigureData:
    """Spatial thermal third order over (x1 - x2, x1 - x3)."""
    L, lam, D = 1.0, 532e-9, 1e-3
    unit = lam * L / D
    ax = np.linspace(-5 * unit, 5 * unit, 101)
    pat = an.third_order_pattern("thermal_hbt3_spatial", ax, ax, size=D, L=L, wavelength=lam)
    U, W = np.meshgrid(ax, ax, indexing="ij")
    f = FigureData("fig29a", {"third_order_spatial": {"x1_minus_x2_m": U.ravel(), "x1_minus_x3_m": W.ravel(),
                                                      "g3": pat.values.ravel()}})
    v = pat.values
    f.check("peak 6 at the origin", abs(v[50, 50] - 6) < 1e-12 and v.max() <= 6 + 1e-12)
    f.check("symmetric under sign reversal", np.allclose(v, v[::-1, ::-1], atol=1e-12))
    f.check("symmetric under exchanging the two axes", np.allclose(v, v.T, atol=1e-12))
    f.check("ridges: g3 = 2 + ... along x1 = x2 far from x3", abs(v[50, 0] - 2) < 0.05)
    f.check("corner tends to 1", abs(v[0, -1] - 1) < 0.05)
    return f


def fig32() -> FigureData:
    """Three single-photon sources, third order, slice x3 = x2."""
    L, lam, d = 1.0, 500e-9, 1e-3
    period = lam * L / d
    ax = np.linspace(-2 * period, 2 * period, 201)
    pat = an.third_order_pattern("three_single_photon_slice", ax, ax, L=L, wavelength=lam, d=d)
    U, W = np.meshgrid(ax, ax, indexing="ij")
    f = FigureData("fig32", {"third_order_three_sources": {"x1_m": U.ravel(), "x2_m": W.ravel(),
                                                           "pattern": pat.values.ravel()}})
    v = pat.values
    step = 50                               # grid points per period
    f.check("periodic in x1 with lambda L / d", np.allclose(v[step:], v[:-step], atol=1e-9))
    f.check("periodic in x2 with lambda L / d", np.allclose(v[:, step:], v[:, :-step], atol=1e-9))
    f.check("bounded by 1 +/- 2", v.max() <= 3 + 1e-9 and v.min() >= -1 - 1e-9)
    f.check("maximum on the diagonal x1 = x2", np.isclose(np.max(np.diag(v)), v.max(), atol=1e-9))
    return f


def fig35() -> FigureData:
    """Fermion third-order temporal correlation over (t1 - t2, t2 - t3)."""
    unit = 2 * np.pi / DELTA_OMEGA
    ax = np.linspace(-5 * unit, 5 * unit, 101)
    pat = an.third_order_pattern("fermion_hbt3", ax, ax, delta_omega=DELTA_OMEGA)
    U, W = np.meshgrid(ax, ax, indexing="ij")
    f = FigureData("fig35", {"third_order_fermion": {"t1_minus_t2_s": U.ravel(), "t2_minus_t3_s": W.ravel(),
                                                     "g3": pat.values.ravel()}})
    v = pat.values
    f.check("zero at triple coincidence", abs(v[50, 50]) < 1e-9)
    f.check("values within [0, 1]", v.min() >= -1e-9 and v.max() <= 1 + 1e-9)
    f.check("symmetric under sign reversal", np.allclose(v, v[::-1, ::-1], atol=1e-12))
    f.check("symmetric under exchanging the two axes", np.allclose(v, v.T, atol=1e-12))
    f.check("corner tends to 1", abs(v[0, 0] - 1) < 0.05)
    return f


BUILDERS: Dict[str, Callable[..., FigureData]] = {
    "fig4": fig4, "fig6": fig6, "fig9": fig9, "fig12": fig12, "fig19": fig19, "fig23": fig23,
    "fig29a": fig29a, "fig32": fig32, "fig35": fig35,
}


def reproduce(figure: str, out_dir=None, seeds: Optional[int] = None, seed: int = 0) -> FigureData:
    if figure not in BUILDERS:
        raise UsageError(f"unknown figure {figure!r}; valid ids: {', '.join(FIGURES)}")
    if figure == "fig6":
        data = fig6(seeds=seeds or 100, seed0=seed)
    else:
        data = BUILDERS[figure]()
    if out_dir is not None:
        data.write(out_dir)
    return data
