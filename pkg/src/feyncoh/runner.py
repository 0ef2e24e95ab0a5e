"""Execute a validated ExperimentConfig and write its artifacts.

Every experiment type produces named columns (written to ``pattern.csv``),
report lines and a metrics dict. Analytic values are evaluated on the
union of the dense grid and the Monte Carlo points so both share rows.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import platform
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import scipy

from . import analytic as an
from . import montecarlo as mc
from .config import ExperimentConfig, Mode
from .core import (DomainError, SourceKind, Statistics, UsageError, degeneracy_factor_blackbody,
                   degeneracy_factor_laser, sinc)
from .paths import DetectionPoint, Experiment, ensemble_probability, matrix_path_sum

try:
    from importlib.metadata import version as _pkg_version
    VERSION = _pkg_version("artifact")
except Exception:  # not installed
    VERSION = "0+local"


@dataclass
class Outcome:
    columns: Dict[str, np.ndarray]
    report: List[str] = field(default_factory=list)
    metrics: Dict[str, float] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _mc_grid(span: float, n: int) -> np.ndarray:
    n = n if n % 2 else n + 1      # odd, so zero separation is sampled
    return np.linspace(-span, span, n) if n > 1 else np.zeros(1)


def _union(dense: np.ndarray, extra: np.ndarray) -> np.ndarray:
    return np.unique(np.concatenate([dense, extra, [0.0]]))


def _coherence_time(src) -> float:
    tc = src.spectrum.coherence_time()
    return tc if math.isfinite(tc) else 2 * np.pi / src.spectrum.omega0


def _time_span(cfg: ExperimentConfig, src) -> float:
    return cfg.experiment.tau_span or 10 * _coherence_time(src)


def _fringe(cfg, size) -> float:
    g = cfg.build_geometry()
    return g.wavelength * g.L / size


def _fill(axis: np.ndarray, points: np.ndarray, values, errors):
    mean = np.full(axis.shape, np.nan)
    se = np.full(axis.shape, np.nan)
    idx = np.searchsorted(axis, points)
    mean[idx] = values
    se[idx] = errors
    return mean, se


def _deviation(analytic, mean, se) -> float:
    """Largest |analytic - mc| in standard errors over MC rows."""
    ok = np.isfinite(mean)
    if not ok.any():
        return float("nan")
    diff = np.abs(analytic[ok] - mean[ok])
    s = se[ok]
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(diff < 1e-9, 0.0, np.where(s > 0, diff / s, np.inf))
    return float(z.max())


def _ensemble_curve(cfg, experiment, pts, samples, seed, **kw):
    vals, errs = [], []
    for p in pts:
        r = ensemble_probability(experiment, p, samples, seed, **kw)
        vals.append(r.value)
        errs.append(r.stderr)
    return np.array(vals), np.array(errs)


def _want(cfg, which: str) -> bool:
    mode = Mode(cfg.experiment.mode)
    return mode is Mode.BOTH or mode.value == which


def _two_point(domain, u):
    if domain == "temporal":
        return [DetectionPoint(0.0, float(u)), DetectionPoint(0.0, 0.0)]
    return [DetectionPoint(float(u), 0.0), DetectionPoint(0.0, 0.0)]


def _zero_summary(out: Outcome, name: str, axis, analytic, mean, se, label="g2(0)"):
    i = int(np.argmin(np.abs(axis)))
    out.metrics[f"{name}_analytic_0"] = float(analytic[i])
    out.report.append(f"{label} analytic = {analytic[i]:.3f}")
    if np.isfinite(mean[i]):
        out.metrics[f"{name}_mc_0"] = float(mean[i])
        out.metrics[f"{name}_mc_stderr_0"] = float(se[i])
        z = _deviation(analytic[i:i + 1], mean[i:i + 1], se[i:i + 1])
        out.report.append(f"{label} monte carlo = {mean[i]:.4f} +/- {se[i]:.4f} ({z:.2f} sigma)")


def _finish_curve(out: Outcome, axis_name, axis, analytic, mean, se):
    out.columns = {axis_name: axis, "analytic": analytic, "mc_mean": mean, "mc_stderr": se}
    if analytic is not None:
        out.report.append(f"analytic peak = {np.nanmax(analytic):.6g} at {axis_name} = "
                          f"{axis[int(np.nanargmax(analytic))]:.6g}")
        out.report.append(f"analytic minimum = {np.nanmin(analytic):.6g} at {axis_name} = "
                          f"{axis[int(np.nanargmin(analytic))]:.6g}")
    dev = _deviation(analytic, mean, se) if analytic is not None else float("nan")
    if math.isfinite(dev) or dev == math.inf:
        out.metrics["max_deviation_sigma"] = dev
        out.report.append(f"analytic vs monte carlo max deviation = {dev:.3f} standard errors")


# ---------------------------------------------------------------------------
# experiment types
# ---------------------------------------------------------------------------

def _run_hbt(cfg: ExperimentConfig, samples: int, seed: int) -> Outcome:
    e = cfg.experiment
    (src,) = cfg.build_sources()
    geo = cfg.build_geometry()
    out = Outcome({})
    domain = e.domain
    if domain == "temporal":
        span = _time_span(cfg, src)
        axis_name = "tau_s"
    else:
        if src.extent <= 0:
            raise DomainError("spatial HBT needs a source extent > 0")
        span = e.x_span or 10 * _fringe(cfg, src.extent)
        axis_name = "dx_m"
    mc_pts = _mc_grid(span, e.mc_points)
    axis = _union(np.linspace(-span, span, e.grid_points), mc_pts if _want(cfg, "montecarlo") else [])
    analytic = None
    if _want(cfg, "analytic"):
        if e.force_distinguishable:
            analytic = np.ones_like(axis)
        else:
            analytic = an.hbt_second_order(src.kind, domain, axis, delta_omega=src.spectrum.width or None,
                                           size=src.extent or None, L=geo.L, wavelength=geo.wavelength,
                                           stages=src.stages, source=src,
                                           statistics=src.statistics).values
    mean = np.full(axis.shape, np.nan)
    se = np.full(axis.shape, np.nan)
    if _want(cfg, "montecarlo"):
        if e.engine == "events":
            mean, se = _hbt_events(cfg, src, axis, seed, out)
        else:
            ex = Experiment((src,), geo, 2, e.beam_splitter)
            vals, errs = _ensemble_curve(cfg, ex, [_two_point(domain, u) for u in mc_pts], samples, seed,
                                         force_distinguishable=e.force_distinguishable)
            mean, se = _fill(axis, mc_pts, vals, errs)
    if analytic is None:
        analytic = np.full(axis.shape, np.nan)
    _zero_summary(out, "g2", axis, analytic, mean, se)
    _finish_curve(out, axis_name, axis, analytic, mean, se)
    return out


def _hbt_events(cfg, src, axis, seed, out: Outcome):
    """Event-stream estimate of g2 around zero delay; fills only the zero row."""
    e = cfg.experiment
    tau_c = cfg.sources[0].tau_c or _coherence_time(src)
    ev = mc.generate_events(mc.EventConfig(src.kind, 2, e.rate, tau_c, e.duration,
                                           src.stages or 1, seed))
    window = e.window or tau_c / 20
    edges = np.linspace(-window, window, 2 * max(e.mc_points // 2, 1) + 2)
    res = mc.correlate(ev, 2, window, edges, coherence_time=tau_c)
    g0, s0 = res.at_zero()
    out.metrics["events_per_detector"] = float(np.mean(res.singles))
    out.report.append(f"event streams: {int(res.singles.sum())} events, window {window:.3g} s, "
                      f"coherence interval {tau_c:.3g} s")
    mean = np.full(axis.shape, np.nan)
    se = np.full(axis.shape, np.nan)
    i = int(np.argmin(np.abs(axis)))
    mean[i], se[i] = g0, s0
    return mean, se


def _hom_delta(sources):
    a, b = sources
    if a.kind is SourceKind.LASER and b.kind is SourceKind.LASER:
        return abs(a.spectrum.omega0 - b.spectrum.omega0)
    return a.spectrum.width or b.spectrum.width


def _run_hom(cfg: ExperimentConfig, samples: int, seed: int) -> Outcome:
    e = cfg.experiment
    srcs = cfg.build_sources()
    geo = cfg.build_geometry()
    out = Outcome({})
    dw = _hom_delta(srcs)
    size = max(s.extent for s in srcs)
    if e.domain == "temporal":
        if not dw > 0:
            raise DomainError("temporal HOM needs a bandwidth or a laser detuning")
        span = e.tau_span or (4 * np.pi / dw if srcs[0].kind is SourceKind.LASER else 10 * 2 * np.pi / dw)
        axis_name = "tau_s"
    else:
        if size <= 0:
            raise DomainError("spatial HOM needs a source extent > 0")
        span = e.x_span or 10 * _fringe(cfg, size)
        axis_name = "dx_m"
    mc_pts = _mc_grid(span, e.mc_points)
    axis = _union(np.linspace(-span, span, e.grid_points), mc_pts if _want(cfg, "montecarlo") else [])
    analytic = np.full(axis.shape, np.nan)
    if _want(cfg, "analytic"):
        analytic = an.hom_second_order(srcs[0].kind, srcs[1].kind, srcs[0].statistics, e.domain, axis,
                                       delta_omega=dw or None, size=size or None, L=geo.L,
                                       wavelength=geo.wavelength, separation=e.separation or None,
                                       variant="derived" if e.variant == "derived" else "paper").values
        if e.domain == "temporal" and srcs[0].kind is not SourceKind.LASER and np.nanmin(analytic) < 0.5:
            try:
                width = an.hom_dip_width(an.PatternSamples("time", (axis,), analytic,
                                                           an.Normalization.BASELINE_ONE, ("tau_s",)))
                out.metrics["dip_width_s"] = width
                out.report.append(f"dip full width at 0.5 = {width:.6g} s")
            except ValueError:
                pass
    mean = np.full(axis.shape, np.nan)
    se = np.full(axis.shape, np.nan)
    if _want(cfg, "montecarlo"):
        ex = Experiment(srcs, geo, 2, True)
        vals, errs = _ensemble_curve(cfg, ex, [_two_point(e.domain, u) for u in mc_pts], samples, seed)
        mean, se = _fill(axis, mc_pts, vals, errs)
        if srcs[0].kind is SourceKind.LASER and srcs[1].kind is SourceKind.LASER and e.domain == "temporal":
            fit = mc.fit_visibility(mc_pts, vals, dw)
            out.metrics["mc_visibility"] = fit.visibility
            out.report.append(f"monte carlo fitted visibility = {fit.visibility:.4f}")
    _zero_summary(out, "g2", axis, analytic, mean, se)
    _finish_curve(out, axis_name, axis, analytic, mean, se)
    return out


def _run_first_order(cfg: ExperimentConfig, samples: int, seed: int) -> Outcome:
    e = cfg.experiment
    srcs = cfg.build_sources()
    geo = cfg.build_geometry()
    out = Outcome({})
    pos = sorted(s.position for s in srcs)
    d = pos[1] - pos[0]
    if d <= 0:
        raise DomainError("first-order sources need distinct positions")
    period = geo.wavelength * geo.L / d
    span = e.x_span or 2 * period
    mc_x = np.array([])
    sim = None
    if _want(cfg, "montecarlo") and len(srcs) == 2:
        sim_cfg = mc.SimulationConfig(srcs, geo, order=1, n_photons=e.n_photons, seed=seed,
                                      bins=max(e.mc_points, 8), n_intervals=e.n_intervals,
                                      p_simultaneous=e.p_simultaneous).first_order()
        sim_cfg = mc.FirstOrderConfig(**{**sim_cfg.__dict__, "periods": 2 * span / period})
        sim = mc.simulate_first_order(sim_cfg)
        mc_x = sim.accumulated.grid
    axis = np.unique(np.concatenate([np.linspace(-span, span, e.grid_points), mc_x]))
    analytic = np.full(axis.shape, np.nan)
    if _want(cfg, "analytic"):
        n2 = int(round(e.p_simultaneous * e.n_photons))
        res = an.multi_beam_first_order(srcs, geo, axis, n_detected=e.n_photons, n_simultaneous=n2,
                                        long_average=e.n_intervals > 1)
        analytic = res.pattern.values
        out.metrics["analytic_visibility"] = res.visibility
        out.report.append(f"analytic visibility = {res.visibility:.6g}")
    mean = np.full(axis.shape, np.nan)
    se = np.full(axis.shape, np.nan)
    if sim is not None:
        idx = np.searchsorted(axis, mc_x)
        mean[idx] = sim.accumulated.values
        out.metrics["mc_visibility"] = sim.visibility
        out.metrics["mc_visibility_extrema"] = sim.visibility_extrema
        out.metrics["mc_visibility_histogram"] = sim.visibility_histogram
        out.report.append(f"monte carlo fitted visibility = {sim.visibility:.6g} "
                          f"(extrema {sim.visibility_extrema:.6g}, histogram {sim.visibility_histogram:.6g})"
                          + (" [ill-conditioned fit]" if sim.flagged else ""))
        out.report.append(f"1/sqrt(N) = {1 / math.sqrt(e.n_photons):.6g}")
    out.columns = {"x_m": axis, "analytic": analytic, "mc_mean": mean, "mc_stderr": se}
    return out


def _run_mz(cfg: ExperimentConfig, samples: int, seed: int) -> Outcome:
    e = cfg.experiment
    (src,) = cfg.build_sources()
    span = _time_span(cfg, src)
    axis = _union(np.linspace(-span, span, e.grid_points), np.array([]))
    variant = "standard" if e.variant == "standard" else "paper"
    pat = an.mz_first_order(src.spectrum, axis, variant)
    out = Outcome({"tau_s": axis, "analytic": pat.values})
    out.metrics["value_0"] = float(pat.values[np.searchsorted(axis, 0.0)])
    out.report.append(f"pattern at zero delay = {out.metrics['value_0']:.6g} ({variant})")
    return out


def _run_multi_source(cfg: ExperimentConfig, samples: int, seed: int) -> Outcome:
    e = cfg.experiment
    srcs = cfg.build_sources()
    geo = cfg.build_geometry()
    pos = sorted(s.position for s in srcs)
    d12, d23 = pos[1] - pos[0], pos[2] - pos[1]
    span = e.x_span or 4 * geo.wavelength * geo.L / max(d12, d23)
    axis = _union(np.linspace(-span, span, e.grid_points), np.array([]))
    pat = an.multi_source_second_order(srcs[0].kind, d12, d23, geo, axis)
    out = Outcome({"dx_m": axis, "analytic": pat.values})
    out.metrics["visibility"] = pat.visibility()
    out.report.append(f"raw pattern baseline = {pat.meta['baseline']}, visibility = {pat.visibility():.6g}")
    return out


def _scan_points(scan: str, x):
    if scan == "fix_one":
        return x, np.zeros_like(x)
    if scan == "same_direction":
        return x, x
    return x, -x


def _run_subwavelength(cfg: ExperimentConfig, samples: int, seed: int) -> Outcome:
    e = cfg.experiment
    srcs = cfg.build_sources()
    geo = cfg.build_geometry()
    out = Outcome({})
    d = abs(srcs[1].position - srcs[0].position)
    if d <= 0:
        raise DomainError("subwavelength sources need distinct positions")
    res = an.subwavelength_decomposition(e.scan, e.phase_mode, d, geo)
    fix = an.subwavelength_decomposition("fix_one", "equal_fixed", d, geo)
    period = res.effective_period
    out.metrics["effective_period_m"] = period
    out.metrics["fix_one_period_m"] = fix.effective_period
    out.report.append(f"effective period = {period:.6g} m (fix-one period {fix.effective_period:.6g} m)")
    span = e.x_span or 2 * fix.effective_period
    mc_pts = np.linspace(-span, span, max(e.mc_points, 3))
    axis = _union(np.linspace(-span, span, e.grid_points), mc_pts if _want(cfg, "montecarlo") else [])
    x1, x2 = _scan_points(e.scan, axis)
    analytic = res.evaluate(x1, x2) / 4.0
    pat = an.PatternSamples("position", (axis,), analytic, an.Normalization.BASELINE_ONE, ("x_m",))
    out.metrics["analytic_visibility"] = pat.visibility()
    out.report.append(f"analytic visibility = {pat.visibility():.6g}")
    mean = np.full(axis.shape, np.nan)
    se = np.full(axis.shape, np.nan)
    if _want(cfg, "montecarlo"):
        ex = Experiment(srcs, geo, 2, False)
        fixed = {0: 0.0, 1: 0.0} if e.phase_mode == "equal_fixed" else None
        m1, m2 = _scan_points(e.scan, mc_pts)
        pts = [[DetectionPoint(float(a), 0.0), DetectionPoint(float(b), 0.0)] for a, b in zip(m1, m2)]
        vals, errs = _ensemble_curve(cfg, ex, pts, samples, seed, fixed_phases=fixed)
        mean, se = _fill(axis, mc_pts, vals, errs)
        if math.isfinite(period):
            fit = mc.fit_visibility(mc_pts, vals, 2 * np.pi / period)
            out.metrics["mc_visibility"] = fit.visibility
            out.report.append(f"monte carlo fitted visibility = {fit.visibility:.4f}")
    _finish_curve(out, "x_m", axis, analytic, mean, se)
    return out


def _third_params(cfg, srcs, geo):
    e = cfg.experiment
    s = srcs[0] if srcs else None
    return dict(delta_omega=(s.spectrum.width or None) if s else None, size=(s.extent or None) if s else None,
                L=geo.L if geo else None, wavelength=geo.wavelength if geo else None,
                d=e.d12 or None, d12=e.d12 or None, d23=e.d23 or None)


def _run_third_order(cfg: ExperimentConfig, samples: int, seed: int) -> Outcome:
    e = cfg.experiment
    srcs = cfg.build_sources()
    geo = cfg.build_geometry() if srcs or cfg.geometry.wavelength > 0 else None
    out = Outcome({})
    conf = an.ThirdOrderConfig(e.third_config)
    params = _third_params(cfg, srcs, geo)
    temporal = conf in (an.ThirdOrderConfig.THERMAL_TEMPORAL, an.ThirdOrderConfig.FERMION)
    if temporal:
        span = e.tau_span or 5 * _coherence_time(srcs[0])
    elif conf is an.ThirdOrderConfig.THERMAL_SPATIAL:
        span = e.x_span or 5 * _fringe(cfg, srcs[0].extent)
    else:
        span = e.x_span or 2 * geo.wavelength * geo.L / (e.d12 or 1.0)
    n = min(e.grid_points, 101)
    mc_on = _want(cfg, "montecarlo") and conf in (an.ThirdOrderConfig.THERMAL_TEMPORAL,
                                                   an.ThirdOrderConfig.FERMION,
                                                   an.ThirdOrderConfig.THERMAL_SPATIAL)
    mc_pts = _mc_grid(span, e.mc_points)
    ax = _union(np.linspace(-span, span, n), mc_pts if mc_on else np.array([]))
    if conf in (an.ThirdOrderConfig.THREE_SINGLE_PHOTON, an.ThirdOrderConfig.THREE_SINGLE_PHOTON_SLICE):
        ax = np.linspace(-span, span, n)
    pat = an.third_order_pattern(conf, ax, ax, **params)
    U, W = np.meshgrid(ax, ax, indexing="ij")
    analytic = pat.values
    mean = np.full(U.shape, np.nan)
    se = np.full(U.shape, np.nan)
    if mc_on:
        ex = Experiment(srcs, geo, 3, True)
        j0 = int(np.searchsorted(ax, 0.0))
        for u in mc_pts:
            if temporal:   # t1 - t2 = u, t2 - t3 = 0
                pts = [DetectionPoint(0.0, float(u)), DetectionPoint(0.0, 0.0), DetectionPoint(0.0, 0.0)]
            else:          # x1 - x2 = u, x1 - x3 = 0
                pts = [DetectionPoint(0.0, 0.0), DetectionPoint(float(-u), 0.0), DetectionPoint(0.0, 0.0)]
            r = ensemble_probability(ex, pts, samples, seed)
            i = int(np.searchsorted(ax, u))
            mean[i, j0], se[i, j0] = r.value, r.stderr
    out.columns = {pat.labels[0]: U.ravel(), pat.labels[1]: W.ravel(), "analytic": analytic.ravel(),
                   "mc_mean": mean.ravel(), "mc_stderr": se.ravel()}
    if pat.labels[0] != "x1_m":
        i0 = int(np.searchsorted(ax, 0.0))
        g0 = float(analytic[i0, i0])
        out.metrics["g3_analytic_0"] = g0
        out.report.append(f"g3(0) analytic = {g0:.3f}")
        if np.isfinite(mean[i0, i0]):
            out.metrics["g3_mc_0"] = float(mean[i0, i0])
            out.metrics["g3_mc_stderr_0"] = float(se[i0, i0])
            out.report.append(f"g3(0) monte carlo = {mean[i0, i0]:.4f} +/- {se[i0, i0]:.4f}")
    out.report.append(f"pattern maximum = {np.max(analytic):.6g}, minimum = {np.min(analytic):.6g}")
    dev = _deviation(analytic.ravel(), mean.ravel(), se.ravel())
    if not math.isnan(dev):
        out.metrics["max_deviation_sigma"] = dev
        out.report.append(f"analytic vs monte carlo max deviation = {dev:.3f} standard errors")
    return out


def ryser_permanent(M) -> complex:
    """Permanent by Ryser's inclusion-exclusion formula."""
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    total = 0j
    for r in range(1, n + 1):
        for cols in itertools.combinations(range(n), r):
            total += (-1) ** r * np.prod(M[:, cols].sum(axis=1))
    return (-1) ** n * total


def _nth_analytic(src, order: int, tau):
    """g^(n) with t1 = τ and the other detectors at t = 0."""
    w = src.spectrum.width
    out = np.empty(np.shape(tau))
    for k, t in enumerate(np.ravel(tau)):
        times = np.array([t] + [0.0] * (order - 1))
        if src.kind in (SourceKind.LASER, SourceKind.BEC):
            out.flat[k] = 1.0
            continue
        g1 = sinc(w * (times[:, None] - times[None, :]) / 2) if w else np.ones((order, order))
        if src.statistics is Statistics.FERMION:
            val = float(np.linalg.det(g1))
        else:
            val = float(ryser_permanent(g1).real)
        if src.kind is SourceKind.SUPERBUNCHING_CASCADE:
            val = val ** src.stages
        out.flat[k] = val
    return out


def _run_nth_order(cfg: ExperimentConfig, samples: int, seed: int) -> Outcome:
    e = cfg.experiment
    (src,) = cfg.build_sources()
    geo = cfg.build_geometry()
    out = Outcome({})
    span = _time_span(cfg, src)
    mc_pts = _mc_grid(span, e.mc_points)
    axis = _union(np.linspace(-span, span, e.grid_points), mc_pts if _want(cfg, "montecarlo") else [])
    analytic = _nth_analytic(src, e.order, axis) if _want(cfg, "analytic") else np.full(axis.shape, np.nan)
    mean = np.full(axis.shape, np.nan)
    se = np.full(axis.shape, np.nan)
    if _want(cfg, "montecarlo"):
        ex = Experiment((src,), geo, e.order, e.beam_splitter)
        pts = [[DetectionPoint(0.0, float(u))] + [DetectionPoint(0.0, 0.0)] * (e.order - 1) for u in mc_pts]
        vals, errs = _ensemble_curve(cfg, ex, pts, samples, seed,
                                     force_distinguishable=e.force_distinguishable)
        mean, se = _fill(axis, mc_pts, vals, errs)
    _zero_summary(out, f"g{e.order}", axis, analytic, mean, se, label=f"g{e.order}(0)")
    _finish_curve(out, "tau_s", axis, analytic, mean, se)
    return out


def _run_degeneracy(cfg: ExperimentConfig, samples: int, seed: int) -> Outcome:
    d = cfg.degeneracy
    bb = degeneracy_factor_blackbody(d.frequency, d.temperature)
    las = degeneracy_factor_laser(d.laser_power, d.laser_frequency, d.linewidth)
    out = Outcome({"quantity": np.array(["blackbody", "laser"]), "value": np.array([bb, las])})
    out.metrics.update(blackbody=bb, laser=las)
    out.report.append(f"blackbody degeneracy at {d.frequency:.6g} Hz, {d.temperature:g} K = {bb:.6g}")
    out.report.append(f"laser degeneracy at {d.laser_power:g} W, {d.laser_frequency:.6g} Hz, "
                      f"linewidth {d.linewidth:.6g} Hz = {las:.6g}")
    return out


def _run_oracle(cfg: ExperimentConfig, samples: int, seed: int) -> Outcome:
    e = cfg.experiment
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(7,))))
    ns, berr, ferr = [], [], []
    for n in (2, 3, 4):
        worst_b = worst_f = 0.0
        for _ in range(e.trials):
            K = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            pb = matrix_path_sum(K, Statistics.BOSON)
            pf = matrix_path_sum(K, Statistics.FERMION)
            worst_b = max(worst_b, abs(pb - ryser_permanent(K)))
            worst_f = max(worst_f, abs(pf - np.linalg.det(K)))
        ns.append(n)
        berr.append(worst_b)
        ferr.append(worst_f)
    out = Outcome({"n": np.array(ns), "boson_max_abs_err": np.array(berr),
                   "fermion_max_abs_err": np.array(ferr)})
    out.metrics["max_abs_err"] = float(max(berr + ferr))
    out.report.append(f"{e.trials} random matrices per n in (2, 3, 4)")
    out.report.append(f"max |path sum - permanent| = {max(berr):.3g}")
    out.report.append(f"max |path sum - determinant| = {max(ferr):.3g}")
    return out


def _run_burt(cfg: ExperimentConfig, samples: int, seed: int) -> Outcome:
    r = an.burt_ratio()
    out = Outcome({"quantity": np.array(["thermal_over_bec_g3"]), "value": np.array([r])})
    out.metrics["ratio"] = r
    out.report.append(f"thermal/BEC third-order ratio = {r:.6g}")
    out.report.append(f"inside [4.8, 10.0]: {'yes' if 4.8 <= r <= 10.0 else 'no'}")
    return out


RUNNERS = {
    "hbt": _run_hbt, "hom": _run_hom, "first_order": _run_first_order, "mz": _run_mz,
    "multi_source": _run_multi_source, "subwavelength": _run_subwavelength,
    "third_order": _run_third_order, "nth_order": _run_nth_order, "degeneracy": _run_degeneracy,
    "oracle": _run_oracle, "burt": _run_burt,
}


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (str, np.str_)):
        return str(v)
    v = float(v)
    return "" if math.isnan(v) else f"{v:.12g}"


def write_csv(path: Path, columns: Dict[str, np.ndarray]) -> None:
    keep = {k: np.asarray(v) for k, v in columns.items()
            if v is not None and not (np.asarray(v).dtype.kind == "f" and np.all(np.isnan(v)))}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(keep))
        for row in zip(*keep.values()):
            w.writerow([_fmt(v) for v in row])


@dataclass
class RunResult:
    exit_code: int
    out_dir: Optional[Path]
    outcome: Optional[Outcome]
    message: str = ""


def execute(cfg: ExperimentConfig, samples: Optional[int] = None, seed: Optional[int] = None,
            mode: Optional[str] = None) -> Outcome:
    """Run the configured experiment in memory."""
    if mode is not None:
        cfg.experiment.mode = Mode(mode).value
    if samples is not None:
        cfg.experiment.samples = int(samples)
    if seed is not None:
        cfg.experiment.seed = int(seed)
    fn = RUNNERS[cfg.experiment.type]
    out = fn(cfg, cfg.experiment.samples, cfg.experiment.seed)
    for k, v in out.metrics.items():
        if isinstance(v, float) and math.isnan(v):
            raise ArithmeticError(f"metric {k} is NaN")
    return out


def run(cfg: ExperimentConfig, out_dir=None, samples=None, seed=None, mode=None) -> RunResult:
    """Run and write pattern.csv, report.txt, meta.json and config.cfg."""
    t0 = time.perf_counter()
    caught: List[str] = []
    try:
        with warnings.catch_warnings(record=True) as wlist:
            warnings.simplefilter("always")
            out = execute(cfg, samples, seed, mode)
        caught = [str(w.message) for w in wlist]
    except (DomainError, ArithmeticError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return RunResult(3, None, None, f"numeric failure: {exc}")
    except UsageError as exc:
        return RunResult(2, None, None, f"invalid experiment: {exc}")
    elapsed = time.perf_counter() - t0
    e = cfg.experiment
    d = Path(out_dir or e.out_dir or Path("runs") / e.name)
    d.mkdir(parents=True, exist_ok=True)
    write_csv(d / "pattern.csv", out.columns)
    lines = [f"experiment: {e.name} ({e.type}, mode {e.mode})", f"seed: {e.seed}", f"samples: {e.samples}"]
    lines += out.report + [f"warning: {w}" for w in caught]
    (d / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (d / "config.cfg").write_text(cfg.serialize(), encoding="utf-8")
    meta = {
        "name": e.name, "type": e.type, "mode": e.mode, "seed": e.seed, "samples": e.samples,
        "versions": {"feyncoh": VERSION, "python": platform.python_version(), "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "timings_s": {"total": elapsed}, "argv": sys.argv,
        "metrics": {k: (v if isinstance(v, (int, float)) and math.isfinite(v) else str(v))
                    for k, v in out.metrics.items()},
        "warnings": caught, "config": cfg.serialize(),
    }
    (d / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return RunResult(0, d, out)
