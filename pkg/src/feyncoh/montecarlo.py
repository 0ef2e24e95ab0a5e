"""Stochastic engines: photon-by-photon fringe build-up, event streams, correlators.

All randomness comes from Philox substreams keyed by (seed, stream id,
chunk index). Chunks are generated independently and concatenated in
chunk order, so outputs are identical for any worker count.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .analytic import Normalization, PatternSamples
from .core import DetectorSpec, DomainError, Geometry, SourceKind, SourceSpec, UsageError
from .paths import worker_count

INTERVAL_CHUNK = 4096
PHOTON_CHUNK = 1 << 16


def substream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & ((1 << 64) - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _map(fn, items, workers=None):
    nw = min(worker_count(workers), len(items)) if items else 1
    if nw > 1:
        with ThreadPoolExecutor(nw) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


@dataclass(frozen=True)
class SimulationConfig:
    """Source/detector description shared by the stochastic engines.

    ``n_photons`` drives the first-order build-up, ``duration`` the event
    generator. ``rate`` is the mean singles rate per detector in Hz.
    """

    sources: Tuple[SourceSpec, ...]
    geometry: Geometry
    detectors: Tuple[DetectorSpec, ...] = ()
    order: int = 2
    n_photons: int = 1000
    duration: float = 0.0
    seed: int = 0
    bins: int = 64
    rate: float = 1e7
    n_intervals: int = 1
    p_simultaneous: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(self, "detectors", tuple(self.detectors))
        if not self.sources:
            raise DomainError("at least one source is required")
        if not 1 <= self.order <= 4:
            raise DomainError("order n must satisfy 1 <= n <= 4")
        if self.n_photons < 1:
            raise DomainError("N_photons must be >= 1")
        if self.bins < 8:
            raise DomainError("bins must be >= 8")
        if self.duration < 0:
            raise DomainError("duration must be >= 0")

    def first_order(self) -> "FirstOrderConfig":
        if len(self.sources) != 2:
            raise UsageError("first-order build-up needs exactly two sources")
        a, b = self.sources
        if a.kind is not b.kind:
            raise UsageError("first-order build-up needs two sources of the same kind")
        d = abs(b.position - a.position)
        return FirstOrderConfig(a.kind, self.n_photons, d, self.geometry.L, self.geometry.wavelength,
                                self.n_intervals, self.p_simultaneous, self.bins, seed=self.seed)

    def events(self) -> "EventConfig":
        if len(self.sources) != 1:
            raise UsageError("event generation models one beam split onto the detectors")
        s = self.sources[0]
        tau_c = s.spectrum.coherence_time()
        if not math.isfinite(tau_c):
            tau_c = s.phase_model.tau_c
        return EventConfig(s.kind, max(self.order, len(self.detectors), 1), self.rate, tau_c,
                           self.duration, s.stages or 1, self.seed)


# ---------------------------------------------------------------------------
# Visibility fitting
# ---------------------------------------------------------------------------

@dataclass
class VisibilityFit:
    visibility: float
    phase: float
    offset: float
    condition_number: float
    flagged: bool


def fit_visibility(x, y, k: float, max_condition: float = 1e6) -> VisibilityFit:
    """Least-squares fit of y = a + b cos(kx) + c sin(kx) with k fixed.

    Returns V = √(b² + c²)/a and φ = atan2(-c, b), i.e. y ≈ a(1 + V cos(kx + φ)).
    The fit is flagged when the design matrix is ill-conditioned (e.g.
    the grid covers much less than one period).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.column_stack([np.ones_like(x), np.cos(k * x), np.sin(k * x)])
    cond = float(np.linalg.cond(A))
    (a, b, c), *_ = np.linalg.lstsq(A, y, rcond=None)
    flagged = (not math.isfinite(cond)) or cond > max_condition or a <= 0
    V = math.hypot(b, c) / a if a > 0 else float("nan")
    return VisibilityFit(V, math.atan2(-c, b), a, cond, flagged)


def extrema_visibility(y) -> float:
    y = np.asarray(y, dtype=float)
    hi, lo = y.max(), y.min()
    return float((hi - lo) / (hi + lo)) if hi + lo > 0 else 0.0


# ---------------------------------------------------------------------------
# First-order build-up
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FirstOrderConfig:
    """Two-source single-detector experiment, photon by photon."""

    kind: SourceKind = SourceKind.THERMAL
    n_photons: int = 1000
    separation: float = 1e-3   # m, source spacing d
    L: float = 1.0             # m
    wavelength: float = 532e-9  # m
    n_intervals: int = 1       # coherence intervals spanned (laser-like sources)
    p_simultaneous: float = 0.0  # single-photon sources: fraction of two-photon events
    bins: int = 64
    periods: float = 4.0       # fringe periods covered by the screen
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", SourceKind(self.kind))
        if self.n_photons < 1:
            raise DomainError("n_photons must be >= 1")
        if self.bins < 8:
            raise DomainError("bins must be >= 8")
        if self.n_intervals < 1:
            raise DomainError("n_intervals must be >= 1")
        if not 0 <= self.p_simultaneous <= 1:
            raise DomainError("p_simultaneous must lie in [0, 1]")

    @property
    def k(self) -> float:
        return 2 * np.pi * self.separation / (self.wavelength * self.L)

    @property
    def period(self) -> float:
        return 2 * np.pi / self.k


@dataclass
class FirstOrderResult:
    histogram: PatternSamples     # detected counts per bin
    accumulated: PatternSamples   # Σ_j P_j(x) at bin centres
    visibility: float             # fitted on the accumulated probability
    phase: float
    visibility_extrema: float
    visibility_histogram: float
    flagged: bool


def _photon_phases(cfg: FirstOrderConfig, rng, start: int, size: int) -> np.ndarray:
    """Relative phase φ_j1 - φ_j2 per photon and a mask of interfering photons."""
    kind = cfg.kind
    if kind in (SourceKind.LASER, SourceKind.BEC):
        per = -(-cfg.n_photons // cfg.n_intervals)
        idx = (start + np.arange(size)) // per
        table = substream(cfg.seed, 2, 0).uniform(0, 2 * np.pi, cfg.n_intervals)
        return table[idx], np.ones(size, bool)
    dphi = rng.uniform(0, 2 * np.pi, size)
    if kind is SourceKind.SINGLE_PHOTON:
        return dphi, rng.random(size) < cfg.p_simultaneous
    if kind in (SourceKind.THERMAL, SourceKind.COLD_ATOM_CLOUD):
        return dphi, np.ones(size, bool)
    raise UsageError(f"first-order build-up not defined for {kind.value}")


def _photon_chunk(cfg: FirstOrderConfig, edges, chunk: int):
    start = chunk * PHOTON_CHUNK
    size = min(PHOTON_CHUNK, cfg.n_photons - start)
    rng = substream(cfg.seed, 1, chunk)
    dphi, coherent = _photon_phases(cfg, rng, start, size)
    # draw x from 1 + m cos(kx + Δφ) on the screen by rejection
    lo, hi = edges[0], edges[-1]
    xs = np.empty(size)
    todo = np.arange(size)
    while todo.size:
        cand = lo + (hi - lo) * rng.random(todo.size)
        m = coherent[todo].astype(float)
        accept = rng.random(todo.size) * 2 < 1 + m * np.cos(cfg.k * cand + dphi[todo])
        xs[todo[accept]] = cand[accept]
        todo = todo[~accept]
    counts = np.histogram(xs, bins=edges)[0]
    centres = 0.5 * (edges[1:] + edges[:-1])
    # Σ_j P_j(x) = n + Σ_j cos(kx + Δφ_j) over interfering photons
    s = np.exp(1j * dphi[coherent]).sum()
    return counts, s, size


def simulate_first_order(cfg: FirstOrderConfig, workers=None) -> FirstOrderResult:
    """Detect photons one at a time and build the single-detector pattern.

    Each photon draws its relative phase per the source model, its
    probability function P_j(x) = 1 + cos(kx + Δφ_j) and a detection
    position sampled from it. The visibility is fitted on Σ_j P_j(x),
    the accumulated probability; extrema and histogram visibilities are
    reported for cross-checks.
    """
    edges = np.linspace(-cfg.periods * cfg.period / 2, cfg.periods * cfg.period / 2, cfg.bins + 1)
    centres = 0.5 * (edges[1:] + edges[:-1])
    n_chunks = -(-cfg.n_photons // PHOTON_CHUNK)
    parts = _map(lambda c: _photon_chunk(cfg, edges, c), list(range(n_chunks)), workers)
    counts = np.zeros(cfg.bins, dtype=np.int64)
    s = 0j
    for c, sc, _ in parts:
        counts += c
        s += sc
    acc = cfg.n_photons + np.real(s * np.exp(1j * cfg.k * centres))
    acc = np.clip(acc, 0.0, None)
    fit = fit_visibility(centres, acc, cfg.k)
    hist_fit = fit_visibility(centres, counts.astype(float), cfg.k)
    hist = PatternSamples("position", (centres,), counts.astype(float), Normalization.RAW,
                          ("x_m",), {"n_photons": cfg.n_photons})
    accp = PatternSamples("position", (centres,), acc / cfg.n_photons, Normalization.RAW,
                          ("x_m",), {"n_photons": cfg.n_photons})
    return FirstOrderResult(hist, accp, fit.visibility, fit.phase, extrema_visibility(acc),
                            hist_fit.visibility, fit.flagged or hist_fit.flagged)


# ---------------------------------------------------------------------------
# Event streams
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EventConfig:
    """Detection-event generator for one beam split onto ``n_detectors``."""

    kind: SourceKind = SourceKind.THERMAL
    n_detectors: int = 2
    rate: float = 1e7          # Hz, mean singles rate per detector
    tau_c: float = 1e-6        # s, coherence interval
    duration: float = 0.1      # s
    stages: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", SourceKind(self.kind))
        if not self.duration > 0:
            raise DomainError("duration must be > 0")
        if not (self.rate > 0 and self.tau_c > 0):
            raise DomainError("rate and tau_c must be > 0")
        if not 1 <= self.n_detectors <= 4:
            raise DomainError("n_detectors must be 1..4")
        if self.stages < 1:
            raise DomainError("stages must be >= 1")


@dataclass
class EventStreams:
    times: List[np.ndarray]   # sorted timestamps per detector, s
    duration: float
    low_count: bool = False

    def to_csv(self, path) -> None:
        ids = np.concatenate([np.full(t.size, i) for i, t in enumerate(self.times)])
        ts = np.concatenate(self.times)
        order = np.lexsort((ids, ts))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("detector_id,timestamp_s\n")
            for i, t in zip(ids[order], ts[order]):
                fh.write(f"{i},{t:.12g}\n")

    @classmethod
    def from_csv(cls, path, duration: Optional[float] = None) -> "EventStreams":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        ids = data[:, 0].astype(int)
        n = int(ids.max()) + 1 if ids.size else 0
        times = [np.sort(data[ids == i, 1]) for i in range(n)]
        if duration is None:
            duration = float(data[:, 1].max()) if ids.size else 0.0
        return cls(times, duration)


def _intensity_weights(cfg: EventConfig, rng, size: int) -> np.ndarray:
    if cfg.kind in (SourceKind.LASER, SourceKind.BEC):
        return np.ones(size)
    if cfg.kind in (SourceKind.THERMAL, SourceKind.COLD_ATOM_CLOUD):
        return rng.exponential(1.0, size)
    if cfg.kind is SourceKind.SUPERBUNCHING_CASCADE:
        return np.prod(rng.exponential(1.0, (cfg.stages, size)), axis=0)
    raise UsageError(
        f"event generation is not defined for {cfg.kind.value}: a doubly stochastic "
        "Poisson process cannot produce antibunched or single-emitter statistics")


def _event_chunk(cfg: EventConfig, n_intervals: int, chunk: int):
    first = chunk * INTERVAL_CHUNK
    size = min(INTERVAL_CHUNK, n_intervals - first)
    rng = substream(cfg.seed, 3, chunk)
    w = _intensity_weights(cfg, rng, size)
    mu = cfg.rate * cfg.tau_c * w
    out = []
    for _ in range(cfg.n_detectors):
        n = rng.poisson(mu)
        starts = (first + np.repeat(np.arange(size), n)) * cfg.tau_c
        t = starts + cfg.tau_c * rng.random(starts.size)
        out.append(np.sort(t))
    return out


def generate_events(cfg: EventConfig, workers=None) -> EventStreams:
    """Doubly stochastic Poisson streams sharing one intensity per coherence interval.

    Thermal-like beams use exponential speckle weights, a cascade of N
    stages uses a product of N exponentials, and laser-like beams a
    constant rate. Every detector sees the same interval weight.
    """
    n_intervals = int(math.ceil(cfg.duration / cfg.tau_c))
    n_chunks = -(-n_intervals // INTERVAL_CHUNK)
    parts = _map(lambda c: _event_chunk(cfg, n_intervals, c), list(range(n_chunks)), workers)
    times = []
    for d in range(cfg.n_detectors):
        t = np.concatenate([p[d] for p in parts]) if parts else np.empty(0)
        times.append(t[t < cfg.duration])
    expected = cfg.rate * cfg.duration
    low = expected < 100
    if low:
        warnings.warn(f"only {expected:.1f} expected events per detector", RuntimeWarning, stacklevel=2)
    return EventStreams(times, cfg.duration, low)


# ---------------------------------------------------------------------------
# Coincidence correlation
# ---------------------------------------------------------------------------

@dataclass
class CorrelationResult:
    order: int
    edges: Tuple[np.ndarray, ...]   # τ-bin edges per difference axis, s
    g: np.ndarray
    counts: np.ndarray
    singles: np.ndarray
    window: float
    duration: float
    stderr: Optional[np.ndarray] = None
    warnings: List[str] = field(default_factory=list)

    @property
    def centres(self) -> Tuple[np.ndarray, ...]:
        return tuple(0.5 * (e[1:] + e[:-1]) for e in self.edges)

    def at_zero(self) -> Tuple[float, float]:
        """g and its stderr in the bin containing zero delay."""
        idx = tuple(int(np.clip(np.searchsorted(e, 0.0, side="right") - 1, 0, e.size - 2))
                    for e in self.edges)
        se = float(self.stderr[idx]) if self.stderr is not None else float("nan")
        return float(self.g[idx]), se


def _pair_counts(t1, t2, edges):
    """Counts of t1 - t2 in each bin [e_k, e_{k+1})."""
    if t1.size == 0 or t2.size == 0:
        return np.zeros(edges.size - 1, dtype=np.int64)
    cum = np.array([np.searchsorted(t2, t1 - e, side="right").sum() for e in edges], dtype=np.int64)
    return cum[:-1] - cum[1:]


def _triple_counts(t1, t2, t3, e12, e13, window, block=1 << 15):
    counts = np.zeros((e12.size - 1, e13.size - 1), dtype=np.int64)
    if min(t1.size, t2.size, t3.size) == 0:
        return counts
    for s in range(0, t1.size, block):
        a = t1[s:s + block]
        lo2 = np.searchsorted(t2, a - window, side="left")
        hi2 = np.searchsorted(t2, a + window, side="right")
        lo3 = np.searchsorted(t3, a - window, side="left")
        hi3 = np.searchsorted(t3, a + window, side="right")
        n2, n3 = hi2 - lo2, hi3 - lo3
        rep = n2 * n3
        total = int(rep.sum())
        if total == 0:
            continue
        owner = np.repeat(np.arange(a.size), rep)
        offs = np.arange(total) - np.repeat(np.cumsum(rep) - rep, rep)
        j = lo2[owner] + offs // n3[owner]
        k = lo3[owner] + offs % n3[owner]
        ta, tb, tc = a[owner], t2[j], t3[k]
        keep = np.abs(tb - tc) <= window
        h, _, _ = np.histogram2d(ta[keep] - tb[keep], ta[keep] - tc[keep], bins=(e12, e13))
        counts += h.astype(np.int64)
    return counts


def _normalize(counts, singles, duration, widths):
    denom = np.prod(singles.astype(float)) / duration ** (len(singles) - 1)
    denom = denom * widths
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(denom > 0, counts / denom, 0.0)
    return g


def correlate(streams: EventStreams, order: int, window: float, edges,
              coherence_time: Optional[float] = None, n_blocks: int = 20) -> CorrelationResult:
    """n-fold coincidence histogram normalized by singles rates and bin widths.

    Order 2 bins t1 - t2; order 3 bins (t1 - t2, t1 - t3) and keeps tuples
    whose largest pairwise separation is within ``window``. Every qualifying
    tuple counts (no event consumption). The standard error comes from
    ``n_blocks`` contiguous time blocks.
    """
    if order not in (2, 3):
        raise UsageError("correlate supports order 2 or 3")
    if len(streams.times) < order:
        raise UsageError(f"need {order} detector streams")
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise UsageError("bin edges must be strictly increasing")
    notes = []
    if coherence_time is not None and window >= coherence_time:
        notes.append("window is not shorter than the coherence time")
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
    edges = edges[(edges >= -window - 1e-300) & (edges <= window + 1e-300)]
    if edges.size < 2:
        raise UsageError("no bin edges inside the coincidence window")
    ts = [np.asarray(t, dtype=float) for t in streams.times[:order]]
    D = streams.duration
    singles = np.array([t.size for t in ts], dtype=np.int64)
    w = np.diff(edges)

    def compute(sub, dur):
        s = np.array([t.size for t in sub])
        if order == 2:
            c = _pair_counts(sub[0], sub[1], edges)
            return c, _normalize(c, s, dur, w)
        c = _triple_counts(sub[0], sub[1], sub[2], edges, edges, window)
        return c, _normalize(c, s, dur, np.outer(w, w))

    if singles.min() == 0:
        shape = (w.size,) if order == 2 else (w.size, w.size)
        return CorrelationResult(order, (edges,) * (order - 1), np.zeros(shape),
                                 np.zeros(shape, dtype=np.int64), singles, window, D, None, notes)
    counts, g = compute(ts, D)
    blocks = []
    bounds = np.linspace(0.0, D, n_blocks + 1)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        sub = [t[(t >= lo) & (t < hi)] for t in ts]
        if min(x.size for x in sub) == 0:
            continue
        blocks.append(compute(sub, hi - lo)[1])
    stderr = None
    if len(blocks) > 1:
        stderr = np.std(np.array(blocks), axis=0, ddof=1) / math.sqrt(len(blocks))
    return CorrelationResult(order, (edges,) * (order - 1), g, counts, singles, window, D, stderr, notes)


def intensity_correlation(trace1, trace2, trace3=None, max_lag: int = 0) -> CorrelationResult:
    """⟨I1 I2⟩/(⟨I1⟩⟨I2⟩) on integer lags, or the triple product at zero lag."""
    a = np.asarray(trace1, dtype=float)
    b = np.asarray(trace2, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise UsageError("intensity traces must be equal-length 1-D arrays")
    if trace3 is not None:
        c = np.asarray(trace3, dtype=float)
        if c.shape != a.shape:
            raise UsageError("intensity traces must be equal-length 1-D arrays")
        ma, mb, mc = (math.fsum(v) / v.size for v in (a, b, c))
        da, db, dc = a - ma, b - mb, c - mc
        g = 1 + (ma * np.mean(db * dc) + mb * np.mean(da * dc) + mc * np.mean(da * db)
                 + np.mean(da * db * dc)) / (ma * mb * mc)
        return CorrelationResult(3, (np.array([-0.5, 0.5]),) * 2, np.array([[g]]),
                                 np.zeros((1, 1), dtype=np.int64), np.array([a.size] * 3), 0.0,
                                 float(a.size))
    lags = np.arange(-max_lag, max_lag + 1)
    ma, mb = math.fsum(a) / a.size, math.fsum(b) / b.size
    g = np.empty(lags.size)
    for i, lag in enumerate(lags):
        if lag >= 0:
            x, y = a[:a.size - lag], b[lag:]
        else:
            x, y = a[-lag:], b[:b.size + lag]
        # fluctuation form keeps constant traces at exactly 1
        dx, dy = x - ma, y - mb
        g[i] = 1 + (ma * dy.mean() + mb * dx.mean() + np.mean(dx * dy)) / (ma * mb)
    edges = np.concatenate([lags - 0.5, [lags[-1] + 0.5]])
    return CorrelationResult(2, (edges,), g, np.zeros(lags.size, dtype=np.int64),
                             np.array([a.size, b.size]), 0.0, float(a.size))
