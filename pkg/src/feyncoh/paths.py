"""Enumeration of ways and paths, distinguishability, and amplitude sums.

A *way* is one multiset of emissions (which sources fired, how often); its
*paths* are the detector assignments of those emissions. Amplitudes of
indistinguishable paths add (across ways too); distinguishable alternatives
add probabilities. Normalization divides by the same sum with every cross
term disabled.
"""

from __future__ import annotations

import enum
import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .core import (DomainError, UsageError, Geometry, SourceKind, SourceSpec, Statistics,
                   SINGLE_EMITTER_KINDS)
from .propagators import SpacetimePoint, point_propagator

MAX_ORDER = 4
MAX_CASCADE_PATHS = 4096
CHUNK = 4096

Carrier = Tuple[int, ...]  # (source, label) or (source, stage, node)


class UnsupportedOrderError(ValueError):
    pass


class Reason(str, enum.Enum):
    MOMENTUM_RESOLVABLE = "MomentumResolvable"
    OUTSIDE_COHERENCE_VOLUME = "OutsideCoherenceVolume"
    SOURCE_STATUS_MEASURABLE = "SourceStatusMeasurable"


@dataclass(frozen=True)
class Verdict:
    distinguishable: bool
    reason: Optional[Reason] = None

    def __post_init__(self):
        if self.distinguishable != (self.reason is not None):
            raise ValueError("a reason is required exactly when distinguishable")

    def __str__(self):
        return f"Distinguishable({self.reason.value})" if self.distinguishable else "Indistinguishable"


INDISTINGUISHABLE = Verdict(False)


@dataclass(frozen=True)
class Path:
    """One detector assignment of a way's emissions.

    ``factors`` lists (carrier, detector) pairs whose propagators multiply;
    ``phase_symbols`` lists the initial-phase labels picked up.
    """

    assignment: Tuple[Tuple[int, int, int], ...]  # (source, emission label, detector)
    factors: Tuple[Tuple[Carrier, int], ...]
    phase_symbols: Tuple[Hashable, ...]
    reflection_count: int = 0
    sign: int = 1
    emissions: Tuple[int, ...] = ()
    n_detectors: int = 0
    emission_times: Tuple[float, ...] = ()

    def __post_init__(self):
        dets = [a[2] for a in self.assignment]
        if sorted(dets) != sorted(set(dets)):
            raise ValueError("each detector may appear only once in a path")

    def identity_key(self):
        return (tuple(sorted(self.factors)), tuple(sorted(self.phase_symbols, key=repr)),
                self.reflection_count % 4, self.sign)


@dataclass(frozen=True)
class Way:
    probability_weight: float
    paths: Tuple[Path, ...]
    emissions: Tuple[int, ...]  # emission count per source
    distinguishable_from_other_ways: bool = False

    def __post_init__(self):
        if not self.paths:
            raise ValueError("a way needs at least one path")
        if not 0.0 <= self.probability_weight <= 1.0 + 1e-12:
            raise ValueError("way weight must lie in [0, 1]")
        if any(p.emissions != self.emissions for p in self.paths):
            raise ValueError("all paths of a way share its emission multiset")


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------

def _parity(perm: Sequence[int]) -> int:
    perm = list(perm)
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _compositions(n: int, caps: Sequence[Optional[int]]):
    """All count vectors summing to n with per-entry upper bounds."""
    if not caps:
        if n == 0:
            yield ()
        return
    cap = n if caps[0] is None else min(n, caps[0])
    for c in range(cap + 1):
        for rest in _compositions(n - c, caps[1:]):
            yield (c,) + rest


def _reflections(port: int, detector: int, beam_splitter: bool) -> int:
    if not beam_splitter:
        return 0
    return 0 if port % 2 == detector % 2 else 1


def _way_weight(counts, probs) -> float:
    n = sum(counts)
    w = math.factorial(n)
    for c, p in zip(counts, probs):
        w *= p ** c / math.factorial(c)
    return w


def enumerate_ways(sources: Sequence[SourceSpec], n_detectors: int, order: Optional[int] = None,
                   beam_splitter: bool = False, collapse: bool = True) -> List[Way]:
    """Every emission multiset of ``order`` quanta and its detector assignments.

    Weights are multinomial in the intensity fractions, restricted to the
    multisets each source kind allows and renormalized to sum to 1.
    With ``beam_splitter`` the source index is its input port and a path
    picks up one reflection whenever port and detector parity differ.
    """
    order = n_detectors if order is None else order
    if order < 1:
        raise UsageError("order must be >= 1")
    if order > MAX_ORDER:
        raise UnsupportedOrderError(f"order {order} exceeds the supported maximum {MAX_ORDER}")
    if n_detectors < order:
        raise UsageError("need at least as many detectors as the correlation order")
    if not sources:
        raise UsageError("at least one source is required")
    cascades = [s for s in sources if s.kind is SourceKind.SUPERBUNCHING_CASCADE]
    if cascades:
        if len(sources) != 1:
            raise UsageError("a superbunching cascade must be the only source")
        return [_cascade_way(sources[0], order, beam_splitter)]

    total = sum(s.intensity_weight for s in sources)
    if total <= 0:
        raise DomainError("total source intensity must be positive")
    probs = [s.intensity_weight / total for s in sources]
    caps = [s.max_emissions for s in sources]
    entangled = [i for i, s in enumerate(sources) if s.kind is SourceKind.ENTANGLED_PAIR]

    raw = []
    for counts in _compositions(order, caps):
        if any(counts[i] == 0 for i in entangled):
            continue
        w = _way_weight(counts, probs)
        if w > 0:
            raw.append((counts, w))
    if not raw:
        raise UsageError("no allowed emission multiset for this source set and order")
    wsum = sum(w for _, w in raw)

    ways = []
    for counts, w in raw:
        paths = _paths_for(sources, counts, order, beam_splitter, collapse)
        single = any(counts[i] > 0 and sources[i].kind in SINGLE_EMITTER_KINDS
                     for i in range(len(sources)))
        ways.append(Way(w / wsum, tuple(paths), tuple(counts),
                        distinguishable_from_other_ways=single and len(raw) > 1))
    return ways


def _paths_for(sources, counts, order, beam_splitter, collapse) -> List[Path]:
    emissions = [(i, label) for i, c in enumerate(counts) for label in range(c)]
    paths, seen = [], set()
    for perm in itertools.permutations(range(order)):
        assignment, factors, symbols = [], [], []
        refl = 0
        for (src, label), det in zip(emissions, perm):
            spec = sources[src]
            shared = spec.is_coherent
            carrier = (src, 0) if shared else (src, label)
            assignment.append((src, label, det))
            factors.append((carrier, det))
            symbols.append(("phi",) + carrier)
            refl += _reflections(src, det, beam_splitter)
        stats = {sources[s].statistics for s, _ in emissions}
        sign = _parity(perm) if stats == {Statistics.FERMION} else 1
        if len(stats) > 1:
            raise UsageError("mixing boson and fermion sources in one correlation is not supported")
        path = Path(tuple(assignment), tuple(factors), tuple(symbols), refl, sign,
                    tuple(counts), order)
        key = path.identity_key()
        if collapse and key in seen:
            continue
        seen.add(key)
        paths.append(path)
    return paths


def _cascade_way(source: SourceSpec, order: int, beam_splitter: bool) -> Way:
    stages = int(source.stages)
    n_paths = math.factorial(order) ** stages
    if n_paths > MAX_CASCADE_PATHS:
        raise UnsupportedOrderError(
            f"cascade with {stages} stages at order {order} needs {n_paths} paths "
            f"(limit {MAX_CASCADE_PATHS})")
    perms = list(itertools.permutations(range(order)))
    paths = []
    for choice in itertools.product(perms, repeat=stages):
        factors, symbols = [], []
        for stage, perm in enumerate(choice):
            for node, det in enumerate(perm):
                factors.append(((0, stage, node), det))
                symbols.append(("phi", 0, stage, node))
        final = choice[-1]
        refl = sum(_reflections(0, det, beam_splitter) for det in final)
        assignment = tuple((0, node, det) for node, det in enumerate(final))
        paths.append(Path(assignment, tuple(factors), tuple(symbols), refl, 1, (order,), order))
    return Way(1.0, tuple(paths), (order,))


# ---------------------------------------------------------------------------
# Distinguishability
# ---------------------------------------------------------------------------

def classify(a: Path, b: Path, geometry: Geometry, detectors, sources: Sequence[SourceSpec]) -> Verdict:
    """Binary distinguishability verdict for two paths of one configuration."""
    if a.n_detectors != b.n_detectors or {x[2] for x in a.assignment} != {x[2] for x in b.assignment}:
        raise UsageError("paths belong to different configurations")
    used = {x[0] for x in a.assignment} | {x[0] for x in b.assignment}
    if max(used) >= len(sources):
        raise UsageError("path references a source outside the configuration")

    positions = [sources[i].position for i in used]
    dx_min = min(d.dx for d in detectors) if detectors else 1e-10
    if len(positions) > 1 and max(positions) - min(positions) > geometry.wavelength * geometry.L / dx_min:
        return Verdict(True, Reason.MOMENTUM_RESOLVABLE)

    if a.emission_times and b.emission_times:
        ta = {(s, l): t for (s, l, _), t in zip(a.assignment, a.emission_times)}
        tb = {(s, l): t for (s, l, _), t in zip(b.assignment, b.emission_times)}
        for key in ta.keys() & tb.keys():
            src = sources[key[0]]
            tau_c = src.phase_model.tau_c if src.is_coherent else src.spectrum.coherence_time()
            if abs(ta[key] - tb[key]) > tau_c:
                return Verdict(True, Reason.OUTSIDE_COHERENCE_VOLUME)

    if a.emissions != b.emissions:
        involved = [i for i in range(len(sources))
                    if (i < len(a.emissions) and a.emissions[i]) or (i < len(b.emissions) and b.emissions[i])]
        if any(sources[i].kind in SINGLE_EMITTER_KINDS for i in involved):
            return Verdict(True, Reason.SOURCE_STATUS_MEASURABLE)
    return INDISTINGUISHABLE


# ---------------------------------------------------------------------------
# Amplitudes
# ---------------------------------------------------------------------------

def path_amplitude(path: Path, phases: Mapping[Hashable, object], K: Mapping, bs_reflection_phase: float = np.pi / 2):
    try:
        phi = sum(phases[s] for s in path.phase_symbols)
    except KeyError as exc:
        raise UsageError(f"phase symbol {exc.args[0]!r} is not assigned") from None
    amp = path.sign * np.exp(1j * (phi + path.reflection_count * bs_reflection_phase))
    for factor in path.factors:
        amp = amp * K[factor]
    return amp


def way_amplitude(way: Way, phase_assignment: Mapping[Hashable, object], K: Mapping,
                  bs_reflection_phase: float = np.pi / 2):
    """Σ_paths sign·e^{i(Σφ + r·θ_BS)}·ΠK, divided by √(path count).

    ``K`` maps (carrier, detector) to a propagator value (scalar or array).
    Identical paths were already collapsed when the way was built.
    """
    total = 0
    for p in way.paths:
        total = total + path_amplitude(p, phase_assignment, K, bs_reflection_phase)
    return total / math.sqrt(len(way.paths))


def boson_path_oracle(K) -> complex:
    """Permanent by explicit permutation expansion."""
    return _permutation_sum(K, fermion=False)


def fermion_path_oracle(K) -> complex:
    """Determinant by explicit signed permutation expansion."""
    return _permutation_sum(K, fermion=True)


def _permutation_sum(K, fermion: bool) -> complex:
    K = np.asarray(K, dtype=complex)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise UsageError("propagator matrix must be square")
    n = K.shape[0]
    if n > MAX_ORDER:
        raise UnsupportedOrderError(f"oracle supports n <= {MAX_ORDER}")
    total = 0j
    for perm in itertools.permutations(range(n)):
        term = complex(_parity(perm)) if fermion else 1 + 0j
        for i, j in enumerate(perm):
            term *= K[i, j]
        total += term
    return total


def matrix_path_sum(K, statistics: Statistics = Statistics.BOSON) -> complex:
    """Unnormalized path sum for n distinct emissions and a given K matrix.

    Builds the n-emission way of a random-phase source through the
    enumeration machinery and evaluates it with zero initial phases.
    """
    K = np.asarray(K, dtype=complex)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise UsageError("propagator matrix must be square")
    n = K.shape[0]
    from .core import Spectrum
    src = SourceSpec(SourceKind.THERMAL, Spectrum.monochromatic(1.0), statistics=statistics)
    (way,) = enumerate_ways([src], n, n)
    table = {((0, i), j): K[i, j] for i in range(n) for j in range(n)}
    phases = {("phi", 0, i): 0.0 for i in range(n)}
    return way_amplitude(way, phases, table) * math.sqrt(len(way.paths))


# ---------------------------------------------------------------------------
# Ensemble evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DetectionPoint:
    x: float = 0.0  # m
    t: float = 0.0  # s


@dataclass(frozen=True)
class Experiment:
    """Sources, detector set and geometry for an n-fold correlation."""

    sources: Tuple[SourceSpec, ...]
    geometry: Geometry
    order: int = 2
    beam_splitter: bool = False
    detectors: Tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        if not self.detectors:
            from .core import DetectorSpec
            object.__setattr__(self, "detectors",
                               tuple(DetectorSpec(id=i) for i in range(self.order)))

    def ways(self, collapse: bool = True) -> List[Way]:
        return enumerate_ways(self.sources, len(self.detectors), self.order,
                              self.beam_splitter, collapse)


@dataclass(frozen=True)
class EnsembleResult:
    value: float       # normalized probability
    stderr: float
    raw: float         # un-normalized mean probability
    baseline: float    # mean of the cross-term-free probability
    n_samples: int


def _coherence_groups(ways, experiment: Experiment, force_distinguishable: bool):
    flat = [(wi, p) for wi, w in enumerate(ways) for p in w.paths]
    parent = list(range(len(flat)))
    if force_distinguishable:
        return flat, parent

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    cache: Dict[Tuple[int, int], Verdict] = {}
    for i in range(len(flat)):
        for j in range(i + 1, len(flat)):
            wi, wj = flat[i][0], flat[j][0]
            if wi != wj and (ways[wi].distinguishable_from_other_ways
                             or ways[wj].distinguishable_from_other_ways):
                continue
            key = (wi, wj)
            if wi != wj and key in cache:
                verdict = cache[key]
            else:
                verdict = classify(flat[i][1], flat[j][1], experiment.geometry,
                                   experiment.detectors, experiment.sources)
                if wi != wj:
                    cache[key] = verdict
            if not verdict.distinguishable:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    return flat, [find(i) for i in range(len(flat))]


def _carriers(ways) -> List[Carrier]:
    out = []
    for w in ways:
        for p in w.paths:
            for c, _ in p.factors:
                if c not in out:
                    out.append(c)
    return out


def _sample_chunk(experiment: Experiment, carriers, points, size, rng,
                  fixed_phases: Optional[Mapping[int, float]]):
    """Draw carrier parameters and return (K table, phase table) for one chunk."""
    geom = experiment.geometry
    by_source: Dict[int, Dict] = {}
    omegas, xs, phis = {}, {}, {}
    for c in carriers:
        src_i = c[0]
        spec = experiment.sources[src_i]
        if spec.is_coherent:
            if src_i not in by_source:
                lo = spec.position - spec.extent / 2
                by_source[src_i] = dict(
                    omega=spec.spectrum.sample(rng, size),
                    x=lo + spec.extent * rng.random(size) if spec.extent > 0 else np.full(size, spec.position),
                    phi=rng.uniform(0, 2 * np.pi, size),
                )
            draw = by_source[src_i]
            omegas[c], xs[c], phis[c] = draw["omega"], draw["x"], draw["phi"]
        else:
            omegas[c] = spec.spectrum.sample(rng, size)
            lo = spec.position - spec.extent / 2
            xs[c] = lo + spec.extent * rng.random(size) if spec.extent > 0 else np.full(size, spec.position)
            phis[c] = rng.uniform(0, 2 * np.pi, size)
        if fixed_phases and src_i in fixed_phases:
            phis[c] = np.full(size, float(fixed_phases[src_i]))

    t_shift = max(0.0, -min(p.t for p in points))
    K = {}
    for c in carriers:
        spec = experiment.sources[c[0]]
        k = geom.k * omegas[c] / spec.spectrum.omega0
        emit = SpacetimePoint(0.0, 0.0, 0.0)
        for d, pt in enumerate(points):
            detect = SpacetimePoint(pt.x - xs[c], geom.L, pt.t + t_shift)
            K[(c, d)] = point_propagator(emit, detect, omegas[c], k=k, paraxial=geom.paraxial) * geom.L
    phases = {("phi",) + c: phis[c] for c in carriers}
    return K, phases


def _chunk_moments(experiment, ways, flat, groups, carriers, points, size, seed, chunk_index,
                   fixed_phases, bs_phase, gamma_factor):
    ss = np.random.SeedSequence(seed, spawn_key=(0xE45E, chunk_index))
    rng = np.random.Generator(np.random.Philox(ss))
    K, phases = _sample_chunk(experiment, carriers, points, size, rng, fixed_phases)
    group_amp: Dict[int, np.ndarray] = {}
    base = np.zeros(size)
    for (wi, path), g in zip(flat, groups):
        way = ways[wi]
        scale = math.sqrt(way.probability_weight / len(way.paths))
        a = scale * path_amplitude(path, phases, K, bs_phase)
        a = np.broadcast_to(a, (size,))
        group_amp[g] = group_amp.get(g, 0) + a
        base = base + np.abs(a) ** 2
    prob = np.zeros(size)
    for g in sorted(group_amp):
        prob = prob + np.abs(group_amp[g]) ** 2
    prob = prob * gamma_factor
    return np.array([prob.sum(), (prob * prob).sum(), base.sum(), (base * base).sum(),
                     (prob * base).sum(), float(size)])


def worker_count(requested: Optional[int] = None) -> int:
    cap = os.environ.get("FEYNCOH_THREADS")
    n = requested or os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, n)


def ensemble_probability(experiment: Experiment, points: Sequence[DetectionPoint],
                         n_samples: int = 10000, seed: int = 0,
                         fixed_phases: Optional[Mapping[int, float]] = None,
                         force_distinguishable: bool = False,
                         bs_reflection_phase: float = np.pi / 2,
                         workers: Optional[int] = None,
                         ways: Optional[List[Way]] = None) -> EnsembleResult:
    """Ensemble-averaged n-fold probability normalized by the uncorrelated baseline.

    Samples carry frequencies, emission positions and initial phases drawn
    per the source models. Work is split into fixed-size chunks with
    independent Philox substreams and reduced in chunk order, so the
    result does not depend on the worker count.
    """
    if n_samples < 1:
        raise UsageError("n_samples must be >= 1")
    if len(points) != experiment.order:
        raise UsageError(f"need {experiment.order} detection points, got {len(points)}")
    ways = ways if ways is not None else experiment.ways()
    flat, groups = _coherence_groups(ways, experiment, force_distinguishable)
    carriers = _carriers(ways)

    gamma_factor = 1.0
    for s in experiment.sources:
        if s.kind is SourceKind.SUPERBUNCHING_MODULATED:
            if experiment.order != 2:
                raise UsageError("modulated superbunching is defined for second order only")
            gamma_factor *= float(s.gamma(points[0].t - points[1].t))

    sizes = [CHUNK] * (n_samples // CHUNK)
    if n_samples % CHUNK:
        sizes.append(n_samples % CHUNK)
    args = [(experiment, ways, flat, groups, carriers, points, size, seed, i,
             fixed_phases, bs_reflection_phase, gamma_factor) for i, size in enumerate(sizes)]
    nw = min(worker_count(workers), len(sizes))
    if nw > 1:
        with ThreadPoolExecutor(nw) as pool:
            parts = list(pool.map(lambda a: _chunk_moments(*a), args))
    else:
        parts = [_chunk_moments(*a) for a in args]
    tot = np.zeros(6)
    for part in parts:
        tot = tot + part
    n = tot[5]
    mp, mb = tot[0] / n, tot[2] / n
    vp = max(tot[1] / n - mp * mp, 0.0)
    vb = max(tot[3] / n - mb * mb, 0.0)
    cpb = tot[4] / n - mp * mb
    if mb <= 0:
        raise ArithmeticError("uncorrelated baseline vanished")
    ratio = mp / mb
    var_ratio = (vp - 2 * ratio * cpb + ratio * ratio * vb) / (mb * mb * n)
    return EnsembleResult(ratio, math.sqrt(max(var_ratio, 0.0)), mp, mb, int(n))
