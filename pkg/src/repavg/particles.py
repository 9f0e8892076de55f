"""Fragmentation particle model coupled to the continuous-time chain.

``2**H`` particles start in one pile at site 0.  When a pair with exactly one
occupied site rings, that pile splits in two halves (its ``alpha`` counter goes
up by one); a pile of size one cannot split and is discarded instead.  When
both sites are occupied, both piles are discarded (a collision, the ``beta``
event).  Pile sizes stay powers of two with ``size == 2**(H - alpha)``, so the
per-site weight ``w = size / 2**H`` equals ``2**-alpha``.

Piles are the unit of state.  Which particles of a splitting pile go where is
uniform in the underlying model but never affects any quantity computed here,
so particle identities are not tracked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numba import njit

from . import _csv
from .core import CHUNK, _average_inplace, sample_pairs, t_of_a
from .errors import CouplingFailure, InvalidArgument, InvalidDimension, InvalidPair
from .stats import normal_cdf
from .streams import CLOCK, PAIRS, PARTICLES, map_replicates, replicate_rng

DOMINANCE_TOL = 1e-12


def h_n(n: int) -> int:
    """``floor(log2 n - (log2 n)**(1/3))``, floored at 0.

    Exact for powers of two, where ``log2 n`` is an integer and the floor can
    be settled with integer cubes.
    """
    if n < 2:
        raise InvalidDimension(f"n must be >= 2, got {n}")
    L = n.bit_length() - 1 if n & (n - 1) == 0 else math.log2(n)
    h = math.floor(L - L ** (1 / 3))
    # h <= L - L^(1/3)  <=>  (L - h)^3 >= L
    while (L - (h + 1)) >= 0 and (L - (h + 1)) ** 3 >= L:
        h += 1
    while h > 0 and (L - h) ** 3 < L:
        h -= 1
    return max(h, 0)


@dataclass(frozen=True)
class Pile:
    site: int
    size: int
    alpha: int


@dataclass
class ParticleModel:
    n: int
    H: int
    sizes: np.ndarray
    alphas: np.ndarray
    # discards by alpha at the time of discard; index H+1 holds overflow discards
    alpha_discards: np.ndarray
    beta_discards: np.ndarray

    @classmethod
    def initial(cls, n: int, H: Optional[int] = None) -> "ParticleModel":
        H = h_n(n) if H is None else H
        sizes = np.zeros(n, dtype=np.int64)
        sizes[0] = 1 << H
        return cls(
            n,
            H,
            sizes,
            np.zeros(n, dtype=np.int64),
            np.zeros(H + 2, dtype=np.int64),
            np.zeros(H + 2, dtype=np.int64),
        )

    @property
    def total(self) -> int:
        return 1 << self.H

    @property
    def piles(self) -> dict:
        sites = np.flatnonzero(self.sizes)
        return {int(s): Pile(int(s), int(self.sizes[s]), int(self.alphas[s])) for s in sites}

    @property
    def graveyard_particles(self) -> int:
        return int(self.alpha_discards.sum() + self.beta_discards.sum())

    @property
    def discard_alpha_histogram(self) -> dict:
        return {a: int(c) for a, c in enumerate(self.alpha_discards) if c}

    @property
    def beta_discard_histogram(self) -> dict:
        return {a: int(c) for a, c in enumerate(self.beta_discards) if c}

    @property
    def alive_alpha_counts(self) -> np.ndarray:
        occ = self.sizes > 0
        return np.bincount(self.alphas[occ], weights=self.sizes[occ], minlength=self.H + 1).astype(np.int64)

    @property
    def weights(self) -> np.ndarray:
        return self.sizes / float(1 << self.H)

    def snapshot(self, time: float, events: int = 0) -> "ParticleSnapshot":
        return ParticleSnapshot(
            time=time,
            H=self.H,
            alive_alpha_counts=self.alive_alpha_counts,
            n_piles=int(np.count_nonzero(self.sizes)),
            graveyard=self.graveyard_particles,
            beta_graveyard=int(self.beta_discards.sum()),
            events=events,
        )


@dataclass(frozen=True)
class ParticleSnapshot:
    time: float
    H: int
    alive_alpha_counts: np.ndarray
    n_piles: int
    graveyard: int
    beta_graveyard: int
    events: int = 0

    @property
    def alive(self) -> int:
        return int(self.alive_alpha_counts.sum())

    @property
    def sum_w(self) -> float:
        return self.alive / 2**self.H

    @property
    def discarded_fraction(self) -> float:
        return self.graveyard / 2**self.H

    @property
    def beta_discard_fraction(self) -> float:
        return self.beta_graveyard / 2**self.H

    @property
    def mean_alpha(self) -> float:
        c = self.alive_alpha_counts
        alive = c.sum()
        return float(np.dot(np.arange(c.size), c) / alive) if alive else math.nan


@njit(cache=True, nogil=True)
def _particle_pair(sizes, alphas, alpha_disc, beta_disc, H, i, j):
    si = sizes[i]
    sj = sizes[j]
    if si == 0 and sj == 0:
        return
    if si > 0 and sj > 0:
        beta_disc[alphas[i]] += si
        beta_disc[alphas[j]] += sj
        sizes[i] = 0
        sizes[j] = 0
        return
    if si > 0:
        src, dst, s = i, j, si
    else:
        src, dst, s = j, i, sj
    if s == 1:
        # the children would sit below weight 2^-H
        alpha_disc[H + 1] += 1
        sizes[src] = 0
        return
    a = alphas[src] + 1
    sizes[src] = s // 2
    sizes[dst] = s // 2
    alphas[src] = a
    alphas[dst] = a


@njit(cache=True, nogil=True)
def _coupled_codes(values, sizes, alphas, alpha_disc, beta_disc, H, codes):
    m = values.shape[0] - 1
    for c in codes:
        i = c // m
        j = c % m
        if j >= i:
            j += 1
        else:
            i, j = j, i
        _average_inplace(values, i, j, 0.5)
        _particle_pair(sizes, alphas, alpha_disc, beta_disc, H, i, j)


@njit(cache=True, nogil=True)
def _thinned_until(sizes, alphas, alpha_disc, beta_disc, H, occ, pos, m, rng, t, t_end):
    """Advance the standalone model from ``t`` to ``t_end``.

    Only events touching an occupied site are simulated: with ``m`` occupied
    sites they ring at rate ``1 - C(n-m, 2)/C(n, 2)`` and the pair is uniform
    over such pairs.  Returns ``(m, events)``.
    """
    n = sizes.shape[0]
    cn2 = n * (n - 1) / 2.0
    events = 0
    while m > 0:
        free = n - m
        both = m * (m - 1) / 2.0
        touching = m * free + both
        dt = rng.standard_exponential() * cn2 / touching
        if t + dt > t_end:
            break
        t += dt
        events += 1
        if rng.random() * touching < both:
            a = rng.integers(0, m)
            b = rng.integers(0, m - 1)
            if b >= a:
                b += 1
            i = occ[a]
            j = occ[b]
        else:
            i = occ[rng.integers(0, m)]
            j = rng.integers(0, n)
            while sizes[j] != 0:
                j = rng.integers(0, n)
        oi = sizes[i] > 0
        oj = sizes[j] > 0
        _particle_pair(sizes, alphas, alpha_disc, beta_disc, H, i, j)
        for site, was in ((i, oi), (j, oj)):
            now = sizes[site] > 0
            if was and not now:
                k = pos[site]
                last = occ[m - 1]
                occ[k] = last
                pos[last] = k
                m -= 1
            elif now and not was:
                occ[m] = site
                pos[site] = m
                m += 1
    return m, events


def particle_event(model: ParticleModel, i: int, j: int, rng=None) -> ParticleModel:
    """Apply one ring of pair ``(i, j)`` to ``model`` in place and return it.

    ``rng`` is accepted for the uniform division of a splitting pile, which
    only affects particle identities and is therefore not needed.
    """
    if i == j:
        raise InvalidPair(f"pair must be distinct, got ({i}, {j})")
    if not (0 <= i < model.n and 0 <= j < model.n):
        raise InvalidPair(f"pair ({i}, {j}) out of range for n={model.n}")
    _particle_pair(
        model.sizes, model.alphas, model.alpha_discards, model.beta_discards, model.H, i, j
    )
    return model


def _record_times(record_ts, t_end):
    ts = [float(t_end)] if record_ts is None else sorted(set(float(t) for t in record_ts))
    if t_end < 0 or (ts and ts[0] < 0):
        raise InvalidArgument("times must be >= 0")
    if ts and ts[-1] > t_end:
        raise InvalidArgument("record times must not exceed t_end")
    return ts


def run_particles(
    n: int,
    t_end: float,
    seed: int,
    record_ts: Optional[Sequence[float]] = None,
    replicate: int = 0,
) -> list[ParticleSnapshot]:
    """Standalone particle model on the thinned event stream."""
    ts = _record_times(record_ts, t_end)
    model = ParticleModel.initial(n)
    rng = replicate_rng(seed, replicate, PARTICLES)
    occ = np.zeros(n, dtype=np.int64)
    pos = np.zeros(n, dtype=np.int64)
    occ[0] = 0
    pos[0] = 0
    m = 1
    t = 0.0
    events = 0
    out = []
    for tr in ts:
        m, k = _thinned_until(
            model.sizes, model.alphas, model.alpha_discards, model.beta_discards,
            model.H, occ, pos, m, rng, t, tr,
        )
        events += k
        t = tr
        out.append(model.snapshot(tr, events))
    return out


def weighted_mass(model, alpha_cutoff: float) -> float:
    """Mass ``sum_i w_i 1[alpha_i <= cutoff]`` over alive piles.

    ``model`` may be a :class:`ParticleModel` or a :class:`ParticleSnapshot`.
    """
    counts = model.alive_alpha_counts
    if alpha_cutoff < 0:
        return 0.0
    top = min(int(math.floor(alpha_cutoff)), model.H)
    return float(counts[: top + 1].sum()) / 2**model.H


def alpha_cutoff(n: int, delta: float) -> float:
    L = math.log2(n)
    return L - delta * math.sqrt(L)


@dataclass
class CouplingReport:
    n: int
    H: int
    times: list = field(default_factory=list)
    sum_w: list = field(default_factory=list)
    discarded_fraction: list = field(default_factory=list)
    beta_discard_fraction: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    T: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)

    @property
    def max_dominance_violation(self) -> float:
        return max(self.violations, default=0.0)

    def rows(self):
        return zip(
            self.times, self.sum_w, self.discarded_fraction,
            self.beta_discard_fraction, self.violations,
        )


COUPLING_HEADER = "t,sum_w,discarded_fraction,beta_discard_fraction,max_violation"


def coupling_csv(report: CouplingReport, **meta) -> str:
    return _csv.render(_csv.meta_line(**meta), COUPLING_HEADER, report.rows())


def coupled_run(
    n: int,
    t_end: float,
    seed: int,
    record_ts: Optional[Sequence[float]] = None,
    replicate: int = 0,
    tol: Optional[float] = None,
) -> CouplingReport:
    """Drive the chain from ``e_1`` and the particle model with one event stream.

    The chain uses the same pair and clock streams as
    :func:`repavg.core.run_continuous` with a delta start, so its trajectory
    matches that run for equal seeds and record times.
    """
    ts = _record_times(record_ts, t_end)
    tol = DOMINANCE_TOL if tol is None else tol
    model = ParticleModel.initial(n)
    values = np.zeros(n)
    values[0] = 1.0
    mean = 1.0 / n
    pairs = replicate_rng(seed, replicate, PAIRS)
    clock = replicate_rng(seed, replicate, CLOCK)
    scale = float(1 << model.H)
    rep = CouplingReport(n, model.H)
    prev, events = 0.0, 0
    for t in ts:
        k = int(clock.poisson(t - prev)) if t > prev else 0
        events += k
        while k > 0:
            step = min(k, CHUNK)
            _coupled_codes(
                values, model.sizes, model.alphas, model.alpha_discards,
                model.beta_discards, model.H, sample_pairs(n, pairs, step),
            )
            k -= step
        prev = t
        bound = (values - mean) + 1.0 / n
        diff = model.sizes / scale - bound
        site = int(np.argmax(diff))
        worst = float(diff[site])
        if worst > tol:
            raise CouplingFailure(t, site, float(model.sizes[site] / scale), float(bound[site]))
        snap = model.snapshot(t, events)
        rep.times.append(t)
        rep.sum_w.append(snap.sum_w)
        rep.discarded_fraction.append(snap.discarded_fraction)
        rep.beta_discard_fraction.append(snap.beta_discard_fraction)
        rep.violations.append(max(worst, 0.0))
        rep.T.append(float(np.abs(values - mean).sum()))
        rep.snapshots.append(snap)
    return rep


WEIGHTED_HEADER = "n,a,delta,replicate,weighted_mass,target_phi"


@dataclass(frozen=True)
class WeightedRow:
    n: int
    a: float
    delta: float
    replicate: int
    weighted_mass: float
    target_phi: float


def weighted_estimate(
    n: int,
    a_values: Sequence[float],
    deltas: Sequence[float],
    replicates: int,
    seed: int,
    threads: int = 0,
) -> list[WeightedRow]:
    """Weighted mass at ``t(a)`` for every ``(a, delta)``, one standalone run per replicate."""
    if replicates < 1:
        raise InvalidArgument("replicates must be >= 1")
    times = {a: max(t_of_a(n, a), 0.0) for a in a_values}
    record = sorted(set(times.values()))

    def one(r):
        snaps = run_particles(n, record[-1], seed, record, replicate=r)
        return {s.time: s for s in snaps}

    results = map_replicates(one, replicates, threads)
    rows = []
    for a in a_values:
        for d in deltas:
            cut = alpha_cutoff(n, d)
            target = normal_cdf(-a - d)
            for r, snaps in enumerate(results):
                rows.append(WeightedRow(n, a, d, r, weighted_mass(snaps[times[a]], cut), target))
    return rows


def weighted_csv(rows: Sequence[WeightedRow], **meta) -> str:
    body = [(r.n, r.a, r.delta, r.replicate, r.weighted_mass, r.target_phi) for r in rows]
    return _csv.render(_csv.meta_line(**meta), WEIGHTED_HEADER, body)
