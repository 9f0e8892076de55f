"""Repeated-averaging chain in discrete and Poissonized continuous time.

The state is stored uncentered; ``target_mean`` is fixed when the state is
built and every metric is measured against it.

A uniformly random unordered pair is encoded as one integer
``c`` uniform on ``[0, n(n-1))``: ``i = c // (n-1)``, ``j = c % (n-1)``,
and ``j`` is shifted past ``i``.  This is the same as drawing ``i`` uniform
on ``[0, n)`` and ``j`` uniform on ``[0, n-1)`` independently, and it keeps
the pair sequence a single stream so that chunking never changes it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from numba import njit

from . import _csv
from .errors import InitParseError, InvalidArgument, InvalidDimension, InvalidPair
from .streams import CLOCK, DEFAULT_SEED, PAIRS, replicate_rng

INIT_KINDS = ("delta", "half_mass", "uniform", "custom")
TIME_MODELS = ("discrete", "poissonized")
CHUNK = 1 << 20


@dataclass(frozen=True)
class InitSpec:
    kind: str = "delta"
    path: Optional[str] = None
    values: Optional[tuple] = None

    def __post_init__(self):
        kind = self.kind.replace("-", "_")
        if kind not in INIT_KINDS:
            raise InvalidArgument(f"unknown init kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "custom" and self.path is None and self.values is None:
            raise InvalidArgument("custom init needs a file path or explicit values")

    def __str__(self):
        if self.kind == "custom":
            return f"custom:{self.path}" if self.path else "custom"
        return self.kind


@dataclass
class State:
    n: int
    values: np.ndarray
    target_mean: float

    def copy(self) -> "State":
        return State(self.n, self.values.copy(), self.target_mean)

    @property
    def centered(self) -> np.ndarray:
        return self.values - self.target_mean


@dataclass(frozen=True)
class ChainParams:
    n: int
    theta: float = 0.5
    time_model: str = "discrete"
    seed: int = DEFAULT_SEED
    init: InitSpec = field(default_factory=InitSpec)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidDimension(f"n must be an integer >= 2, got {self.n}")
        if not 0.0 < self.theta < 1.0:
            raise InvalidArgument(f"theta must lie in (0, 1), got {self.theta}")
        if self.time_model not in TIME_MODELS:
            raise InvalidArgument(f"unknown time model {self.time_model!r}")
        if not 0 <= self.seed < 2**64:
            raise InvalidArgument(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class Metrics:
    T: float
    S: float
    hoover: float
    nonzero_count: int
    max_entry: float


@dataclass
class Trajectory:
    params: ChainParams
    records: list = field(default_factory=list)  # (k or t, Metrics)
    events: list = field(default_factory=list)  # cumulative steps at each record

    @property
    def times(self) -> list:
        return [r[0] for r in self.records]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(m, name) for _, m in self.records])

    def to_csv(self) -> str:
        p = self.params
        meta = _csv.meta_line(
            n=p.n, theta=p.theta, model=p.time_model, seed=p.seed, init=str(p.init)
        )
        rows = [
            (t, m.T, m.S, m.hoover, m.nonzero_count, m.max_entry)
            for t, m in self.records
        ]
        return _csv.render(meta, "k_or_t,T,S,hoover,nonzero,max_entry", rows)

    def write_csv(self, path) -> None:
        with _csv.open_output(path) as fh:
            fh.write(self.to_csv())


def read_init_file(path, n: int) -> np.ndarray:
    values = []
    with open(path) as fh:
        lines = fh.read().splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        try:
            v = float(text)
        except ValueError:
            raise InitParseError(path, lineno, f"not a real number: {text!r}") from None
        if not math.isfinite(v):
            raise InitParseError(path, lineno, f"value is not finite: {text!r}")
        values.append(v)
    if len(values) != n:
        raise InitParseError(path, len(lines), f"expected {n} values, found {len(values)}")
    return np.array(values, dtype=np.float64)


def init_state(n: int, init: InitSpec | str = "delta") -> State:
    if isinstance(init, str):
        init = InitSpec(init)
    if int(n) != n or n < 2:
        raise InvalidDimension(f"n must be an integer >= 2, got {n}")
    n = int(n)
    if init.kind == "delta":
        values = np.zeros(n)
        values[0] = 1.0
    elif init.kind == "half_mass":
        values = np.zeros(n)
        values[: n // 2] = 2.0 / n
    elif init.kind == "uniform":
        values = np.full(n, 1.0 / n)
    else:
        if init.values is not None:
            values = np.asarray(init.values, dtype=np.float64).copy()
            if values.shape != (n,) or not np.all(np.isfinite(values)):
                raise InvalidArgument(f"custom init must be {n} finite reals")
        else:
            values = read_init_file(init.path, n)
    return State(n, values, float(values.sum() / n))


def apply_average(state: State, i: int, j: int, theta: float = 0.5) -> State:
    """Average coordinates ``i`` and ``j``; returns a new state."""
    n = state.n
    if i == j:
        raise InvalidPair(f"pair must be distinct, got ({i}, {j})")
    if not (0 <= i < n and 0 <= j < n):
        raise InvalidPair(f"pair ({i}, {j}) out of range for n={n}")
    out = state.copy()
    _average_inplace(out.values, i, j, theta)
    return out


@njit(cache=True, nogil=True)
def _average_inplace(values, i, j, theta):
    vi = values[i]
    vj = values[j]
    if theta == 0.5:
        avg = (vi + vj) * 0.5
        values[i] = avg
        values[j] = avg
    else:
        rest = 1.0 - theta
        values[i] = theta * vi + rest * vj
        values[j] = rest * vi + theta * vj


@njit(cache=True, nogil=True)
def _apply_codes(values, codes, theta):
    m = values.shape[0] - 1
    for c in codes:
        i = c // m
        j = c % m
        if j >= i:
            j += 1
        else:
            i, j = j, i
        _average_inplace(values, i, j, theta)


def decode_pairs(codes: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    i = codes // (n - 1)
    j = codes % (n - 1)
    j = j + (j >= i)
    return np.minimum(i, j), np.maximum(i, j)


def sample_pair(n: int, rng: np.random.Generator) -> tuple[int, int]:
    """Uniform unordered pair of distinct indices, returned with ``i < j``."""
    c = int(rng.integers(0, n * (n - 1)))
    i, j = divmod(c, n - 1)
    if j >= i:
        j += 1
    return (i, j) if i < j else (j, i)


def sample_pairs(n: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Encoded pair codes; consumes the stream exactly as ``size`` calls of
    :func:`sample_pair` would."""
    return rng.integers(0, n * (n - 1), size=size)


def advance(values: np.ndarray, rng: np.random.Generator, steps: int, theta: float = 0.5) -> None:
    """Perform ``steps`` random averagings on ``values`` in place."""
    n = values.shape[0]
    while steps > 0:
        k = min(steps, CHUNK)
        _apply_codes(values, sample_pairs(n, rng, k), theta)
        steps -= k


def metrics(state: State) -> Metrics:
    return metrics_of(state.values, state.target_mean)


def metrics_of(values: np.ndarray, target_mean: float) -> Metrics:
    d = values - target_mean
    T = float(np.abs(d).sum())
    return Metrics(
        T=T,
        S=float(np.dot(d, d)),
        hoover=T / 2,
        nonzero_count=int(np.count_nonzero(values)),
        max_entry=float(values.max()),
    )


def l1_distance(values: np.ndarray, target_mean: float) -> float:
    return float(np.abs(values - target_mean).sum())


def _schedule(points: Sequence, name: str) -> list:
    if len(points) == 0:
        raise InvalidArgument(f"{name} must not be empty")
    pts = list(points)
    if any(b < a for a, b in zip(pts, pts[1:])):
        raise InvalidArgument(f"{name} must be non-decreasing")
    if pts[0] < 0:
        raise InvalidArgument(f"{name} must be >= 0")
    # equal points collapse to one record
    return sorted(set(pts))


def run_discrete(params: ChainParams, record_ks: Sequence[int], replicate: int = 0) -> Trajectory:
    ks = _schedule(record_ks, "record_ks")
    state = init_state(params.n, params.init)
    values = state.values
    rng = replicate_rng(params.seed, replicate, PAIRS)
    traj = Trajectory(params)
    done = 0
    for k in ks:
        k = int(k)
        advance(values, rng, k - done, params.theta)
        done = k
        traj.records.append((k, metrics_of(values, state.target_mean)))
        traj.events.append(done)
    return traj


def run_continuous(params: ChainParams, record_ts: Sequence[float], replicate: int = 0) -> Trajectory:
    """Rate-1 Poisson clock: ``Poisson(t_m - t_{m-1})`` steps per recording interval."""
    ts = _schedule(record_ts, "record_ts")
    state = init_state(params.n, params.init)
    values = state.values
    pairs = replicate_rng(params.seed, replicate, PAIRS)
    clock = replicate_rng(params.seed, replicate, CLOCK)
    traj = Trajectory(params)
    prev, events = 0.0, 0
    for t in ts:
        t = float(t)
        k = int(clock.poisson(t - prev)) if t > prev else 0
        advance(values, pairs, k, params.theta)
        events += k
        prev = t
        traj.records.append((t, metrics_of(values, state.target_mean)))
        traj.events.append(events)
    return traj


def run(params: ChainParams, schedule: Sequence, replicate: int = 0) -> Trajectory:
    if params.time_model == "discrete":
        return run_discrete(params, schedule, replicate)
    return run_continuous(params, schedule, replicate)


def t_of_a(n: int, a: float) -> float:
    """Probe time ``n (log2 n + a sqrt(log2 n)) / 2``; negative for very negative ``a``."""
    if n < 2:
        raise InvalidDimension(f"n must be >= 2, got {n}")
    L = math.log2(n)
    return n * (L + a * math.sqrt(L)) / 2


def clamped_t_of_a(n: int, a: float) -> tuple[float, bool]:
    t = t_of_a(n, a)
    return (0.0, True) if t < 0 else (t, False)
