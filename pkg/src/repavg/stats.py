"""Estimators, oracles and report assembly."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from numba import njit

from . import _csv
from .core import (
    ChainParams,
    InitSpec,
    State,
    _apply_codes,
    advance,
    clamped_t_of_a,
    init_state,
    l1_distance,
    sample_pairs,
)
from .errors import InvalidArgument, ResourceLimit
from .streams import CLOCK, PAIRS, map_replicates, replicate_rng

SIGMAS = 4.0
ROUNDING = 1e-12
MAX_BRANCHES = 10**7


def normal_cdf(x: float) -> float:
    """Standard normal CDF as ``erfc(-x / sqrt 2) / 2``.

    Going through ``erfc`` keeps full relative accuracy in the lower tail,
    where ``1 + erf`` would cancel.
    """
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def tau(n: int, theta: float = 0.5) -> float:
    return 1.0 - 4.0 * theta * (1.0 - theta) / (n - 1)


def _fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def centered_sq(values: Sequence[Fraction]) -> Fraction:
    mean = sum(values, Fraction(0)) / len(values)
    return sum(((v - mean) ** 2 for v in values), Fraction(0))


def brute_force_expectation(n: int, x0, k: int, theta=Fraction(1, 2)) -> Fraction:
    """Exact ``E[S(k)]`` by enumerating every sequence of ``k`` pairs.

    Sequences that reach the same state are merged, which leaves the result
    unchanged and keeps the enumeration cheap.  All arithmetic is in
    :class:`fractions.Fraction`; float inputs are converted exactly.
    """
    if isinstance(x0, State):
        x0 = x0.values
    x0 = tuple(_fraction(float(v)) if isinstance(v, np.floating) else _fraction(v) for v in x0)
    if len(x0) != n:
        raise InvalidArgument(f"x0 has {len(x0)} entries, expected {n}")
    theta = _fraction(theta)
    rest = 1 - theta
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if n > 5 or k > 8 or len(pairs) ** k > MAX_BRANCHES:
        raise ResourceLimit(f"{len(pairs)}^{k} branches exceed the enumeration budget")
    w = Fraction(1, len(pairs))
    dist = {x0: Fraction(1)}
    for _ in range(k):
        nxt: dict = {}
        for x, p in dist.items():
            pw = p * w
            for i, j in pairs:
                y = list(x)
                y[i] = theta * x[i] + rest * x[j]
                y[j] = rest * x[i] + theta * x[j]
                y = tuple(y)
                nxt[y] = nxt.get(y, 0) + pw
        dist = nxt
    return sum((p * centered_sq(x) for x, p in dist.items()), Fraction(0))


@dataclass
class ExpectationReport:
    n: int
    theta: float
    k: list
    ratio: list
    stderr: list
    tau: float
    replicates: int = 0

    @property
    def passed(self) -> bool:
        return all(
            abs(r - 1.0) <= SIGMAS * s + ROUNDING
            for r, s in zip(self.ratio, self.stderr)
        )

    def to_csv(self, **meta) -> str:
        rows = [(self.n, self.theta, k, r, s, self.tau) for k, r, s in zip(self.k, self.ratio, self.stderr)]
        return _csv.render(_csv.meta_line(**meta), "n,theta,k,ratio,stderr,tau", rows)


@njit(cache=True, nogil=True)
def _sq_dist(values, mean):
    s = 0.0
    for v in values:
        d = v - mean
        s += d * d
    return s


def _s_path(x0: np.ndarray, mean: float, theta: float, ks: list, rng) -> np.ndarray:
    values = x0.copy()
    out = np.empty(len(ks))
    codes = sample_pairs(values.shape[0], rng, ks[-1])
    done = 0
    for idx, k in enumerate(ks):
        _apply_codes(values, codes[done:k], theta)
        done = k
        out[idx] = _sq_dist(values, mean)
    return out


def l2_expectation_test(
    n: int,
    theta: float,
    ks: Sequence[int],
    replicates: int,
    seed: int,
    init: InitSpec | str = "delta",
    threads: int = 0,
) -> ExpectationReport:
    """Monte Carlo ``mean S(k) / (tau^k S(0))`` with standard errors."""
    if replicates < 1:
        raise InvalidArgument("replicates must be >= 1")
    ChainParams(n, theta)
    ks = sorted(set(int(k) for k in ks))
    if not ks or ks[0] < 0:
        raise InvalidArgument("k list must be non-empty and >= 0")
    state = init_state(n, init)
    S0 = _sq_dist(state.values, state.target_mean)
    tt = tau(n, theta)

    def one(r):
        if ks[-1] == 0:
            return np.full(len(ks), S0)
        return _s_path(state.values, state.target_mean, theta, ks, replicate_rng(seed, r, PAIRS))

    S = np.array(map_replicates(one, replicates, threads))
    ratios, errs = [], []
    for idx, k in enumerate(ks):
        scale = tt**k * S0
        col = S[:, idx]
        if scale == 0.0:
            # tau = 0 (n = 2, theta = 1/2): S(k) must vanish; pass by convention
            exact = bool(np.all(col == 0.0))
            ratios.append(1.0 if exact else math.inf)
            errs.append(0.0)
            continue
        if np.all(col == col[0]):
            ratios.append(float(col[0] / scale))
            errs.append(0.0)
            continue
        ratios.append(float(col.mean() / scale))
        sd = float(col.std(ddof=1)) if replicates > 1 else math.inf
        errs.append(sd / math.sqrt(replicates) / scale)
    return ExpectationReport(n, theta, ks, ratios, errs, tt, replicates)


@dataclass
class ProfileReport:
    n: int
    a_values: list
    t_values: list
    mean_T: list
    stderr_T: list
    target: list
    replicates: int
    clamped: list = field(default_factory=list)
    samples: np.ndarray | None = None  # (replicates, len(a_values))

    def to_csv(self, **meta) -> str:
        rows = [
            (self.n, a, t, m, s, g, self.replicates)
            for a, t, m, s, g in zip(self.a_values, self.t_values, self.mean_T, self.stderr_T, self.target)
        ]
        return _csv.render(_csv.meta_line(**meta), "n,a,t,mean_T,stderr_T,target,replicates", rows)


def profile_path(n: int, times: Sequence[float], seed: int, replicate: int) -> np.ndarray:
    """``T'(t)`` at increasing ``times`` for one continuous-time run from ``e_1``."""
    values = np.zeros(n)
    values[0] = 1.0
    mean = 1.0 / n
    pairs = replicate_rng(seed, replicate, PAIRS)
    clock = replicate_rng(seed, replicate, CLOCK)
    out = np.empty(len(times))
    prev = 0.0
    for idx, t in enumerate(times):
        k = int(clock.poisson(t - prev)) if t > prev else 0
        advance(values, pairs, k, 0.5)
        prev = t
        out[idx] = l1_distance(values, mean)
    return out


def cutoff_profile(
    n: int,
    a_values: Sequence[float],
    replicates: int,
    seed: int,
    threads: int = 0,
) -> ProfileReport:
    """Mean ``T'(t(a))`` over replicates, all ``a`` recorded in one pass per replicate."""
    if replicates < 1:
        raise InvalidArgument("replicates must be >= 1")
    a_values = sorted(float(a) for a in a_values)
    if not a_values:
        raise InvalidArgument("a list must not be empty")
    tc = [clamped_t_of_a(n, a) for a in a_values]
    times = [t for t, _ in tc]
    samples = np.array(map_replicates(lambda r: profile_path(n, times, seed, r), replicates, threads))
    mean = samples.mean(axis=0)
    if replicates > 1:
        err = samples.std(axis=0, ddof=1) / math.sqrt(replicates)
    else:
        err = np.full(len(a_values), math.nan)
    return ProfileReport(
        n=n,
        a_values=a_values,
        t_values=times,
        mean_T=[float(v) for v in mean],
        stderr_T=[float(v) for v in err],
        target=[2 * normal_cdf(-a) for a in a_values],
        replicates=replicates,
        clamped=[c for _, c in tc],
        samples=samples,
    )


@dataclass(frozen=True)
class DominanceResult:
    lhs: float
    rhs: float
    holds: bool


@njit(cache=True, nogil=True)
def _basis_codes(basis, x, codes):
    n = x.shape[0]
    m = n - 1
    for c in codes:
        i = c // m
        j = c % m
        if j >= i:
            j += 1
        avg = (x[i] + x[j]) * 0.5
        x[i] = avg
        x[j] = avg
        for r in range(n):
            avg = (basis[r, i] + basis[r, j]) * 0.5
            basis[r, i] = avg
            basis[r, j] = avg


def dominance_test(x0: Sequence[float], k: int, seed: int, replicate: int = 0) -> DominanceResult:
    """Compare ``T_{x0}(k)`` with ``sum_i x0_i T_{e_i}(k)`` under one shared pair sequence."""
    x0 = np.asarray(x0, dtype=np.float64)
    n = x0.shape[0]
    if n < 2 or n > 256:
        raise InvalidArgument(f"dominance test needs 2 <= n <= 256, got {n}")
    if np.any(x0 < 0) or abs(x0.sum() - 1.0) > 1e-9:
        raise InvalidArgument("x0 must lie in the probability simplex")
    basis = np.eye(n)
    x = x0.copy()
    _basis_codes(basis, x, sample_pairs(n, replicate_rng(seed, replicate, PAIRS), k))
    mean = 1.0 / n
    lhs = l1_distance(x, mean)
    rhs = float(sum(x0[i] * l1_distance(basis[i], mean) for i in range(n)))
    return DominanceResult(lhs, rhs, lhs <= rhs + 1e-9)
