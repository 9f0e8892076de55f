"""Exact dyadic-rational version of the averaging chain.

Values are stored uncentered as ``num / 2**exp`` in lowest terms.  Starting
from ``e_1`` every entry keeps an odd (or zero) numerator, so no entry can
ever equal ``1/n`` unless ``n`` is a power of two.

For ``n = 4`` the block schedule below averages (0,1), (2,3), (0,2), (1,3).
The order (0,1), (2,3), (0,2), (0,3) does not equalize a generic vector:
it maps ``(1, 0, 0, 0)`` to ``(1/8, 1/2, 1/4, 1/8)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from . import _csv
from .core import sample_pair
from .errors import InvalidArgument, InvalidDimension, ResourceLimit
from .streams import PAIRS, replicate_rng

DEFAULT_EXP_CAP = 10**6


@dataclass(frozen=True)
class Dyadic:
    num: int
    exp: int = 0

    def __post_init__(self):
        if self.exp < 0:
            raise InvalidArgument(f"negative exponent {self.exp}")
        if self.num == 0:
            if self.exp != 0:
                raise InvalidArgument("zero must be stored as 0/2^0")
        elif self.exp > 0 and self.num % 2 == 0:
            raise InvalidArgument(f"{self.num}/2^{self.exp} is not in lowest terms")

    @classmethod
    def reduced(cls, num: int, exp: int) -> "Dyadic":
        if num == 0:
            return cls(0, 0)
        tz = min((num & -num).bit_length() - 1, exp)
        return cls(num >> tz, exp - tz)

    @classmethod
    def from_fraction(cls, q: Fraction) -> "Dyadic":
        q = Fraction(q)
        d = q.denominator
        if d & (d - 1):
            raise InvalidArgument(f"{q} is not dyadic")
        return cls(q.numerator, d.bit_length() - 1)

    def to_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.exp)

    def __float__(self):
        return float(self.to_fraction())


def dyadic_average(a: Dyadic, b: Dyadic) -> Dyadic:
    e = max(a.exp, b.exp)
    num = (a.num << (e - a.exp)) + (b.num << (e - b.exp))
    return Dyadic.reduced(num, e + 1)


@dataclass
class DyadicState:
    n: int
    values: list

    @classmethod
    def delta(cls, n: int) -> "DyadicState":
        return cls(n, [Dyadic(1)] + [Dyadic(0)] * (n - 1))

    def total(self) -> Fraction:
        return sum((v.to_fraction() for v in self.values), Fraction(0))

    def is_constant(self) -> bool:
        first = self.values[0]
        return all(v == first for v in self.values)

    def average(self, i: int, j: int) -> None:
        avg = dyadic_average(self.values[i], self.values[j])
        self.values[i] = avg
        self.values[j] = avg


def entry_ok(v: Dyadic) -> bool:
    return v.num == 0 or v.num % 2 == 1


def check_odd_invariant(state: DyadicState) -> bool:
    return all(entry_ok(v) for v in state.values)


@dataclass(frozen=True)
class TerminationReport:
    n: int
    seed: int
    absorbed: bool
    absorb_step: Optional[int]
    invariant_violations: int
    steps: int
    max_exp: int


TERMINATION_HEADER = "n,seed,absorbed,absorb_step,invariant_violations"


def termination_csv(reports: Sequence[TerminationReport], **meta) -> str:
    rows = [
        (r.n, r.seed, r.absorbed, r.absorb_step, r.invariant_violations) for r in reports
    ]
    return _csv.render(_csv.meta_line(**meta), TERMINATION_HEADER, rows)


def is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def run_exact(
    n: int,
    max_steps: int,
    seed: int,
    replicate: int = 0,
    exp_cap: int = DEFAULT_EXP_CAP,
) -> TerminationReport:
    """Run the exact chain from ``e_1`` until absorption or ``max_steps``.

    Only the two updated entries change per step, so the odd-numerator check
    and the count of entries equal to ``1/n`` are maintained incrementally.
    """
    if n < 2:
        raise InvalidDimension(f"n must be >= 2, got {n}")
    if max_steps < 1:
        raise InvalidArgument("max_steps must be >= 1")
    state = DyadicState.delta(n)
    rng = replicate_rng(seed, replicate, PAIRS)
    # 1/n as a dyadic exists only for powers of two
    target = Dyadic(1, n.bit_length() - 1) if is_power_of_two(n) else None
    at_target = 0
    violations = 0
    max_exp = 0
    for step in range(1, max_steps + 1):
        i, j = sample_pair(n, rng)
        vi, vj = state.values[i], state.values[j]
        avg = dyadic_average(vi, vj)
        if avg.exp > exp_cap:
            raise ResourceLimit(f"dyadic exponent {avg.exp} exceeds cap {exp_cap} at step {step}")
        max_exp = max(max_exp, avg.exp)
        state.values[i] = avg
        state.values[j] = avg
        if not entry_ok(avg):
            violations += 1
        if target is not None:
            at_target += 2 * (avg == target) - (vi == target) - (vj == target)
            if at_target == n:
                return TerminationReport(n, seed, True, step, violations, step, max_exp)
    return TerminationReport(n, seed, False, None, violations, max_steps, max_exp)


def equalization_schedule(n: int) -> list[tuple[int, int]]:
    if not is_power_of_two(n) or n < 2:
        raise InvalidArgument(f"n must be a power of two >= 2, got {n}")
    pairs = []
    block = 2
    while block <= n:
        half = block // 2
        for b in range(0, n, block):
            for r in range(half):
                pairs.append((b + r, b + half + r))
        block *= 2
    return pairs


def apply_schedule(state: DyadicState, pairs: Sequence[tuple[int, int]]) -> DyadicState:
    for i, j in pairs:
        state.average(i, j)
    return state
