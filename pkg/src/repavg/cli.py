"""Command-line front end.

Exit codes: 0 success, 1 usage or runtime error, 2 a verification check
(``expect``, ``couple``) ran but failed.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _csv, core, exact, particles, stats
from .errors import CouplingFailure, RepavgError
from .streams import DEFAULT_SEED

SUBCOMMANDS = ("simulate", "profile", "particles", "couple", "terminate", "expect")
LIST_FLAGS = {"--a", "--delta", "--k", "--record-steps", "--record-times"}

EXIT_OK, EXIT_USAGE, EXIT_CHECK_FAILED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    subcommand: str
    n: int
    theta: float = 0.5
    seed: int = DEFAULT_SEED
    replicates: int = 1
    init: core.InitSpec = field(default_factory=core.InitSpec)
    output: Optional[str] = None
    schedule_kind: Optional[str] = None
    schedule: list = field(default_factory=list)
    threads: int = 0
    model: str = "discrete"
    deltas: list = field(default_factory=lambda: [0.0])
    max_steps: int = 0
    records: int = 20

    def meta(self) -> dict:
        m = {"cmd": self.subcommand, "n": self.n}
        if self.subcommand in ("simulate", "expect"):
            m["theta"] = self.theta
        if self.subcommand == "simulate":
            m.update(model=self.model, init=str(self.init))
        if self.subcommand == "expect":
            m["init"] = str(self.init)
        m["seed"] = self.seed
        if self.subcommand != "simulate":
            m["replicates"] = self.replicates
        if self.subcommand == "particles":
            m["delta"] = self.deltas
        if self.subcommand == "couple":
            m["records"] = self.records
        if self.subcommand == "terminate":
            m["max_steps"] = self.max_steps
        m["schedule"] = f"{self.schedule_kind}:{','.join(_csv.fmt(x) for x in self.schedule)}"
        return m


def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from None


def _ints(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="repavg", description="Repeated-averaging chain simulations.")
    sub = p.add_subparsers(dest="subcommand", parser_class=_Parser)

    def common(sp, theta=False):
        sp.add_argument("--n", type=int, required=True)
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--threads", type=int, default=0, help="0 = auto (REPAVG_THREADS or CPU count)")
        sp.add_argument("-o", "--output", default="-")
        if theta:
            sp.add_argument("--theta", type=float, default=0.5)

    s = sub.add_parser("simulate", help="one trajectory as CSV")
    common(s, theta=True)
    s.add_argument("--init", default="delta", choices=["delta", "half-mass", "half_mass", "uniform", "custom"])
    s.add_argument("--init-file")
    s.add_argument("--model", default=None, choices=core.TIME_MODELS)
    s.add_argument("--record-every-steps", type=int)
    s.add_argument("--max-steps", type=int)
    s.add_argument("--record-steps", type=_ints)
    s.add_argument("--record-every-time", type=float)
    s.add_argument("--max-time", type=float)
    s.add_argument("--record-times", type=_floats)

    s = sub.add_parser("profile", help="mean T at t(a) against 2 Phi(-a)")
    common(s)
    s.add_argument("--a", type=_floats, required=True)
    s.add_argument("--replicates", type=int, default=20)

    s = sub.add_parser("particles", help="weighted estimate of the particle model")
    common(s)
    s.add_argument("--a", type=_floats, required=True)
    s.add_argument("--delta", type=_floats, default=[0.0])
    s.add_argument("--replicates", type=int, default=20)

    s = sub.add_parser("couple", help="coupled chain/particle run with dominance check")
    common(s)
    s.add_argument("--a-end", type=float)
    s.add_argument("--t-end", type=float)
    s.add_argument("--records", type=int, default=20)
    s.add_argument("--replicates", type=int, default=1)

    s = sub.add_parser("terminate", help="exact dyadic chain termination runs")
    common(s)
    s.add_argument("--max-steps", type=int, required=True)
    s.add_argument("--seeds", type=int, default=100, help="runs use seeds seed, seed+1, ...")

    s = sub.add_parser("expect", help="Monte Carlo check of E S(k) = tau^k S(0)")
    common(s, theta=True)
    s.add_argument("--init", default="delta", choices=["delta", "half-mass", "half_mass", "uniform", "custom"])
    s.add_argument("--init-file")
    s.add_argument("--k", type=_ints, required=True)
    s.add_argument("--replicates", type=int, default=20000)
    return p


def _normalize(argv: list) -> list:
    # let list flags take values that start with '-', e.g. --a -2,-1,0
    out, it = [], iter(argv)
    for tok in it:
        if tok in LIST_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def _init_spec(ns) -> core.InitSpec:
    kind = ns.init.replace("-", "_")
    if kind == "custom" and not ns.init_file:
        raise UsageError("--init custom requires --init-file")
    if ns.init_file and kind != "custom":
        raise UsageError("--init-file only applies to --init custom")
    return core.InitSpec(kind, path=ns.init_file)


def _simulate_schedule(ns, cfg: RunConfig) -> None:
    kinds = []
    if ns.record_every_steps is not None or ns.max_steps is not None:
        if ns.record_every_steps is None or ns.max_steps is None:
            raise UsageError("--record-every-steps and --max-steps go together")
        if ns.record_every_steps <= 0 or ns.max_steps < 0:
            raise UsageError("--record-every-steps must be > 0 and --max-steps >= 0")
        kinds.append(("steps", list(range(0, ns.max_steps + 1, ns.record_every_steps))))
    if ns.record_steps is not None:
        kinds.append(("steps", ns.record_steps))
    if ns.record_every_time is not None or ns.max_time is not None:
        if ns.record_every_time is None or ns.max_time is None:
            raise UsageError("--record-every-time and --max-time go together")
        if ns.record_every_time <= 0 or ns.max_time < 0:
            raise UsageError("--record-every-time must be > 0 and --max-time >= 0")
        count = int(ns.max_time / ns.record_every_time + 1e-9)
        kinds.append(("times", [i * ns.record_every_time for i in range(count + 1)]))
    if ns.record_times is not None:
        kinds.append(("times", ns.record_times))
    if len(kinds) != 1:
        raise UsageError("simulate needs exactly one record schedule")
    kind, sched = kinds[0]
    model = ns.model or ("discrete" if kind == "steps" else "poissonized")
    if (kind == "steps") != (model == "discrete"):
        raise UsageError(f"record {kind} does not match --model {model}")
    if not sched or min(sched) < 0:
        raise UsageError("record schedule must be non-empty and >= 0")
    cfg.schedule_kind, cfg.schedule, cfg.model = kind, sorted(sched), model


def parse_args(argv) -> RunConfig:
    argv = list(argv)
    if not argv:
        raise UsageError(build_parser().format_usage().strip())
    ns = build_parser().parse_args(_normalize(argv))
    if ns.subcommand is None:
        raise UsageError(build_parser().format_usage().strip())
    if ns.n < 2:
        raise UsageError(f"--n must be >= 2, got {ns.n}")
    if not 0 <= ns.seed < 2**64:
        raise UsageError("--seed must be a 64-bit unsigned integer")
    if ns.threads < 0:
        raise UsageError("--threads must be >= 0")
    cfg = RunConfig(ns.subcommand, ns.n, seed=ns.seed, output=ns.output, threads=ns.threads)
    if hasattr(ns, "theta"):
        if not 0.0 < ns.theta < 1.0:
            raise UsageError(f"--theta must lie in (0, 1), got {ns.theta}")
        cfg.theta = ns.theta
    if hasattr(ns, "replicates"):
        if ns.replicates < 1:
            raise UsageError("--replicates must be >= 1")
        cfg.replicates = ns.replicates

    if ns.subcommand == "simulate":
        cfg.init = _init_spec(ns)
        _simulate_schedule(ns, cfg)
    elif ns.subcommand in ("profile", "particles"):
        if not ns.a:
            raise UsageError("--a needs at least one value")
        cfg.schedule_kind, cfg.schedule = "a", sorted(ns.a)
        if ns.subcommand == "particles":
            if any(d < 0 for d in ns.delta):
                raise UsageError("--delta values must be >= 0")
            cfg.deltas = ns.delta
    elif ns.subcommand == "couple":
        if (ns.a_end is None) == (ns.t_end is None):
            raise UsageError("couple needs exactly one of --a-end, --t-end")
        if ns.records < 1:
            raise UsageError("--records must be >= 1")
        if ns.t_end is not None:
            if ns.t_end < 0:
                raise UsageError("--t-end must be >= 0")
            cfg.schedule_kind, cfg.schedule = "t_end", [ns.t_end]
        else:
            cfg.schedule_kind, cfg.schedule = "a_end", [ns.a_end]
        cfg.records = ns.records
    elif ns.subcommand == "terminate":
        if ns.max_steps < 1 or ns.seeds < 1:
            raise UsageError("--max-steps and --seeds must be >= 1")
        cfg.max_steps = ns.max_steps
        cfg.replicates = ns.seeds
        cfg.schedule_kind, cfg.schedule = "seeds", [ns.seed, ns.seed + ns.seeds - 1]
    elif ns.subcommand == "expect":
        cfg.init = _init_spec(ns)
        if not ns.k or min(ns.k) < 0:
            raise UsageError("--k needs non-negative step counts")
        cfg.schedule_kind, cfg.schedule = "k", sorted(set(ns.k))
    return cfg


def _couple(cfg: RunConfig) -> tuple[str, int]:
    if cfg.schedule_kind == "t_end":
        t_end = cfg.schedule[0]
    else:
        t_end = max(core.t_of_a(cfg.n, cfg.schedule[0]), 0.0)
    times = list(np.linspace(0.0, t_end, cfg.records)) if cfg.records > 1 else [t_end]
    from .streams import map_replicates

    failures = []

    def one(r):
        try:
            return particles.coupled_run(cfg.n, t_end, cfg.seed, times, replicate=r)
        except CouplingFailure as exc:
            failures.append((r, exc))
            return None

    reports = map_replicates(one, cfg.replicates, cfg.threads)
    if failures:
        r, exc = min(failures, key=lambda f: f[0])
        print(f"repavg: replicate {r}: {exc}", file=sys.stderr)
        return "", EXIT_CHECK_FAILED
    agg = particles.CouplingReport(cfg.n, reports[0].H)
    agg.times = reports[0].times
    for name in ("sum_w", "discarded_fraction", "beta_discard_fraction"):
        setattr(agg, name, [float(np.mean(col)) for col in zip(*(getattr(r, name) for r in reports))])
    agg.violations = [max(col) for col in zip(*(r.violations for r in reports))]
    return particles.coupling_csv(agg, **cfg.meta()), EXIT_OK


def dispatch(cfg: RunConfig) -> int:
    code = EXIT_OK
    if cfg.subcommand == "simulate":
        params = core.ChainParams(cfg.n, cfg.theta, cfg.model, cfg.seed, cfg.init)
        text = core.run(params, cfg.schedule).to_csv()
    elif cfg.subcommand == "profile":
        rep = stats.cutoff_profile(cfg.n, cfg.schedule, cfg.replicates, cfg.seed, cfg.threads)
        text = rep.to_csv(**cfg.meta())
    elif cfg.subcommand == "particles":
        rows = particles.weighted_estimate(
            cfg.n, cfg.schedule, cfg.deltas, cfg.replicates, cfg.seed, cfg.threads
        )
        text = particles.weighted_csv(rows, **cfg.meta())
    elif cfg.subcommand == "couple":
        text, code = _couple(cfg)
        if code != EXIT_OK:
            return code
    elif cfg.subcommand == "terminate":
        reports = [
            exact.run_exact(cfg.n, cfg.max_steps, cfg.seed + r) for r in range(cfg.replicates)
        ]
        text = exact.termination_csv(reports, **cfg.meta())
    elif cfg.subcommand == "expect":
        rep = stats.l2_expectation_test(
            cfg.n, cfg.theta, cfg.schedule, cfg.replicates, cfg.seed, cfg.init, cfg.threads
        )
        text = rep.to_csv(**cfg.meta())
        if not rep.passed:
            code = EXIT_CHECK_FAILED
    else:
        raise UsageError(f"unknown subcommand {cfg.subcommand!r}")
    try:
        with _csv.open_output(cfg.output) as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {cfg.output}: {exc}") from None
    return code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_args(argv)
        return dispatch(cfg)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (RepavgError, ValueError, OSError) as exc:
        print(f"repavg: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
