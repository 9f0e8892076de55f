"""T(k) trajectories from the point mass and from the half-mass start.

Writes one CSV per start with columns k,k_over_n_log_n,T,S.  The point-mass
curve should sit near 2 until k is about (n log2 n)/2 and then drop sharply;
the half-mass curve decays from 1 without a plateau.
"""
import argparse
import math
from pathlib import Path

import numpy as np

from repavg import core
from repavg._csv import meta_line, render


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=10**5)
    ap.add_argument("--points", type=int, default=60)
    ap.add_argument("--horizon", type=float, default=1.5, help="last k in units of n ln n")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scale = args.n * math.log(args.n)
    ks = np.unique(np.linspace(0, args.horizon * scale, args.points).astype(np.int64)).tolist()
    for init in ("delta", "half_mass"):
        p = core.ChainParams(args.n, seed=args.seed, init=core.InitSpec(init))
        tr = core.run_discrete(p, ks)
        rows = [(k, k / scale, m.T, m.S) for k, m in tr.records]
        path = out / f"trajectory_{init}_n{args.n}.csv"
        path.write_text(render(meta_line(n=args.n, init=init, seed=args.seed), "k,k_over_n_log_n,T,S", rows))
        print(path)


if __name__ == "__main__":
    main()
