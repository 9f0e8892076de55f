"""Mean T'(t(a)) against 2*Phi(-a) for several n, to watch the profile sharpen."""
import argparse
from pathlib import Path

import numpy as np

from repavg import stats
from repavg._csv import meta_line, render


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--log2n", type=int, nargs="+", default=[10, 14, 18])
    ap.add_argument("--replicates", type=int, default=20)
    ap.add_argument("--seed", type=int, default=20210127)
    ap.add_argument("--threads", type=int, default=0)
    ap.add_argument("--out", default="results/cutoff_profile.csv")
    args = ap.parse_args()

    a_values = np.round(np.arange(-3, 3.01, 0.5), 2).tolist()
    rows = []
    for m in args.log2n:
        rep = stats.cutoff_profile(2**m, a_values, args.replicates, args.seed, args.threads)
        rows += [
            (rep.n, a, t, mu, se, g)
            for a, t, mu, se, g in zip(rep.a_values, rep.t_values, rep.mean_T, rep.stderr_T, rep.target)
        ]
        print(f"n=2^{m} done")
    path = Path(args.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = meta_line(replicates=args.replicates, seed=args.seed)
    path.write_text(render(meta, "n,a,t,mean_T,stderr_T,target", rows))
    print(path)


if __name__ == "__main__":
    main()
