"""Error of SAAC, SC and OCCAM as the fraction of pure nodes varies.

Writes one CSV per instance model (plain memberships and row-normalized
memberships) with per-replication rows followed by mean/std rows.
"""

import argparse
from pathlib import Path

from saac.experiments import ExperimentSpec, run_purity_sweep, write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = [round(0.2 + 0.1 * k, 10) for k in range(9)]
    for model in ("sbmo", "occam"):
        spec = ExperimentSpec(scenario=f"purity-{model}", n=args.n, reps=args.reps, seed=args.seed,
                              model=model)
        rows = run_purity_sweep(spec, grid, args.workers)
        write_csv(rows, out / f"purity_{model}.csv")
        for r in rows:
            if r["row_type"] == "mean":
                print(f"{model:6s} p={r['p']:.1f} {r['algo']:6s} error={r['error']:.4f}")


if __name__ == "__main__":
    main()
