"""Command-line entry point: ``saac <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .baselines import occam_baseline, spectral_clustering
from .graph import read_edge_list, write_edge_list
from .metrics import EVAL_COLUMNS, evaluate
from .sbmo import (
    ModelConfig,
    expected_adjacency,
    generate_membership,
    load_membership,
    log_alpha,
    normalize_rows,
    sample_graph,
    save_membership,
)
from .solver import SaacConfig, SaacError, embed, saac_fit


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _grid(text: str) -> list[float]:
    """``"0.2:1.0:0.1"`` (inclusive range) or a comma list."""
    if ":" in text:
        lo, hi, step = (float(x) for x in text.split(":"))
        count = int(round((hi - lo) / step)) + 1
        return [round(lo + k * step, 10) for k in range(count)]
    return _floats(text)


def _model_args(p: argparse.ArgumentParser, n=500, k=5, b="5,4,3,3,3") -> None:
    p.add_argument("--n", type=int, default=n)
    p.add_argument("--k", type=int, default=k)
    p.add_argument("--alpha-exp", type=float, default=1.5, help="alpha_n = log(n) ** alpha_exp")
    p.add_argument("--alpha", type=float, default=None, help="explicit alpha_n (overrides --alpha-exp)")
    p.add_argument("--b", default=b, help="K diagonal entries or K*K row-major entries of B")
    p.add_argument("--p", type=float, default=0.8, help="total fraction of pure nodes")
    p.add_argument("--m", type=int, default=3, help="maximum overlap")
    p.add_argument("--seed", type=int, default=0)


def _fit_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eta", type=float, default=0.25)
    p.add_argument("--r", type=float, default=2.0)
    p.add_argument("--eps", type=float, default=None)


def _spec(args, **extra) -> ex.ExperimentSpec:
    return ex.ExperimentSpec(
        n=args.n, K=args.k, alpha_exp=args.alpha_exp, alpha=args.alpha, B=tuple(_floats(args.b)),
        p=args.p, m=args.m, reps=args.reps, seed=args.seed, algos=tuple(args.algo),
        eta=args.eta, r=args.r, eps=args.eps, **extra,
    )


def cmd_generate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    alpha = args.alpha if args.alpha is not None else log_alpha(args.n, args.alpha_exp)
    b = np.array(_floats(args.b))
    B = np.diag(b) if b.size == args.k else b.reshape(args.k, args.k)
    cfg = ModelConfig(n=args.n, K=args.k, alpha=alpha, B=B, p=args.p, m=args.m)
    ss_z, ss_g = np.random.SeedSequence(args.seed).spawn(2)
    Z = generate_membership(args.n, args.k, args.p, args.m, ss_z)
    weights = normalize_rows(Z) if args.occam else Z
    g = sample_graph(expected_adjacency(weights, B, alpha), ss_g)
    cfg.save(out / "model.cfg")
    save_membership(Z, out / "membership.txt")
    write_edge_list(g, out / "graph.edges")
    print(f"n={g.n} edges={g.n_edges} loops={g.n_loops} d_max={g.d_max} -> {out}")
    return 0


def cmd_fit(args) -> int:
    g = read_edge_list(args.graph, n=args.n)
    if args.algo == "saac":
        cfg = SaacConfig(eps=args.eps, eta=args.eta, r=args.r, m=args.m, seed=args.seed,
                         n_init=args.n_init)
        emb = embed(g, cfg, args.k)
        if args.embedding_out:
            emb.save(args.embedding_out)
        res = saac_fit(emb, cfg, degrees=g.degrees)
        res.save(args.out)
        print(f"K_hat={res.K} loss={res.loss:.6g} sweeps={res.sweeps} restarts={res.restarts}")
        return 0
    if args.k is None:
        raise SystemExit(f"--k is required for {args.algo}")
    fn = spectral_clustering if args.algo == "sc" else occam_baseline
    save_membership(fn(g, args.k, args.seed).Z, args.out, header={"method": args.algo, "seed": args.seed})
    return 0


def cmd_eval(args) -> int:
    Zh, _ = load_membership(args.estimate)
    Z, _ = load_membership(args.truth)
    rep = evaluate(Zh, Z, args.run_id, args.seed)
    ex.write_csv([rep.row()], args.out, EVAL_COLUMNS)
    return 0


def cmd_sweep_purity(args) -> int:
    spec = _spec(args, scenario=f"purity-{args.model}", model=args.model)
    ex.write_csv(ex.run_purity_sweep(spec, _grid(args.p_grid)), args.out)
    return 0


def cmd_sweep_consistency(args) -> int:
    spec = _spec(args, scenario="consistency")
    ex.write_csv(ex.run_consistency_curve(spec, [int(x) for x in _grid(args.n_grid)]), args.out)
    return 0


def cmd_real_eval(args) -> int:
    if args.dir:
        pairs = ex.find_snap_networks(args.dir)
    elif args.graph and args.circles:
        pairs = [(Path(args.graph), Path(args.circles))]
    else:
        raise SystemExit("give --dir or both --graph and --circles")
    rows = []
    for edges, circles in pairs:
        rows += ex.run_real_eval(edges, circles, args.min_pure, args.min_overlap,
                                 tuple(args.algo), args.seed, args.m)
    ex.write_csv(rows + ex.summarize_real(rows), args.out, ex.TABLE_COLUMNS + ["row_type", "count"])
    return 0


def cmd_nb_sweep(args) -> int:
    rows, spectra = ex.run_nb_sweep(args.n, args.s, _grid(args.a_grid), args.reps, args.seed,
                                    args.k_eigs, keep_spectra=args.keep_spectra)
    ex.write_csv(rows, args.out, ex.NB_COLUMNS)
    if args.spectrum_out:
        ex.write_csv(ex.spectrum_rows(spectra), args.spectrum_out, ["a", "seed", "re", "im", "modulus"])
    if args.saac_s_grid:
        saac_rows = ex.run_saac_sparse_sweep(args.n, _grid(args.saac_s_grid), _grid(args.a_grid),
                                             args.reps, args.seed)
        ex.write_csv(saac_rows, args.saac_out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="saac", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample an SBMO graph with its membership matrix")
    _model_args(p)
    p.add_argument("--occam", action="store_true", help="row-normalized memberships in A")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="estimate memberships from an edge list")
    p.add_argument("--graph", required=True)
    p.add_argument("--n", type=int, default=None, help="node count; ids are then taken literally")
    p.add_argument("--k", type=int, default=None, help="number of communities (adaptive if omitted)")
    p.add_argument("--algo", choices=("saac", "sc", "occam"), default="saac")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--n-init", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    _fit_args(p)
    p.add_argument("--embedding-out", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="compare an estimated membership file with the truth")
    p.add_argument("--estimate", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--run-id", default="")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_eval)

    for name, func, grid_flag, default in (
        ("sweep-purity", cmd_sweep_purity, "--p-grid", "0.2:1.0:0.1"),
        ("sweep-consistency", cmd_sweep_consistency, "--n-grid", "250,500,1000,2000"),
    ):
        p = sub.add_parser(name)
        _model_args(p, k=5 if name == "sweep-purity" else 3,
                    b="5,4,3,3,3" if name == "sweep-purity" else "5,4,3")
        _fit_args(p)
        p.add_argument(grid_flag, default=default)
        p.add_argument("--reps", type=int, default=50)
        p.add_argument("--algo", nargs="+", choices=ex.ALGOS,
                       default=["saac", "sc", "occam"] if name == "sweep-purity" else ["saac"])
        if name == "sweep-purity":
            p.add_argument("--model", choices=("sbmo", "occam"), default="sbmo")
        p.add_argument("--out", default="-")
        p.set_defaults(func=func)

    p = sub.add_parser("real-eval", help="evaluate on labelled networks (edge list + circles)")
    p.add_argument("--graph")
    p.add_argument("--circles")
    p.add_argument("--dir", help="directory of <id>.edges / <id>.circles pairs")
    p.add_argument("--min-pure", type=float, default=0.10)
    p.add_argument("--min-overlap", type=float, default=0.01)
    p.add_argument("--algo", nargs="+", choices=ex.ALGOS, default=["sc", "occam", "saac"])
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_real_eval)

    p = sub.add_parser("nb-sweep", help="non-backtracking spectrum in the very sparse regime")
    p.add_argument("--n", type=int, default=1200)
    p.add_argument("--s", type=float, default=1 / 3)
    p.add_argument("--a-grid", default="4,9,11,13")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k-eigs", type=int, default=10)
    p.add_argument("--keep-spectra", type=int, default=1)
    p.add_argument("--spectrum-out", default=None)
    p.add_argument("--saac-s-grid", default=None, help="also run adjacency SAAC over this s grid")
    p.add_argument("--saac-out", default="-")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_nb_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SaacError as exc:
        print(f"saac: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
