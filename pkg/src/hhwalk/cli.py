"""hhwalk command line.

Exit codes: 0 ok, 1 validation failure, 2 tolerance failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import experiments as ex
from .errors import HHWalkError

EXIT_OK, EXIT_INVALID, EXIT_TOLERANCE = 0, 1, 2

log = logging.getLogger("hhwalk")


def create_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int, help="overrides HHWALK_SEED and the config")
    common.add_argument("--out-dir", help="output directory")
    common.add_argument("--tol", type=float, help="oracle solver tolerance")
    common.add_argument("--steps", type=int, help="walk length T")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="hhwalk",
        description="node2vec stationary distributions on household models",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common],
                   help="sample a universe graph and write the household model")
    sub.add_parser("compare", parents=[common],
                   help="analytic vs exact oracle vs empirical walk, per node")
    sub.add_parser("sojourn", parents=[common],
                   help="expected sojourn times: closed form, exact solve, Monte Carlo")
    sub.add_parser("figures", parents=[common],
                   help="stationary probability vs degree, node2vec next to SRW (CSV + SVG)")
    sub.add_parser("oracle", parents=[common],
                   help="exact directed-edge stationary distribution")
    sub.add_parser("walk", parents=[common],
                   help="run the walk and dump occupancy counts")
    return parser


def main(argv=None) -> int:
    args = create_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = ex.load_config(args.config, {"seed": args.seed, "out_dir": args.out_dir,
                                           "tol": args.tol, "steps": args.steps})
        return _run(args.command, cfg)
    except HHWalkError as exc:
        print(f"hhwalk {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID


def _run(command, cfg) -> int:
    out = cfg.out_path
    if command == "generate":
        meta = ex.cmd_generate(cfg)
        print(f"seed={meta['seed']} |E'|={meta['universe_edges']} |V|={meta['household_nodes']} "
              f"|E|={meta['household_edges']} connected={meta['connected']} -> {out}")
        return EXIT_OK if not meta["violations"] else EXIT_INVALID
    if command == "compare":
        status = EXIT_OK
        for rep in ex.cmd_compare(cfg):
            p = rep.params
            print(f"alpha={p.alpha:g} beta={p.beta:g} gamma={p.gamma:g} "
                  f"max|analytic-oracle|={rep.max_abs_diff:.3e} "
                  f"TV(empirical,oracle)={rep.tv_empirical:.4f}")
            if rep.sum_violations():
                status = max(status, EXIT_INVALID)
            if rep.max_abs_diff > cfg.compare_tol:
                status = EXIT_TOLERANCE
        return status
    if command == "sojourn":
        rows = ex.cmd_sojourn(cfg)
        print(f"{len(rows)} rows -> {out / 'sojourn.csv'}")
        return EXIT_OK
    if command == "figures":
        panels = ex.cmd_figures(cfg)
        print(f"{len(panels)} panels -> {out}")
        return EXIT_OK
    if command == "oracle":
        for r in ex.cmd_oracle(cfg):
            print(f"alpha={r['alpha']:g} beta={r['beta']:g} gamma={r['gamma']:g} "
                  f"residual={r['balance_residual']:.3e}")
        return EXIT_OK
    if command == "walk":
        for r in ex.cmd_walk(cfg):
            print(f"alpha={r['alpha']:g} beta={r['beta']:g} gamma={r['gamma']:g} "
                  f"Y* transitions={r['ystar_transitions']} "
                  f"TV(Y*, d/2|E'|)={r['tv_ystar_uniform_edge']:.4f}")
        return EXIT_OK
    raise AssertionError(command)


if __name__ == "__main__":
    sys.exit(main())
