"""Command-line front end.

    scentree generate      --config cfg.json --out scenarios.json
    scentree solve         --config cfg.json --scenarios s.json --method exact --out policy.json
    scentree simulate      --config cfg.json --scenarios s.json --policy policy.json --out runs/
    scentree compare       --config cfg.json --scenarios s.json --out runs/
    scentree cluster-report --config cfg.json --scenarios s.json --out clusters.csv
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import io
from .config import RunConfig, config_help
from .experiment import LABELS, canonical_method, compare, solve_method
from .generate import generate
from .model import linear_plant
from .scenarios import load_scenarios, save_scenarios
from .simulate import evaluate_policy

log = logging.getLogger("scentree")
OUT_ENV = "SCENTREE_OUT"


class StageError(RuntimeError):
    pass


def _out_dir(cfg: RunConfig) -> Path:
    base = Path(cfg.out) if cfg.out else Path(os.environ.get(OUT_ENV, "."))
    base.mkdir(parents=True, exist_ok=True)
    return base


def _out_file(cfg: RunConfig, default_name: str) -> Path:
    if cfg.out and Path(cfg.out).suffix:
        p = Path(cfg.out)
        p.parent.mkdir(parents=True, exist_ok=True)
        return p
    return _out_dir(cfg) / default_name


def _scenarios(cfg: RunConfig):
    if not cfg.scenarios:
        raise StageError("load: no scenario file given (--scenarios or config 'scenarios')")
    return load_scenarios(cfg.scenarios, decimals=cfg.prefix_decimals)


def cmd_generate(cfg: RunConfig) -> int:
    sc = generate(cfg.gen_spec())
    path = _out_file(cfg, "scenarios.json")
    save_scenarios(sc, path)
    print(f"generated {len(sc)} sequences, horizon {sc.horizon}, seed {cfg.seed} -> {path}")
    return 0


def cmd_solve(cfg: RunConfig, method: str) -> int:
    sc = _scenarios(cfg)
    run = solve_method(cfg, sc, method)
    path = _out_file(cfg, f"policy_{run.result.method}.json")
    io.save_policy(run.result, path)
    s = run.seconds
    print(f"{run.result.method}: states per step {run.result.state_counts()}")
    print(f"  representation {s['representation']:.3f}s  table {s['table']:.3f}s  "
          f"induction {s['induction']:.3f}s  root value {run.result.root_value:.6f}")
    print(f"  policy -> {path}")
    return 0


def cmd_simulate(cfg: RunConfig) -> int:
    if not cfg.policy:
        raise StageError("simulate: no policy file given (--policy)")
    sc = _scenarios(cfg)
    pol = io.load_policy(cfg.policy)
    model = linear_plant(**pol.model_params) if pol.model_params else cfg.model()
    ev = evaluate_policy(pol, model, sc, mode=cfg.sim_mode, threads=cfg.threads)
    out = _out_dir(cfg)
    io.write_trajectories(ev.traces, out / f"trajectories_{pol.method}.csv")
    io.write_summary([io.summary_row(ev)], out / f"summary_{pol.method}.csv")
    print(f"{pol.method}: average cost {ev.average_cost:.6f} over {len(sc)} sequences "
          f"({cfg.sim_mode}), infeasible events {ev.infeasible_count}")
    return 0


def cmd_compare(cfg: RunConfig) -> int:
    sc = _scenarios(cfg)
    cmp = compare(cfg, sc)
    out = _out_dir(cfg)
    rows = []
    for m, ev in cmp.evaluations.items():
        io.write_trajectories(ev.traces, out / f"trajectories_{m}.csv")
        rows.append(io.summary_row(ev, cmp.runs[m].seconds["total"]))
        run = cmp.runs[m]
        if run.clusterings is not None:
            io.write_cluster_report(sc, run.clusterings, out / "cluster_report.csv")
    io.write_summary(rows, out / "summary.csv")
    print(cmp.table())
    ok = cmp.ordering_holds()
    gaps = cmp.relative_gaps()
    if gaps:
        print("relative gap to exact: " + ", ".join(f"{LABELS[m]} {100 * g:.2f}%"
                                                    for m, g in gaps.items() if m != "exact"))
    print("ordering exact <= others (quantized): " + ("holds" if ok else "VIOLATED"))
    return 0 if ok else 1


def cmd_cluster_report(cfg: RunConfig) -> int:
    from .approx import cluster_all_steps

    sc = _scenarios(cfg)
    cl = cluster_all_steps(sc, cfg.clustering(sc.horizon))
    path = _out_file(cfg, "cluster_report.csv")
    io.write_cluster_report(sc, cl, path)
    print(f"clusters per step {[c.n_clusters for c in cl]} -> {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (keys listed below)")
    common.add_argument("--scenarios", help="scenario JSON file")
    common.add_argument("--policy", help="policy JSON file")
    common.add_argument("--out", help=f"output file or directory (default ${OUT_ENV} or .)")
    common.add_argument("--seed", type=int, help="override config seed")
    common.add_argument("--threads", type=int, help="worker thread cap")
    common.add_argument("--sim-mode", choices=["quantized", "continuous"])
    common.add_argument("--value-mode", choices=["nearest", "linear"])
    common.add_argument("-v", "--verbose", action="store_true")

    epilog = config_help()
    p = argparse.ArgumentParser(prog="scentree", description=__doc__.splitlines()[0],
                                epilog=epilog, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)
    kw = dict(parents=[common], epilog=epilog, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub.add_parser("generate", help="write a synthetic scenario file", **kw)
    s = sub.add_parser("solve", help="solve one method and write its policy", **kw)
    s.add_argument("--method", required=True, help="exact | cluster | markov | nominal")
    sub.add_parser("simulate", help="roll a saved policy over a scenario set", **kw)
    sub.add_parser("compare", help="solve and evaluate every configured method", **kw)
    sub.add_parser("cluster-report", help="per-step k-means labels as CSV", **kw)
    return p


def load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {"scenarios": args.scenarios, "policy": args.policy, "out": args.out,
                 "seed": args.seed, "threads": args.threads, "sim_mode": args.sim_mode,
                 "value_mode": args.value_mode}
    for key, val in overrides.items():
        if val is not None:
            setattr(cfg, key, val)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    stage = "config"
    try:
        cfg = load_config(args)
        stage = args.command
        if args.command == "generate":
            return cmd_generate(cfg)
        if args.command == "solve":
            canonical_method(args.method)
            return cmd_solve(cfg, args.method)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "compare":
            return cmd_compare(cfg)
        return cmd_cluster_report(cfg)
    except (StageError, ValueError, KeyError, OSError) as exc:
        print(f"scentree {stage}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
