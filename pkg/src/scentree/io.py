"""File formats: policy JSON, node-graph / Markov JSON exports and CSV reports."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .approx import StageClustering
from .dp import Branch, InfoStates, SolveResult
from .model import Grid
from .scenarios import NodeGraph, ScenarioSet
from .simulate import ClosedLoopTrace, EvaluationSummary

POLICY_FORMAT = 1


def policy_to_dict(res: SolveResult) -> dict:
    return {
        "format": POLICY_FORMAT,
        "method": res.method,
        "value_mode": res.value_mode,
        "penalty": res.penalty,
        "grid": res.grid.to_dict(),
        "model": res.model_params,
        "x0_index": res.x0_index,
        "initial": res.initial.tolist(),
        "info": res.info.to_dict(),
        "branches": [[{"w": b.w.tolist(), "successor": b.successor.tolist(), "q": b.q.tolist()}
                      for b in row] for row in res.branches],
        "steps": [{"shape": list(res.values[k].shape),
                   "values": res.values[k].ravel().tolist(),
                   "policy_index": res.policy[k].ravel().tolist()}
                  for k in range(res.horizon)],
        "terminal": res.values[-1].ravel().tolist(),
        "timings": res.timings,
    }


def policy_from_dict(d: dict) -> SolveResult:
    if d.get("format") != POLICY_FORMAT:
        raise ValueError(f"unsupported policy format {d.get('format')!r}")
    g = d["grid"]
    grid = Grid(tuple(g["x_bounds"]), tuple(g["u_bounds"]), g["x_step"], g["u_step"])
    values, policy = [], []
    for s in d["steps"]:
        shape = tuple(s["shape"])
        values.append(np.asarray(s["values"], dtype=float).reshape(shape))
        policy.append(np.asarray(s["policy_index"], dtype=np.intp).reshape(shape))
    values.append(np.asarray(d["terminal"], dtype=float).reshape(-1, 1))
    branches = [[Branch(np.asarray(b["w"], dtype=float), np.asarray(b["successor"], dtype=np.intp),
                        np.asarray(b["q"], dtype=float)) for b in row] for row in d["branches"]]
    return SolveResult(method=d["method"], grid=grid, values=values, policy=policy,
                       info=InfoStates.from_dict(d["info"]), branches=branches,
                       initial=np.asarray(d["initial"], dtype=float), x0_index=d["x0_index"],
                       value_mode=d["value_mode"], penalty=d["penalty"],
                       timings=d.get("timings", {}), model_params=d.get("model", {}))


def save_policy(res: SolveResult, path) -> None:
    Path(path).write_text(json.dumps(policy_to_dict(res)))


def load_policy(path) -> SolveResult:
    return policy_from_dict(json.loads(Path(path).read_text()))


def save_json(obj: dict, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1) + "\n")


def save_node_graph(graph: NodeGraph, path) -> None:
    save_json(graph.to_dict(), path)


TRAJECTORY_COLUMNS = ["step", "sequence_id", "state_id", "x", "v", "u", "w", "stage_cost"]


def write_trajectories(traces: Iterable[ClosedLoopTrace], path) -> None:
    """One row per step; a final row per sequence carries x_N and the terminal cost."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(TRAJECTORY_COLUMNS)
        for t in traces:
            for k in range(len(t.controls)):
                out.writerow([k, t.sequence_id, int(t.info_states[k]), repr(float(t.states[k])),
                              repr(float(t.high_level[k])), repr(float(t.controls[k])),
                              repr(float(t.w[k])), repr(float(t.stage_costs[k]))])
            n = len(t.controls)
            out.writerow([n, t.sequence_id, "", repr(float(t.states[n])), "", "", "",
                          repr(float(t.terminal_cost))])


SUMMARY_COLUMNS = ["method", "average_cost", "wall_time_s", "infeasible_count"]


def write_summary(rows: Sequence[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS, extrasaction="ignore")
        out.writeheader()
        for r in rows:
            out.writerow(r)


def summary_row(ev: EvaluationSummary, wall_time: float | None = None) -> dict:
    return {"method": ev.method, "average_cost": repr(ev.average_cost),
            "wall_time_s": f"{ev.wall_time if wall_time is None else wall_time:.4f}",
            "infeasible_count": ev.infeasible_count}


def write_cluster_report(scenarios: ScenarioSet, clusterings: Sequence[StageClustering], path) -> None:
    """Rows ``(sequence_id, step, cluster)`` plus the prefix ``w0..wk``.

    Cluster labels are written 1-based.
    """
    N = scenarios.horizon
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["sequence_id", "step", "cluster"] + [f"w{j}" for j in range(N)])
        for cl in clusterings:
            k = cl.step
            for s in range(len(scenarios)):
                prefix = [repr(float(x)) for x in scenarios.values[s, :k + 1]]
                out.writerow([s, k, int(cl.assignments[s]) + 1] + prefix + [""] * (N - k - 1))
