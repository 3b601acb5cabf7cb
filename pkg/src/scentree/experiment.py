"""End-to-end runs: build a disturbance representation, solve, evaluate, compare."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .approx import StageClustering, build_cluster_graph, cluster_all_steps
from .config import RunConfig
from .dp import (SolveResult, TransitionTable, branch_w_values, markov_branches,
                 precompute_transition_table, solve_markov_dp, solve_node_dp, solve_nominal)
from .markov import MarkovModel, estimate_transition
from .model import Grid, SystemModel
from .scenarios import NodeGraph, ScenarioSet, build_exact_tree
from .simulate import EvaluationSummary, evaluate_policy

METHOD_ALIASES = {"exact": "exact", "cluster": "clustered", "clustered": "clustered",
                  "markov": "markov", "nominal": "nominal"}
LABELS = {"exact": "Exact Scenario Tree", "clustered": "Clustering-Based Approximation",
          "markov": "Non-Stationary Markov Chain", "nominal": "Nominal (mean sequence)"}
ORDER_TOL = 1e-9


def canonical_method(name: str) -> str:
    try:
        return METHOD_ALIASES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown method {name!r}; choose from {sorted(METHOD_ALIASES)}") from None


@dataclass
class MethodRun:
    result: SolveResult
    seconds: dict
    graph: NodeGraph | None = None
    clusterings: list[StageClustering] | None = None
    markov: MarkovModel | None = None


def solve_method(cfg: RunConfig, scenarios: ScenarioSet, method: str, *,
                 model: SystemModel | None = None, grid: Grid | None = None,
                 table: TransitionTable | None = None) -> MethodRun:
    """Build the representation for ``method`` and run backward induction.

    ``seconds`` splits wall time into representation build, static table
    build (when the table is created here) and induction.
    """
    method = canonical_method(method)
    model = model or cfg.model()
    if scenarios.horizon != model.horizon:
        raise ValueError(f"scenario horizon {scenarios.horizon} != configured horizon {model.horizon}")
    grid = grid or cfg.grid(model)
    kw = dict(value_mode=cfg.value_mode, penalty=cfg.penalty)
    seconds = {"representation": 0.0, "table": 0.0}
    t0 = time.perf_counter()
    graph = clusterings = markov = None
    if method == "exact":
        graph = build_exact_tree(scenarios, cfg.prefix_decimals)
        w_steps = [scenarios.values[:, k] for k in range(scenarios.horizon)]
    elif method == "clustered":
        clusterings = cluster_all_steps(scenarios, cfg.clustering(scenarios.horizon))
        graph = build_cluster_graph(scenarios, clusterings)
        w_steps = [scenarios.values[:, k] for k in range(scenarios.horizon)]
    elif method == "markov":
        markov = estimate_transition(scenarios, bins_per_step=cfg.markov_bins,
                                     method=cfg.markov_binning)
        w_steps = branch_w_values(markov_branches(markov))
    else:
        nominal = scenarios.probabilities @ scenarios.values
        w_steps = [[w] for w in nominal]
    seconds["representation"] = time.perf_counter() - t0

    if cfg.use_table:
        if table is None:
            table = precompute_transition_table(model, grid, w_per_step=w_steps, penalty=cfg.penalty)
            seconds["table"] = table.build_seconds
        else:
            t1 = time.perf_counter()
            for k, ws in enumerate(w_steps):
                table.add(k, ws)
            seconds["table"] = time.perf_counter() - t1
    tables = table if cfg.use_table else None

    if method in ("exact", "clustered"):
        res = solve_node_dp(model, grid, graph, scenarios, tables=tables,
                            sample_size=cfg.sample_size, seed=cfg.seed, threads=cfg.threads, **kw)
    elif method == "markov":
        res = solve_markov_dp(model, grid, markov, tables=tables, threads=cfg.threads, **kw)
    else:
        res = solve_nominal(model, grid, nominal, tables=tables, **kw)
    seconds["induction"] = res.timings["induction"]
    seconds["total"] = time.perf_counter() - t0
    res.timings.update(seconds)
    return MethodRun(res, seconds, graph, clusterings, markov)


@dataclass
class Comparison:
    runs: dict[str, MethodRun]
    evaluations: dict[str, EvaluationSummary]
    quantized: dict[str, float] = field(default_factory=dict)

    def ordering_holds(self, tol: float = ORDER_TOL) -> bool:
        """Exact average cost does not exceed any other method's (quantized rollouts)."""
        if "exact" not in self.quantized:
            return True
        best = self.quantized["exact"]
        return all(best <= v + tol for v in self.quantized.values())

    def relative_gaps(self) -> dict[str, float]:
        if "exact" not in self.quantized:
            return {}
        base = self.quantized["exact"]
        return {m: (v - base) / base for m, v in self.quantized.items()}

    def table(self) -> str:
        rows = [("Method", "Average cost", "Computation time")]
        for m, ev in self.evaluations.items():
            rows.append((LABELS[m], f"{ev.average_cost:.4f}", f"{self.runs[m].seconds['total']:.2f}s"))
        widths = [max(len(r[i]) for r in rows) for i in range(3)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines)


def compare(cfg: RunConfig, scenarios: ScenarioSet, methods=None) -> Comparison:
    """Solve and evaluate each method on the same scenario set and grid.

    All methods share one static transition table. The ordering check
    always uses quantized rollouts, whatever ``cfg.sim_mode`` says.
    """
    model = cfg.model()
    grid = cfg.grid(model)
    table = TransitionTable(model, grid, cfg.penalty) if cfg.use_table else None
    runs, evals, quant = {}, {}, {}
    for name in (methods or cfg.methods):
        m = canonical_method(name)
        runs[m] = solve_method(cfg, scenarios, m, model=model, grid=grid, table=table)
        ev = evaluate_policy(runs[m].result, model, scenarios, mode=cfg.sim_mode,
                             threads=cfg.threads)
        evals[m] = ev
        if cfg.sim_mode == "quantized":
            quant[m] = ev.average_cost
        else:
            quant[m] = evaluate_policy(runs[m].result, model, scenarios,
                                       mode="quantized").average_cost
    return Comparison(runs, evals, quant)
