"""Backward induction over (state grid point, information state).

All four policy types share one recursion. An information state at step
``k`` carries a list of branches ``(w, successor, q)``: with conditional
probability ``q`` the disturbance at ``k`` is ``w`` and the information
state at ``k + 1`` is ``successor``. The nominal case has one branch per
step, an exact tree node one ``w`` and its children, a cluster several
``w`` values, and a Markov bin its center and the bins it can move to.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .approx import nearest_center, sample_node
from .control import DEFAULT_PENALTY, StageTable, raw_stage, stage_table
from .markov import MarkovModel
from .model import Grid, SystemModel
from .scenarios import DEFAULT_DECIMALS, NodeGraph, ScenarioSet, row_search

METHODS = ("nominal", "exact", "clustered", "markov")
VALUE_MODES = ("nearest", "linear")
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class Branch:
    w: np.ndarray
    successor: np.ndarray
    q: np.ndarray

    def __len__(self):
        return len(self.w)


def make_branch(w, successor, q) -> Branch:
    """Merge duplicate ``(w, successor)`` pairs and normalize ``q`` to sum to one."""
    w = np.asarray(w, dtype=float)
    successor = np.asarray(successor, dtype=np.intp)
    q = np.asarray(q, dtype=float)
    if len(w) == 0:
        return Branch(w, successor, q)
    order = np.lexsort((successor, w))
    w, successor, q = w[order], successor[order], q[order]
    new = np.ones(len(w), dtype=bool)
    new[1:] = (w[1:] != w[:-1]) | (successor[1:] != successor[:-1])
    starts = np.nonzero(new)[0]
    q = np.add.reduceat(q, starts)
    return Branch(w[starts], successor[starts], q / q.sum())


@dataclass
class InfoStates:
    """How an observed prefix maps to an information state id at each step."""
    kind: str
    horizon: int
    prefixes: list[np.ndarray] | None = None  # exact: sorted canonical prefixes
    centers: list[np.ndarray] | None = None  # clustered: (n_k, k+1); markov: (n_k,)
    reachable: list[np.ndarray] | None = None  # markov only
    decimals: int = DEFAULT_DECIMALS

    def count(self, k: int) -> int:
        if self.kind == "nominal":
            return 1
        if self.kind == "exact":
            return len(self.prefixes[k])
        return len(self.centers[k])

    def resolve(self, k: int, prefix: Sequence[float]) -> int:
        prefix = np.asarray(prefix, dtype=float)
        if self.kind == "nominal":
            return 0
        if self.kind == "exact":
            key = np.round(prefix[:k + 1], self.decimals) + 0.0
            table = self.prefixes[k]
            pos = row_search(table, key)
            if pos is None:
                raise KeyError(f"step {k}: prefix {key.tolist()} is not in the scenario set")
            return pos
        if self.kind == "clustered":
            return int(nearest_center(prefix[None, :k + 1], self.centers[k])[0])
        if self.kind == "markov":
            c = self.centers[k]
            idx = np.nonzero(self.reachable[k])[0]
            return int(idx[np.argmin(np.abs(prefix[k] - c[idx]))])
        raise ValueError(f"unknown information kind {self.kind!r}")

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "horizon": self.horizon, "decimals": self.decimals}
        if self.prefixes is not None:
            out["prefixes"] = [p.tolist() for p in self.prefixes]
        if self.centers is not None:
            out["centers"] = [c.tolist() for c in self.centers]
        if self.reachable is not None:
            out["reachable"] = [r.tolist() for r in self.reachable]
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "InfoStates":
        def arrs(key, dtype=float):
            v = d.get(key)
            return None if v is None else [np.asarray(x, dtype=dtype) for x in v]
        prefixes = arrs("prefixes")
        if prefixes is not None:
            prefixes = [p.reshape(len(p), k + 1) for k, p in enumerate(prefixes)]
        centers = arrs("centers")
        if centers is not None and d["kind"] == "clustered":
            centers = [c.reshape(len(c), k + 1) for k, c in enumerate(centers)]
        return cls(kind=d["kind"], horizon=d["horizon"], prefixes=prefixes,
                   centers=centers, reachable=arrs("reachable", bool),
                   decimals=d.get("decimals", DEFAULT_DECIMALS))


@dataclass
class SolveResult:
    """Value and policy tables from one backward induction.

    ``values[k]`` has shape ``(nx, n_k)`` for ``k = 0..N`` (``n_N = 1``);
    ``policy[k]`` holds indices into ``grid.u_points`` of the high-level
    control for ``k = 0..N-1``.
    """
    method: str
    grid: Grid
    values: list[np.ndarray]
    policy: list[np.ndarray]
    info: InfoStates
    branches: list[list[Branch]]
    initial: np.ndarray
    x0_index: int
    value_mode: str = "nearest"
    penalty: float = DEFAULT_PENALTY
    timings: dict = field(default_factory=dict)
    model_params: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return len(self.policy)

    @property
    def root_value(self) -> float:
        return float(self.initial @ self.values[0][self.x0_index])

    def policy_u(self, k: int) -> np.ndarray:
        return self.grid.u_points[self.policy[k]]

    def state_counts(self) -> list[int]:
        return [v.shape[1] for v in self.values[:-1]]


class TransitionTable:
    """Precomputed stage tables keyed by step and disturbance value.

    For a time-invariant model one table per distinct ``w`` serves every
    step. Lookups return the same arrays the solver would otherwise compute
    on the fly, so results do not depend on whether a table is used.
    """

    def __init__(self, model: SystemModel, grid: Grid, penalty: float = DEFAULT_PENALTY):
        self.model = model
        self.grid = grid
        self.penalty = penalty
        self._tables: dict[tuple, StageTable] = {}
        self._raw: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}
        self.w_values: list[np.ndarray] = []
        self.build_seconds = 0.0

    def _key(self, k: int, w: float) -> tuple:
        return (None if self.model.time_invariant else int(k), float(w))

    def add(self, k: int, w_values) -> None:
        for w in np.unique(np.asarray(w_values, dtype=float)):
            key = self._key(k, w)
            if key not in self._tables:
                raw = raw_stage(self.model, self.grid, k, w)
                self._raw[key] = raw
                self._tables[key] = stage_table(self.model, self.grid, k, w, self.penalty, raw)

    def lookup(self, k: int, x_index: int, u_index: int, w: float) -> tuple[float, float]:
        """Raw next state (before clamping or rounding) and running cost."""
        xn, g = self._raw[self._key(k, w)]
        return float(xn[x_index, u_index]), float(g[x_index, u_index])

    def get(self, k: int, w: float) -> StageTable:
        key = self._key(k, w)
        if key not in self._tables:
            self.add(k, [w])
        return self._tables[key]

    def __len__(self):
        return len(self._tables)


def precompute_transition_table(model: SystemModel, grid: Grid, scenarios=None,
                                penalty: float = DEFAULT_PENALTY,
                                w_per_step: Sequence[Sequence[float]] | None = None) -> TransitionTable:
    """Tabulate next states and running costs for every grid pair and distinct ``w``.

    The distinct values come from ``scenarios`` (column ``k`` for step
    ``k``) or from ``w_per_step``.
    """
    t0 = time.perf_counter()
    table = TransitionTable(model, grid, penalty)
    if w_per_step is None:
        if scenarios is None:
            raise ValueError("need scenarios or w_per_step")
        w_per_step = [scenarios.values[:, k] for k in range(scenarios.horizon)]
    for k, ws in enumerate(w_per_step):
        uniq = np.unique(np.asarray(ws, dtype=float))
        table.w_values.append(uniq)
        table.add(k, uniq)
    table.build_seconds = time.perf_counter() - t0
    return table


class _OnTheFly:
    def __init__(self, model, grid, penalty):
        self.model, self.grid, self.penalty = model, grid, penalty

    def get(self, k, w):
        return stage_table(self.model, self.grid, k, w, self.penalty)


def _continuation(mix: np.ndarray, tab: StageTable, grid: Grid, mode: str) -> np.ndarray:
    if mode == "nearest":
        return mix[tab.next_index]
    i0, frac = grid.interp_weights(tab.next_x)
    if grid.nx == 1:
        return mix[i0]
    return (1.0 - frac) * mix[i0] + frac * mix[i0 + 1]


def _solve_state(branch: Branch, J_next: np.ndarray, k: int, tables, grid: Grid,
                 mode: str) -> tuple[np.ndarray, np.ndarray]:
    total = None
    fixed = None
    starts = np.nonzero(np.r_[True, branch.w[1:] != branch.w[:-1]])[0]
    ends = np.r_[starts[1:], len(branch)]
    for s, e in zip(starts, ends):
        tab = tables.get(k, branch.w[s])
        q = branch.q[s:e]
        mix = J_next[:, branch.successor[s:e]] @ q
        term = q.sum() * tab.cost + _continuation(mix, tab, grid, mode)
        total = term if total is None else total + term
        fixed = tab.fixed if fixed is None else fixed & tab.fixed
    best = total.min(axis=1)
    # candidates within rounding noise of the minimum count as tied
    is_min = total <= (best + TIE_RTOL * np.maximum(1.0, np.abs(best)))[:, None]
    pref = is_min & fixed
    choice = np.where(pref.any(axis=1), np.argmax(pref, axis=1), np.argmax(is_min, axis=1))
    return total[np.arange(len(total)), choice], choice


def backward_induction(model: SystemModel, grid: Grid, branches: list[list[Branch]],
                       tables=None, *, value_mode: str = "nearest",
                       penalty: float = DEFAULT_PENALTY, threads: int = 1):
    """Run the recursion and return ``(values, policy)``.

    Among high-level controls whose value is within ``TIE_RTOL`` (relative)
    of the minimum, the lowest one that every branch applies unchanged is
    chosen, else the lowest one; the stored value is that control's own.
    Information states without branches (unreachable Markov bins) get zero
    value and policy index 0.
    """
    if value_mode not in VALUE_MODES:
        raise ValueError(f"value_mode must be one of {VALUE_MODES}")
    N = model.horizon
    if len(branches) != N:
        raise ValueError(f"{len(branches)} branch stages for horizon {N}")
    if tables is None:
        tables = _OnTheFly(model, grid, penalty)
    terminal = np.asarray(model.terminal_cost(grid.x_points), dtype=float) + np.zeros(grid.nx)
    values = [None] * (N + 1)
    policy = [None] * N
    values[N] = terminal[:, None].copy()
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        for k in range(N - 1, -1, -1):
            J_next = values[k + 1]
            n = len(branches[k])
            J = np.zeros((grid.nx, n))
            pol = np.zeros((grid.nx, n), dtype=np.intp)

            def work(i, k=k, J_next=J_next):
                if len(branches[k][i]) == 0:
                    return i, None
                return i, _solve_state(branches[k][i], J_next, k, tables, grid, value_mode)

            results = pool.map(work, range(n)) if pool else map(work, range(n))
            for i, res in results:
                if res is not None:
                    J[:, i], pol[:, i] = res
            values[k], policy[k] = J, pol
    finally:
        if pool:
            pool.shutdown()
    return values, policy


def _finish(method, model, grid, branches, info, initial, tables, value_mode, penalty,
            threads, t_build) -> SolveResult:
    t0 = time.perf_counter()
    values, policy = backward_induction(model, grid, branches, tables, value_mode=value_mode,
                                        penalty=penalty, threads=threads)
    t_ind = time.perf_counter() - t0
    return SolveResult(method=method, grid=grid, values=values, policy=policy, info=info,
                       branches=branches, initial=np.asarray(initial, dtype=float),
                       x0_index=int(grid.nearest_x(model.x0)), value_mode=value_mode,
                       penalty=penalty, timings={"model": t_build, "induction": t_ind},
                       model_params=dict(model.params))


def solve_nominal(model: SystemModel, grid: Grid, nominal_w, *, tables=None,
                  value_mode: str = "nearest", penalty: float = DEFAULT_PENALTY) -> SolveResult:
    """DP against a single predicted disturbance sequence."""
    nominal_w = np.asarray(nominal_w, dtype=float).reshape(-1)
    if len(nominal_w) != model.horizon:
        raise ValueError(f"nominal sequence has length {len(nominal_w)}, horizon is {model.horizon}")
    branches = [[make_branch([w], [0], [1.0])] for w in nominal_w]
    info = InfoStates("nominal", model.horizon)
    return _finish("nominal", model, grid, branches, info, [1.0], tables, value_mode,
                   penalty, 1, 0.0)


def node_branches(graph: NodeGraph, scenarios: ScenarioSet, sample_size: int | None = None,
                  seed: int = 0) -> list[list[Branch]]:
    """Per-node branches from member sequences: ``w(k)`` and the node holding it at ``k + 1``."""
    N = scenarios.horizon
    if graph.horizon != N or any(len(m) != len(scenarios) for m in graph.membership):
        raise ValueError("node graph was not built from this scenario set")
    out = []
    for k in range(N):
        row = []
        for i, node in enumerate(graph.nodes[k]):
            if sample_size is not None:
                node = sample_node(node, sample_size, np.random.default_rng([seed, k, i]))
            m = node.member_ids
            succ = graph.membership[k + 1][m] if k < N - 1 else np.zeros(len(m), dtype=np.intp)
            row.append(make_branch(scenarios.values[m, k], succ, node.weights))
        out.append(row)
    return out


def solve_node_dp(model: SystemModel, grid: Grid, graph: NodeGraph, scenarios: ScenarioSet, *,
                  tables=None, sample_size: int | None = None, seed: int = 0,
                  value_mode: str = "nearest", penalty: float = DEFAULT_PENALTY,
                  threads: int = 1) -> SolveResult:
    """DP over (x, node) for an exact tree or a clustered node graph.

    The stage value of high-level control ``v`` is the member-weighted
    average of running cost plus continuation, with the applied control
    projected per member disturbance.
    """
    if scenarios.horizon != model.horizon:
        raise ValueError(f"scenario horizon {scenarios.horizon} != model horizon {model.horizon}")
    t0 = time.perf_counter()
    branches = node_branches(graph, scenarios, sample_size, seed)
    if graph.kind == "exact":
        info = InfoStates("exact", model.horizon, prefixes=list(graph.prefixes),
                          decimals=graph.meta.get("decimals", DEFAULT_DECIMALS))
    else:
        info = InfoStates("clustered", model.horizon, centers=list(graph.centers))
    method = "exact" if graph.kind == "exact" else "clustered"
    return _finish(method, model, grid, branches, info, graph.node_probabilities(0), tables,
                   value_mode, penalty, threads, time.perf_counter() - t0)


def markov_branches(markov: MarkovModel) -> list[list[Branch]]:
    N = markov.horizon
    out = []
    for k in range(N):
        row = []
        for i, c in enumerate(markov.centers[k]):
            if markov.marginals[k][i] <= 0:
                row.append(make_branch([], [], []))
            elif k == N - 1:
                row.append(make_branch([c], [0], [1.0]))
            else:
                t = markov.transitions[k][i]
                js = np.nonzero(t > 0)[0]
                row.append(make_branch(np.full(len(js), c), js, t[js]))
        out.append(row)
    return out


def solve_markov_dp(model: SystemModel, grid: Grid, markov: MarkovModel, *, tables=None,
                    value_mode: str = "nearest", penalty: float = DEFAULT_PENALTY,
                    threads: int = 1) -> SolveResult:
    """DP over (x, bin) with the bin center standing in for the disturbance."""
    if markov.horizon != model.horizon:
        raise ValueError("Markov model horizon does not match the system")
    t0 = time.perf_counter()
    branches = markov_branches(markov)
    info = InfoStates("markov", model.horizon, centers=list(markov.centers),
                      reachable=[markov.reachable(k) for k in range(markov.horizon)])
    return _finish("markov", model, grid, branches, info, markov.marginals[0], tables,
                   value_mode, penalty, threads, time.perf_counter() - t0)


def branch_w_values(branches: list[list[Branch]]) -> list[np.ndarray]:
    """Distinct disturbance values per step, for building a transition table."""
    out = []
    for row in branches:
        ws = [b.w for b in row if len(b)]
        out.append(np.unique(np.concatenate(ws)) if ws else np.array([]))
    return out
