"""Closed-loop rollouts of solved policies.

``quantized`` mode snaps the state to the DP grid after every step, so a
rollout follows the same transitions the solver used. ``continuous`` mode
keeps the true state and only rounds it to look up the policy table.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .control import two_level_index
from .dp import SolveResult
from .model import SystemModel
from .scenarios import ScenarioSet

SIM_MODES = ("quantized", "continuous")


@dataclass
class ClosedLoopTrace:
    sequence_id: int
    w: np.ndarray
    states: np.ndarray  # x_0 .. x_N
    controls: np.ndarray  # applied u_0 .. u_{N-1}
    high_level: np.ndarray  # v_0 .. v_{N-1}
    info_states: np.ndarray
    stage_costs: np.ndarray  # running cost incl. penalty, per step
    infeasible: np.ndarray  # per step flag
    terminal_cost: float
    cost: float

    @property
    def infeasible_count(self) -> int:
        return int(self.infeasible.sum())


@dataclass
class EvaluationSummary:
    method: str
    average_cost: float
    costs: np.ndarray
    probabilities: np.ndarray
    infeasible_count: int
    wall_time: float
    traces: list[ClosedLoopTrace]


def simulate_sequence(policy: SolveResult, model: SystemModel, sequence, *,
                      mode: str = "quantized", sequence_id: int = 0) -> ClosedLoopTrace:
    """Roll the closed loop forward along one disturbance sequence.

    At each step the information state is resolved from the observed
    prefix, ``v`` is read from the policy table at the nearest grid state,
    and the applied control is the two-level projection of ``v``.
    """
    if mode not in SIM_MODES:
        raise ValueError(f"mode must be one of {SIM_MODES}")
    w = np.asarray(sequence, dtype=float).reshape(-1)
    N = model.horizon
    if len(w) != N:
        raise ValueError(f"sequence length {len(w)} != horizon {N}")
    grid = policy.grid
    lo, hi = model.x_bounds
    xs = np.empty(N + 1)
    us, vs, costs = np.empty(N), np.empty(N), np.empty(N)
    states = np.empty(N, dtype=np.intp)
    flags = np.zeros(N, dtype=bool)

    xi = int(grid.nearest_x(model.x0))
    x = grid.x_points[xi] if mode == "quantized" else np.float64(model.x0)
    xs[0] = x
    for k in range(N):
        s = policy.info.resolve(k, w[:k + 1])
        v_idx = int(policy.policy[k][xi, s])
        u_idx, flag = two_level_index(model, grid, x, v_idx, w[k], k)
        u = grid.u_points[u_idx]
        g = model.stage_cost(k, x, u, w[k]) + (policy.penalty if flag else 0.0)
        x_next = min(max(model.dynamics(k, x, u, w[k]), lo), hi)
        xi = int(grid.nearest_x(x_next))
        x = grid.x_points[xi] if mode == "quantized" else np.float64(x_next)
        states[k], vs[k], us[k], costs[k], flags[k] = s, grid.u_points[v_idx], u, g, flag
        xs[k + 1] = x
    term = float(model.terminal_cost(x))
    return ClosedLoopTrace(sequence_id=sequence_id, w=w, states=xs, controls=us,
                           high_level=vs, info_states=states, stage_costs=costs,
                           infeasible=flags, terminal_cost=term,
                           cost=float(costs.sum() + term))


def evaluate_policy(policy: SolveResult, model: SystemModel, scenarios: ScenarioSet, *,
                    mode: str = "quantized", threads: int = 1) -> EvaluationSummary:
    """Probability-weighted average realized cost over every sequence in the set."""
    t0 = time.perf_counter()

    def run(i):
        return simulate_sequence(policy, model, scenarios.values[i], mode=mode, sequence_id=i)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            traces = list(pool.map(run, range(len(scenarios))))
    else:
        traces = [run(i) for i in range(len(scenarios))]
    costs = np.array([t.cost for t in traces])
    p = scenarios.probabilities
    return EvaluationSummary(
        method=policy.method,
        average_cost=float(p @ costs),
        costs=costs,
        probabilities=p,
        infeasible_count=sum(t.infeasible_count for t in traces),
        wall_time=time.perf_counter() - t0,
        traces=traces,
    )


def evaluate_on_model(policy: SolveResult, model: SystemModel) -> float:
    """Expected closed-loop cost under the disturbance model the policy was solved against.

    Propagates the probability mass over (grid state, information state)
    forward through the policy's own branches, applying the same two-level
    projection and rounding as the solver. For an exact tree this is the
    scenario set itself; for clusters and Markov bins it is their
    approximate dynamics. Only meaningful with nearest-point value
    resolution.
    """
    from .dp import _OnTheFly

    grid = policy.grid
    tables = _OnTheFly(model, grid, policy.penalty)
    N = policy.horizon
    mass = np.zeros((grid.nx, len(policy.initial)))
    mass[policy.x0_index] = policy.initial
    expected = 0.0
    for k in range(N):
        n_next = policy.values[k + 1].shape[1]
        nxt_mass = np.zeros((grid.nx, n_next))
        for i, branch in enumerate(policy.branches[k]):
            rows = np.nonzero(mass[:, i] > 0)[0]
            if rows.size == 0 or len(branch) == 0:
                continue
            m = mass[rows, i]
            v = policy.policy[k][rows, i]
            for w, j, q in zip(branch.w, branch.successor, branch.q):
                tab = tables.get(k, w)
                expected += float(np.sum(m * q * tab.cost[rows, v]))
                np.add.at(nxt_mass[:, j], tab.next_index[rows, v], m * q)
        mass = nxt_mass
    terminal = np.asarray(model.terminal_cost(grid.x_points), dtype=float) + np.zeros(grid.nx)
    return expected + float(mass[:, 0] @ terminal)
