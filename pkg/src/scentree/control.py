"""Admissible controls and the two-level mapping from high-level to applied control.

The policy proposes ``v`` on the control grid; the applied control is the
admissible grid control nearest to ``v`` given the observed ``w``. When no
grid control keeps the next state inside the state bounds, the control whose
raw next state lies closest to the bounds is applied, the state is clamped
and a penalty is charged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import BOUND_TOL, Grid, SystemModel

DEFAULT_PENALTY = 1e3


def _admissible(model: SystemModel, xn: np.ndarray) -> np.ndarray:
    lo, hi = model.x_bounds
    return (xn >= lo - BOUND_TOL) & (xn <= hi + BOUND_TOL)


def _project(adm: np.ndarray, xn: np.ndarray, model: SystemModel):
    """Map every high-level index to an applied index, row by row.

    ``adm`` and ``xn`` have shape ``(..., nu)``; the result has the same
    shape (the high-level grid is the control grid) plus a per-row
    infeasibility flag of shape ``(...)``.
    """
    nu = adm.shape[-1]
    idx = np.arange(nu)
    left = np.maximum.accumulate(np.where(adm, idx, -1), axis=-1)
    right = np.flip(np.minimum.accumulate(np.flip(np.where(adm, idx, nu), -1), axis=-1), -1)
    d_left = np.where(left >= 0, idx - left, nu + 1)
    d_right = np.where(right < nu, right - idx, nu + 1)
    applied = np.where(d_left <= d_right, left, right)

    infeasible = ~adm.any(axis=-1)
    if infeasible.any():
        lo, hi = model.x_bounds
        gap = np.maximum(np.maximum(lo - xn, xn - hi), 0.0)
        fallback = np.argmin(gap, axis=-1)
        applied = np.where(infeasible[..., None], fallback[..., None], applied)
    return applied, infeasible


def admissible_controls(model: SystemModel, grid: Grid, x: float, w: float, k: int = 0) -> np.ndarray:
    """Control grid points whose next state stays inside the state bounds."""
    xn = model.dynamics(k, np.float64(x), grid.u_points, np.float64(w))
    return grid.u_points[_admissible(model, np.asarray(xn, dtype=float))]


def two_level_index(model: SystemModel, grid: Grid, x: float, v_index: int, w: float,
                    k: int = 0) -> tuple[int, bool]:
    """Index form of :func:`apply_two_level`."""
    xn = np.asarray(model.dynamics(k, np.float64(x), grid.u_points, np.float64(w)), dtype=float)
    applied, infeasible = _project(_admissible(model, xn), xn, model)
    return int(applied[v_index]), bool(infeasible)


def apply_two_level(model: SystemModel, grid: Grid, x: float, v: float, w: float,
                    k: int = 0) -> tuple[float, bool]:
    """Applied control for high-level control ``v`` at state ``x`` and disturbance ``w``.

    Returns ``(u, infeasible)``; ties between equally close admissible
    controls go to the lower one.
    """
    i, flag = two_level_index(model, grid, x, int(grid.nearest_u(v)), w, k)
    return float(grid.u_points[i]), flag


@dataclass(frozen=True)
class StageTable:
    """Everything the DP needs for one ``(k, w)`` pair, indexed ``[x, v]``."""
    applied: np.ndarray  # control index actually applied
    next_x: np.ndarray  # next state, clamped into the state bounds
    next_index: np.ndarray  # nearest grid index of next_x
    cost: np.ndarray  # running cost plus infeasibility penalty
    infeasible: np.ndarray  # per x row
    fixed: np.ndarray  # applied == v


def raw_stage(model: SystemModel, grid: Grid, k: int, w: float):
    """Unprojected next states and running costs on the full ``(x, u)`` grid."""
    X = grid.x_points[:, None]
    U = grid.u_points[None, :]
    w = np.float64(w)
    xn = np.asarray(model.dynamics(k, X, U, w), dtype=float) + np.zeros((grid.nx, grid.nu))
    g = np.asarray(model.stage_cost(k, X, U, w), dtype=float) + np.zeros((grid.nx, grid.nu))
    return xn, g


def stage_table(model: SystemModel, grid: Grid, k: int, w: float,
                penalty: float = DEFAULT_PENALTY, raw=None) -> StageTable:
    xn, g = raw_stage(model, grid, k, w) if raw is None else raw
    applied, infeasible = _project(_admissible(model, xn), xn, model)
    rows = np.arange(grid.nx)[:, None]
    nxt = np.clip(xn[rows, applied], *model.x_bounds)
    cost = g[rows, applied] + np.where(infeasible, penalty, 0.0)[:, None]
    return StageTable(applied=applied, next_x=nxt, next_index=grid.nearest_x(nxt),
                      cost=cost, infeasible=infeasible,
                      fixed=applied == np.arange(grid.nu)[None, :])
