"""Plant description and the quantization grid used by the DP solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

# slack on state bounds when testing admissibility of floating-point next states
BOUND_TOL = 1e-9


@dataclass(frozen=True)
class SystemModel:
    """Finite-horizon scalar system ``x_{k+1} = f(k, x, u, w)``.

    ``dynamics`` and ``stage_cost`` take ``(k, x, u, w)`` and must
    broadcast over numpy arrays; ``terminal_cost`` takes ``x``. Both costs
    must be nonnegative.
    """
    horizon: int
    dynamics: Callable
    stage_cost: Callable
    terminal_cost: Callable
    x_bounds: tuple[float, float]
    u_bounds: tuple[float, float]
    x0: float
    time_invariant: bool = True
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not self.x_bounds[0] < self.x_bounds[1]:
            raise ValueError(f"empty state interval {self.x_bounds}")
        if not self.u_bounds[0] <= self.u_bounds[1]:
            raise ValueError(f"empty control interval {self.u_bounds}")
        if not self.x_bounds[0] <= self.x0 <= self.x_bounds[1]:
            raise ValueError(f"x0={self.x0} outside {self.x_bounds}")


def linear_plant(a: float = 0.9, b: float = 1.0, c: float = 1.0,
                 control_weight: float = 1.0, terminal_target: float = -2.0,
                 terminal_weight: float = 1.0, x_bounds=(-2.0, 2.0), u_bounds=(0.0, 1.6),
                 x0: float = 1.8, horizon: int = 10) -> SystemModel:
    """``x' = a x + b u - c w`` with cost ``r u^2`` and terminal ``q (target - x_N)^2``.

    The defaults are the reference instance: ``x' = 0.9 x + u - w``,
    ``g = u^2``, ``g_N = (-2 - x_N)^2``, ``x0 = 1.8``, ``N = 10``.
    """
    def dynamics(k, x, u, w):
        return a * x + b * u - c * w

    def stage_cost(k, x, u, w):
        return control_weight * u * u

    def terminal_cost(x):
        d = terminal_target - x
        return terminal_weight * d * d

    params = dict(a=a, b=b, c=c, control_weight=control_weight,
                  terminal_target=terminal_target, terminal_weight=terminal_weight,
                  x_bounds=list(map(float, x_bounds)), u_bounds=list(map(float, u_bounds)),
                  x0=x0, horizon=horizon)
    return SystemModel(horizon=horizon, dynamics=dynamics, stage_cost=stage_cost,
                       terminal_cost=terminal_cost, x_bounds=tuple(map(float, x_bounds)),
                       u_bounds=tuple(map(float, u_bounds)), x0=float(x0), params=params)


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    if step <= 0:
        raise ValueError("grid step must be positive")
    n = int(round((hi - lo) / step)) + 1
    if n == 1:
        return np.array([float(lo)])
    return np.linspace(lo, hi, n)


@dataclass(frozen=True)
class Grid:
    """Uniform state and control grids including both interval endpoints."""
    x_bounds: tuple[float, float]
    u_bounds: tuple[float, float]
    x_step: float = 0.02
    u_step: float = 0.02

    def __post_init__(self):
        object.__setattr__(self, "x_points", _axis(*self.x_bounds, self.x_step))
        object.__setattr__(self, "u_points", _axis(*self.u_bounds, self.u_step))
        self.x_points.setflags(write=False)
        self.u_points.setflags(write=False)

    @classmethod
    def for_model(cls, model: SystemModel, x_step: float = 0.02, u_step: float = 0.02) -> "Grid":
        return cls(tuple(model.x_bounds), tuple(model.u_bounds), x_step, u_step)

    @property
    def nx(self) -> int:
        return len(self.x_points)

    @property
    def nu(self) -> int:
        return len(self.u_points)

    def nearest_x(self, x):
        """Nearest state grid index (halves round up), clipped to the grid."""
        if self.nx == 1:
            return np.zeros(np.shape(x), dtype=np.intp)[()]
        lo, hi = self.x_bounds
        t = (np.asarray(x, dtype=float) - lo) * ((self.nx - 1) / (hi - lo))
        return np.clip(np.floor(t + 0.5), 0, self.nx - 1).astype(np.intp)[()]

    def nearest_u(self, u):
        if self.nu == 1:
            return np.zeros(np.shape(u), dtype=np.intp)[()]
        lo, hi = self.u_bounds
        t = (np.asarray(u, dtype=float) - lo) * ((self.nu - 1) / (hi - lo))
        return np.clip(np.floor(t + 0.5), 0, self.nu - 1).astype(np.intp)[()]

    def interp_weights(self, x):
        """Lower index and fractional weight for linear interpolation."""
        lo, hi = self.x_bounds
        if self.nx == 1:
            z = np.zeros(np.shape(x))
            return z.astype(np.intp), z
        t = np.clip((np.asarray(x, dtype=float) - lo) * ((self.nx - 1) / (hi - lo)), 0, self.nx - 1)
        i0 = np.minimum(np.floor(t), self.nx - 2).astype(np.intp)
        return i0, t - i0

    def to_dict(self) -> dict:
        return {"x_bounds": list(self.x_bounds), "u_bounds": list(self.u_bounds),
                "x_step": self.x_step, "u_step": self.u_step}
