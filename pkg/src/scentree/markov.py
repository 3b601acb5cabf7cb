"""Non-stationary first-order Markov chain fitted to a scenario set.

Each step gets its own grid of bin centers; ``T_k[i, j]`` is the
probability-weighted frequency of moving from bin ``i`` at step ``k`` to
bin ``j`` at step ``k + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenarios import ScenarioSet


@dataclass
class MarkovModel:
    centers: list[np.ndarray]  # per step, strictly increasing
    transitions: list[np.ndarray]  # per step k < N-1, (n_k, n_{k+1}); zero rows are unreachable
    marginals: list[np.ndarray]  # per step bin probability mass
    bins_per_step: int = 10

    @property
    def horizon(self) -> int:
        return len(self.centers)

    def reachable(self, k: int) -> np.ndarray:
        return self.marginals[k] > 0

    def assign(self, k: int, w, reachable_only: bool = True) -> np.ndarray:
        """Nearest bin at step ``k``; ties go to the lower center."""
        c = self.centers[k]
        idx = np.arange(len(c))
        if reachable_only:
            idx = idx[self.reachable(k)]
        w = np.atleast_1d(np.asarray(w, dtype=float))
        return idx[np.argmin(np.abs(w[:, None] - c[idx][None, :]), axis=1)]

    def to_dict(self) -> dict:
        return {
            "bins_per_step": self.bins_per_step,
            "steps": [
                {
                    "step": k,
                    "centers": self.centers[k].tolist(),
                    "marginal": self.marginals[k].tolist(),
                    "transitions": (self.transitions[k].tolist()
                                    if k < self.horizon - 1 else None),
                }
                for k in range(self.horizon)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MarkovModel":
        steps = data["steps"]
        return cls(
            centers=[np.asarray(s["centers"], dtype=float) for s in steps],
            transitions=[np.asarray(s["transitions"], dtype=float) for s in steps[:-1]],
            marginals=[np.asarray(s["marginal"], dtype=float) for s in steps],
            bins_per_step=int(data.get("bins_per_step", 10)),
        )


def _quantile_centers(x: np.ndarray, p: np.ndarray, n: int) -> np.ndarray:
    order = np.argsort(x)
    cdf = np.cumsum(p[order])
    qs = (np.arange(n) + 0.5) / n
    c = x[order][np.minimum(np.searchsorted(cdf, qs * cdf[-1]), len(x) - 1)]
    return np.unique(c)


def quantize_disturbance(scenarios: ScenarioSet, bins_per_step: int = 10,
                         method: str = "uniform") -> tuple[list[np.ndarray], np.ndarray]:
    """Per-step bin centers and the bin index of every sequence value.

    Returns ``(centers, indices)`` with ``indices`` of shape ``(S, N)``.
    ``method="uniform"`` spaces centers evenly between the observed min and
    max (a single center when they coincide); ``"quantile"`` uses weighted
    quantiles of the observed values.
    """
    if bins_per_step < 1:
        raise ValueError("bins_per_step must be >= 1")
    vals = scenarios.values
    centers, idx = [], np.empty(vals.shape, dtype=int)
    for k in range(scenarios.horizon):
        x = vals[:, k]
        if method == "uniform":
            lo, hi = float(x.min()), float(x.max())
            c = np.array([lo]) if lo == hi else np.linspace(lo, hi, bins_per_step)
        elif method == "quantile":
            c = _quantile_centers(x, scenarios.probabilities, bins_per_step)
        else:
            raise ValueError(f"unknown binning method {method!r}")
        centers.append(c)
        idx[:, k] = np.argmin(np.abs(x[:, None] - c[None, :]), axis=1)
    return centers, idx


def estimate_transition(scenarios: ScenarioSet, bins=None, bins_per_step: int = 10,
                        method: str = "uniform") -> MarkovModel:
    """Count-and-normalize estimate of the time-dependent transition matrices.

    ``bins`` is the output of :func:`quantize_disturbance`; computed here
    when omitted.
    """
    if bins is None:
        bins = quantize_disturbance(scenarios, bins_per_step, method)
    centers, idx = bins
    p = scenarios.probabilities
    N = scenarios.horizon
    marginals = [np.bincount(idx[:, k], weights=p, minlength=len(centers[k]))
                 for k in range(N)]
    transitions = []
    for k in range(N - 1):
        mass = np.zeros((len(centers[k]), len(centers[k + 1])))
        np.add.at(mass, (idx[:, k], idx[:, k + 1]), p)
        row = mass.sum(axis=1)
        t = np.zeros_like(mass)
        live = row > 0
        t[live] = mass[live] / row[live, None]
        transitions.append(t)
    return MarkovModel(centers=list(centers), transitions=transitions,
                       marginals=marginals, bins_per_step=bins_per_step)
