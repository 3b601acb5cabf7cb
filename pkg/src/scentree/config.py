"""Run configuration: one JSON file drives a whole experiment."""

from __future__ import annotations

import json
from dataclasses import MISSING, asdict, dataclass, field, fields
from pathlib import Path

from .approx import ClusteringSpec
from .generate import GenSpec
from .model import Grid, SystemModel, linear_plant


def _opt(default, doc):
    return field(default=default, metadata={"doc": doc})


def _list(default, doc):
    return field(default_factory=lambda: list(default), metadata={"doc": doc})


@dataclass
class RunConfig:
    # plant: x' = a x + b u - c w, cost control_weight u^2, terminal terminal_weight (terminal_target - x)^2
    a: float = _opt(0.9, "state coefficient a in x' = a x + b u - c w")
    b: float = _opt(1.0, "control coefficient b")
    c: float = _opt(1.0, "disturbance coefficient c")
    control_weight: float = _opt(1.0, "running cost weight on u^2")
    terminal_target: float = _opt(-2.0, "terminal cost target state")
    terminal_weight: float = _opt(1.0, "terminal cost weight")
    x_bounds: list = _list([-2.0, 2.0], "state bounds [x_min, x_max]")
    u_bounds: list = _list([0.0, 1.6], "control bounds [u_min, u_max]")
    x0: float = _opt(1.8, "initial state")
    horizon: int = _opt(10, "horizon N (steps)")
    x_step: float = _opt(0.02, "state grid spacing")
    u_step: float = _opt(0.02, "control grid spacing")

    methods: list = _list(["exact", "cluster", "markov"], "methods run by compare")
    n_clusters: object = _opt(10, "clusters per step: an integer or a list of N integers")
    restarts: int = _opt(5, "k-means restarts per step")
    max_lloyd_iters: int = _opt(100, "Lloyd iteration cap")
    sample_size: object = _opt(None, "members sampled per cluster node (null = all)")
    weighted_kmeans: bool = _opt(True, "weight k-means points by sequence probability")
    markov_bins: int = _opt(10, "Markov bins per step")
    markov_binning: str = _opt("uniform", "Markov bin placement: uniform | quantile")
    value_mode: str = _opt("nearest", "off-grid value resolution: nearest | linear")
    sim_mode: str = _opt("quantized", "simulation mode: quantized | continuous")
    penalty: float = _opt(1000.0, "cost added when no grid control keeps x inside its bounds")
    prefix_decimals: int = _opt(9, "decimal places used to compare prefixes")
    use_table: bool = _opt(True, "precompute the static (x, u, w) transition table")
    seed: int = _opt(0, "seed for generation, k-means and node sampling")
    threads: int = _opt(1, "worker threads for DP steps and simulations")

    family: str = _opt("simple_converging", "generator: simple_converging | branching_walk")
    count: int = _opt(4, "number of generated sequences")
    w_lo: float = _opt(0.0, "generated disturbance lower bound")
    w_hi: float = _opt(1.0, "generated disturbance upper bound")
    branch_factor: int = _opt(3, "children per branching event (branching_walk)")
    convergence_steps: list = _list([4, 5], "steps at which all generated sequences coincide")
    max_step: float = _opt(0.1, "slope bound for branching walks")
    resolution: float = _opt(0.02, "generated values are snapped to this spacing (0 = off)")

    scenarios: object = _opt(None, "scenario JSON path")
    policy: object = _opt(None, "policy JSON path")
    out: object = _opt(None, "output file or directory (default: $SCENTREE_OUT or .)")

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        data = json.loads(Path(path).read_text())
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    def model(self) -> SystemModel:
        return linear_plant(a=self.a, b=self.b, c=self.c, control_weight=self.control_weight,
                            terminal_target=self.terminal_target,
                            terminal_weight=self.terminal_weight, x_bounds=self.x_bounds,
                            u_bounds=self.u_bounds, x0=self.x0, horizon=self.horizon)

    def grid(self, model: SystemModel | None = None) -> Grid:
        return Grid.for_model(model or self.model(), self.x_step, self.u_step)

    def clustering(self, horizon: int | None = None) -> ClusteringSpec:
        N = horizon or self.horizon
        counts = self.n_clusters
        counts = tuple(int(n) for n in counts) if isinstance(counts, (list, tuple)) else (int(counts),) * N
        return ClusteringSpec(cluster_counts=counts, seed=self.seed,
                              max_lloyd_iters=self.max_lloyd_iters, restarts=self.restarts,
                              sample_size=self.sample_size, weighted=self.weighted_kmeans)

    def gen_spec(self) -> GenSpec:
        return GenSpec(family=self.family, horizon=self.horizon, count=self.count,
                       w_lo=self.w_lo, w_hi=self.w_hi, branch_factor=self.branch_factor,
                       convergence_steps=tuple(self.convergence_steps), max_step=self.max_step,
                       resolution=self.resolution, seed=self.seed)


def config_help() -> str:
    lines = ["config keys (JSON object; unknown keys are rejected):"]
    for f in fields(RunConfig):
        default = f.default if f.default is not MISSING else f.default_factory()
        lines.append(f"  {f.name:<18} {f.metadata.get('doc', '')} [default: {json.dumps(default)}]")
    return "\n".join(lines)
