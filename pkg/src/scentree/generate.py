"""Synthetic disturbance scenario sets for experiments and tests.

``simple_converging``: a handful of sequences that split early, pass
through common values and split again, with the later branch tied to the
earlier one. A first-order chain cannot carry that identity across the
common steps.

``branching_walk``: a large tree of trending random walks. Each path
carries a slope chosen when it branches, so the recent history (not just
the current value) predicts where it goes next.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenarios import ScenarioSet

FAMILIES = ("simple_converging", "branching_walk")


@dataclass(frozen=True)
class GenSpec:
    family: str = "simple_converging"
    horizon: int = 10
    count: int = 4
    w_lo: float = 0.0
    w_hi: float = 1.0
    branch_factor: int = 3
    convergence_steps: tuple[int, ...] = (4, 5)
    max_step: float = 0.1
    resolution: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not self.w_lo < self.w_hi:
            raise ValueError("need w_lo < w_hi")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if any(not 0 <= s < self.horizon for s in self.convergence_steps):
            raise ValueError("convergence steps must lie in 0..N-1")
        if self.branch_factor < 1:
            raise ValueError("branch_factor must be >= 1")
        if self.resolution < 0:
            raise ValueError("resolution must be >= 0")


class GenerationError(ValueError):
    pass


def _snap(spec: GenSpec, x):
    x = np.clip(x, spec.w_lo, spec.w_hi)
    if spec.resolution > 0:
        x = spec.w_lo + np.round((x - spec.w_lo) / spec.resolution) * spec.resolution
        x = np.clip(np.round(x, 12), spec.w_lo, spec.w_hi)
    return x


def generate_simple_converging(spec: GenSpec, rng: np.random.Generator | None = None) -> ScenarioSet:
    """Two groups split at step 0, meet at the convergence steps, then fan out.

    After the last convergence step the first group drifts toward the top of
    the range and the second toward the bottom, so the group seen before the
    common steps decides the tail. Sequences are equally likely.
    """
    if spec.family != "simple_converging":
        raise ValueError("spec family is not simple_converging")
    if spec.count < 2 or spec.count % 2:
        raise GenerationError("simple_converging needs an even count >= 2")
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    N, S = spec.horizon, spec.count
    half = S // 2
    span = spec.w_hi - spec.w_lo
    conv = sorted(spec.convergence_steps)
    first_conv = conv[0] if conv else N
    last_conv = conv[-1] if conv else -1
    common = _snap(spec, spec.w_lo + span * rng.uniform(0.35, 0.55))

    vals = np.empty((S, N))
    group = np.repeat([0, 1], half)
    # group levels before convergence: clearly separated
    level = np.array([spec.w_lo + span * rng.uniform(0.55, 0.75),
                      spec.w_lo + span * rng.uniform(0.1, 0.3)])
    for k in range(N):
        if k in conv:
            vals[:, k] = common
        elif k < first_conv:
            base = level[group]
            if k == 0:
                vals[:, k] = _snap(spec, base)
            else:
                # members of a group separate after step 0
                jitter = (np.tile(np.arange(half), 2) - (half - 1) / 2) * 0.08 * span
                vals[:, k] = _snap(spec, base + jitter + rng.normal(0, 0.02 * span, S))
        elif k > last_conv:
            t = k - last_conv
            drift = np.where(group == 0, 0.12, -0.06) * span * t
            spread = (np.tile(np.arange(half), 2) - (half - 1) / 2) * 0.1 * span
            vals[:, k] = _snap(spec, common + drift + spread * min(t, 2))
        else:
            # between two non-adjacent convergence steps: stay near the common value
            vals[:, k] = _snap(spec, common + rng.normal(0, 0.02 * span, S))
    return ScenarioSet.uniform(vals)


def _walk(spec: GenSpec, rng, start_k: int, prefix: list[float], slope: float) -> list[float]:
    vals = list(prefix)
    for k in range(start_k, spec.horizon):
        prev = vals[-1] if vals else spec.w_lo + 0.5 * (spec.w_hi - spec.w_lo)
        x = prev + slope + rng.normal(0.0, 0.15 * spec.max_step)
        if x <= spec.w_lo or x >= spec.w_hi:
            slope = -slope
        vals.append(float(_snap(spec, x)))
    return vals


def _apply_convergence(spec: GenSpec, vals: np.ndarray) -> np.ndarray:
    if spec.convergence_steps:
        common = float(_snap(spec, spec.w_lo + 0.5 * (spec.w_hi - spec.w_lo)))
        vals[:, list(spec.convergence_steps)] = common
    return vals


def generate_branching_walk(spec: GenSpec, rng: np.random.Generator | None = None) -> ScenarioSet:
    """Recursive trending random walk with random branching, deduplicated to ``count``.

    Each path branches into ``branch_factor`` children with a per-step
    probability tuned so the expected leaf count matches ``count``; every
    child draws a fresh slope in ``[-max_step, max_step]``. The result is
    truncated or padded (by branching existing paths) to exactly ``count``
    distinct sequences. Raises :class:`GenerationError` when ``count``
    exceeds ``branch_factor ** horizon``.
    """
    if spec.family != "branching_walk":
        raise ValueError("spec family is not branching_walk")
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    N, b = spec.horizon, spec.branch_factor
    max_count = b ** N
    if spec.count > max_count:
        raise GenerationError(f"count {spec.count} unreachable: at most {max_count} sequences "
                              f"with branch factor {b} over {N} steps")
    p_branch = 0.0 if b == 1 else min(1.0, (spec.count ** (1.0 / N) - 1.0) / (b - 1))
    mid = spec.w_lo + 0.5 * (spec.w_hi - spec.w_lo)
    span = spec.w_hi - spec.w_lo

    # paths: (values so far, current slope)
    paths = [([], 0.0)]
    for k in range(N):
        nxt = []
        for vals, slope in paths:
            n_child = b if rng.random() < p_branch else 1
            used = set()
            for c in range(n_child):
                s = slope if c == 0 and n_child == 1 else rng.uniform(-spec.max_step, spec.max_step)
                for _ in range(20):
                    prev = vals[-1] if vals else mid
                    base = prev + s if vals else mid + rng.uniform(-0.3, 0.3) * span
                    x = float(_snap(spec, base + rng.normal(0.0, 0.15 * spec.max_step)))
                    if x not in used:
                        break
                    s = rng.uniform(-spec.max_step, spec.max_step)
                if x in used:
                    continue
                used.add(x)
                if x <= spec.w_lo or x >= spec.w_hi:
                    s = -s
                nxt.append((vals + [x], s))
        paths = nxt
    vals = np.array([p[0] for p in paths])
    vals = _apply_convergence(spec, vals)
    vals = np.unique(vals, axis=0)

    if len(vals) > spec.count:
        keep = np.sort(rng.choice(len(vals), size=spec.count, replace=False))
        vals = vals[keep]
    attempts = 0
    seen = {tuple(r) for r in vals}
    rows = list(vals)
    while len(rows) < spec.count:
        attempts += 1
        if attempts > 200 * spec.count:
            raise GenerationError(f"could only produce {len(rows)} distinct sequences "
                                  f"(target {spec.count})")
        base = rows[rng.integers(len(rows))]
        k = int(rng.integers(N))
        new = _walk(spec, rng, k, list(base[:k]), rng.uniform(-spec.max_step, spec.max_step))
        new = _apply_convergence(spec, np.array([new]))[0]
        key = tuple(new)
        if key not in seen:
            seen.add(key)
            rows.append(new)
    vals = np.array(rows)
    order = np.lexsort(vals.T[::-1])
    return ScenarioSet.uniform(vals[order])


def generate(spec: GenSpec, rng: np.random.Generator | None = None) -> ScenarioSet:
    if spec.family == "simple_converging":
        return generate_simple_converging(spec, rng)
    return generate_branching_walk(spec, rng)
