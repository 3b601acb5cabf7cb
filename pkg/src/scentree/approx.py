"""Clustering-based approximation of the scenario tree.

At every step the observed prefixes ``[w(0), ..., w(k)]`` are grouped with
k-means (k-means++ seeding, Lloyd iterations). Each cluster becomes a node;
a node at ``k + 1`` may draw members from several nodes at ``k``, so the
transition probabilities are computed from member-set overlaps.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .scenarios import (NodeGraph, ScenarioSet, StageNode, _nodes_from_labels,
                        overlap_transitions)


@dataclass(frozen=True)
class ClusteringSpec:
    cluster_counts: tuple[int, ...]
    seed: int = 0
    max_lloyd_iters: int = 100
    restarts: int = 5
    sample_size: int | None = None
    weighted: bool = True

    def __post_init__(self):
        if any(int(n) < 1 for n in self.cluster_counts):
            raise ValueError("cluster counts must be >= 1")
        if self.max_lloyd_iters < 1 or self.restarts < 1:
            raise ValueError("max_lloyd_iters and restarts must be >= 1")
        if self.sample_size is not None and self.sample_size < 1:
            raise ValueError("sample_size must be >= 1")

    @classmethod
    def constant(cls, n: int, horizon: int, **kw) -> "ClusteringSpec":
        return cls(cluster_counts=(int(n),) * horizon, **kw)


@dataclass
class StageClustering:
    step: int
    assignments: np.ndarray  # 0-based labels, one per sequence
    centers: np.ndarray  # (n_clusters, step + 1)
    potential: float
    history: list[float] = field(default_factory=list)
    iterations: int = 0

    @property
    def n_clusters(self) -> int:
        return len(self.centers)


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return pts


def _unit_mean_weights(weights, n: int) -> np.ndarray:
    if weights is None:
        return np.ones(n)
    w = np.asarray(weights, dtype=float)
    if np.all(w == w[0]):
        return np.ones(n)
    return w * (n / w.sum())


def sq_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, shape ``(n_points, n_centers)``."""
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def nearest_center(points, centers) -> np.ndarray:
    """Index of the closest center per point; ties go to the lowest index."""
    return np.argmin(sq_distances(_as_points(points), _as_points(centers)), axis=1)


def kmeans_pp_seed(points, n: int, rng: np.random.Generator, weights=None) -> np.ndarray:
    """k-means++ seeding.

    The first center is drawn with probability proportional to the point
    weights, each further one proportional to weight times the squared
    distance to the nearest chosen center. Stops early once every distinct
    point has been chosen.
    """
    pts = _as_points(points)
    if len(pts) == 0:
        raise ValueError("cannot seed k-means on an empty point set")
    if n < 1:
        raise ValueError("need at least one center")
    w = _unit_mean_weights(weights, len(pts))
    first = rng.choice(len(pts), p=w / w.sum())
    chosen = [first]
    d2 = sq_distances(pts, pts[first:first + 1])[:, 0]
    while len(chosen) < n:
        mass = w * d2
        total = mass.sum()
        if not total > 0:
            break
        nxt = rng.choice(len(pts), p=mass / total)
        chosen.append(nxt)
        d2 = np.minimum(d2, sq_distances(pts, pts[nxt:nxt + 1])[:, 0])
    return pts[chosen].copy()


def _potential(pts, centers, labels, w) -> float:
    d = pts - centers[labels]
    return float(np.sum(w * np.einsum("ij,ij->i", d, d)))


def lloyd_iterate(points, centers, weights=None, max_iters: int = 100,
                  step: int = -1) -> StageClustering:
    """Lloyd's algorithm from the given initial centers.

    Weighted means with weights normalized to mean one (uniform weights are
    exactly one, so the potential is then the plain sum of squared
    distances). A cluster that empties is moved to the point farthest from
    its current center. ``history`` records the potential after every
    assignment pass and never increases.
    """
    pts = _as_points(points)
    c = _as_points(centers).copy()
    if len(c) == 0:
        raise ValueError("need at least one initial center")
    w = _unit_mean_weights(weights, len(pts))
    labels = nearest_center(pts, c)
    history = [_potential(pts, c, labels, w)]
    it = 0
    while it < max_iters:
        it += 1
        new_c = c.copy()
        counts = np.bincount(labels, weights=w, minlength=len(c))
        # mean as an offset from one member, so identical members give their exact value
        ref = np.zeros_like(c)
        ref[labels[::-1]] = pts[::-1]
        sums = np.zeros_like(c)
        np.add.at(sums, labels, w[:, None] * (pts - ref[labels]))
        filled = counts > 0
        new_c[filled] = ref[filled] + sums[filled] / counts[filled, None]
        reseeded = False
        if not filled.all():
            dist = np.einsum("ij,ij->i", pts - new_c[labels], pts - new_c[labels])
            for j in np.nonzero(~filled)[0]:
                far = int(np.argmax(dist))
                if dist[far] <= 0:
                    break
                new_c[j] = pts[far]
                dist[far] = 0.0
                reseeded = True
        new_labels = nearest_center(pts, new_c)
        history.append(_potential(pts, new_c, new_labels, w))
        done = not reseeded and np.array_equal(new_labels, labels)
        c, labels = new_c, new_labels
        if done:
            break
    return StageClustering(step=step, assignments=labels, centers=c,
                           potential=history[-1], history=history, iterations=it)


def _canonical_labels(pts, res: StageClustering, w) -> StageClustering:
    """Order clusters by center (first coordinate, then the rest), drop empties."""
    c = res.centers
    order = np.lexsort(c.T[::-1])
    c = c[order]
    labels = nearest_center(pts, c)
    used = np.unique(labels)
    c = c[used]
    labels = np.searchsorted(used, labels)
    return replace(res, assignments=labels, centers=c,
                   potential=_potential(pts, c, labels, w))


def cluster_points(points, n: int, *, seed, restarts: int = 5, max_iters: int = 100,
                   weights=None, step: int = -1) -> StageClustering:
    """Best of ``restarts`` seeded k-means runs on ``points``."""
    pts = _as_points(points)
    w = _unit_mean_weights(weights, len(pts))
    best = None
    for r in range(restarts):
        rng = np.random.default_rng([*np.atleast_1d(seed), r])
        init = kmeans_pp_seed(pts, n, rng, weights=w)
        res = lloyd_iterate(pts, init, weights=w, max_iters=max_iters, step=step)
        if best is None or res.potential < best.potential:
            best = res
    return _canonical_labels(pts, best, w)


def cluster_prefixes(scenarios: ScenarioSet, step: int, spec: ClusteringSpec) -> StageClustering:
    """Cluster the length-``step + 1`` prefixes of all sequences."""
    if not 0 <= step < scenarios.horizon:
        raise IndexError(f"step {step} outside horizon {scenarios.horizon}")
    n = int(spec.cluster_counts[step])
    weights = scenarios.probabilities if spec.weighted else None
    return cluster_points(scenarios.values[:, :step + 1], n,
                          seed=[int(spec.seed) & 0xFFFFFFFFFFFFFFFF, step],
                          restarts=spec.restarts, max_iters=spec.max_lloyd_iters,
                          weights=weights, step=step)


def cluster_all_steps(scenarios: ScenarioSet, spec: ClusteringSpec) -> list[StageClustering]:
    if len(spec.cluster_counts) != scenarios.horizon:
        raise ValueError(f"{len(spec.cluster_counts)} cluster counts for horizon {scenarios.horizon}")
    return [cluster_prefixes(scenarios, k, spec) for k in range(scenarios.horizon)]


def build_cluster_graph(scenarios: ScenarioSet,
                        clusterings: Sequence[StageClustering]) -> NodeGraph:
    """Node graph whose step-k nodes are the nonempty clusters of step k."""
    N = scenarios.horizon
    if len(clusterings) != N:
        raise ValueError(f"expected {N} stage clusterings, got {len(clusterings)}")
    nodes, membership, centers = [], [], []
    for k, cl in enumerate(clusterings):
        labels = np.asarray(cl.assignments)
        if labels.shape != (len(scenarios),):
            raise ValueError(f"step {k}: clustering covers {labels.shape[0]} sequences, "
                             f"scenario set has {len(scenarios)}")
        used, labels = np.unique(labels, return_inverse=True)
        labels = labels.reshape(-1)
        membership.append(labels)
        centers.append(np.asarray(cl.centers)[used])
        nodes.append(_nodes_from_labels(scenarios, k, labels, len(used)))
    transitions = [
        overlap_transitions(scenarios.probabilities, membership[k], membership[k + 1],
                            len(nodes[k]), len(nodes[k + 1]))
        for k in range(N - 1)
    ]
    return NodeGraph("clustered", nodes, membership, transitions, centers=centers)


def sample_node(node: StageNode, m: int, rng: np.random.Generator,
                probabilities=None) -> StageNode:
    """Probability-weighted subsample of ``m`` members without replacement.

    Member weights are rescaled so the node keeps its probability.
    ``probabilities`` (per sequence id) defaults to the node's own weights.
    """
    if m < 1:
        raise ValueError("sample size must be >= 1")
    if len(node) <= m:
        return node
    w = node.weights if probabilities is None else np.asarray(probabilities)[node.member_ids]
    pick = np.sort(rng.choice(len(node), size=m, replace=False, p=w / w.sum()))
    kept = w[pick]
    return StageNode(step=node.step, member_ids=node.member_ids[pick],
                     weights=kept * (node.probability / kept.sum()),
                     representative_w=node.representative_w)
