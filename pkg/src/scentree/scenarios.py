"""Disturbance sequence sets and the exact scenario tree built from them."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

DEFAULT_DECIMALS = 9
PROB_TOL = 1e-12


class ScenarioError(ValueError):
    """Raised for malformed or inconsistent scenario data."""


@dataclass(frozen=True)
class DisturbanceSequence:
    values: tuple[float, ...]
    probability: float

    def __post_init__(self):
        if not self.probability > 0:
            raise ScenarioError(f"sequence probability must be > 0, got {self.probability}")


class ScenarioSet:
    """A finite set of disturbance sequences with a priori probabilities.

    Parameters
    ----------
    values : array_like, shape (S, N)
        One row per sequence, one column per step.
    probabilities : array_like, shape (S,)
        Must be strictly positive and sum to one within ``1e-12``.

    Duplicate rows are allowed here; :func:`load_scenarios` merges them and
    :meth:`merged` does so on demand.
    """

    def __init__(self, values, probabilities):
        values = np.array(values, dtype=float, ndmin=2)
        probabilities = np.array(probabilities, dtype=float).reshape(-1)
        if values.ndim != 2 or values.shape[0] == 0 or values.shape[1] == 0:
            raise ScenarioError("need at least one sequence of length >= 1")
        if probabilities.shape[0] != values.shape[0]:
            raise ScenarioError("one probability per sequence is required")
        if not np.all(np.isfinite(values)):
            raise ScenarioError("disturbance values must be finite")
        if np.any(~(probabilities > 0)):
            raise ScenarioError("sequence probabilities must be > 0")
        if abs(probabilities.sum() - 1.0) > PROB_TOL:
            raise ScenarioError(f"probabilities sum to {probabilities.sum()!r}, expected 1")
        values.setflags(write=False)
        probabilities.setflags(write=False)
        self._values = values
        self._probs = probabilities

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def probabilities(self) -> np.ndarray:
        return self._probs

    @property
    def horizon(self) -> int:
        return self._values.shape[1]

    def __len__(self) -> int:
        return self._values.shape[0]

    @property
    def sequences(self) -> list[DisturbanceSequence]:
        return [DisturbanceSequence(tuple(map(float, v)), float(p))
                for v, p in zip(self._values, self._probs)]

    @classmethod
    def from_sequences(cls, seqs: Iterable[DisturbanceSequence]) -> "ScenarioSet":
        seqs = list(seqs)
        lengths = {len(s.values) for s in seqs}
        if len(lengths) > 1:
            raise ScenarioError(f"unequal sequence lengths {sorted(lengths)}")
        return cls([s.values for s in seqs], [s.probability for s in seqs])

    @classmethod
    def uniform(cls, values) -> "ScenarioSet":
        values = np.array(values, dtype=float, ndmin=2)
        return cls(values, np.full(values.shape[0], 1.0 / values.shape[0]))

    def canonical(self, decimals: int = DEFAULT_DECIMALS) -> np.ndarray:
        """Values rounded for equality tests between prefixes."""
        return np.round(self._values, decimals) + 0.0  # +0.0 folds -0.0 into 0.0

    def merged(self, decimals: int = DEFAULT_DECIMALS) -> "ScenarioSet":
        """Merge identical full sequences, summing their probabilities.

        The first occurrence keeps its position and raw values.
        """
        canon = self.canonical(decimals)
        _, first, inverse = np.unique(canon, axis=0, return_index=True, return_inverse=True)
        inverse = inverse.reshape(-1)
        if len(first) == len(self):
            return self
        probs = np.zeros(len(first))
        np.add.at(probs, inverse, self._probs)
        order = np.argsort(first)
        return ScenarioSet(self._values[first[order]], probs[order])

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "sequences": [{"values": [float(x) for x in v], "probability": float(p)}
                          for v, p in zip(self._values, self._probs)],
        }

    def __repr__(self):
        return f"ScenarioSet(N={self.horizon}, sequences={len(self)})"


def scenarios_from_dict(data: dict, *, merge: bool = True,
                        decimals: int = DEFAULT_DECIMALS) -> ScenarioSet:
    if not isinstance(data, dict) or "sequences" not in data:
        raise ScenarioError("scenario document needs a 'sequences' list")
    raw = data["sequences"]
    if not isinstance(raw, list) or not raw:
        raise ScenarioError("'sequences' must be a nonempty list")
    values, probs = [], []
    for i, item in enumerate(raw):
        try:
            values.append([float(x) for x in item["values"]])
            probs.append(float(item["probability"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"sequence {i} is malformed: {exc}") from None
    horizon = data.get("horizon", len(values[0]))
    if not isinstance(horizon, int) or horizon < 1:
        raise ScenarioError(f"bad horizon {horizon!r}")
    bad = [i for i, v in enumerate(values) if len(v) != horizon]
    if bad:
        raise ScenarioError(f"sequences {bad[:5]} do not have length {horizon}")
    probs = np.asarray(probs)
    if np.any(~(probs > 0)):
        raise ScenarioError("nonpositive sequence probability")
    total = probs.sum()
    if abs(total - 1.0) > 0.01:
        raise ScenarioError(f"probabilities sum to {total:.6g}, more than 1% away from 1")
    out = ScenarioSet(values, probs / total)
    return out.merged(decimals) if merge else out


def load_scenarios(path, *, decimals: int = DEFAULT_DECIMALS) -> ScenarioSet:
    """Read and validate a scenario JSON file.

    Probabilities within 1% of summing to one are renormalized; identical
    sequences are merged.
    """
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON ({exc})") from None
    return scenarios_from_dict(data, decimals=decimals)


def save_scenarios(scenarios: ScenarioSet, path) -> None:
    Path(path).write_text(json.dumps(scenarios.to_dict(), indent=1) + "\n")


@dataclass(frozen=True)
class StageNode:
    """A set of sequences that is indistinguishable at ``step``.

    ``weights`` holds the probability carried by each member; normally the
    member's own probability, rescaled after :func:`~scentree.approx.sample_node`.
    """
    step: int
    member_ids: np.ndarray
    weights: np.ndarray
    representative_w: tuple[float, ...]

    @property
    def probability(self) -> float:
        return float(self.weights.sum())

    def __len__(self):
        return len(self.member_ids)


@dataclass
class NodeGraph:
    """Per-step nodes, membership and stage-to-stage transition probabilities.

    ``membership[k][s]`` is the node id of sequence ``s`` at step ``k``;
    ``transitions[k]`` is a sparse ``(n_k, n_{k+1})`` row-stochastic matrix.
    """
    kind: str
    nodes: list[list[StageNode]]
    membership: list[np.ndarray]
    transitions: list[sparse.csr_matrix]
    prefixes: list[np.ndarray] | None = None
    centers: list[np.ndarray] | None = None
    meta: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return len(self.nodes)

    def node_counts(self) -> list[int]:
        return [len(n) for n in self.nodes]

    def node_probabilities(self, k: int) -> np.ndarray:
        return np.array([n.probability for n in self.nodes[k]])

    def to_dict(self) -> dict:
        steps = []
        for k, nodes in enumerate(self.nodes):
            entry = {
                "step": k,
                "members": [[int(i) for i in n.member_ids] for n in nodes],
                "probabilities": [n.probability for n in nodes],
            }
            if k < self.horizon - 1:
                t = self.transitions[k].tocsr()
                entry["transitions"] = [
                    {int(j): float(p) for j, p in zip(t.indices[t.indptr[i]:t.indptr[i + 1]],
                                                      t.data[t.indptr[i]:t.indptr[i + 1]])}
                    for i in range(t.shape[0])
                ]
            steps.append(entry)
        return {"kind": self.kind, "steps": steps}


def _nodes_from_labels(scenarios: ScenarioSet, k: int, labels: np.ndarray,
                       n_nodes: int) -> list[StageNode]:
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(n_nodes + 1))
    w_k = scenarios.values[:, k]
    nodes = []
    for i in range(n_nodes):
        members = order[bounds[i]:bounds[i + 1]]
        nodes.append(StageNode(
            step=k,
            member_ids=members,
            weights=scenarios.probabilities[members],
            representative_w=tuple(float(x) for x in np.unique(w_k[members])),
        ))
    return nodes


def overlap_transitions(probs: np.ndarray, parent: np.ndarray, child: np.ndarray,
                        n_parent: int, n_child: int) -> sparse.csr_matrix:
    """P(j | i) = p(child_j and parent_i) / p(parent_i) from member labels."""
    mass = sparse.coo_matrix((probs, (parent, child)), shape=(n_parent, n_child)).tocsr()
    mass.sum_duplicates()
    row = np.asarray(mass.sum(axis=1)).reshape(-1)
    return sparse.diags(1.0 / row) @ mass


def build_exact_tree(scenarios: ScenarioSet, decimals: int = DEFAULT_DECIMALS) -> NodeGraph:
    """Group sequences by identical observed prefixes at every step.

    Node ids follow the lexicographic order of the prefixes. Transition rows
    use p(child) / p(parent) for nested child sets and zero elsewhere.
    """
    canon = scenarios.canonical(decimals)
    N = scenarios.horizon
    nodes, membership, prefixes = [], [], []
    for k in range(N):
        uniq, labels = np.unique(canon[:, :k + 1], axis=0, return_inverse=True)
        labels = labels.reshape(-1)
        membership.append(labels)
        prefixes.append(uniq)
        nodes.append(_nodes_from_labels(scenarios, k, labels, len(uniq)))

    transitions = []
    for k in range(N - 1):
        p_parent = np.array([n.probability for n in nodes[k]])
        p_child = np.array([n.probability for n in nodes[k + 1]])
        # prefix refinement makes each child's parent unique
        parent_of_child = np.empty(len(nodes[k + 1]), dtype=int)
        parent_of_child[membership[k + 1]] = membership[k]
        data = p_child / p_parent[parent_of_child]
        t = sparse.csr_matrix((data, (parent_of_child, np.arange(len(p_child)))),
                              shape=(len(p_parent), len(p_child)))
        transitions.append(t)
    return NodeGraph("exact", nodes, membership, transitions, prefixes=prefixes,
                     meta={"decimals": decimals})


def transition_row(graph: NodeGraph, step: int, node: int) -> np.ndarray:
    """Dense transition probabilities from ``node`` at ``step`` to step ``step + 1``."""
    if not 0 <= step < graph.horizon - 1:
        raise IndexError(f"step {step} has no outgoing transitions (horizon {graph.horizon})")
    if not 0 <= node < len(graph.nodes[step]):
        raise IndexError(f"node {node} does not exist at step {step}")
    return graph.transitions[step].getrow(node).toarray().reshape(-1)


def resolve_prefix(graph: NodeGraph, step: int, prefix: Sequence[float]) -> int:
    """Exact-tree node id for an observed prefix; KeyError if it is not in the set."""
    decimals = graph.meta.get("decimals", DEFAULT_DECIMALS)
    key = np.round(np.asarray(prefix[:step + 1], dtype=float), decimals) + 0.0
    pos = row_search(graph.prefixes[step], key)
    if pos is None:
        raise KeyError(f"prefix {list(key)} is not in the scenario set at step {step}")
    return pos


def row_search(table: np.ndarray, key: np.ndarray) -> int | None:
    """Binary search for ``key`` in lexicographically sorted rows."""
    lo, hi = 0, len(table)
    while lo < hi:
        mid = (lo + hi) // 2
        diff = np.nonzero(table[mid] != key)[0]
        if diff.size == 0:
            return mid
        if table[mid][diff[0]] < key[diff[0]]:
            lo = mid + 1
        else:
            hi = mid
    return None
