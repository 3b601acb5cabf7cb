"""
Scenario trees versus first-order chains on three sequences
============================================================

Three equally likely disturbance sequences over two steps::

    s1 = [0, 0]    s2 = [0, 1]    s3 = [1, 1]

After seeing ``w_0 = 0`` the controller knows it is in ``{s1, s2}``; the
tree keeps that set as a node. A Markov chain on the values only sees "the
current value is 0" and blends every sequence that passed through 0.
"""

import numpy as np

from scentree import (Grid, ScenarioSet, build_exact_tree, estimate_transition, evaluate_policy,
                      linear_plant, solve_markov_dp, solve_node_dp, transition_row)

sc = ScenarioSet.uniform([[0.0, 0.0], [0.0, 1.0], [1.0, 1.0]])

# %%
# Tree nodes group sequences with identical observed prefixes.
tree = build_exact_tree(sc)
for k, nodes in enumerate(tree.nodes):
    print(f"step {k}: " + "  ".join(
        f"{{{', '.join(f's{i + 1}' for i in n.member_ids)}}} p={n.probability:.3f}"
        for n in nodes))

# %%
# Transition rows: from {s1, s2} the next node is {s1} or {s2}, each with
# probability one half; {s3} can only continue as itself.
for i in range(len(tree.nodes[0])):
    print(f"row {i}:", np.round(transition_row(tree, 0, i), 3))

# %%
# The chain estimated from the same data has one state per distinct value.
chain = estimate_transition(sc, bins_per_step=2)
print("T_0 =\n", chain.transitions[0])

# %%
# Both policies on a two-step version of the reference plant. Here every
# sequence is a distinct node at step 1 and the chain is lossless, so the
# two agree; the converging demo shows where they part ways.
plant = linear_plant(horizon=2)
grid = Grid.for_model(plant)
exact = solve_node_dp(plant, grid, tree, sc)
markov = solve_markov_dp(plant, grid, chain)
for name, res in (("exact tree", exact), ("markov chain", markov)):
    ev = evaluate_policy(res, plant, sc)
    print(f"{name:>12}: root value {res.root_value:.4f}, closed-loop average {ev.average_cost:.4f}")
