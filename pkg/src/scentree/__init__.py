"""Predictive optimal control against disturbance scenario sets.

Exact scenario-tree dynamic programming, a k-means approximation of the
tree, and a non-stationary Markov chain baseline, solved on a quantized
state/control grid and compared in closed loop.
"""

from .approx import (ClusteringSpec, StageClustering, build_cluster_graph, cluster_all_steps,
                     cluster_prefixes, kmeans_pp_seed, lloyd_iterate, sample_node)
from .control import admissible_controls, apply_two_level
from .dp import (SolveResult, TransitionTable, precompute_transition_table, solve_markov_dp,
                 solve_node_dp, solve_nominal)
from .generate import GenSpec, generate, generate_branching_walk, generate_simple_converging
from .markov import MarkovModel, estimate_transition, quantize_disturbance
from .model import Grid, SystemModel, linear_plant
from .scenarios import (DisturbanceSequence, NodeGraph, ScenarioSet, StageNode, build_exact_tree,
                        load_scenarios, save_scenarios, transition_row)
from .simulate import ClosedLoopTrace, evaluate_on_model, evaluate_policy, simulate_sequence

__version__ = "0.1.0"
