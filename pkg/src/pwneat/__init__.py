"""pwneat: NEAT neuroevolution with piecewise activation functions.

Evolves recurrent networks whose hidden nodes carry combinatorially
generated two-branch activation functions, and benchmarks them on
non-Markovian double pole balancing.
"""

from pwneat.activation import (CanonicalFunction, FunctionPool,
                               PiecewiseActivation, continuity_gap,
                               count_configurations, eval_canonical,
                               eval_piecewise, parse_pool, sample_pair,
                               tabulate)
from pwneat.cartpole import (PhysicsParams, episode, fitness,
                             generalization_score, standard_start,
                             success_test)
from pwneat.experiment import (PRESETS, AggregateStats, ExperimentPreset,
                               InstanceStats, RunRecord, aggregate,
                               custom_preset, default_params, derive_seed,
                               preset, run_experiment, run_instance)
from pwneat.genome import (Genome, InnovationRegistry, compatibility,
                           crossover, minimal_genome, mutate_add_connection,
                           mutate_add_node, mutate_weights)
from pwneat.network import Phenotype, build
from pwneat.speciation import (EvolutionParams, Extinction, evolve,
                               initial_population, parse_params)

__version__ = "0.1.0"

__all__ = [
    "AggregateStats", "CanonicalFunction", "EvolutionParams",
    "ExperimentPreset", "Extinction", "FunctionPool", "Genome",
    "InnovationRegistry", "InstanceStats", "PRESETS", "Phenotype",
    "PhysicsParams", "PiecewiseActivation", "RunRecord", "aggregate",
    "build", "compatibility", "continuity_gap", "count_configurations",
    "crossover", "custom_preset", "default_params", "derive_seed",
    "episode", "eval_canonical", "eval_piecewise", "evolve", "fitness",
    "generalization_score", "initial_population", "minimal_genome",
    "mutate_add_connection", "mutate_add_node", "mutate_weights",
    "parse_params", "parse_pool", "preset", "run_experiment",
    "run_instance", "sample_pair", "standard_start", "success_test",
    "tabulate",
]
