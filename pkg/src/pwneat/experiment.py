"""Experiment presets, the instance protocol, and statistics aggregation.

An experiment is one evolution run on the double pole task; an instance
is a batch of independent runs whose statistics are totalled. A run
"succeeds" when some generation champion balances the poles for the
full 1000 control steps; whether that solution also passes the 625-state
generalization screen is tracked separately, and the generation loop
only stops early once both stages pass.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import random
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import _fast
from .activation import (
    ARCTAN,
    BENT_IDENTITY,
    ELU,
    KIND_NAMES,
    RELU,
    SIGMOID,
    SINE,
    TANH,
    CanonicalFunction,
    FunctionPool,
    PiecewiseActivation,
)
from .cartpole import PhysicsParams, episode, fitness, standard_start, success_test
from .genome import ROLE_HIDDEN, Genome
from .network import build
from .speciation import EvolutionParams, evolve, initial_population, parse_params

MAX_STEPS = 1000
BASELINE_SIGMOID = CanonicalFunction(SIGMOID, 4.924273, 0.0)


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    pool: FunctionPool
    output_activation: PiecewiseActivation
    params: EvolutionParams
    piecewise: bool
    runs_per_instance: int = 100


def _homogeneous_preset(name: str, f: CanonicalFunction,
                        params: EvolutionParams) -> ExperimentPreset:
    return ExperimentPreset(
        name=name,
        pool=FunctionPool(entries=((f, 1.0),)),
        output_activation=PiecewiseActivation.homogeneous(f),
        params=params,
        piecewise=False,
    )


def _piecewise_preset(name: str, entries, params: EvolutionParams) -> ExperimentPreset:
    pool = FunctionPool(entries=entries)
    top = pool.top_function()
    return ExperimentPreset(
        name=name,
        pool=pool,
        output_activation=PiecewiseActivation.homogeneous(top),
        params=params,
        piecewise=True,
    )


def default_params() -> EvolutionParams:
    """Evolution parameters from the checked-in data/dpnv.params file."""
    text = resources.files("pwneat.data").joinpath("dpnv.params").read_text()
    return parse_params(text)


def _build_presets() -> dict[str, ExperimentPreset]:
    # BASELINE keeps the stock defaults from the checked-in parameter file.
    # Every other preset runs the extended regime: drop-off 50 and a longer
    # generation budget, which the stagnation-prone setups need to finish.
    classic = default_params()
    extended = dataclasses.replace(classic, dropoff_age=50,
                                   max_generations=100)
    presets = {}
    presets["BASELINE"] = _homogeneous_preset("BASELINE", BASELINE_SIGMOID, classic)
    for kind in (SINE, SIGMOID, ARCTAN, TANH, BENT_IDENTITY, RELU, ELU):
        name = "HOMO_" + KIND_NAMES[kind].upper()
        f = BASELINE_SIGMOID if kind == SIGMOID else CanonicalFunction(kind)
        presets[name] = _homogeneous_preset(name, f, extended)
    presets["SA0"] = _piecewise_preset("SA0", (
        (CanonicalFunction(ARCTAN), 0.5),
        (CanonicalFunction(SIGMOID), 0.5),
    ), extended)
    presets["SA1"] = _piecewise_preset("SA1", (
        (CanonicalFunction(ARCTAN), 0.875),
        (CanonicalFunction(SIGMOID, 4.924273, -0.5), 0.125),
    ), extended)
    presets["SA2"] = _piecewise_preset("SA2", (
        (CanonicalFunction(ARCTAN), 0.875),
        (CanonicalFunction(SIGMOID, 4.924273, 0.0), 0.125),
    ), extended)
    presets["SA3"] = _piecewise_preset("SA3", (
        (CanonicalFunction(ARCTAN), 0.875),
        (CanonicalFunction(SIGMOID), 0.125),
    ), extended)
    return presets


PRESETS = _build_presets()


def preset(name: str) -> ExperimentPreset:
    key = name.strip().upper()
    if key not in PRESETS:
        known = ", ".join(sorted(PRESETS))
        raise KeyError(f"unknown preset {name!r}; known: {known}")
    return PRESETS[key]


def custom_preset(name: str, pool: FunctionPool,
                  params: EvolutionParams | None = None) -> ExperimentPreset:
    """Ad-hoc piecewise preset around a user-supplied pool."""
    entries = tuple(pool.entries)
    if params is None:
        params = dataclasses.replace(default_params(), dropoff_age=50,
                                     max_generations=100)
    return _piecewise_preset(name, entries, params)


@dataclass(frozen=True)
class RunRecord:
    preset: str
    instance: int
    run: int
    seed: int
    solution: bool          # some champion balanced the full episode
    generalized: bool       # the run ended on a champion passing both stages
    evaluations: int
    generalization: int     # grid score of the last solution champion
    nodes: int              # node count of the last solution champion
    generations: int
    extinct: bool


class _SuccessProbe:
    """success_test adapter that remembers what the champions achieved."""

    def __init__(self, physics: PhysicsParams, fast: bool):
        self.physics = physics
        self.fast = fast
        self.solution_found = False
        self.generalization = 0
        self.nodes = 0

    def __call__(self, genome: Genome) -> bool:
        ph = build(genome)
        if self.fast:
            result = _fast.fast_success(_fast.pack(ph), self.physics, MAX_STEPS)
        else:
            result = success_test(ph, self.physics, MAX_STEPS)
        if result.solution:
            self.solution_found = True
            self.generalization = result.generalization
            self.nodes = len(genome.nodes)
        return result.passed


def _make_evaluator(physics: PhysicsParams, fast: bool):
    start = standard_start()

    def evaluator(genome: Genome) -> float:
        ph = build(genome)
        if fast:
            r = _fast.fast_episode(_fast.pack(ph), start, MAX_STEPS, physics)
        else:
            r = episode(ph, start, MAX_STEPS, physics)
        return fitness(r.steps, r.tail_sum)

    return evaluator


def derive_seed(*path: int) -> int:
    """Collision-resistant integer seed from a root seed and indices."""
    ss = np.random.SeedSequence([int(p) for p in path])
    return int(ss.generate_state(1, np.uint64)[0])


def run_experiment(exp: ExperimentPreset, seed: int, instance: int = 0,
                   run: int = 0, physics: PhysicsParams | None = None,
                   fast: bool = True, keep_population: bool = False):
    """One evolution run; returns (RunRecord, final population or None)."""
    physics = physics or PhysicsParams()
    rng = random.Random(seed)
    pop = initial_population(exp.params, 3, 1, exp.output_activation, rng)
    probe = _SuccessProbe(physics, fast)
    result = evolve(pop, exp.params, exp.pool, _make_evaluator(physics, fast),
                    probe, rng, piecewise=exp.piecewise)
    record = RunRecord(
        preset=exp.name,
        instance=instance,
        run=run,
        seed=seed,
        solution=probe.solution_found,
        generalized=result.success,
        evaluations=result.evaluations,
        generalization=probe.generalization if probe.solution_found else 0,
        nodes=probe.nodes if probe.solution_found else 0,
        generations=result.generations,
        extinct=result.extinct,
    )
    return record, (result.population.genomes if keep_population else None)


def activation_census(genomes) -> dict[str, int]:
    """Count hidden-node (resting, active) pairs across a population."""
    counts: dict[str, int] = {}
    for g in genomes:
        for node in g.nodes_by_role(ROLE_HIDDEN):
            key = pair_label(node.activation)
            counts[key] = counts.get(key, 0) + 1
    return counts


def function_label(f: CanonicalFunction) -> str:
    return f"{f.name}({f.slope:g},{f.shift:g})"


def pair_label(pair: PiecewiseActivation) -> str:
    return f"{function_label(pair.resting)}|{function_label(pair.active)}"


@dataclass(frozen=True)
class InstanceStats:
    total_evaluations: int
    successful_experiments: int
    total_generalization_score: int
    generalization_champions: int
    total_node_count: int
    network_sample_size: int
    activation_distribution: dict[str, int] = field(default_factory=dict)


def instance_stats(records: list[RunRecord],
                   final_population=None) -> InstanceStats:
    solved = [r for r in records if r.solution]
    return InstanceStats(
        total_evaluations=sum(r.evaluations for r in records),
        successful_experiments=len(solved),
        total_generalization_score=sum(r.generalization for r in solved),
        generalization_champions=sum(1 for r in records if r.generalized),
        total_node_count=sum(r.nodes for r in solved),
        network_sample_size=len(solved),
        activation_distribution=(
            activation_census(final_population) if final_population else {}
        ),
    )


def run_instance(exp: ExperimentPreset, seed: int, instance: int = 0,
                 runs: int | None = None,
                 physics: PhysicsParams | None = None, fast: bool = True):
    """Run one instance: `runs` independent experiments with derived seeds.

    Returns (InstanceStats, [RunRecord]). The activation census is taken
    from the final run's end-of-run population.
    """
    runs = exp.runs_per_instance if runs is None else runs
    records = []
    final_population = None
    for r in range(runs):
        run_seed = derive_seed(seed, instance, r)
        keep = r == runs - 1
        record, population = run_experiment(
            exp, run_seed, instance=instance, run=r, physics=physics,
            fast=fast, keep_population=keep)
        records.append(record)
        if keep:
            final_population = population
    return instance_stats(records, final_population), records


@dataclass(frozen=True)
class AggregateStats:
    n: int
    include_failed: bool
    solution_rate: float
    solution_rate_stderr: float
    generalization_pass_rate: float
    generalization_pass_rate_stderr: float
    evaluations_mean: float
    evaluations_stderr: float
    generalization_mean: float
    generalization_stderr: float
    nodes_mean: float
    nodes_stderr: float


def _mean_stderr(values) -> tuple[float, float]:
    n = len(values)
    if n == 0:
        return 0.0, 0.0
    mean = sum(values) / n
    if n == 1:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def aggregate(records: list[RunRecord], include_failed: bool) -> AggregateStats:
    """Mean and standard error per metric.

    Rates always treat failed runs as zeros; the evaluations,
    generalization, and node means cover every run when include_failed
    is true and only solution-finding runs otherwise.
    """
    if not records:
        raise ValueError("no records to aggregate")
    basis = records if include_failed else [r for r in records if r.solution]
    sol_rate = _mean_stderr([1.0 if r.solution else 0.0 for r in records])
    gen_rate = _mean_stderr([1.0 if r.generalized else 0.0 for r in records])
    evals = _mean_stderr([float(r.evaluations) for r in basis])
    gen = _mean_stderr([float(r.generalization) for r in basis])
    nodes = _mean_stderr([float(r.nodes) for r in basis])
    return AggregateStats(
        n=len(records),
        include_failed=include_failed,
        solution_rate=sol_rate[0], solution_rate_stderr=sol_rate[1],
        generalization_pass_rate=gen_rate[0],
        generalization_pass_rate_stderr=gen_rate[1],
        evaluations_mean=evals[0], evaluations_stderr=evals[1],
        generalization_mean=gen[0], generalization_stderr=gen[1],
        nodes_mean=nodes[0], nodes_stderr=nodes[1],
    )


CSV_HEADER = ("preset", "instance", "run", "success", "evaluations",
              "generalization", "nodes", "seed")


def format_runs_csv(records: list[RunRecord]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow([r.preset, r.instance, r.run, int(r.solution),
                         r.evaluations, r.generalization, r.nodes, r.seed])
    return out.getvalue()


def format_instance_json(stats: InstanceStats, exp: ExperimentPreset,
                         instance: int, seed: int) -> str:
    doc = {
        "preset": exp.name,
        "instance": instance,
        "seed": seed,
        "total_evaluations": stats.total_evaluations,
        "successful_experiments": stats.successful_experiments,
        "total_generalization_score": stats.total_generalization_score,
        "generalization_champions": stats.generalization_champions,
        "total_node_count": stats.total_node_count,
        "network_sample_size": stats.network_sample_size,
        "activation_distribution": stats.activation_distribution,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def format_aggregate_table(rows: list[tuple[str, AggregateStats]]) -> str:
    """Fixed-width table of per-preset aggregates, one block per basis."""
    lines = []
    header = (f"{'preset':<12} {'n':>4} {'solved%':>16} {'gen-pass%':>16} "
              f"{'evaluations':>22} {'generalization':>18} {'nodes':>14}")
    for include_failed in (True, False):
        basis = "including failed runs" if include_failed else "excluding failed runs"
        block = [r for r in rows if r[1].include_failed == include_failed]
        if not block:
            continue
        lines.append(f"# {basis}")
        lines.append(header)
        for name, a in block:
            lines.append(
                f"{name:<12} {a.n:>4} "
                f"{100 * a.solution_rate:>8.2f} ± {100 * a.solution_rate_stderr:<5.2f} "
                f"{100 * a.generalization_pass_rate:>8.2f} ± "
                f"{100 * a.generalization_pass_rate_stderr:<5.2f} "
                f"{a.evaluations_mean:>12.2f} ± {a.evaluations_stderr:<7.2f} "
                f"{a.generalization_mean:>8.2f} ± {a.generalization_stderr:<7.2f} "
                f"{a.nodes_mean:>6.3f} ± {a.nodes_stderr:<5.3f}"
            )
        lines.append("")
    return "\n".join(lines)
