"""Population-level evolution: species, fitness sharing, reproduction.

Genomes compete within species rather than across the whole population.
Species that stop improving for a configurable number of generations are
denied offspring, except the one holding the current generation champion.
"""

from __future__ import annotations

import dataclasses
import math
import random
from dataclasses import dataclass, field

from .activation import FunctionPool, PiecewiseActivation
from .genome import (
    Genome,
    InnovationRegistry,
    compatibility_core,
    connection_arrays,
    crossover,
    minimal_genome,
    mutate_add_connection,
    mutate_add_node,
    mutate_weights,
)

ELITISM_THRESHOLD = 5  # minimum allocation before a species keeps its best


class Extinction(RuntimeError):
    """Every species was culled; the population cannot reproduce."""


@dataclass
class Species:
    id: int
    representative: Genome
    members: list[Genome] = field(default_factory=list)
    best_fitness_ever: float = -math.inf
    last_improvement_generation: int = 0
    age: int = 0
    culled: bool = False


@dataclass(frozen=True)
class EvolutionParams:
    population_size: int = 1000
    compat_threshold: float = 4.0
    c1: float = 1.0
    c2: float = 1.0
    c3: float = 3.0
    weight_perturb_prob: float = 0.9
    weight_replace_prob: float = 0.1
    weight_mutate_power: float = 2.5
    add_node_prob: float = 0.03
    add_connection_prob: float = 0.3
    crossover_rate: float = 0.75
    interspecies_rate: float = 0.05
    survival_fraction: float = 0.2
    dropoff_age: int = 15
    max_generations: int = 100
    elitism: bool = True

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.dropoff_age < 1:
            raise ValueError("dropoff_age must be at least 1")
        if self.max_generations < 1:
            raise ValueError("max_generations must be at least 1")
        for name in ("weight_perturb_prob", "weight_replace_prob",
                     "add_node_prob", "add_connection_prob",
                     "crossover_rate", "interspecies_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if not 0.0 < self.survival_fraction <= 1.0:
            raise ValueError("survival_fraction must be in (0, 1]")
        if not (math.isfinite(self.compat_threshold)
                and self.compat_threshold >= 0.0):
            raise ValueError("compat_threshold must be finite and non-negative")
        for name in ("c1", "c2", "c3", "weight_mutate_power"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise ValueError(f"{name} must be finite and non-negative")


_BOOL_WORDS = {"true": True, "1": True, "false": False, "0": False}


def parse_params(text: str, defaults: EvolutionParams | None = None) -> EvolutionParams:
    """Parse `key value` lines into EvolutionParams; unknown keys rejected."""
    types = {f.name: f.type for f in dataclasses.fields(EvolutionParams)}
    values = dataclasses.asdict(defaults or EvolutionParams())
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'key value', got {raw!r}")
        key, token = parts
        if key not in types:
            raise ValueError(f"line {lineno}: unknown parameter {key!r}")
        kind = types[key]
        if kind == "int":
            values[key] = int(token)
        elif kind == "float":
            values[key] = float(token)
        else:
            word = token.lower()
            if word not in _BOOL_WORDS:
                raise ValueError(f"line {lineno}: bad boolean {token!r}")
            values[key] = _BOOL_WORDS[word]
    return EvolutionParams(**values)


def format_params(params: EvolutionParams) -> str:
    lines = []
    for f in dataclasses.fields(EvolutionParams):
        value = getattr(params, f.name)
        if f.type == "bool":
            token = "true" if value else "false"
        else:
            token = repr(value)
        lines.append(f"{f.name} {token}")
    return "\n".join(lines) + "\n"


@dataclass
class Population:
    genomes: list[Genome]
    registry: InnovationRegistry
    species: list[Species] = field(default_factory=list)
    generation: int = 0
    champion: Genome | None = None
    next_species_id: int = 0


def initial_population(params: EvolutionParams, n_inputs: int, n_outputs: int,
                       default_activation: PiecewiseActivation,
                       rng: random.Random) -> Population:
    registry = InnovationRegistry()
    genomes = [
        minimal_genome(n_inputs, n_outputs, default_activation, registry, rng)
        for _ in range(params.population_size)
    ]
    return Population(genomes=genomes, registry=registry)


def speciate(pop: Population, params: EvolutionParams,
             rng: random.Random) -> Population:
    """Assign genomes to species by compatibility with representatives.

    A genome joins the first species (in id order) whose representative
    lies within the threshold, founding a new species otherwise. After
    assignment each surviving species picks next generation's
    representative uniformly from its current members.
    """
    for s in pop.species:
        s.members = []
    # connection columns are extracted once per genome; every genome is
    # tested against many representatives
    cache: dict[int, tuple[list[int], list[float]]] = {}

    def arrays(g: Genome):
        got = cache.get(id(g))
        if got is None:
            got = cache[id(g)] = connection_arrays(g)
        return got

    for g in pop.genomes:
        ia, wa = arrays(g)
        for s in pop.species:
            ib, wb = arrays(s.representative)
            d = compatibility_core(ia, wa, ib, wb,
                                   params.c1, params.c2, params.c3)
            if d <= params.compat_threshold:
                s.members.append(g)
                break
        else:
            s = Species(id=pop.next_species_id, representative=g,
                        last_improvement_generation=pop.generation)
            pop.next_species_id += 1
            s.members.append(g)
            pop.species.append(s)
    pop.species = [s for s in pop.species if s.members]
    for s in pop.species:
        s.representative = rng.choice(s.members)
        s.age += 1
    return pop


def share_fitness(pop: Population) -> Population:
    for s in pop.species:
        size = len(s.members)
        for g in s.members:
            g.adjusted_fitness = g.fitness / size
    return pop


def apply_dropoff(pop: Population, params: EvolutionParams) -> Population:
    """Mark species stagnant for dropoff_age generations as culled.

    Stagnation is measured on best raw fitness. The species holding the
    current generation champion is always protected, which keeps the
    population alive even when every species has gone stale.
    """
    champion = max(pop.genomes, key=lambda g: g.fitness)
    for s in pop.species:
        best = max(g.fitness for g in s.members)
        if best > s.best_fitness_ever:
            s.best_fitness_ever = best
            s.last_improvement_generation = pop.generation
        stagnant = (pop.generation - s.last_improvement_generation
                    >= params.dropoff_age)
        protected = any(g is champion for g in s.members)
        s.culled = stagnant and not protected
    return pop


def _largest_remainder(quotas: list[float], total: int) -> list[int]:
    counts = [int(q) for q in quotas]
    shortfall = total - sum(counts)
    order = sorted(range(len(quotas)),
                   key=lambda i: (counts[i] - quotas[i], i))
    for i in order[:shortfall]:
        counts[i] += 1
    return counts


def reproduce(pop: Population, params: EvolutionParams, pool: FunctionPool,
              rng: random.Random, piecewise: bool = True) -> Population:
    """Build the next generation, allocating offspring across species."""
    live = [s for s in pop.species if not s.culled and s.members]
    if not live:
        raise Extinction("all species culled")

    sums = [sum(g.adjusted_fitness for g in s.members) for s in live]
    total = sum(sums)
    if total > 0.0:
        quotas = [params.population_size * x / total for x in sums]
    else:
        quotas = [params.population_size / len(live)] * len(live)
    allocations = _largest_remainder(quotas, params.population_size)

    parents_of = {}
    for s in live:
        ranked = sorted(s.members, key=lambda g: g.fitness, reverse=True)
        keep = max(1, math.ceil(params.survival_fraction * len(ranked)))
        parents_of[s.id] = ranked[:keep]

    offspring: list[Genome] = []
    for s, n in zip(live, allocations):
        if n == 0:
            continue
        parents = parents_of[s.id]
        produced = 0
        if params.elitism and n >= ELITISM_THRESHOLD:
            offspring.append(parents[0].copy())
            produced = 1
        for _ in range(produced, n):
            if rng.random() < params.crossover_rate:
                first = rng.choice(parents)
                if len(live) > 1 and rng.random() < params.interspecies_rate:
                    other = rng.choice([t for t in live if t is not s])
                    second = rng.choice(parents_of[other.id])
                else:
                    second = rng.choice(parents)
                if second.fitness > first.fitness:
                    first, second = second, first
                child = crossover(first, second, rng)
            else:
                child = rng.choice(parents).copy()
            mutate_weights(child, rng, params.weight_perturb_prob,
                           params.weight_mutate_power,
                           params.weight_replace_prob)
            if rng.random() < params.add_node_prob:
                mutate_add_node(child, pool, pop.registry, rng,
                                piecewise=piecewise)
            if rng.random() < params.add_connection_prob:
                mutate_add_connection(child, pop.registry, rng)
            offspring.append(child)

    pop.genomes = offspring
    pop.generation += 1
    pop.registry.begin_generation()
    return pop


@dataclass(frozen=True)
class RunResult:
    success: bool
    champion: Genome
    evaluations: int
    generations: int
    extinct: bool
    population: Population


def evolve(pop: Population, params: EvolutionParams, pool: FunctionPool,
           evaluator, success_test, rng: random.Random,
           piecewise: bool = True) -> RunResult:
    """Run the generation loop until success, max generations, or extinction.

    evaluator: genome -> raw fitness. success_test: genome -> bool, checked
    once per generation on the generation champion. The evaluation count
    covers evaluator calls only.
    """
    evaluations = 0
    while True:
        for g in pop.genomes:
            g.fitness = evaluator(g)
            evaluations += 1
        gen_best = max(pop.genomes, key=lambda g: g.fitness)
        if pop.champion is None or gen_best.fitness > pop.champion.fitness:
            pop.champion = gen_best.copy()
        speciate(pop, params, rng)
        share_fitness(pop)
        apply_dropoff(pop, params)
        if success_test(gen_best):
            return RunResult(success=True, champion=gen_best,
                             evaluations=evaluations,
                             generations=pop.generation + 1,
                             extinct=False, population=pop)
        if pop.generation + 1 >= params.max_generations:
            return RunResult(success=False, champion=pop.champion,
                             evaluations=evaluations,
                             generations=pop.generation + 1,
                             extinct=False, population=pop)
        try:
            reproduce(pop, params, pool, rng, piecewise=piecewise)
        except Extinction:
            return RunResult(success=False, champion=pop.champion,
                             evaluations=evaluations,
                             generations=pop.generation + 1,
                             extinct=True, population=pop)
