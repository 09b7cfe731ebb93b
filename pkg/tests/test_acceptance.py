"""Acceptance battery: capability, statistics, and reproducibility gates.

Criteria 2-5 share one panel of evolution runs (four presets, 50 runs
each, one fixed seed set) collected once per session. The panel is the
expensive part; everything else is seconds.
"""

import dataclasses
import math
import random

import pytest

from pwneat.activation import (SIGMOID, CanonicalFunction, FunctionPool,
                               PiecewiseActivation, continuity_gap,
                               count_configurations, parse_function,
                               sample_pair)
from pwneat.cartpole import CartPoleState, PhysicsParams, step
from pwneat.experiment import (format_instance_json, format_runs_csv, preset,
                               run_instance)
from pwneat.genome import (InnovationRegistry, crossover, minimal_genome,
                           mutate_add_connection, mutate_add_node,
                           mutate_weights)
from pwneat.speciation import (EvolutionParams, Population, Species,
                               _largest_remainder, apply_dropoff)

from oracles import euler_integrate, mechanical_energy, sample_oracle_case

PANEL_SEED = 20260819
PANEL_RUNS = 50


def report(line: str) -> None:
    print(line, flush=True)


# ------------------------------------------------ criterion 1: physics

def test_c1_physics_oracle():
    physics = PhysicsParams()
    rng = random.Random(101)
    worst = 0.0
    for _ in range(100):
        state, force = sample_oracle_case(rng)
        got = step(CartPoleState(*state), force, physics).as_tuple()
        want = euler_integrate(state, force)
        worst = max(worst, max(abs(g - w) for g, w in zip(got, want)))
    oracle_ok = worst < 1e-6

    free = physics.frictionless()
    s = CartPoleState(theta1=0.2, theta2=0.1)
    e0 = mechanical_energy(s.as_tuple())
    drift = 0.0
    for _ in range(1000):
        s = step(s, 0.0, free)
        drift = max(drift,
                    abs(mechanical_energy(s.as_tuple()) - e0) / abs(e0))
    drift_ok = drift < 1e-3

    report(f"C1 {'PASS' if oracle_ok and drift_ok else 'FAIL'}: oracle "
           f"worst |err| {worst:.2e} (< 1e-6), frictionless energy drift "
           f"{drift:.3e} (< 1e-3)")
    assert oracle_ok and drift_ok


# ------------------------------------------- criteria 2-5: run panel

@pytest.fixture(scope="session")
def panel():
    results = {}
    for name in ("BASELINE", "SA0", "SA1", "SA3"):
        exp = preset(name)
        stats, records = run_instance(exp, PANEL_SEED, instance=0,
                                      runs=PANEL_RUNS)
        solved = [r for r in records if r.solution]
        results[name] = {
            "records": records,
            "rate": len(solved) / len(records),
            "mean_evals": (sum(r.evaluations for r in solved) / len(solved)
                           if solved else float("nan")),
            "mean_nodes": (sum(r.nodes for r in solved) / len(solved)
                           if solved else float("nan")),
            "mean_gen": (sum(r.generalization for r in solved) / len(solved)
                         if solved else float("nan")),
            "gen_pass": (sum(1 for r in solved if r.generalized) / len(solved)
                         if solved else float("nan")),
        }
        report(f"panel {name}: rate {results[name]['rate']:.2f} "
               f"evals {results[name]['mean_evals']:.0f} "
               f"nodes {results[name]['mean_nodes']:.2f} "
               f"gen {results[name]['mean_gen']:.0f} "
               f"gen-pass {results[name]['gen_pass']:.2f}")
    return results


def test_c2_baseline_capability(panel):
    base = panel["BASELINE"]
    checks = [
        ("C2a", base["rate"] >= 0.70,
         f"solution rate {base['rate']:.2%} (need >= 70%)"),
        ("C2b", 12_000 <= base["mean_evals"] <= 70_000,
         f"mean evaluations {base['mean_evals']:.0f} (need 12k..70k)"),
        ("C2c", 4.0 <= base["mean_nodes"] <= 9.0,
         f"mean champion nodes {base['mean_nodes']:.2f} (need 4..9)"),
        ("C2d", base["mean_gen"] >= 200.0,
         f"mean generalization {base['mean_gen']:.0f} (need >= 200)"),
    ]
    for tag, ok, detail in checks:
        report(f"{tag} {'PASS' if ok else 'FAIL'}: {detail}")
    assert all(ok for _, ok, _ in checks), \
        "; ".join(d for _, ok, d in checks if not ok)


def test_c3_noise_collapse(panel):
    sa0, base = panel["SA0"]["rate"], panel["BASELINE"]["rate"]
    ok = sa0 <= base / 3.0
    report(f"C3 {'PASS' if ok else 'FAIL'}: SA0 rate {sa0:.2%} "
           f"vs BASELINE {base:.2%} (need <= 1/3)")
    assert ok


def test_c4_bias_rescue(panel):
    base = panel["BASELINE"]
    sa0_rate = panel["SA0"]["rate"]
    failures = []
    for name in ("SA1", "SA3"):
        p = panel[name]
        checks = [
            (p["rate"] >= max(5.0 * sa0_rate, 0.60),
             f"{name} rate {p['rate']:.2%} "
             f"(need >= 5x SA0 {sa0_rate:.2%} and >= 60%)"),
            (p["mean_nodes"] > base["mean_nodes"],
             f"{name} nodes {p['mean_nodes']:.2f} "
             f"(need > BASELINE {base['mean_nodes']:.2f})"),
            (p["mean_evals"] > base["mean_evals"],
             f"{name} evals {p['mean_evals']:.0f} "
             f"(need > BASELINE {base['mean_evals']:.0f})"),
        ]
        for ok, detail in checks:
            report(f"C4 {'PASS' if ok else 'FAIL'}: {detail}")
            if not ok:
                failures.append(detail)
    assert not failures, "; ".join(failures)


def test_c5_generalization_ordering(panel):
    base = panel["BASELINE"]["gen_pass"]
    failures = []
    for name in ("SA1", "SA3"):
        rate = panel[name]["gen_pass"]
        ok = not math.isnan(rate) and rate >= base - 0.05
        report(f"C5 {'PASS' if ok else 'FAIL'}: {name} gen-pass among "
               f"solvers {rate:.2%} vs BASELINE {base:.2%} (within 5pp)")
        if not ok:
            failures.append(name)
    assert not failures, f"below BASELINE - 5pp: {failures}"


# --------------------------- criterion 6: combinatorics and sampling

def test_c6_combinatorics_and_sampling():
    counts_ok = all(count_configurations(7, n) == 49 ** n
                    for n in range(1, 6))

    pool = preset("SA1").pool
    rng = random.Random(606)
    observed = {}
    draws = 1_000_000
    for _ in range(draws):
        pair = sample_pair(pool, rng)
        key = (pair.resting.kind, pair.active.kind)
        observed[key] = observed.get(key, 0) + 1
    weights = {f.kind: w for f, w in pool.entries}
    chi2 = 0.0
    for (r, a), n in observed.items():
        expected = draws * weights[r] * weights[a]
        chi2 += (n - expected) ** 2 / expected
    # chi-square with 3 dof: critical value at p=0.001
    chi_ok = chi2 < 16.266

    sa1_pair = PiecewiseActivation(*(f for f, _ in pool.entries))
    gap_sa1 = continuity_gap(sa1_pair)
    unaltered = PiecewiseActivation(parse_function("arctan", 1.0, 0.0),
                                    parse_function("sigmoid", 1.0, 0.0))
    gap_plain = continuity_gap(unaltered)
    gaps_ok = gap_sa1 == 0.0 and gap_plain == 0.5

    ok = counts_ok and chi_ok and gaps_ok
    report(f"C6 {'PASS' if ok else 'FAIL'}: 49^n counts {counts_ok}, "
           f"chi2 {chi2:.2f} (< 16.27), gaps ({gap_sa1}, {gap_plain}) "
           f"(need (0.0, 0.5))")
    assert counts_ok and chi_ok and gaps_ok


# ------------------------------------- criterion 7: engine properties

def small_pool():
    f = CanonicalFunction(SIGMOID, 4.924273, 0.0)
    return FunctionPool(((f, 1.0),))


def homogeneous_pair(pool):
    f = pool.entries[0][0]
    return PiecewiseActivation(f, f)


def random_genome(rng, registry, pool, mutations=6):
    g = minimal_genome(3, 1, homogeneous_pair(pool), registry, rng)
    for _ in range(mutations):
        r = rng.random()
        if r < 0.3:
            mutate_add_node(g, pool, registry, rng)
        elif r < 0.7:
            mutate_add_connection(g, registry, rng)
        else:
            mutate_weights(g, rng, 0.9, 2.5, 0.1)
    return g


class _StubGenome:
    """Carries just the fields the species bookkeeping reads."""

    def __init__(self, fitness):
        self.fitness = fitness
        self.adjusted_fitness = fitness


def _dropoff_verdict(stagnant, age, has_champion):
    """Run apply_dropoff on a two-species population; return culled flags."""
    params = EvolutionParams(dropoff_age=age)
    stale = Species(id=1, representative=None)
    stale.members = [_StubGenome(1.0), _StubGenome(2.0)]
    stale.best_fitness_ever = 5.0          # nothing improves this gen
    stale.last_improvement_generation = 0
    fresh = Species(id=2, representative=None)
    fresh.members = [_StubGenome(10.0 if not has_champion else 1.5)]
    fresh.best_fitness_ever = 100.0
    fresh.last_improvement_generation = stagnant
    if has_champion:
        stale.members.append(_StubGenome(20.0))  # champion lives here
    pop = Population(genomes=stale.members + fresh.members, registry=None,
                     species=[stale, fresh], generation=stagnant)
    apply_dropoff(pop, params)
    return stale.culled


def test_c7_engine_properties():
    pool = small_pool()
    cases = 0

    # innovation determinism: identical structural requests within one
    # generation receive identical markers
    rng = random.Random(707)
    for _ in range(1000):
        registry = InnovationRegistry()
        a = random_genome(rng, registry, pool)
        pairs_a = {(c.source, c.target): c.innovation for c in a.connections}
        b = random_genome(rng, registry, pool)
        for c in b.connections:
            key = (c.source, c.target)
            if key in pairs_a:
                assert c.innovation == pairs_a[key]
        cases += 1

    # crossover closure: child genes come from the parents, stay sorted
    # and unique
    rng = random.Random(708)
    registry = InnovationRegistry()
    for _ in range(1000):
        a = random_genome(rng, registry, pool)
        b = random_genome(rng, registry, pool)
        a.fitness, b.fitness = rng.random(), rng.random()
        child = crossover(a, b, rng)
        innovations = [c.innovation for c in child.connections]
        assert innovations == sorted(innovations)
        assert len(set(innovations)) == len(innovations)
        parent_keys = {(c.innovation, c.source, c.target)
                       for c in a.connections + b.connections}
        for c in child.connections:
            assert (c.innovation, c.source, c.target) in parent_keys
        registry.begin_generation()
        cases += 1

    # population-size conservation: largest-remainder hits the total
    rng = random.Random(709)
    for _ in range(1000):
        k = rng.randrange(1, 40)
        total = rng.randrange(k, 2000)
        quotas = [rng.random() * 10 for _ in range(k)]
        scale = total / max(sum(quotas), 1e-12)
        alloc = _largest_remainder([q * scale for q in quotas], total)
        assert sum(alloc) == total
        assert all(a >= 0 for a in alloc)
        cases += 1

    # champion monotonicity: a species' best-ever never decreases under
    # repeated bookkeeping with arbitrary fitness streams
    rng = random.Random(710)
    for _ in range(1000):
        s = Species(id=1, representative=None)
        s.members = [_StubGenome(rng.random())]
        pop = Population(genomes=s.members, registry=None, species=[s])
        best_seen = -math.inf
        for gen in range(8):
            s.members = [_StubGenome(rng.random() * 10) for _ in range(3)]
            pop.genomes = s.members
            pop.generation = gen
            prev = s.best_fitness_ever
            apply_dropoff(pop, EvolutionParams(dropoff_age=100))
            assert s.best_fitness_ever >= prev
            best_seen = max(best_seen, max(m.fitness for m in s.members))
            assert s.best_fitness_ever == best_seen
        cases += 1

    # drop-off immunity window: stagnation short of the age never culls;
    # at or past it, only the champion's species survives
    rng = random.Random(711)
    for _ in range(1000):
        age = rng.randrange(1, 60)
        stagnant = rng.randrange(0, 2 * age)
        has_champion = rng.random() < 0.3
        culled = _dropoff_verdict(stagnant, age, has_champion)
        if stagnant < age or has_champion:
            assert not culled
        else:
            assert culled
        cases += 1

    report(f"C7 PASS: engine properties over {cases} randomized cases")
    assert cases >= 5000


# --------------------------------------- criterion 8: reproducibility

def test_c8_reproducibility():
    exp = dataclasses.replace(
        preset("SA1"),
        params=dataclasses.replace(preset("SA1").params, population_size=30,
                                   max_generations=3))
    outputs = []
    for _ in range(2):
        stats, records = run_instance(exp, seed=88, instance=0, runs=4)
        outputs.append((format_runs_csv(records),
                        format_instance_json(stats, exp, seed=88,
                                             instance=0)))
    ok = outputs[0] == outputs[1]
    report(f"C8 {'PASS' if ok else 'FAIL'}: repeated seeded run "
           f"byte-identical CSV/JSON = {ok}")
    assert ok
