"""Fast self-check suite: verifies the built artifact on the current machine.

Each property is small enough to run in seconds; together they cover the
integrator, the piecewise activation algebra, pool sampling, crossover
bookkeeping, and seeded determinism. The physics oracle here carries its
own copy of the benchmark constants, so corrupting the package's
parameters (the `corrupt` flag, used as a negative control) makes the
oracle property fail rather than silently tracking the corruption.
"""

from __future__ import annotations

import dataclasses
import math
import random
from dataclasses import dataclass

from scipy.stats import chisquare

from .activation import (
    ARCTAN,
    SIGMOID,
    CanonicalFunction,
    PiecewiseActivation,
    continuity_gap,
    count_configurations,
    sample_pair,
)
from .cartpole import CartPoleState, PhysicsParams, step
from .experiment import preset
from .genome import crossover, minimal_genome, mutate_add_connection, \
    mutate_add_node, mutate_weights, serialize
from .speciation import EvolutionParams, InnovationRegistry, evolve, \
    initial_population

# independent transcription of the benchmark constants; do not import
# these from cartpole or the corruption control stops controlling
_CART_MASS = 1.0
_P1_MASS, _P1_LEN = 0.1, 0.5
_P2_MASS, _P2_LEN = 0.01, 0.05
_GRAVITY = -9.8
_FRICTION = 2e-6


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    detail: str


def _oracle_derivs(state, force):
    x, dx, t1, dt1, t2, dt2 = state

    def pole(mass, length, theta, dtheta):
        s, c = math.sin(theta), math.cos(theta)
        hinge = _FRICTION * dtheta / (mass * length)
        f_eff = mass * length * dtheta * dtheta * s \
            + 0.75 * mass * c * (hinge + _GRAVITY * s)
        m_eff = mass * (1.0 - 0.75 * c * c)
        return f_eff, m_eff, hinge, s, c

    f1, m1, h1, s1, c1 = pole(_P1_MASS, _P1_LEN, t1, dt1)
    f2, m2, h2, s2, c2 = pole(_P2_MASS, _P2_LEN, t2, dt2)
    ddx = (force + f1 + f2) / (_CART_MASS + m1 + m2)
    ddt1 = -0.75 * (ddx * c1 + _GRAVITY * s1 + h1) / _P1_LEN
    ddt2 = -0.75 * (ddx * c2 + _GRAVITY * s2 + h2) / _P2_LEN
    return (dx, ddx, dt1, ddt1, dt2, ddt2)


def _euler_interval(state, force, total=0.02, dt=1e-6):
    s = list(state)
    for _ in range(round(total / dt)):
        d = _oracle_derivs(s, force)
        for i in range(6):
            s[i] += dt * d[i]
    return s


def _check_physics_oracle(params: PhysicsParams) -> PropertyResult:
    rng = random.Random(401)
    worst = 0.0
    for _ in range(8):
        state = (rng.uniform(-2.0, 2.0), rng.uniform(-1.5, 1.5),
                 rng.uniform(-0.5, 0.5), rng.uniform(-1.5, 1.5),
                 rng.uniform(-0.1, 0.1), rng.uniform(-0.3, 0.3))
        force = rng.uniform(-2.5, 2.5)
        got = step(CartPoleState(*state), force, params).as_tuple()
        want = _euler_interval(state, force)
        worst = max(worst, max(abs(g - w) for g, w in zip(got, want)))
    return PropertyResult("physics_oracle", worst < 1e-6,
                          f"worst component error {worst:.3g} (bound 1e-6)")


def _check_energy_drift(params: PhysicsParams) -> PropertyResult:
    p = params.frictionless()
    s = CartPoleState(theta1=0.2, theta2=0.1)

    def energy(st: CartPoleState) -> float:
        e = 0.5 * _CART_MASS * st.dx * st.dx
        for mass, length, theta, dtheta in (
                (_P1_MASS, _P1_LEN, st.theta1, st.dtheta1),
                (_P2_MASS, _P2_LEN, st.theta2, st.dtheta2)):
            vx = st.dx + length * dtheta * math.cos(theta)
            vy = -length * dtheta * math.sin(theta)
            e += 0.5 * mass * (vx * vx + vy * vy)
            e += 0.5 * (mass * length * length / 3.0) * dtheta * dtheta
            e -= mass * _GRAVITY * length * math.cos(theta)
        return e

    e0 = energy(s)
    worst = 0.0
    for _ in range(1000):
        s = step(s, 0.0, p)
        worst = max(worst, abs(energy(s) - e0) / abs(e0))
    return PropertyResult("energy_drift", worst < 1e-3,
                          f"relative drift {worst:.3g} over 1000 steps")


def _check_continuity_gaps() -> PropertyResult:
    biased = PiecewiseActivation(
        resting=CanonicalFunction(ARCTAN),
        active=CanonicalFunction(SIGMOID, 4.924273, -0.5))
    unaltered = PiecewiseActivation(
        resting=CanonicalFunction(ARCTAN),
        active=CanonicalFunction(SIGMOID))
    g1 = continuity_gap(biased)
    g2 = continuity_gap(unaltered)
    ok = g1 == 0.0 and g2 == 0.5
    return PropertyResult("continuity_gaps", ok,
                          f"biased pair gap {g1!r}, unaltered pair gap {g2!r}")


def _check_pair_sampling() -> PropertyResult:
    pool = preset("SA1").pool
    rng = random.Random(402)
    draws = 200_000
    counts: dict[tuple, int] = {}
    for _ in range(draws):
        p = sample_pair(pool, rng)
        key = (p.resting, p.active)
        counts[key] = counts.get(key, 0) + 1
    weights = dict(pool.entries)
    observed, expected = [], []
    for (r, a), n in sorted(counts.items(), key=lambda kv: -kv[1]):
        observed.append(n)
        expected.append(draws * weights[r] * weights[a])
    stat, pvalue = chisquare(observed, expected)
    return PropertyResult("pair_sampling_chisq", pvalue >= 0.001,
                          f"chi2 {stat:.2f}, p {pvalue:.4f} over {draws} draws")


def _check_configuration_count() -> PropertyResult:
    ok = all(count_configurations(7, n) == 49 ** n for n in range(6))
    return PropertyResult("configuration_count", ok,
                          "count_configurations(7, n) == 49**n for n <= 5")


def _check_crossover_closure() -> PropertyResult:
    rng = random.Random(403)
    act = preset("BASELINE").output_activation
    pool = preset("BASELINE").pool
    for case in range(300):
        registry = InnovationRegistry()
        a = minimal_genome(3, 1, act, registry, rng)
        b = minimal_genome(3, 1, act, registry, rng)
        for g in (a, b):
            for _ in range(rng.randrange(6)):
                op = rng.randrange(3)
                if op == 0:
                    mutate_add_node(g, pool, registry, rng, piecewise=False)
                elif op == 1:
                    mutate_add_connection(g, registry, rng)
                else:
                    mutate_weights(g, rng, 0.9, 2.5, 0.1)
        a.fitness, b.fitness = 1.0, 0.5
        child = crossover(a, b, rng)
        inns = [c.innovation for c in child.connections]
        if inns != sorted(inns) or len(inns) != len(set(inns)):
            return PropertyResult("crossover_closure", False,
                                  f"case {case}: gene list not sorted/unique")
        parent_inns = {c.innovation for c in a.connections}
        parent_inns |= {c.innovation for c in b.connections}
        if not set(inns) <= parent_inns:
            return PropertyResult("crossover_closure", False,
                                  f"case {case}: child gene outside parents")
    return PropertyResult("crossover_closure", True,
                          "300 randomized crossovers sorted/unique/closed")


def _check_seeded_determinism() -> PropertyResult:
    import zlib

    def run_once():
        params = EvolutionParams(population_size=30, max_generations=4,
                                 compat_threshold=1.5)
        rng = random.Random(404)
        act = preset("BASELINE").output_activation
        pop = initial_population(params, 3, 1, act, rng)
        result = evolve(
            pop, params, preset("BASELINE").pool,
            lambda g: zlib.crc32(serialize(g).encode()) % 1000 / 1000.0,
            lambda g: False, rng, piecewise=False)
        return result.evaluations, serialize(result.champion)

    ok = run_once() == run_once()
    return PropertyResult("seeded_determinism", ok,
                          "two seeded 30x4 runs agree" if ok
                          else "seeded runs diverged")


def run_validation(corrupt: bool = False) -> list[PropertyResult]:
    """Run every property; `corrupt` injects a physics-constant error
    into the integration side only, as a negative control that must
    make the oracle property fail."""
    params = PhysicsParams()
    if corrupt:
        params = dataclasses.replace(params, gravity=params.gravity * 1.001)
    return [
        _check_physics_oracle(params),
        _check_energy_drift(params),
        _check_continuity_gaps(),
        _check_pair_sampling(),
        _check_configuration_count(),
        _check_crossover_closure(),
        _check_seeded_determinism(),
    ]


def format_results(results: list[PropertyResult]) -> str:
    lines = []
    for r in results:
        lines.append(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<24} {r.detail}")
    n_fail = sum(1 for r in results if not r.passed)
    lines.append(f"{len(results) - n_fail}/{len(results)} properties passed")
    return "\n".join(lines)
