"""Jitted kernels must agree with the pure path bit for bit."""

import random

from pwneat import cartpole
from pwneat._fast import fast_episode, fast_generalization, fast_success, pack
from pwneat.activation import (
    ARCTAN,
    SIGMOID,
    CanonicalFunction,
    FunctionPool,
    PiecewiseActivation,
)
from pwneat.cartpole import CartPoleState, PhysicsParams, standard_start
from pwneat.genome import (
    InnovationRegistry,
    minimal_genome,
    mutate_add_connection,
    mutate_add_node,
    mutate_weights,
)
from pwneat.network import build

PARAMS = PhysicsParams()
SIG = PiecewiseActivation.homogeneous(CanonicalFunction(SIGMOID, 4.924273, 0.0))
SA1_POOL = FunctionPool(entries=(
    (CanonicalFunction(ARCTAN), 0.875),
    (CanonicalFunction(SIGMOID, 4.924273, -0.5), 0.125),
))


def random_controller(seed):
    rng = random.Random(seed)
    registry = InnovationRegistry()
    g = minimal_genome(3, 1, SIG, registry, rng)
    for _ in range(rng.randrange(0, 6)):
        op = rng.randrange(3)
        if op == 0:
            mutate_add_node(g, SA1_POOL, registry, rng)
        elif op == 1:
            mutate_add_connection(g, registry, rng)
        else:
            mutate_weights(g, rng, 0.9, 2.5, 0.1)
    return g


def random_start(rng):
    return CartPoleState(
        x=rng.uniform(-2.0, 2.0),
        dx=rng.uniform(-1.5, 1.5),
        theta1=rng.uniform(-0.5, 0.5),
        dtheta1=rng.uniform(-1.5, 1.5),
        theta2=rng.uniform(-0.1, 0.1),
        dtheta2=rng.uniform(-0.3, 0.3),
    )


def test_pack_shapes():
    g = random_controller(0)
    ph = build(g)
    net = pack(ph)
    assert net.n_nodes == ph.size
    assert net.n_inputs == 3
    assert len(net.cpos) == len(ph._compute)
    assert len(net.esrc) == len(net.eweight) == int(net.eend[-1])
    assert (net.lo, net.hi) == ph.output_range


def test_episode_bitwise_equality_across_paths():
    rng = random.Random(123)
    for seed in range(40):
        g = random_controller(seed)
        ph = build(g)
        net = pack(ph)
        for _ in range(3):
            s0 = random_start(rng)
            pure = cartpole.episode(ph, s0, 1000, PARAMS)
            fast = fast_episode(net, s0, 1000, PARAMS)
            assert fast.steps == pure.steps
            assert fast.tail_sum == pure.tail_sum


def test_episode_equality_from_standard_start():
    for seed in range(20):
        g = random_controller(seed + 500)
        ph = build(g)
        net = pack(ph)
        pure = cartpole.episode(ph, standard_start(), 1000, PARAMS)
        fast = fast_episode(net, standard_start(), 1000, PARAMS)
        assert (fast.steps, fast.tail_sum) == (pure.steps, pure.tail_sum)


def test_episode_equality_with_failed_start():
    g = random_controller(7)
    net = pack(build(g))
    dead = CartPoleState(x=3.0)
    fast = fast_episode(net, dead, 1000, PARAMS)
    assert (fast.steps, fast.tail_sum) == (0, 0.0)


def test_generalization_equality_across_paths():
    for seed in (3, 11, 29):
        g = random_controller(seed)
        ph = build(g)
        net = pack(ph)
        pure = cartpole.generalization_score(ph, PARAMS, max_steps=300)
        fast = fast_generalization(net, PARAMS, max_steps=300)
        assert fast == pure


def test_success_equality_across_paths():
    for seed in range(10):
        g = random_controller(seed)
        ph = build(g)
        net = pack(ph)
        pure = cartpole.success_test(ph, PARAMS)
        fast = fast_success(net, PARAMS)
        assert (fast.passed, fast.solution, fast.generalization) == (
            pure.passed, pure.solution, pure.generalization)


def test_fast_episode_rejects_wrong_input_arity():
    import pytest

    rng = random.Random(0)
    registry = InnovationRegistry()
    g = minimal_genome(2, 1, SIG, registry, rng)
    net = pack(build(g))
    with pytest.raises(ValueError):
        fast_episode(net, standard_start(), 10, PARAMS)
