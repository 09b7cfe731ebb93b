"""Phenotype network semantics: synchronous update, reset, fixed points."""

import math
import random

import pytest

from pwneat.activation import (
    ARCTAN,
    BENT_IDENTITY,
    ELU,
    RELU,
    SIGMOID,
    SINE,
    TANH,
    CanonicalFunction,
    PiecewiseActivation,
    eval_piecewise,
)
from pwneat.genome import (
    ROLE_BIAS,
    ROLE_HIDDEN,
    ROLE_INPUT,
    ROLE_OUTPUT,
    ConnectionGene,
    Genome,
    InnovationRegistry,
    NodeGene,
    minimal_genome,
)
from pwneat.network import Phenotype, build

SIG = PiecewiseActivation.homogeneous(CanonicalFunction(SIGMOID, 4.924273, 0.0))
TANH_PAIR = PiecewiseActivation.homogeneous(CanonicalFunction(TANH))
RELU_PAIR = PiecewiseActivation.homogeneous(CanonicalFunction(RELU))

ALL_KINDS = (SINE, SIGMOID, ARCTAN, TANH, BENT_IDENTITY, RELU, ELU)


def hand_genome(connections, hidden_activations=(), output_activation=TANH_PAIR,
                n_inputs=1):
    """Genome with explicit wiring: inputs 0.., bias, hidden, single output."""
    nodes = {}
    next_id = 0
    for _ in range(n_inputs):
        nodes[next_id] = NodeGene(next_id, ROLE_INPUT, output_activation)
        next_id += 1
    nodes[next_id] = NodeGene(next_id, ROLE_BIAS, output_activation)
    next_id += 1
    for act in hidden_activations:
        nodes[next_id] = NodeGene(next_id, ROLE_HIDDEN, act)
        next_id += 1
    output_id = next_id
    nodes[output_id] = NodeGene(output_id, ROLE_OUTPUT, output_activation)
    conns = [
        ConnectionGene(i, src, tgt, w, True)
        for i, (src, tgt, w) in enumerate(connections)
    ]
    return Genome(nodes=nodes, connections=conns), output_id


def test_build_minimal_genome():
    registry = InnovationRegistry()
    g = minimal_genome(3, 1, SIG, registry, random.Random(0))
    ph = build(g)
    assert ph.size == 5
    assert ph.output_range == (0.0, 1.0)


def test_two_step_signal_propagation():
    # input -> output through tanh; the output sees the input one step late
    g, _ = hand_genome([(0, 2, 0.7)])
    ph = build(g)
    assert ph.activate([2.0]) == [0.0]
    assert ph.activate([2.0]) == [math.tanh(0.7 * 2.0)]


def test_zero_weight_network_rests_at_sigmoid_midpoint():
    registry = InnovationRegistry()
    g = minimal_genome(3, 1, SIG, registry, random.Random(0))
    for c in g.connections:
        c.weight = 0.0
    ph = build(g)
    for _ in range(5):
        assert ph.activate([0.3, -0.8, 1.0]) == [0.5]


def test_disabled_connections_do_not_contribute():
    g, _ = hand_genome([(0, 2, 5.0)])
    g.connections[0].enabled = False
    ph = build(g)
    assert ph.activate([1.0]) == [0.0]
    assert ph.activate([1.0]) == [0.0]


def test_relu_self_loop_stays_at_rest():
    g, out = hand_genome([(2, 2, 1.0)], output_activation=RELU_PAIR)
    ph = build(g)
    for _ in range(10):
        assert ph.activate([0.0]) == [0.0]


def test_bias_drives_constant_signal():
    # bias (node 1) -> output with weight w: output settles at tanh(w)
    g, _ = hand_genome([(1, 2, 0.4)])
    ph = build(g)
    ph.activate([0.0])
    assert ph.activate([0.0]) == [math.tanh(0.4)]


def test_recurrent_self_excitation_accumulates():
    # tanh output with self-loop; inputs are visible one step late, so
    # x_{t+1} = tanh(in_t + x_t) with in_0 = x_0 = 0
    g, _ = hand_genome([(0, 2, 1.0), (2, 2, 1.0)])
    ph = build(g)
    prev_out = 0.0
    prev_in = 0.0
    for _ in range(6):
        expected = math.tanh(prev_in + prev_out)
        assert ph.activate([0.5]) == [expected]
        prev_out = expected
        prev_in = 0.5


def test_reset_restores_initial_state():
    registry = InnovationRegistry()
    g = minimal_genome(2, 1, SIG, registry, random.Random(7))
    ph = build(g)
    first = ph.activate([0.5, -0.5])
    ph.activate([0.1, 0.9])
    ph.reset()
    assert ph.activate([0.5, -0.5]) == first
    fresh_ph = build(g)
    assert fresh_ph.activate([0.5, -0.5]) == first


def test_activate_validates_input_length():
    registry = InnovationRegistry()
    g = minimal_genome(3, 1, SIG, registry, random.Random(0))
    ph = build(g)
    with pytest.raises(ValueError):
        ph.activate([1.0, 2.0])


def test_build_is_deterministic():
    registry = InnovationRegistry()
    rng = random.Random(11)
    g = minimal_genome(3, 1, SIG, registry, rng)
    a = build(g)
    b = build(g)
    seq = [0.2, -0.4, 0.9]
    for _ in range(10):
        assert a.activate(seq) == b.activate(seq)


def test_output_range_tracks_output_activation():
    arctan_pair = PiecewiseActivation.homogeneous(CanonicalFunction(ARCTAN))
    g, _ = hand_genome([(0, 2, 1.0)], output_activation=arctan_pair)
    ph = build(g)
    assert ph.output_range == (-math.pi / 2, math.pi / 2)


def test_runaway_state_poisons_to_nan_without_raising():
    # bent identity grows without bound; a strong self-loop must overflow
    # to nan quietly instead of raising mid-episode
    bent = PiecewiseActivation.homogeneous(CanonicalFunction(BENT_IDENTITY, 8.0))
    g, _ = hand_genome([(0, 2, 8.0), (2, 2, 8.0)], output_activation=bent)
    ph = build(g)
    out = 0.0
    for _ in range(400):
        out = ph.activate([1.0])[0]
    assert math.isnan(out)


def test_mixed_branch_selection_uses_previous_step_sum():
    # piecewise output: resting relu / active sine, driven by the input sign
    pair = PiecewiseActivation(
        resting=CanonicalFunction(RELU),
        active=CanonicalFunction(SINE, 2.0),
    )
    g, _ = hand_genome([(0, 2, 1.0)], output_activation=pair)
    ph = build(g)
    ph.activate([-0.7])
    assert ph.activate([0.0]) == [0.0]  # resting branch: relu(-0.7)
    ph.reset()
    ph.activate([0.7])
    assert ph.activate([0.0]) == [math.sin(2.0 * 0.7)]


# --- feedforward fixed point against a topological-order oracle ---

def random_dag_genome(rng):
    n_inputs = rng.randrange(1, 4)
    n_hidden = rng.randrange(0, 6)

    def random_pair():
        kind = rng.choice(ALL_KINDS)
        resting = CanonicalFunction(kind, rng.uniform(0.2, 3.0),
                                    rng.uniform(-1.0, 1.0))
        kind2 = rng.choice(ALL_KINDS)
        active = CanonicalFunction(kind2, rng.uniform(0.2, 3.0),
                                   rng.uniform(-1.0, 1.0))
        return PiecewiseActivation(resting=resting, active=active)

    nodes = {}
    rank = {}
    for i in range(n_inputs):
        nodes[i] = NodeGene(i, ROLE_INPUT, random_pair())
        rank[i] = 0
    bias_id = n_inputs
    nodes[bias_id] = NodeGene(bias_id, ROLE_BIAS, random_pair())
    rank[bias_id] = 0
    hidden_ids = []
    for h in range(n_hidden):
        node_id = bias_id + 1 + h
        nodes[node_id] = NodeGene(node_id, ROLE_HIDDEN, random_pair())
        rank[node_id] = 1 + h
        hidden_ids.append(node_id)
    output_id = bias_id + 1 + n_hidden
    nodes[output_id] = NodeGene(output_id, ROLE_OUTPUT, random_pair())
    rank[output_id] = 1 + n_hidden

    pairs = set()
    targets = hidden_ids + [output_id]
    for _ in range(rng.randrange(2, 12)):
        src = rng.choice(list(nodes))
        tgt = rng.choice(targets)
        if rank[src] < rank[tgt]:
            pairs.add((src, tgt))
    conns = [
        ConnectionGene(i, src, tgt, rng.uniform(-2.0, 2.0), True)
        for i, (src, tgt) in enumerate(sorted(pairs))
    ]
    g = Genome(nodes=nodes, connections=conns)
    g.validate()
    return g, rank, n_inputs, n_hidden


def topological_oracle(genome, rank, inputs):
    """Steady-state node values computed directly in dependency order."""
    incoming = {}
    for c in genome.connections:
        incoming.setdefault(c.target, []).append(c)
    values = {}
    for node in sorted(genome.nodes.values(), key=lambda n: (rank[n.id], n.id)):
        if node.role == ROLE_INPUT:
            values[node.id] = inputs[node.id]
        elif node.role == ROLE_BIAS:
            values[node.id] = 1.0
        else:
            total = 0.0
            for c in incoming.get(node.id, []):
                total += c.weight * values[c.source]
            values[node.id] = eval_piecewise(node.activation, total)
    return values


def test_feedforward_networks_settle_to_topological_fixed_point():
    rng = random.Random(2024)
    for _ in range(60):
        g, rank, n_inputs, n_hidden = random_dag_genome(rng)
        inputs = [rng.uniform(-1.5, 1.5) for _ in range(n_inputs)]
        ph = build(g)
        passes = n_hidden + 3
        history = [ph.activate(inputs)[0] for _ in range(passes)]
        assert history[-1] == history[-2]
        oracle = topological_oracle(g, rank, inputs)
        output_id = max(g.nodes)
        assert history[-1] == oracle[output_id]
