"""Phenotype: a genome decoded into an executable recurrent network.

Updates are synchronous: each activate() call computes every node once
from the previous step's activations, so signals take one step per hop
and recurrent links act as one-step memory.  This is the reference
implementation; the jitted episode kernel mirrors it exactly.
"""

from __future__ import annotations

import math

from .activation import _kind_value
from .genome import ROLE_BIAS, ROLE_HIDDEN, ROLE_INPUT, ROLE_OUTPUT, Genome


class Phenotype:
    """Single-owner mutable network state; build one per evaluation thread."""

    def __init__(self, genome: Genome):
        genome.validate()
        ordered = (
            genome.nodes_by_role(ROLE_INPUT)
            + genome.nodes_by_role(ROLE_BIAS)
            + genome.nodes_by_role(ROLE_HIDDEN)
            + genome.nodes_by_role(ROLE_OUTPUT)
        )
        self._position = {node.id: pos for pos, node in enumerate(ordered)}
        self.n_inputs = len(genome.nodes_by_role(ROLE_INPUT))
        self._bias_positions = [
            self._position[n.id] for n in genome.nodes_by_role(ROLE_BIAS)
        ]
        self._output_positions = [
            self._position[n.id] for n in genome.nodes_by_role(ROLE_OUTPUT)
        ]

        incoming: dict[int, list[tuple[int, float]]] = {}
        for c in genome.connections:
            if not c.enabled:
                continue
            incoming.setdefault(self._position[c.target], []).append(
                (self._position[c.source], c.weight)
            )
        # compute nodes: everything past the inputs and biases, in order
        first_compute = self.n_inputs + len(self._bias_positions)
        self._compute = []
        for pos in range(first_compute, len(ordered)):
            node = ordered[pos]
            r, a = node.activation.resting, node.activation.active
            self._compute.append((
                pos,
                tuple(incoming.get(pos, ())),
                r.kind, r.slope, r.shift,
                a.kind, a.slope, a.shift,
            ))
        first_output = genome.nodes_by_role(ROLE_OUTPUT)[0]
        self.output_range = first_output.activation.nominal_range()
        self._state = [0.0] * len(ordered)
        self._scratch = [0.0] * len(ordered)

    @property
    def size(self) -> int:
        return len(self._state)

    def reset(self) -> None:
        for i in range(len(self._state)):
            self._state[i] = 0.0
            self._scratch[i] = 0.0

    def activate(self, inputs) -> list[float]:
        """One synchronous pass; returns the output node activations."""
        if len(inputs) != self.n_inputs:
            raise ValueError(
                f"expected {self.n_inputs} inputs, got {len(inputs)}"
            )
        old = self._state
        new = self._scratch
        for i, value in enumerate(inputs):
            new[i] = value
        for pos in self._bias_positions:
            new[pos] = 1.0
        for pos, edges, rk, rs, rsh, ak, asl, ash in self._compute:
            total = 0.0
            for src, weight in edges:
                total += weight * old[src]
            # a non-finite sum poisons the node to NaN instead of raising,
            # matching the jitted kernel; episode failure checks catch it
            if math.isfinite(total):
                if total < 0.0:
                    new[pos] = _kind_value(rk, rs, rsh, total)
                else:
                    new[pos] = _kind_value(ak, asl, ash, total)
            else:
                new[pos] = math.nan
        self._state, self._scratch = new, old
        return [self._state[pos] for pos in self._output_positions]


def build(genome: Genome) -> Phenotype:
    """Decode a genome; the phenotype starts with zeroed state."""
    return Phenotype(genome)
