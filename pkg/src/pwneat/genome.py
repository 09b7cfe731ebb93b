"""Genetic encoding: node and connection genes with innovation history.

Connection genes carry global innovation numbers so structurally
identical mutations line up during crossover regardless of when each
lineage acquired them.  Node genes are immutable (a node's piecewise
activation is fixed at creation and never re-mutated), so genome copies
share node objects and only duplicate connection genes.
"""

from __future__ import annotations

from bisect import insort
from dataclasses import dataclass, field

from .activation import (
    CanonicalFunction,
    FunctionPool,
    PiecewiseActivation,
    parse_function,
    sample_pair,
)

ROLE_INPUT = "input"
ROLE_BIAS = "bias"
ROLE_HIDDEN = "hidden"
ROLE_OUTPUT = "output"
ROLES = (ROLE_INPUT, ROLE_BIAS, ROLE_HIDDEN, ROLE_OUTPUT)

WEIGHT_LIMIT = 8.0
SMALL_GENOME_SIZE = 20  # below this, compatibility skips size normalization
ADD_CONNECTION_TRIES = 30


@dataclass(frozen=True)
class NodeGene:
    id: int
    role: str
    activation: PiecewiseActivation


@dataclass
class ConnectionGene:
    innovation: int
    source: int
    target: int
    weight: float
    enabled: bool

    def copy(self) -> "ConnectionGene":
        return ConnectionGene(self.innovation, self.source, self.target,
                              self.weight, self.enabled)


@dataclass
class Genome:
    nodes: dict[int, NodeGene] = field(default_factory=dict)
    connections: list[ConnectionGene] = field(default_factory=list)
    fitness: float = 0.0
    adjusted_fitness: float = 0.0

    def copy(self) -> "Genome":
        g = Genome(
            nodes=dict(self.nodes),
            connections=[c.copy() for c in self.connections],
            fitness=self.fitness,
            adjusted_fitness=self.adjusted_fitness,
        )
        return g

    def add_connection(self, conn: ConnectionGene) -> None:
        """Insert keeping the innovation-sorted order invariant."""
        insort(self.connections, conn, key=lambda c: c.innovation)

    def enabled_connections(self) -> list[ConnectionGene]:
        return [c for c in self.connections if c.enabled]

    def connected_pairs(self) -> set[tuple[int, int]]:
        """(source, target) pairs present as genes, enabled or not."""
        return {(c.source, c.target) for c in self.connections}

    def nodes_by_role(self, role: str) -> list[NodeGene]:
        return [n for n in sorted(self.nodes.values(), key=lambda n: n.id)
                if n.role == role]

    def hidden_pairs(self) -> list[PiecewiseActivation]:
        return [n.activation for n in self.nodes_by_role(ROLE_HIDDEN)]

    def max_innovation(self) -> int:
        return self.connections[-1].innovation if self.connections else -1

    def validate(self) -> None:
        roles = {role: 0 for role in ROLES}
        for node in self.nodes.values():
            if node.role not in roles:
                raise ValueError(f"node {node.id} has unknown role {node.role!r}")
            roles[node.role] += 1
        for role in (ROLE_INPUT, ROLE_BIAS, ROLE_OUTPUT):
            if roles[role] < 1:
                raise ValueError(f"genome needs at least one {role} node")
        seen_innovations = set()
        last = -1
        for c in self.connections:
            if c.source not in self.nodes or c.target not in self.nodes:
                raise ValueError(
                    f"connection {c.innovation} references missing node"
                )
            target_role = self.nodes[c.target].role
            if target_role in (ROLE_INPUT, ROLE_BIAS):
                raise ValueError(
                    f"connection {c.innovation} targets {target_role} node {c.target}"
                )
            if c.innovation in seen_innovations:
                raise ValueError(f"duplicate innovation {c.innovation}")
            if c.innovation < last:
                raise ValueError("connections not sorted by innovation")
            seen_innovations.add(c.innovation)
            last = c.innovation


class InnovationRegistry:
    """Assigns innovation numbers and node ids, deduplicating structural
    events within one generation so identical mutations align."""

    def __init__(self) -> None:
        self.next_innovation = 0
        self.next_node_id = 0
        self._connection_events: dict[tuple[int, int], int] = {}
        self._split_events: dict[int, tuple[int, int, int]] = {}

    def begin_generation(self) -> None:
        """Forget this generation's events; counters keep advancing."""
        self._connection_events.clear()
        self._split_events.clear()

    def reserve_node_ids(self, count: int) -> None:
        if count > self.next_node_id:
            self.next_node_id = count

    def connection_innovation(self, source: int, target: int) -> int:
        key = (source, target)
        if key not in self._connection_events:
            self._connection_events[key] = self.next_innovation
            self.next_innovation += 1
        return self._connection_events[key]

    def node_split(self, connection_innovation: int) -> tuple[int, int, int]:
        """(new node id, incoming innovation, outgoing innovation) for
        splitting the given connection; repeats within a generation reuse
        the first assignment."""
        if connection_innovation not in self._split_events:
            node_id = self.next_node_id
            self.next_node_id += 1
            in_inn = self.next_innovation
            out_inn = self.next_innovation + 1
            self.next_innovation += 2
            self._split_events[connection_innovation] = (node_id, in_inn, out_inn)
        return self._split_events[connection_innovation]


def minimal_genome(
    n_inputs: int,
    n_outputs: int,
    default_activation: PiecewiseActivation,
    registry: InnovationRegistry,
    rng,
) -> Genome:
    """Fully connected input/bias -> output genome with no hidden nodes."""
    if n_inputs < 1 or n_outputs < 1:
        raise ValueError("need at least one input and one output")
    g = Genome()
    for i in range(n_inputs):
        g.nodes[i] = NodeGene(i, ROLE_INPUT, default_activation)
    bias_id = n_inputs
    g.nodes[bias_id] = NodeGene(bias_id, ROLE_BIAS, default_activation)
    output_ids = []
    for k in range(n_outputs):
        node_id = n_inputs + 1 + k
        g.nodes[node_id] = NodeGene(node_id, ROLE_OUTPUT, default_activation)
        output_ids.append(node_id)
    registry.reserve_node_ids(n_inputs + 1 + n_outputs)
    for target in output_ids:
        for source in list(range(n_inputs)) + [bias_id]:
            inn = registry.connection_innovation(source, target)
            g.add_connection(
                ConnectionGene(inn, source, target, rng.uniform(-1.0, 1.0), True)
            )
    return g


def mutate_add_node(
    g: Genome, pool: FunctionPool, registry: InnovationRegistry, rng,
    piecewise: bool = True,
) -> bool:
    """Split a random enabled connection with a new hidden node.

    The old gene is disabled; the incoming replacement gets weight 1.0
    and the outgoing one inherits the old weight.  The new node draws its
    activation from the pool: an independent branch pair when piecewise
    sampling is on, otherwise one function used for both branches.
    Returns False (no-op) when nothing is enabled.
    """
    enabled = g.enabled_connections()
    if not enabled:
        return False
    conn = enabled[rng.randrange(len(enabled))]
    if piecewise:
        activation = sample_pair(pool, rng)
    else:
        activation = PiecewiseActivation.homogeneous(pool.sample_function(rng))
    node_id, in_inn, out_inn = registry.node_split(conn.innovation)
    if node_id in g.nodes:
        raise RuntimeError(f"node id {node_id} already present; registry misuse")
    g.nodes[node_id] = NodeGene(node_id, ROLE_HIDDEN, activation)
    conn.enabled = False
    g.add_connection(ConnectionGene(in_inn, conn.source, node_id, 1.0, True))
    g.add_connection(ConnectionGene(out_inn, node_id, conn.target, conn.weight, True))
    return True


def mutate_add_connection(g: Genome, registry: InnovationRegistry, rng) -> bool:
    """Add one new connection gene between randomly drawn endpoints.

    Targets exclude input/bias nodes; recurrent pairs and self-loops are
    legal.  Gives up (no-op) after a bounded number of draws so saturated
    genomes terminate.
    """
    all_ids = sorted(g.nodes)
    target_ids = [n.id for n in sorted(g.nodes.values(), key=lambda n: n.id)
                  if n.role in (ROLE_HIDDEN, ROLE_OUTPUT)]
    if not target_ids:
        return False
    existing = g.connected_pairs()
    for _ in range(ADD_CONNECTION_TRIES):
        source = all_ids[rng.randrange(len(all_ids))]
        target = target_ids[rng.randrange(len(target_ids))]
        if (source, target) in existing:
            continue
        inn = registry.connection_innovation(source, target)
        g.add_connection(
            ConnectionGene(inn, source, target, rng.uniform(-1.0, 1.0), True)
        )
        return True
    return False


def mutate_weights(
    g: Genome, rng,
    perturb_prob: float,
    perturb_power: float,
    replace_prob: float,
) -> None:
    """Per gene: usually nudge the weight, occasionally redraw it."""
    for c in g.connections:
        if rng.random() < perturb_prob:
            w = c.weight + rng.uniform(-perturb_power, perturb_power)
        elif rng.random() < replace_prob:
            w = rng.uniform(-perturb_power, perturb_power)
        else:
            continue
        if w > WEIGHT_LIMIT:
            w = WEIGHT_LIMIT
        elif w < -WEIGHT_LIMIT:
            w = -WEIGHT_LIMIT
        c.weight = w


def crossover(fitter: Genome, other: Genome, rng,
              reenable_prob: float = 0.25) -> Genome:
    """Align genes by innovation; the fitter parent keeps its extras.

    Matching genes come from either parent with even odds.  Any gene
    disabled in a contributing parent stays disabled in the child with
    probability 1 - reenable_prob.
    """
    child = Genome()
    conns: list[ConnectionGene] = []
    a, b = fitter.connections, other.connections
    i = j = 0
    while i < len(a):
        if j < len(b) and b[j].innovation < a[i].innovation:
            j += 1  # disjoint gene of the weaker parent: dropped
            continue
        if j < len(b) and a[i].innovation == b[j].innovation:
            source = a[i] if rng.random() < 0.5 else b[j]
            gene = source.copy()
            disabled_somewhere = not (a[i].enabled and b[j].enabled)
            j += 1
        else:
            gene = a[i].copy()
            disabled_somewhere = not a[i].enabled
        if disabled_somewhere:
            gene.enabled = rng.random() < reenable_prob
        conns.append(gene)
        i += 1
    child.connections = conns

    needed = {c.source for c in conns} | {c.target for c in conns}
    for node in fitter.nodes.values():
        if node.role != ROLE_HIDDEN:
            needed.add(node.id)
    for node_id in sorted(needed):
        node = fitter.nodes.get(node_id)
        child.nodes[node_id] = node if node is not None else other.nodes[node_id]
    return child


def connection_arrays(g: Genome) -> tuple[list[int], list[float]]:
    """Innovation and weight columns, for the compatibility core.

    Speciation caches these per genome for a generation, since each
    genome is tested against many species representatives.
    """
    inns = [c.innovation for c in g.connections]
    weights = [c.weight for c in g.connections]
    return inns, weights


def compatibility_core(ia: list[int], wa: list[float],
                       ib: list[int], wb: list[float],
                       c1: float, c2: float, c3: float) -> float:
    na, nb = len(ia), len(ib)
    if na == 0 and nb == 0:
        return 0.0
    max_a = ia[-1] if na else -1
    max_b = ib[-1] if nb else -1
    horizon = min(max_a, max_b)
    excess = disjoint = matching = 0
    weight_diff = 0.0
    i = j = 0
    while i < na or j < nb:
        if i < na and j < nb and ia[i] == ib[j]:
            weight_diff += abs(wa[i] - wb[j])
            matching += 1
            i += 1
            j += 1
            continue
        if j >= nb or (i < na and ia[i] < ib[j]):
            inn = ia[i]
            i += 1
        else:
            inn = ib[j]
            j += 1
        if inn > horizon:
            excess += 1
        else:
            disjoint += 1
    n = max(na, nb)
    if na < SMALL_GENOME_SIZE and nb < SMALL_GENOME_SIZE:
        n = 1
    mean_diff = weight_diff / matching if matching else 0.0
    return c1 * excess / n + c2 * disjoint / n + c3 * mean_diff


def compatibility(a: Genome, b: Genome, c1: float, c2: float, c3: float) -> float:
    """Distance c1*E/N + c2*D/N + c3*meanWeightDiff between genomes."""
    ia, wa = connection_arrays(a)
    ib, wb = connection_arrays(b)
    return compatibility_core(ia, wa, ib, wb, c1, c2, c3)


# --- text serialization: node lines then connection lines ---

def _format_function(f: CanonicalFunction) -> str:
    return f"{f.name} {f.slope:.17g} {f.shift:.17g}"


def serialize(g: Genome) -> str:
    lines = []
    for node in sorted(g.nodes.values(), key=lambda n: n.id):
        r, a = node.activation.resting, node.activation.active
        lines.append(
            f"node {node.id} {node.role} {_format_function(r)} {_format_function(a)}"
        )
    for c in g.connections:
        lines.append(
            f"conn {c.innovation} {c.source} {c.target} "
            f"{c.weight:.17g} {1 if c.enabled else 0}"
        )
    return "\n".join(lines) + "\n"


def deserialize(text: str) -> Genome:
    g = Genome()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "node" and len(parts) == 9:
            node_id = int(parts[1])
            role = parts[2]
            if role not in ROLES:
                raise ValueError(f"line {lineno}: unknown role {role!r}")
            resting = parse_function(parts[3], float(parts[4]), float(parts[5]))
            active = parse_function(parts[6], float(parts[7]), float(parts[8]))
            if node_id in g.nodes:
                raise ValueError(f"line {lineno}: duplicate node id {node_id}")
            g.nodes[node_id] = NodeGene(
                node_id, role, PiecewiseActivation(resting, active)
            )
        elif parts[0] == "conn" and len(parts) == 6:
            g.add_connection(ConnectionGene(
                innovation=int(parts[1]),
                source=int(parts[2]),
                target=int(parts[3]),
                weight=float(parts[4]),
                enabled=parts[5] == "1",
            ))
        else:
            raise ValueError(f"line {lineno}: cannot parse {raw!r}")
    g.validate()
    return g
