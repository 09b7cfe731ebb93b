"""Canonical activation functions, piecewise pairs, and weighted pools.

A piecewise activation is an ordered pair of canonical functions: the
resting branch handles negative pre-activation sums, the active branch
handles non-negative ones (the active branch owns x = 0 exactly).  Pools
assign a sampling weight to each canonical function; hidden nodes draw
their two branches independently, so a pool of k functions spans k**2
ordered pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from numba.extending import register_jitable

# Canonical kind codes.  Plain ints so the jitted evaluation kernels can
# branch on them without boxing.
SINE = 0
SIGMOID = 1
ARCTAN = 2
TANH = 3
BENT_IDENTITY = 4
RELU = 5
ELU = 6

KIND_NAMES = {
    SINE: "sine",
    SIGMOID: "sigmoid",
    ARCTAN: "arctan",
    TANH: "tanh",
    BENT_IDENTITY: "bent_identity",
    RELU: "relu",
    ELU: "elu",
}
NAME_TO_KIND = {name: kind for kind, name in KIND_NAMES.items()}

# math.exp overflows above ~709.78; both evaluation paths substitute the
# limit value beyond this so they stay bitwise identical.
_EXP_ARG_MAX = 709.0
# u*u overflows to inf above ~1.34e154, which would break the bent
# identity's large-argument limit; switch to the asymptotic form early.
_BENT_ARG_MAX = 1e150


@register_jitable
def _kind_value(kind: int, slope: float, shift: float, x: float) -> float:
    """Scalar core shared by the pure path and the jitted kernels.

    No input validation: callers guarantee x is finite.  Written with
    math.* scalar ops only so numba can compile this exact function.
    """
    u = slope * x
    if kind == SINE:
        return math.sin(u) + shift
    if kind == SIGMOID:
        z = -u
        if z > _EXP_ARG_MAX:
            return shift
        return 1.0 / (1.0 + math.exp(z)) + shift
    if kind == ARCTAN:
        return math.atan(u) + shift
    if kind == TANH:
        return math.tanh(u) + shift
    if kind == BENT_IDENTITY:
        if u > _BENT_ARG_MAX or u < -_BENT_ARG_MAX:
            return (abs(u) - 1.0) / 2.0 + u + shift
        return (math.sqrt(u * u + 1.0) - 1.0) / 2.0 + u + shift
    if kind == RELU:
        return u + shift if u > 0.0 else shift
    # ELU, alpha = 1
    if u >= 0.0:
        return u + shift
    return math.exp(u) - 1.0 + shift


@dataclass(frozen=True)
class CanonicalFunction:
    """One member of the canonical family, with argument scale and output offset."""

    kind: int
    slope: float = 1.0
    shift: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in KIND_NAMES:
            raise ValueError(f"unknown activation kind code {self.kind}")
        if not math.isfinite(self.slope) or self.slope <= 0.0:
            raise ValueError(f"slope must be finite and positive, got {self.slope}")
        if not math.isfinite(self.shift):
            raise ValueError(f"shift must be finite, got {self.shift}")

    @property
    def name(self) -> str:
        return KIND_NAMES[self.kind]

    def nominal_range(self) -> tuple[float, float]:
        """Output interval used for force scaling; unbounded kinds are
        given the unit interval their near-zero behaviour occupies."""
        if self.kind == SIGMOID:
            return (self.shift, 1.0 + self.shift)
        if self.kind == ARCTAN:
            return (-math.pi / 2.0 + self.shift, math.pi / 2.0 + self.shift)
        if self.kind == RELU:
            return (0.0 + self.shift, 1.0 + self.shift)
        # sine, tanh, bent identity, elu
        return (-1.0 + self.shift, 1.0 + self.shift)


@dataclass(frozen=True)
class PiecewiseActivation:
    """Resting branch for x < 0, active branch for x >= 0."""

    resting: CanonicalFunction
    active: CanonicalFunction

    @classmethod
    def homogeneous(cls, f: CanonicalFunction) -> "PiecewiseActivation":
        return cls(resting=f, active=f)

    @property
    def is_homogeneous(self) -> bool:
        return self.resting == self.active

    def nominal_range(self) -> tuple[float, float]:
        rlo, rhi = self.resting.nominal_range()
        alo, ahi = self.active.nominal_range()
        return (min(rlo, alo), max(rhi, ahi))


@dataclass(frozen=True)
class FunctionPool:
    """Ordered list of (function, weight); weights are sampling probabilities."""

    entries: tuple[tuple[CanonicalFunction, float], ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("pool must contain at least one function")
        total = 0.0
        for f, w in self.entries:
            if not math.isfinite(w) or w <= 0.0:
                raise ValueError(f"pool weight must be finite and positive, got {w}")
            total += w
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"pool weights must sum to 1, got {total!r}")

    @classmethod
    def uniform(cls, functions: list[CanonicalFunction]) -> "FunctionPool":
        w = 1.0 / len(functions)
        return cls(entries=tuple((f, w) for f in functions))

    def sample_function(self, rng) -> CanonicalFunction:
        r = rng.random()
        acc = 0.0
        for f, w in self.entries:
            acc += w
            if r < acc:
                return f
        return self.entries[-1][0]

    def top_function(self) -> CanonicalFunction:
        """Highest-weight entry; ties resolve to the earliest entry."""
        best_f, best_w = self.entries[0]
        for f, w in self.entries[1:]:
            if w > best_w:
                best_f, best_w = f, w
        return best_f


def eval_canonical(f: CanonicalFunction, x: float) -> float:
    """Evaluate one canonical function at a finite input."""
    if not math.isfinite(x):
        raise ValueError(f"activation input must be finite, got {x}")
    return _kind_value(f.kind, f.slope, f.shift, x)


def eval_piecewise(p: PiecewiseActivation, x: float) -> float:
    """Evaluate a piecewise pair; the active branch owns x = 0."""
    if x < 0.0:
        return eval_canonical(p.resting, x)
    return eval_canonical(p.active, x)


def sample_pair(pool: FunctionPool, rng) -> PiecewiseActivation:
    """Draw resting and active branches independently, weight-biased."""
    return PiecewiseActivation(
        resting=pool.sample_function(rng),
        active=pool.sample_function(rng),
    )


def count_configurations(pool_size: int, n_nodes: int) -> int:
    """Number of distinct activation assignments for n nodes: (pool_size**2)**n."""
    if pool_size < 1:
        raise ValueError(f"pool_size must be >= 1, got {pool_size}")
    if n_nodes < 0:
        raise ValueError(f"n_nodes must be >= 0, got {n_nodes}")
    return (pool_size * pool_size) ** n_nodes


def continuity_gap(p: PiecewiseActivation) -> float:
    """Jump magnitude at the split point: |resting(0) - active(0)|."""
    return abs(eval_canonical(p.resting, 0.0) - eval_canonical(p.active, 0.0))


def tabulate(
    p: PiecewiseActivation, lo: float, hi: float, n: int
) -> list[tuple[float, float]]:
    """n evenly spaced (x, f(x)) samples over [lo, hi], endpoints included."""
    if not (lo < hi):
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if n < 2:
        raise ValueError(f"need n >= 2 samples, got {n}")
    span = hi - lo
    rows = []
    for i in range(n):
        x = hi if i == n - 1 else lo + span * i / (n - 1)
        rows.append((x, eval_piecewise(p, x)))
    return rows


# --- pool file format: one `kind slope shift weight` entry per line ---

def parse_function(kind_name: str, slope: float, shift: float) -> CanonicalFunction:
    key = kind_name.strip().lower()
    if key not in NAME_TO_KIND:
        known = ", ".join(KIND_NAMES[k] for k in sorted(KIND_NAMES))
        raise ValueError(f"unknown activation kind {kind_name!r} (known: {known})")
    return CanonicalFunction(kind=NAME_TO_KIND[key], slope=slope, shift=shift)


def parse_pool(text: str) -> FunctionPool:
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(
                f"pool line {lineno}: expected 'kind slope shift weight', got {raw!r}"
            )
        kind_name, slope_s, shift_s, weight_s = parts
        f = parse_function(kind_name, float(slope_s), float(shift_s))
        entries.append((f, float(weight_s)))
    return FunctionPool(entries=tuple(entries))


def format_pool(pool: FunctionPool) -> str:
    lines = []
    for f, w in pool.entries:
        lines.append(f"{f.name} {f.slope:.17g} {f.shift:.17g} {w:.17g}")
    return "\n".join(lines) + "\n"
