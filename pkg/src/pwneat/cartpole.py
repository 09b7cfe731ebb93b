"""Non-Markovian double pole balancing: physics, episodes, fitness, generalization.

A cart on a 4.8 m track carries two hinged poles of different lengths.
The controller sees only scaled positions (no velocities) and applies a
horizontal force; failure is the cart leaving the track or either pole
passing 36 degrees.  Dynamics integrate with 4th-order Runge-Kutta at
0.01 s, two substeps per control action.

The scalar helpers (_accelerations, _rk4_substep, force_from_output) are
written in plain math so the jitted kernels compile these exact
functions; the pure and fast evaluation paths therefore share formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from numba.extending import register_jitable

TRACK_LIMIT = 2.4
FAIL_ANGLE = math.radians(36.0)
ONE_DEGREE = math.radians(1.0)

# Generalization grid: quantiles of each variable's legal range applied
# to x, dx, theta1, dtheta1 (5^4 = 625 start states; theta2 rests).
GENERALIZATION_QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)
GENERALIZATION_RANGES = (
    (-2.16, 2.16),  # x
    (-1.35, 1.35),  # dx
    (-0.52, 0.52),  # theta1
    (-1.35, 1.35),  # dtheta1
)
GENERALIZATION_THRESHOLD = 200


@dataclass(frozen=True)
class PhysicsParams:
    cart_mass: float = 1.0
    pole1_mass: float = 0.1
    pole1_half_length: float = 0.5
    pole2_mass: float = 0.01
    pole2_half_length: float = 0.05
    gravity: float = -9.8
    max_force: float = 10.0
    pole_friction: float = 2e-6
    dt: float = 0.01
    substeps_per_action: int = 2

    def __post_init__(self) -> None:
        for name in ("cart_mass", "pole1_mass", "pole2_mass",
                     "pole1_half_length", "pole2_half_length"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if abs(self.pole2_half_length - self.pole1_half_length / 10.0) > 1e-12:
            raise ValueError("pole 2 must be one tenth the length of pole 1")
        if self.dt <= 0.0 or self.substeps_per_action < 1:
            raise ValueError("integration step configuration invalid")

    def frictionless(self) -> "PhysicsParams":
        return replace(self, pole_friction=0.0)


@dataclass(frozen=True)
class CartPoleState:
    x: float = 0.0
    dx: float = 0.0
    theta1: float = 0.0
    dtheta1: float = 0.0
    theta2: float = 0.0
    dtheta2: float = 0.0

    def as_tuple(self) -> tuple[float, float, float, float, float, float]:
        return (self.x, self.dx, self.theta1, self.dtheta1,
                self.theta2, self.dtheta2)


def standard_start() -> CartPoleState:
    """Canonical evaluation start: long pole tilted one degree."""
    return CartPoleState(theta1=ONE_DEGREE)


def state_failed(s: CartPoleState) -> bool:
    # written so that a non-finite state also counts as failed
    return not (
        abs(s.x) <= TRACK_LIMIT
        and abs(s.theta1) <= FAIL_ANGLE
        and abs(s.theta2) <= FAIL_ANGLE
    )


@register_jitable
def _accelerations(x, dx, t1, dt1, t2, dt2, force,
                   mc, m1, l1, m2, l2, g, mu):
    """Two-pole equations of motion; returns (ddx, ddtheta1, ddtheta2)."""
    s1 = math.sin(t1)
    c1 = math.cos(t1)
    s2 = math.sin(t2)
    c2 = math.cos(t2)
    fr1 = mu * dt1 / (m1 * l1)
    fr2 = mu * dt2 / (m2 * l2)
    # effective force and mass of each pole acting on the cart
    fe1 = m1 * l1 * dt1 * dt1 * s1 + 0.75 * m1 * c1 * (fr1 + g * s1)
    fe2 = m2 * l2 * dt2 * dt2 * s2 + 0.75 * m2 * c2 * (fr2 + g * s2)
    me1 = m1 * (1.0 - 0.75 * c1 * c1)
    me2 = m2 * (1.0 - 0.75 * c2 * c2)
    ddx = (force + fe1 + fe2) / (mc + me1 + me2)
    ddt1 = -0.75 * (ddx * c1 + g * s1 + fr1) / l1
    ddt2 = -0.75 * (ddx * c2 + g * s2 + fr2) / l2
    return ddx, ddt1, ddt2


@register_jitable
def _rk4_substep(x, dx, t1, dt1, t2, dt2, force, dt,
                 mc, m1, l1, m2, l2, g, mu):
    """One classic RK4 step of the six-dimensional state."""
    a1x, a1t1, a1t2 = _accelerations(x, dx, t1, dt1, t2, dt2, force,
                                     mc, m1, l1, m2, l2, g, mu)
    h = dt * 0.5
    b_x, b_dx = x + h * dx, dx + h * a1x
    b_t1, b_dt1 = t1 + h * dt1, dt1 + h * a1t1
    b_t2, b_dt2 = t2 + h * dt2, dt2 + h * a1t2
    a2x, a2t1, a2t2 = _accelerations(b_x, b_dx, b_t1, b_dt1, b_t2, b_dt2, force,
                                     mc, m1, l1, m2, l2, g, mu)
    c_x, c_dx = x + h * b_dx, dx + h * a2x
    c_t1, c_dt1 = t1 + h * b_dt1, dt1 + h * a2t1
    c_t2, c_dt2 = t2 + h * b_dt2, dt2 + h * a2t2
    a3x, a3t1, a3t2 = _accelerations(c_x, c_dx, c_t1, c_dt1, c_t2, c_dt2, force,
                                     mc, m1, l1, m2, l2, g, mu)
    d_x, d_dx = x + dt * c_dx, dx + dt * a3x
    d_t1, d_dt1 = t1 + dt * c_dt1, dt1 + dt * a3t1
    d_t2, d_dt2 = t2 + dt * c_dt2, dt2 + dt * a3t2
    a4x, a4t1, a4t2 = _accelerations(d_x, d_dx, d_t1, d_dt1, d_t2, d_dt2, force,
                                     mc, m1, l1, m2, l2, g, mu)
    sixth = dt / 6.0
    nx = x + sixth * (dx + 2.0 * b_dx + 2.0 * c_dx + d_dx)
    ndx = dx + sixth * (a1x + 2.0 * a2x + 2.0 * a3x + a4x)
    nt1 = t1 + sixth * (dt1 + 2.0 * b_dt1 + 2.0 * c_dt1 + d_dt1)
    ndt1 = dt1 + sixth * (a1t1 + 2.0 * a2t1 + 2.0 * a3t1 + a4t1)
    nt2 = t2 + sixth * (dt2 + 2.0 * b_dt2 + 2.0 * c_dt2 + d_dt2)
    ndt2 = dt2 + sixth * (a1t2 + 2.0 * a2t2 + 2.0 * a3t2 + a4t2)
    return nx, ndx, nt1, ndt1, nt2, ndt2


def step(s: CartPoleState, force: float, p: PhysicsParams) -> CartPoleState:
    """Advance one control interval (substeps_per_action RK4 substeps)."""
    if not all(math.isfinite(v) for v in s.as_tuple()):
        raise ValueError(f"non-finite state {s}")
    if not math.isfinite(force) or abs(force) > p.max_force + 1e-9:
        raise ValueError(f"force {force} outside [-{p.max_force}, {p.max_force}]")
    x, dx, t1, dt1, t2, dt2 = s.as_tuple()
    for _ in range(p.substeps_per_action):
        x, dx, t1, dt1, t2, dt2 = _rk4_substep(
            x, dx, t1, dt1, t2, dt2, force, p.dt,
            p.cart_mass, p.pole1_mass, p.pole1_half_length,
            p.pole2_mass, p.pole2_half_length, p.gravity, p.pole_friction,
        )
    return CartPoleState(x, dx, t1, dt1, t2, dt2)


def observe(s: CartPoleState) -> list[float]:
    """Controller inputs: scaled positions only, velocities withheld."""
    return [s.x / TRACK_LIMIT, s.theta1 / FAIL_ANGLE, s.theta2 / FAIL_ANGLE]


@register_jitable
def force_from_output(y: float, lo: float, hi: float, max_force: float) -> float:
    """Affine map of the output function's range onto [-max_force, max_force]."""
    if y < lo:
        y = lo
    elif y > hi:
        y = hi
    return ((y - lo) / (hi - lo) * 2.0 - 1.0) * max_force


@dataclass
class EpisodeResult:
    steps: int
    tail_sum: float
    trace: Optional[list[tuple]] = None


def episode(
    ph,
    s0: CartPoleState,
    max_steps: int,
    p: PhysicsParams,
    record_trace: bool = False,
) -> EpisodeResult:
    """Run one balancing episode from s0; the phenotype is reset first.

    Returns the number of in-bounds control steps (max_steps means the
    controller never failed) and the sum of |x|+|dx|+|theta1|+|dtheta1|
    over the final 100 surviving steps, for the oscillation fitness term.
    """
    ph.reset()
    lo, hi = ph.output_range
    trace = [] if record_trace else None
    if state_failed(s0):
        return EpisodeResult(steps=0, tail_sum=0.0, trace=trace)
    x, dx, t1, dt1, t2, dt2 = s0.as_tuple()
    ring = [0.0] * 100
    steps = 0
    for _ in range(max_steps):
        out = ph.activate([x / TRACK_LIMIT, t1 / FAIL_ANGLE, t2 / FAIL_ANGLE])
        force = force_from_output(out[0], lo, hi, p.max_force)
        if trace is not None:
            trace.append((steps, x, dx, t1, dt1, t2, dt2, force))
        for _ in range(p.substeps_per_action):
            x, dx, t1, dt1, t2, dt2 = _rk4_substep(
                x, dx, t1, dt1, t2, dt2, force, p.dt,
                p.cart_mass, p.pole1_mass, p.pole1_half_length,
                p.pole2_mass, p.pole2_half_length, p.gravity, p.pole_friction,
            )
        if not (abs(x) <= TRACK_LIMIT and abs(t1) <= FAIL_ANGLE
                and abs(t2) <= FAIL_ANGLE):
            break
        ring[steps % 100] = abs(x) + abs(dx) + abs(t1) + abs(dt1)
        steps += 1
    return EpisodeResult(steps=steps, tail_sum=_ring_sum(ring, steps), trace=trace)


def _ring_sum(ring: list[float], steps: int) -> float:
    """Sum the last min(steps, 100) recorded values oldest-first."""
    if steps <= 100:
        total = 0.0
        for i in range(steps):
            total += ring[i]
        return total
    start = steps % 100
    total = 0.0
    for i in range(start, 100):
        total += ring[i]
    for i in range(start):
        total += ring[i]
    return total


def fitness(steps: int, tail_sum: float) -> float:
    """Anti-oscillation composite over a 1000-step episode.

    0.1 of the credit is survival time, 0.9 rewards a quiet final 100
    steps; controllers that die before 100 steps get no quietness credit.
    """
    f1 = 0.1 * (steps / 1000.0)
    if steps < 100:
        return f1
    if tail_sum <= 0.0:
        return f1 + math.inf
    return f1 + 0.9 * (0.75 / tail_sum)


def generalization_states() -> list[CartPoleState]:
    """The 625 grid start states, in fixed nested order (x outermost)."""
    grids = []
    for lo, hi in GENERALIZATION_RANGES:
        grids.append([lo + q * (hi - lo) for q in GENERALIZATION_QUANTILES])
    states = []
    for x in grids[0]:
        for dx in grids[1]:
            for t1 in grids[2]:
                for dt1 in grids[3]:
                    states.append(CartPoleState(x, dx, t1, dt1, 0.0, 0.0))
    return states


def generalization_score(ph, p: PhysicsParams, max_steps: int = 1000) -> int:
    """Count of the 625 start states balanced for the full episode."""
    score = 0
    for s0 in generalization_states():
        result = episode(ph, s0, max_steps, p)
        if result.steps >= max_steps:
            score += 1
    return score


@dataclass(frozen=True)
class SuccessResult:
    passed: bool
    solution: bool
    generalization: int

    def __bool__(self) -> bool:
        return self.passed


def success_test(ph, p: PhysicsParams, max_steps: int = 1000) -> SuccessResult:
    """Two-stage champion test.

    Stage 1: balance max_steps control steps from the standard start.
    Stage 2: balance at least 200 of the 625 generalization starts.
    """
    result = episode(ph, standard_start(), max_steps, p)
    if result.steps < max_steps:
        return SuccessResult(passed=False, solution=False, generalization=0)
    score = generalization_score(ph, p, max_steps)
    return SuccessResult(
        passed=score >= GENERALIZATION_THRESHOLD,
        solution=True,
        generalization=score,
    )
