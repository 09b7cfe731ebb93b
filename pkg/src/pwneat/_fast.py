"""Jitted episode evaluation.

The kernels here compile the exact scalar helpers the pure path calls
(_kind_value, _rk4_substep, force_from_output are registered jitable),
and the episode loop mirrors cartpole.episode() and Phenotype.activate()
operation for operation, so results are bit-identical to the pure path.
Each genome is flattened once by pack() into plain arrays the kernel can
walk without touching the interpreter.

The kernels are specific to the balancing task's 3-input observation.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from numba import njit

from .activation import _kind_value
from .cartpole import (
    FAIL_ANGLE,
    GENERALIZATION_THRESHOLD,
    TRACK_LIMIT,
    CartPoleState,
    EpisodeResult,
    PhysicsParams,
    SuccessResult,
    _rk4_substep,
    force_from_output,
    generalization_states,
    standard_start,
)
from .network import Phenotype


class PackedNet(NamedTuple):
    """Phenotype flattened to arrays; one entry per compute node, with
    that node's incoming edges stored as a [estart, eend) slice."""
    n_nodes: int
    n_inputs: int
    bias_pos: np.ndarray
    out_pos: int
    cpos: np.ndarray
    estart: np.ndarray
    eend: np.ndarray
    esrc: np.ndarray
    eweight: np.ndarray
    rk: np.ndarray
    rs: np.ndarray
    rsh: np.ndarray
    ak: np.ndarray
    asl: np.ndarray
    ash: np.ndarray
    lo: float
    hi: float


def pack(ph: Phenotype) -> PackedNet:
    """Flatten a phenotype, preserving node and edge evaluation order."""
    compute = ph._compute
    n = len(compute)
    cpos = np.empty(n, dtype=np.int64)
    estart = np.empty(n, dtype=np.int64)
    eend = np.empty(n, dtype=np.int64)
    rk = np.empty(n, dtype=np.int64)
    rs = np.empty(n, dtype=np.float64)
    rsh = np.empty(n, dtype=np.float64)
    ak = np.empty(n, dtype=np.int64)
    asl = np.empty(n, dtype=np.float64)
    ash = np.empty(n, dtype=np.float64)
    srcs: list[int] = []
    weights: list[float] = []
    for k, (pos, edges, rk_k, rs_k, rsh_k, ak_k, asl_k, ash_k) in enumerate(compute):
        cpos[k] = pos
        estart[k] = len(srcs)
        for src, w in edges:
            srcs.append(src)
            weights.append(w)
        eend[k] = len(srcs)
        rk[k], rs[k], rsh[k] = rk_k, rs_k, rsh_k
        ak[k], asl[k], ash[k] = ak_k, asl_k, ash_k
    lo, hi = ph.output_range
    return PackedNet(
        n_nodes=ph.size,
        n_inputs=ph.n_inputs,
        bias_pos=np.array(ph._bias_positions, dtype=np.int64),
        out_pos=ph._output_positions[0],
        cpos=cpos,
        estart=estart,
        eend=eend,
        esrc=np.array(srcs, dtype=np.int64),
        eweight=np.array(weights, dtype=np.float64),
        rk=rk, rs=rs, rsh=rsh, ak=ak, asl=asl, ash=ash,
        lo=lo, hi=hi,
    )


@njit(cache=True)
def _episode_kernel(n_nodes, bias_pos, out_pos,
                    cpos, estart, eend, esrc, eweight,
                    rk, rs, rsh, ak, asl, ash, lo, hi,
                    x0, dx0, t10, dt10, t20, dt20, max_steps,
                    dt, substeps, mc, m1, l1, m2, l2, g, mu, max_force):
    if not (abs(x0) <= TRACK_LIMIT and abs(t10) <= FAIL_ANGLE
            and abs(t20) <= FAIL_ANGLE):
        return 0, 0.0
    state = np.zeros(n_nodes)
    scratch = np.zeros(n_nodes)
    x, dx, t1, dt1, t2, dt2 = x0, dx0, t10, dt10, t20, dt20
    ring = np.zeros(100)
    steps = 0
    for _ in range(max_steps):
        scratch[0] = x / TRACK_LIMIT
        scratch[1] = t1 / FAIL_ANGLE
        scratch[2] = t2 / FAIL_ANGLE
        for b in bias_pos:
            scratch[b] = 1.0
        for k in range(len(cpos)):
            total = 0.0
            for e in range(estart[k], eend[k]):
                total += eweight[e] * state[esrc[e]]
            if math.isfinite(total):
                if total < 0.0:
                    value = _kind_value(rk[k], rs[k], rsh[k], total)
                else:
                    value = _kind_value(ak[k], asl[k], ash[k], total)
            else:
                value = math.nan
            scratch[cpos[k]] = value
        state, scratch = scratch, state
        force = force_from_output(state[out_pos], lo, hi, max_force)
        for _ in range(substeps):
            x, dx, t1, dt1, t2, dt2 = _rk4_substep(
                x, dx, t1, dt1, t2, dt2, force, dt,
                mc, m1, l1, m2, l2, g, mu)
        if not (abs(x) <= TRACK_LIMIT and abs(t1) <= FAIL_ANGLE
                and abs(t2) <= FAIL_ANGLE):
            break
        ring[steps % 100] = abs(x) + abs(dx) + abs(t1) + abs(dt1)
        steps += 1
    if steps <= 100:
        tail = 0.0
        for i in range(steps):
            tail += ring[i]
        return steps, tail
    start = steps % 100
    tail = 0.0
    for i in range(start, 100):
        tail += ring[i]
    for i in range(start):
        tail += ring[i]
    return steps, tail


@njit(cache=True)
def _generalization_kernel(n_nodes, bias_pos, out_pos,
                           cpos, estart, eend, esrc, eweight,
                           rk, rs, rsh, ak, asl, ash, lo, hi,
                           starts, max_steps,
                           dt, substeps, mc, m1, l1, m2, l2, g, mu, max_force):
    score = 0
    for i in range(starts.shape[0]):
        steps, _ = _episode_kernel(
            n_nodes, bias_pos, out_pos, cpos, estart, eend, esrc, eweight,
            rk, rs, rsh, ak, asl, ash, lo, hi,
            starts[i, 0], starts[i, 1], starts[i, 2], starts[i, 3], 0.0, 0.0,
            max_steps, dt, substeps, mc, m1, l1, m2, l2, g, mu, max_force)
        if steps >= max_steps:
            score += 1
    return score


def _physics_args(p: PhysicsParams):
    return (p.dt, p.substeps_per_action, p.cart_mass,
            p.pole1_mass, p.pole1_half_length,
            p.pole2_mass, p.pole2_half_length,
            p.gravity, p.pole_friction, p.max_force)


def _net_args(net: PackedNet):
    return (net.n_nodes, net.bias_pos, net.out_pos, net.cpos,
            net.estart, net.eend, net.esrc, net.eweight,
            net.rk, net.rs, net.rsh, net.ak, net.asl, net.ash,
            net.lo, net.hi)


def fast_episode(net: PackedNet, s0: CartPoleState, max_steps: int,
                 p: PhysicsParams) -> EpisodeResult:
    if net.n_inputs != 3:
        raise ValueError("episode kernel expects the 3-input observation")
    steps, tail = _episode_kernel(
        *_net_args(net),
        s0.x, s0.dx, s0.theta1, s0.dtheta1, s0.theta2, s0.dtheta2,
        max_steps, *_physics_args(p))
    return EpisodeResult(steps=int(steps), tail_sum=float(tail))


_GEN_STARTS = np.array(
    [[s.x, s.dx, s.theta1, s.dtheta1] for s in generalization_states()],
    dtype=np.float64,
)


def fast_generalization(net: PackedNet, p: PhysicsParams,
                        max_steps: int = 1000) -> int:
    if net.n_inputs != 3:
        raise ValueError("episode kernel expects the 3-input observation")
    return int(_generalization_kernel(
        *_net_args(net), _GEN_STARTS, max_steps, *_physics_args(p)))


def fast_success(net: PackedNet, p: PhysicsParams,
                 max_steps: int = 1000) -> SuccessResult:
    result = fast_episode(net, standard_start(), max_steps, p)
    if result.steps < max_steps:
        return SuccessResult(passed=False, solution=False, generalization=0)
    score = fast_generalization(net, p, max_steps)
    return SuccessResult(
        passed=score >= GENERALIZATION_THRESHOLD,
        solution=True,
        generalization=score,
    )
