"""Rollout costs and the K x R cost matrix over sampled tapes and randomized domains."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .dynamics import (
    DEFAULT_SYSTEM,
    ModelParams,
    PushTSystem,
    SimulationError,
    State,
    _advance,
    pack_params,
    wrap_angle,
)
from .tape import KnotTape, knot_indices, stack_knots

# entries per work unit handed to a worker thread
_CHUNK = 32


@dataclass(frozen=True)
class CostWeights:
    w_p: float = 2.0
    w_q: float = 1.0
    w_c: float = 0.01
    w_v: float = 0.01
    goal: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if min(self.w_p, self.w_q, self.w_c, self.w_v) < 0:
            raise ValueError("cost weights must be non-negative")

    def packed(self) -> np.ndarray:
        return np.array([self.w_p, self.w_q, self.w_c, self.w_v, *self.goal], dtype=np.float64)

    def scaled(self, factor: float) -> CostWeights:
        return CostWeights(self.w_p * factor, self.w_q * factor, self.w_c * factor,
                           self.w_v * factor, self.goal)


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """Rollout costs; row ``k`` is tape ``k`` and column ``r`` is domain ``r``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("cost matrix must be 2-D")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("cost matrix entries must be finite and non-negative")
        object.__setattr__(self, "values", v)

    @property
    def K(self) -> int:
        return self.values.shape[0]

    @property
    def R(self) -> int:
        return self.values.shape[1]


@njit(cache=True, nogil=True)
def _running_cost(x, w):
    dx = w[4] - x[4]
    dy = w[5] - x[5]
    dq = wrap_angle(w[6] - x[6])
    cx = x[0] - x[4]
    cy = x[1] - x[5]
    return (w[0] * (dx * dx + dy * dy) + w[1] * (dq * dq)
            + w[2] * (cx * cx + cy * cy) + w[3] * (x[2] * x[2] + x[3] * x[3]))


@njit(cache=True, nogil=True)
def _cost_entries(lo, hi, tapes, knot_idx, x0, prms, w, sysv, rects, segs, normals, dt, nsub, out):
    R = prms.shape[0]
    x = np.empty(x0.shape[0])
    for j in range(lo, hi):
        k = j // R
        r = j % R
        x[:] = x0
        acc = 0.0
        for i in range(knot_idx.shape[0]):
            c = knot_idx[i]
            acc += _running_cost(x, w) * dt
            _advance(x, tapes[k, c, 0], tapes[k, c, 1], prms[r], sysv, rects, segs, normals, dt, nsub)
        out[j] = acc + _running_cost(x, w)


def running_cost(state: State, cmd=None, weights: CostWeights = CostWeights()) -> float:
    """Weighted quadratic pose, proximity and pusher-speed cost; the command does not enter it."""
    return float(_running_cost(np.asarray(state, dtype=np.float64), weights.packed()))


def evaluate_matrix(tapes: list[KnotTape], x0: State, domains: list[ModelParams],
                    weights: CostWeights = CostWeights(), system: PushTSystem = DEFAULT_SYSTEM,
                    workers: int = 1) -> CostMatrix:
    """Cost of every (tape, domain) pair.

    Entries are computed independently by the same scalar kernel and written
    by index, so the result is identical for any ``workers``.
    """
    if not tapes or not domains:
        raise ValueError("need at least one tape and one domain")
    horizon = tapes[0].horizon
    if any(t.horizon != horizon or t.n != tapes[0].n for t in tapes):
        raise ValueError("all tapes must share horizon and knot count")
    dt = system.dt
    n_steps = round(horizon / dt)
    idx = knot_indices(tapes[0], n_steps, dt)
    knots = stack_knots(tapes)
    prms = pack_params(domains, system)
    w = weights.packed()
    x0a = np.asarray(x0, dtype=np.float64)
    sysv, rects, segs, normals = system.packed
    K, R = len(tapes), len(domains)
    out = np.empty(K * R)

    def run(bounds):
        _cost_entries(bounds[0], bounds[1], knots, idx, x0a, prms, w, sysv, rects, segs, normals,
                      dt, system.substeps, out)

    chunks = [(lo, min(lo + _CHUNK, K * R)) for lo in range(0, K * R, _CHUNK)]
    if workers <= 1 or len(chunks) == 1:
        for c in chunks:
            run(c)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, chunks))
    if not np.all(np.isfinite(out)):
        bad = int(np.flatnonzero(~np.isfinite(out))[0])
        raise SimulationError(f"non-finite rollout cost for tape {bad // R}, domain {bad % R}")
    return CostMatrix(out.reshape(K, R))


def rollout_cost(tape: KnotTape, x0: State, params: ModelParams,
                 weights: CostWeights = CostWeights(), system: PushTSystem = DEFAULT_SYSTEM) -> float:
    """Sum of ``running_cost * dt`` over the horizon plus the terminal state cost."""
    return float(evaluate_matrix([tape], x0, [params], weights, system).values[0, 0])


def trace_cost(trace, final: State, weights: CostWeights = CostWeights(), dt: float = 0.01) -> float:
    """Accumulate the rollout cost from an explicit ``(state, command)`` trace."""
    acc = 0.0
    for state, cmd in trace:
        acc += running_cost(state, cmd, weights) * dt
    return acc + running_cost(final, None, weights)

