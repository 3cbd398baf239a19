"""Zero-order-hold control tapes parameterized by knots."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Command


@dataclass(frozen=True, eq=False)
class KnotTape:
    """``n`` piecewise-constant 2D velocity knots spread evenly over ``horizon`` seconds.

    Knot ``i`` governs ``[i * T / n, (i + 1) * T / n)``.
    """

    knots: np.ndarray
    horizon: float

    def __post_init__(self):
        knots = np.array(self.knots, dtype=np.float64)
        if knots.ndim != 2 or knots.shape[0] < 1 or knots.shape[1] != 2:
            raise ValueError(f"knots must have shape (n, 2), got {knots.shape}")
        if not np.all(np.isfinite(knots)):
            raise ValueError("knot values must be finite")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        knots.setflags(write=False)
        object.__setattr__(self, "knots", knots)

    @classmethod
    def zeros(cls, n: int = 6, horizon: float = 0.5) -> KnotTape:
        return cls(np.zeros((n, 2)), horizon)

    @property
    def n(self) -> int:
        return self.knots.shape[0]

    def __eq__(self, other):
        if not isinstance(other, KnotTape):
            return NotImplemented
        return self.horizon == other.horizon and np.array_equal(self.knots, other.knots)

    def __repr__(self):
        return f"KnotTape(n={self.n}, horizon={self.horizon}, knots={self.knots.tolist()})"


def knot_index(tape: KnotTape, t: float) -> int:
    if t < 0:
        raise ValueError("t must be non-negative")
    return min(math.floor(t * tape.n / tape.horizon), tape.n - 1)


def knot_indices(tape: KnotTape, n_steps: int, dt: float) -> np.ndarray:
    """Knot index active at each of the times ``0, dt, ..., (n_steps - 1) * dt``."""
    return np.array([knot_index(tape, i * dt) for i in range(n_steps)], dtype=np.int64)


def eval_tape(tape: KnotTape, t: float) -> Command:
    """Zero-order-hold evaluation; times past the horizon hold the last knot."""
    ux, uy = tape.knots[knot_index(tape, t)]
    return Command(float(ux), float(uy))


def sample_tapes(nominal: KnotTape, sigma: float, K: int, rng: np.random.Generator) -> list[KnotTape]:
    """Draw ``K`` Gaussian perturbations of ``nominal`` in knot space.

    Sample 0 is always the unperturbed nominal tape.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    noise = rng.standard_normal((K, nominal.n, 2))
    noise[0] = 0.0
    knots = nominal.knots + sigma * noise
    knots[0] = nominal.knots
    return [KnotTape(k, nominal.horizon) for k in knots]


def shift_tape(tape: KnotTape, dt: float) -> KnotTape:
    """Re-express ``tape`` so that new time 0 is old time ``dt``."""
    if not 0 <= dt <= tape.horizon:
        raise ValueError(f"shift {dt} outside [0, {tape.horizon}]")
    # knot-time offsets are integers; snap so that shifts by exact multiples of T/n are exact
    base = dt * tape.n / tape.horizon
    first = math.floor(base + 1e-9)
    idx = [min(first + i, tape.n - 1) for i in range(tape.n)]
    return KnotTape(tape.knots[idx], tape.horizon)


def stack_knots(tapes) -> np.ndarray:
    return np.ascontiguousarray(np.stack([t.knots for t in tapes]))
