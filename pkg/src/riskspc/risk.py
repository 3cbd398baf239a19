"""Risk operators that reduce per-domain rollout costs to one score."""

from __future__ import annotations

import enum

import numpy as np


class RiskOperator(enum.Enum):
    AVERAGE = "average"
    PESSIMISTIC = "pessimistic"
    OPTIMISTIC = "optimistic"

    @classmethod
    def parse(cls, value) -> RiskOperator:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(op.value for op in cls)
            raise ValueError(f"unknown risk operator {value!r} (expected one of {names})") from None

    def __str__(self):
        return self.value


def _mean(c):
    # rounding can push a float mean just outside [min, max]; the true mean never is
    return np.clip(np.mean(c, axis=-1), np.min(c, axis=-1), np.max(c, axis=-1))


# row-wise reductions over the domain axis; new operators register here
_REDUCERS = {
    RiskOperator.AVERAGE: _mean,
    RiskOperator.PESSIMISTIC: lambda c: np.max(c, axis=-1),
    RiskOperator.OPTIMISTIC: lambda c: np.min(c, axis=-1),
}


def _validated(costs) -> np.ndarray:
    costs = np.asarray(costs, dtype=np.float64)
    if costs.shape[-1] == 0:
        raise ValueError("risk aggregation needs at least one domain cost")
    if not np.all(np.isfinite(costs)):
        raise ValueError("risk aggregation received non-finite costs")
    return costs


def aggregate(costs, op) -> float:
    """Aggregate a length-R cost vector: mean, max or min."""
    costs = _validated(costs)
    if costs.ndim != 1:
        raise ValueError("aggregate expects a 1-D cost vector")
    return float(_REDUCERS[RiskOperator.parse(op)](costs))


def aggregate_rows(matrix, op) -> np.ndarray:
    """Aggregate every row of a ``(K, R)`` cost matrix."""
    matrix = _validated(matrix)
    if matrix.ndim != 2:
        raise ValueError("aggregate_rows expects a 2-D cost matrix")
    return _REDUCERS[RiskOperator.parse(op)](matrix)


def rank_pair(costs_a, costs_b, op) -> str:
    """Return ``"A"`` or ``"B"``, whichever aggregates lower; ties go to ``"A"``."""
    if len(costs_a) != len(costs_b):
        raise ValueError("candidates must be evaluated on the same number of domains")
    return "A" if aggregate(costs_a, op) <= aggregate(costs_b, op) else "B"
