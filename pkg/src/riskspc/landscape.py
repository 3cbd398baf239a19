"""Scalar cost-landscape lab: shift-randomized costs and their basins of attraction.

Each randomized domain sees the landscape shifted, ``J_r(u) = J(u + eps)``
with ``eps ~ U(-delta, delta)``. In the continuum the optimistic, pessimistic
and average aggregates become a sliding minimum, maximum and mean over the
window ``[u - delta, u + delta]``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from ._csv import fmt
from .risk import RiskOperator

GRID = (-3.0, 3.0)
SPACING = 1e-3
INTERVAL = (-2.0, 2.0)


def double_well(u):
    """Two wells: a deep steep one near -1 and a shallow wide one near +1."""
    u = np.asarray(u, dtype=np.float64)
    return np.minimum((u + 1.0) ** 2, 0.5 * (u - 1.0) ** 2 + 0.2) + 0.05 * u**2


@dataclass(frozen=True, eq=False)
class ScalarLandscape:
    grid: np.ndarray
    values: np.ndarray
    delta: float = 0.0

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise ValueError("grid and values must be equal-length 1-D arrays")
        steps = np.diff(grid)
        if np.any(steps <= 0):
            raise ValueError("grid must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-6, atol=0):
            raise ValueError("grid must be uniformly spaced")
        if not np.all(np.isfinite(values)):
            raise ValueError("landscape values must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def h(self) -> float:
        return (self.grid[-1] - self.grid[0]) / (self.grid.size - 1)

    @classmethod
    def from_function(cls, f=double_well, lo=GRID[0], hi=GRID[1], h=SPACING) -> ScalarLandscape:
        n = round((hi - lo) / h)
        grid = np.linspace(lo, hi, n + 1)
        return cls(grid, f(grid))

    def restrict(self, lo: float, hi: float) -> ScalarLandscape:
        tol = 1e-9 * max(1.0, abs(lo), abs(hi))
        keep = (self.grid >= lo - tol) & (self.grid <= hi + tol)
        return ScalarLandscape(self.grid[keep], self.values[keep], self.delta)


def _window(L: ScalarLandscape, delta: float) -> int:
    return round(delta / L.h)


def aggregate_landscape(L: ScalarLandscape, op, delta: float, *, samples: int | None = None,
                        rng: np.random.Generator | None = None,
                        interval: tuple[float, float] | None = None) -> ScalarLandscape:
    """Risk-aggregate the shift-randomized landscape.

    With ``samples=None`` the exact window transform on the grid is used.
    Otherwise ``samples`` shifts are drawn (the first is always ``eps = 0``)
    and the shifted copies are aggregated pointwise. The result covers
    ``interval``, or every grid point whose window fits when it is omitted.
    """
    op = RiskOperator.parse(op)
    if delta < 0:
        raise ValueError("delta must be non-negative")
    m = _window(L, delta)
    n = L.grid.size
    if interval is None:
        lo_i, hi_i = m, n - 1 - m
        if lo_i > hi_i:
            raise ValueError(f"grid too short for delta={delta}")
    else:
        lo, hi = interval
        tol = 1e-9 * max(1.0, abs(lo), abs(hi))
        if lo - delta < L.grid[0] - tol or hi + delta > L.grid[-1] + tol:
            raise ValueError(f"grid [{L.grid[0]}, {L.grid[-1]}] does not extend delta={delta} "
                             f"beyond the interval {interval}")
        lo_i = int(np.searchsorted(L.grid, lo - tol))
        hi_i = int(np.searchsorted(L.grid, hi + tol)) - 1
    sl = slice(lo_i, hi_i + 1)

    if samples is None:
        size = 2 * m + 1
        if m == 0:
            out = L.values.copy()
        elif op is RiskOperator.OPTIMISTIC:
            out = minimum_filter1d(L.values, size, mode="nearest")
        elif op is RiskOperator.PESSIMISTIC:
            out = maximum_filter1d(L.values, size, mode="nearest")
        else:
            csum = np.concatenate([[0.0], np.cumsum(L.values)])
            idx = np.arange(n)
            a = np.clip(idx - m, 0, n)
            b = np.clip(idx + m + 1, 0, n)
            out = (csum[b] - csum[a]) / (b - a)
        values = out[sl]
    else:
        if samples < 1:
            raise ValueError("samples must be >= 1")
        if rng is None:
            raise ValueError("sampled mode needs an rng")
        eps = np.concatenate([[0.0], rng.uniform(-delta, delta, samples - 1)])
        u = L.grid[sl]
        shifted = np.stack([np.interp(u + e, L.grid, L.values) for e in eps])
        if op is RiskOperator.OPTIMISTIC:
            values = shifted.min(axis=0)
        elif op is RiskOperator.PESSIMISTIC:
            values = shifted.max(axis=0)
        else:
            values = np.clip(shifted.mean(axis=0), shifted.min(axis=0), shifted.max(axis=0))
    return ScalarLandscape(L.grid[sl], values, delta)


def _descent_targets(values: np.ndarray) -> np.ndarray:
    """Endpoint of discrete steepest descent (step to the strictly lower neighbour) from each point."""
    n = values.size
    idx = np.arange(n)
    left = np.concatenate([[np.inf], values[:-1]])
    right = np.concatenate([values[1:], [np.inf]])
    nxt = idx.copy()
    go_left = (left < values) & (left <= right)
    go_right = (right < values) & ~go_left
    nxt[go_left] -= 1
    nxt[go_right] += 1
    while True:
        jumped = nxt[nxt]
        if np.array_equal(jumped, nxt):
            return nxt
        nxt = jumped


def local_minima(L: ScalarLandscape) -> list[float]:
    """Centres of the flat-bottomed local minima."""
    targets = _descent_targets(L.values)
    ends = np.unique(targets)
    out = []
    for plateau in _plateaus(L.values, ends):
        out.append(float(L.grid[(plateau[0] + plateau[-1]) // 2]))
    return out


def _plateaus(values, ends):
    groups, current = [], [int(ends[0])]
    for e in ends[1:]:
        e = int(e)
        if e == current[-1] + 1 and values[e] == values[current[-1]]:
            current.append(e)
        else:
            groups.append(current)
            current = [e]
    groups.append(current)
    return groups


def nearest_minimum(L: ScalarLandscape, u0: float) -> float:
    """Where discrete descent started at ``u0`` comes to rest."""
    i = int(np.argmin(np.abs(L.grid - u0)))
    return float(L.grid[_descent_targets(L.values)[i]])


def basin_width(L: ScalarLandscape, minimum_location: float) -> float:
    """Width of the interval around the minimum from which discrete descent ends in it.

    A minimum is the flat run of equal values containing ``minimum_location``.
    """
    v = L.values
    i = int(np.argmin(np.abs(L.grid - minimum_location)))
    n = v.size
    if (i > 0 and v[i - 1] < v[i]) or (i < n - 1 and v[i + 1] < v[i]):
        raise ValueError(f"{minimum_location} is not a local minimum of the landscape")
    lo = i
    while lo > 0 and v[lo - 1] == v[i]:
        lo -= 1
    hi = i
    while hi < n - 1 and v[hi + 1] == v[i]:
        hi += 1
    targets = _descent_targets(v)
    inside = (targets >= lo) & (targets <= hi)
    a = i
    while a > 0 and inside[a - 1]:
        a -= 1
    b = i
    while b < n - 1 and inside[b + 1]:
        b += 1
    return float(L.grid[b] - L.grid[a])


@dataclass(frozen=True)
class BasinRow:
    delta: float
    operator: str
    minimum: float
    width: float


def sweep_delta(delta_values, L: ScalarLandscape | None = None,
                interval: tuple[float, float] = INTERVAL) -> list[BasinRow]:
    """Basin width of every nominal minimum under each risk operator, per delta.

    A minimum whose basin has vanished under an operator gets width 0.
    """
    deltas = [float(d) for d in delta_values]
    if any(d < 0 for d in deltas) or any(b < a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("delta values must be non-negative and increasing")
    L = ScalarLandscape.from_function() if L is None else L
    nominal = L.restrict(*interval)
    minima = local_minima(nominal)
    rows = []
    for d in deltas:
        for op in RiskOperator:
            agg = aggregate_landscape(L, op, d, interval=interval)
            for m in minima:
                rows.append(BasinRow(d, op.value, m, _basin_of(agg, m, minima)))
    return rows


def _basin_of(agg: ScalarLandscape, nominal_min: float, minima: list[float]) -> float:
    """Basin width of the aggregated minimum that descent from ``nominal_min`` reaches.

    Zero when that descent ends nearer another nominal minimum (the well was absorbed).
    """
    loc = nearest_minimum(agg, nominal_min)
    closest = min(minima, key=lambda m: abs(m - loc))
    if closest != nominal_min:
        return 0.0
    return basin_width(agg, loc)


def write_landscape_csv(path: Path, nominal: ScalarLandscape, avg: ScalarLandscape,
                        pes: ScalarLandscape, opt: ScalarLandscape) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(("u", "J", "J_avg", "J_pes", "J_opt"))
        for row in zip(nominal.grid, nominal.values, avg.values, pes.values, opt.values):
            w.writerow([fmt(v) for v in row])


def write_basins_csv(path: Path, rows: list[BasinRow]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(("delta", "operator", "minimum", "width"))
        for r in rows:
            w.writerow([fmt(r.delta), r.operator, fmt(r.minimum), fmt(r.width)])


def run_lab(out_dir: Path, deltas=(0.1, 0.2, 0.3), interval=INTERVAL,
            grid=GRID, h=SPACING) -> list[Path]:
    """Write per-delta envelope CSVs and the basin-width table."""
    out_dir = Path(out_dir)
    L = ScalarLandscape.from_function(double_well, grid[0], grid[1], h)
    nominal = L.restrict(*interval)
    paths = []
    for d in deltas:
        aggs = [aggregate_landscape(L, op, d, interval=interval) for op in
                (RiskOperator.AVERAGE, RiskOperator.PESSIMISTIC, RiskOperator.OPTIMISTIC)]
        p = out_dir / f"delta_{fmt(d)}" / "landscape.csv"
        write_landscape_csv(p, nominal, *aggs)
        paths.append(p)
    p = out_dir / "basins.csv"
    write_basins_csv(p, sweep_delta(deltas, L, interval))
    paths.append(p)
    return paths
