"""Risk-aware predictive sampling: the receding-horizon control loop."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .dynamics import DEFAULT_SYSTEM, Command, ModelParams, PushTSystem, State, simulate_hold
from .risk import RiskOperator, aggregate_rows
from .rollout import CostMatrix, CostWeights, _running_cost, evaluate_matrix
from .tape import KnotTape, eval_tape, sample_tapes, shift_tape


@dataclass(frozen=True)
class ControllerConfig:
    K: int = 128
    sigma: float = 0.4
    horizon: float = 0.5
    knots: int = 6
    risk: RiskOperator = RiskOperator.AVERAGE
    R: int = 0
    replan_period: float = 0.1
    weights: CostWeights = field(default_factory=CostWeights)

    def __post_init__(self):
        object.__setattr__(self, "risk", RiskOperator.parse(self.risk))
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.knots < 1 or not self.horizon > 0 or not self.replan_period > 0:
            raise ValueError("knots, horizon and replan_period must be positive")
        if self.R < 0:
            raise ValueError("R must be >= 0")


@dataclass(frozen=True, eq=False)
class PlanResult:
    new_tape: KnotTape
    applied: Command
    scores: np.ndarray
    matrix: CostMatrix
    argmin_index: int
    candidates: list[KnotTape]


@dataclass(eq=False)
class TrialRecord:
    """Executed closed-loop trajectory sampled at every physics step."""

    times: np.ndarray
    states: np.ndarray
    commands: np.ndarray
    executed_cost: np.ndarray
    block_pos_error: np.ndarray
    n_plans: int = 0
    config: Any = None

    @property
    def time_avg_cost(self) -> float:
        return float(np.mean(self.executed_cost))


def argmin_indicator(scores) -> np.ndarray:
    """Weighting that puts all mass on the lowest score (lowest index on ties)."""
    w = np.zeros(len(scores))
    w[int(np.argmin(scores))] = 1.0
    return w


def select(matrix: CostMatrix, risk) -> tuple[np.ndarray, int]:
    """Aggregate each row with ``risk`` and pick the best row (first on ties)."""
    scores = aggregate_rows(matrix.values, risk)
    return scores, int(np.argmin(scores))


def weighted_update(nominal: KnotTape, tapes: list[KnotTape], scores,
                    g: Callable[[np.ndarray], np.ndarray]) -> KnotTape:
    """Move ``nominal`` to the ``g``-weighted average of the candidates.

    Evaluated as the normalized convex combination of candidate knots, which
    equals ``U + sum g (U_k - U) / sum g`` and keeps one-hot weights exact.
    """
    w = np.asarray(g(np.asarray(scores, dtype=np.float64)), dtype=np.float64)
    if w.shape != (len(tapes),):
        raise ValueError("weighting must return one weight per candidate")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    total = w.sum()
    if total <= 0:
        raise ValueError("all candidate weights are zero; update undefined")
    coeff = w / total
    knots = None
    for c, tape in zip(coeff, tapes):
        if c != 0.0:
            term = c * tape.knots
            knots = term if knots is None else knots + term
    return KnotTape(knots, nominal.horizon)


def plan_step(nominal: KnotTape, x0: State, domains: list[ModelParams], cfg: ControllerConfig,
              rng: np.random.Generator, system: PushTSystem = DEFAULT_SYSTEM,
              workers: int = 1) -> PlanResult:
    """One predictive-sampling update over the domain ensemble."""
    if not domains:
        raise ValueError("need at least one domain")
    tapes = sample_tapes(nominal, cfg.sigma, cfg.K, rng)
    matrix = evaluate_matrix(tapes, x0, domains, cfg.weights, system, workers)
    scores, best = select(matrix, cfg.risk)
    new_tape = tapes[best]
    return PlanResult(new_tape, eval_tape(new_tape, 0.0), scores, matrix, best, tapes)


def run_closed_loop(x0: State, true_model: ModelParams, domains: list[ModelParams],
                    cfg: ControllerConfig, rng: np.random.Generator, T_sim: float,
                    system: PushTSystem = DEFAULT_SYSTEM, workers: int = 1,
                    progress: Callable[[int, int], None] | None = None) -> TrialRecord:
    """Replan every ``replan_period`` on the ensemble, execute on ``true_model``."""
    if not T_sim > 0:
        raise ValueError("T_sim must be positive")
    steps_per_plan = round(cfg.replan_period / system.dt)
    n_plans = round(T_sim / cfg.replan_period)
    if steps_per_plan < 1 or n_plans < 1:
        raise ValueError("replan_period must cover at least one physics step and T_sim one replan")
    total = n_plans * steps_per_plan
    states = np.empty((total + 1, 10))
    commands = np.empty((total + 1, 2))
    states[0] = np.asarray(x0, dtype=np.float64)
    nominal = KnotTape.zeros(cfg.knots, cfg.horizon)
    x = x0
    for j in range(n_plans):
        if j > 0:
            nominal = shift_tape(nominal, min(cfg.replan_period, cfg.horizon))
        plan = plan_step(nominal, x, domains, cfg, rng, system, workers)
        nominal = plan.new_tape
        seg = simulate_hold(x, plan.applied, true_model, steps_per_plan, system)
        lo = j * steps_per_plan
        states[lo:lo + steps_per_plan + 1] = seg
        commands[lo:lo + steps_per_plan + 1] = plan.applied
        x = State.from_array(seg[-1])
        if progress is not None:
            progress(j + 1, n_plans)
    w = cfg.weights.packed()
    cost = np.array([_running_cost(s, w) for s in states])
    goal = np.array(cfg.weights.goal[:2])
    err = np.hypot(states[:, 4] - goal[0], states[:, 5] - goal[1])
    times = np.arange(total + 1) * system.dt
    return TrialRecord(times, states, commands, cost, err, n_plans)
