"""Risk-aware domain-randomized predictive sampling for planar Push-T."""

from .controller import ControllerConfig, PlanResult, TrialRecord, plan_step, run_closed_loop, weighted_update
from .dynamics import Command, ModelParams, PushTSystem, State, TBlockGeometry
from .harness import SweepSummary, TrialConfig, run_sweep, run_trial
from .randomize import DomainDistribution, sample_domains, sample_true_model
from .risk import RiskOperator, aggregate, rank_pair
from .rollout import CostMatrix, CostWeights, evaluate_matrix, rollout_cost, running_cost
from .tape import KnotTape, eval_tape, sample_tapes, shift_tape

__all__ = [
    "Command", "ControllerConfig", "CostMatrix", "CostWeights", "DomainDistribution", "KnotTape",
    "ModelParams", "PlanResult", "PushTSystem", "RiskOperator", "State", "SweepSummary", "TBlockGeometry",
    "TrialConfig", "TrialRecord", "aggregate", "eval_tape", "evaluate_matrix", "plan_step", "rank_pair",
    "rollout_cost", "run_closed_loop", "run_sweep", "run_trial", "running_cost", "sample_domains", "sample_tapes",
    "sample_true_model", "shift_tape", "weighted_update",
]
