"""Seeded model-mismatch experiments: trials, sweeps, metrics and CSV persistence."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from ._csv import fmt, quantize
from .controller import ControllerConfig, TrialRecord, run_closed_loop
from .dynamics import DEFAULT_SYSTEM, PushTSystem, State, signed_distance
from .randomize import (
    DOMAIN_STREAM,
    INITIAL_STATE_STREAM,
    TAPE_NOISE_STREAM,
    DomainDistribution,
    sample_domains,
    sample_true_model,
    substream,
)
from .risk import RiskOperator

log = logging.getLogger(__name__)

R_VALUES = (0, 4, 16, 32, 64)
RISKS = tuple(RiskOperator)
N_SEEDS = 20
T_SIM = 7.0

RECORD_HEADER = ("t", "px_p", "py_p", "vx_p", "vy_p", "px_b", "py_b", "phi", "vx_b", "vy_b", "wb",
                 "ux", "uy", "cost", "pos_err")
SUMMARY_HEADER = ("R", "risk", "mean_cost", "se_cost")
CURVES_HEADER = ("R", "risk", "t", "mean_err", "se_err")


class TrialFailed(RuntimeError):
    def __init__(self, cfg, cause):
        super().__init__(f"trial R={cfg.R} risk={cfg.risk} seed={cfg.seed} failed: {cause}")
        self.config = cfg


@dataclass(frozen=True)
class InitialStateRanges:
    block_position: tuple[float, float] = (-0.1, 0.1)
    block_angle: tuple[float, float] = (-3.14, 3.14)
    pusher_position: tuple[float, float] = (-0.1, 0.1)
    clearance: float = 0.001
    max_attempts: int = 1000


@dataclass(frozen=True)
class TrialConfig:
    seed: int = 0
    R: int = 0
    risk: RiskOperator = RiskOperator.AVERAGE
    T_sim: float = T_SIM
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    distribution: DomainDistribution = field(default_factory=DomainDistribution)
    initial: InitialStateRanges = field(default_factory=InitialStateRanges)
    system: PushTSystem = DEFAULT_SYSTEM

    def __post_init__(self):
        object.__setattr__(self, "risk", RiskOperator.parse(self.risk))

    def planner_config(self) -> ControllerConfig:
        return replace(self.controller, R=self.R, risk=self.risk)


def sample_initial_state(rng: np.random.Generator, ranges: InitialStateRanges = InitialStateRanges(),
                         system: PushTSystem = DEFAULT_SYSTEM) -> State:
    """Uniform block pose and pusher position, pusher rejection-sampled clear of the block."""
    p_b = rng.uniform(*ranges.block_position, size=2)
    phi = rng.uniform(*ranges.block_angle)
    need = system.pusher_radius + ranges.clearance
    for _ in range(ranges.max_attempts):
        p_p = rng.uniform(*ranges.pusher_position, size=2)
        if signed_distance(system.geometry, (p_b, phi), p_p).distance > need:
            return State(px_p=float(p_p[0]), py_p=float(p_p[1]),
                         px_b=float(p_b[0]), py_b=float(p_b[1]), phi=float(phi))
    raise RuntimeError(f"no collision-free pusher position after {ranges.max_attempts} attempts")


def trial_setup(cfg: TrialConfig):
    """Initial state, true model and planner domains derived from the trial seed."""
    x0 = sample_initial_state(substream(cfg.seed, INITIAL_STATE_STREAM), cfg.initial, cfg.system)
    true_model = sample_true_model(cfg.distribution, cfg.seed)
    domains = sample_domains(cfg.distribution, cfg.R, substream(cfg.seed, DOMAIN_STREAM))
    return x0, true_model, domains


def run_trial(cfg: TrialConfig, workers: int = 1, progress=None) -> TrialRecord:
    x0, true_model, domains = trial_setup(cfg)
    try:
        rec = run_closed_loop(x0, true_model, domains, cfg.planner_config(),
                              substream(cfg.seed, TAPE_NOISE_STREAM), cfg.T_sim, cfg.system,
                              workers, progress)
    except Exception as exc:
        raise TrialFailed(cfg, exc) from exc
    rec.config = cfg
    return rec


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def record_name(R: int, risk, seed: int) -> str:
    return f"{R}_{RiskOperator.parse(risk).value}_{seed}.csv"


def record_rows(rec: TrialRecord) -> np.ndarray:
    return np.column_stack([rec.times, rec.states, rec.commands, rec.executed_cost,
                            rec.block_pos_error])


def write_record(rec: TrialRecord, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(RECORD_HEADER)
        for row in record_rows(rec):
            w.writerow([fmt(v) for v in row])


def read_record(path: Path) -> TrialRecord:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = tuple(next(reader))
        if header != RECORD_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        data = np.array([[float(v) for v in row] for row in reader])
    return TrialRecord(times=data[:, 0], states=data[:, 1:11], commands=data[:, 11:13],
                       executed_cost=data[:, 13], block_pos_error=data[:, 14])


def as_persisted(rec: TrialRecord) -> TrialRecord:
    """The record as it reads back from its CSV file."""
    q = quantize(record_rows(rec))
    return TrialRecord(times=q[:, 0], states=q[:, 1:11], commands=q[:, 11:13],
                       executed_cost=q[:, 13], block_pos_error=q[:, 14], n_plans=rec.n_plans,
                       config=rec.config)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def mean_se(values) -> tuple[float, float]:
    """Mean and standard error (sample std / sqrt(S)); SE is 0 for a single value."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 1:
        return float(v[0]), 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


@dataclass
class SweepSummary:
    costs: dict = field(default_factory=dict)   # (R, risk) -> (mean, se)
    curves: dict = field(default_factory=dict)  # (R, risk) -> (times, mean_err, se_err)

    def rows(self):
        for (R, risk), (m, se) in self.costs.items():
            yield R, risk.value, m, se


def _sort_key(key):
    R, risk = key
    return R, list(RiskOperator).index(risk)


def summarize(records) -> SweepSummary:
    """Aggregate records by (R, risk); records should be in their persisted precision."""
    groups: dict = {}
    for rec in sorted(records, key=lambda r: (*_sort_key((r.config.R, r.config.risk)), r.config.seed)):
        groups.setdefault((rec.config.R, rec.config.risk), []).append(rec)
    summary = SweepSummary()
    for key in sorted(groups, key=_sort_key):
        recs = groups[key]
        summary.costs[key] = mean_se([r.time_avg_cost for r in recs])
        errs = np.stack([r.block_pos_error for r in recs])
        if len(recs) == 1:
            se = np.zeros(errs.shape[1])
        else:
            se = errs.std(axis=0, ddof=1) / math.sqrt(len(recs))
        summary.curves[key] = (recs[0].times, errs.mean(axis=0), se)
    return summary


def write_summary(summary: SweepSummary, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    summary_path = out_dir / "summary.csv"
    with open(summary_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for R, risk, m, se in summary.rows():
            w.writerow([R, risk, fmt(m), fmt(se)])
    curves_path = out_dir / "pos_err_curves.csv"
    with open(curves_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CURVES_HEADER)
        for (R, risk), (times, mean, se) in summary.curves.items():
            for t, m, s in zip(times, mean, se):
                w.writerow([R, risk.value, fmt(t), fmt(m), fmt(s)])
    return [summary_path, curves_path]


def load_records(out_dir: Path, configs) -> list[TrialRecord]:
    recs = []
    for cfg in configs:
        rec = read_record(Path(out_dir) / "records" / record_name(cfg.R, cfg.risk, cfg.seed))
        rec.config = cfg
        recs.append(rec)
    return recs


def sweep_configs(base: TrialConfig, R_values, risks, seeds) -> list[TrialConfig]:
    if not R_values or not risks or not seeds:
        raise ValueError("R_values, risks and seeds must be non-empty")
    risks = [RiskOperator.parse(r) for r in risks]
    return [replace(base, R=R, risk=risk, seed=seed)
            for R in sorted(R_values)
            for risk in sorted(risks, key=list(RiskOperator).index)
            for seed in sorted(seeds)]


def _run_one(cfg: TrialConfig) -> TrialRecord:
    return run_trial(cfg)


def run_sweep(R_values=R_VALUES, risks=RISKS, seeds=range(N_SEEDS), base: TrialConfig = TrialConfig(),
              out_dir: Path | None = None, workers: int = 1) -> SweepSummary:
    """Run the full (R x risk x seed) grid; trials run in ``workers`` processes."""
    configs = sweep_configs(base, R_values, risks, seeds)
    records = []
    if workers <= 1:
        for i, cfg in enumerate(configs):
            log.info("trial %d/%d: R=%d risk=%s seed=%d", i + 1, len(configs), cfg.R, cfg.risk, cfg.seed)
            records.append(run_trial(cfg))
    else:
        with ProcessPoolExecutor(max_workers=workers, mp_context=get_context("spawn")) as pool:
            for i, rec in enumerate(pool.map(_run_one, configs)):
                log.info("trial %d/%d done", i + 1, len(configs))
                records.append(rec)
    if out_dir is not None:
        for rec in records:
            cfg = rec.config
            write_record(rec, Path(out_dir) / "records" / record_name(cfg.R, cfg.risk, cfg.seed))
    summary = summarize([as_persisted(r) for r in records])
    if out_dir is not None:
        write_summary(summary, Path(out_dir))
    return summary
