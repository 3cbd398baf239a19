"""Domain-randomization draws and the per-trial seed hierarchy.

Every random quantity of a trial comes from a named sub-stream of the trial
seed, so the true model and initial state never depend on how many planner
domains are drawn or which risk operator is used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import ModelParams

# spawn keys below a trial seed
TRUE_MODEL_STREAM = (0,)
INITIAL_STATE_STREAM = (1,)
DOMAIN_STREAM = (2, 0)
TAPE_NOISE_STREAM = (2, 1)


def substream(seed: int, key: tuple[int, ...]) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _check_range(name, rng_):
    lo, hi = rng_
    if not lo <= hi:
        raise ValueError(f"{name} range must satisfy low <= high, got {rng_}")


@dataclass(frozen=True)
class DomainDistribution:
    friction: tuple[float, float] = (0.5, 1.5)
    time_constant: tuple[float, float] = (0.01, 0.03)
    mass_scale: tuple[float, float] = (0.8, 1.2)
    gain_scale: tuple[float, float] = (0.8, 1.2)

    def __post_init__(self):
        for name in ("friction", "time_constant", "mass_scale", "gain_scale"):
            _check_range(name, getattr(self, name))

    def draw(self, rng: np.random.Generator) -> ModelParams:
        # one row of six uniforms per realization keeps draws prefix-stable in R
        u = rng.random(6)

        def lerp(bounds, v):
            return float(bounds[0] + (bounds[1] - bounds[0]) * v)

        return ModelParams(
            friction=lerp(self.friction, u[0]),
            time_constant=lerp(self.time_constant, u[1]),
            mass_scale=(lerp(self.mass_scale, u[2]), lerp(self.mass_scale, u[3])),
            gain_scale=(lerp(self.gain_scale, u[4]), lerp(self.gain_scale, u[5])),
        )

    def contains(self, p: ModelParams) -> bool:
        def inside(bounds, v):
            return bounds[0] <= v <= bounds[1]

        return (inside(self.friction, p.friction)
                and inside(self.time_constant, p.time_constant)
                and all(inside(self.mass_scale, s) for s in p.mass_scale)
                and all(inside(self.gain_scale, s) for s in p.gain_scale))


def sample_domains(dist: DomainDistribution, R: int, rng: np.random.Generator) -> list[ModelParams]:
    """Draw ``R`` independent realizations; ``R = 0`` means plan on the nominal model only."""
    if R < 0:
        raise ValueError("R must be >= 0")
    if R == 0:
        return [ModelParams.nominal()]
    return [dist.draw(rng) for _ in range(R)]


def sample_true_model(dist: DomainDistribution, trial_seed: int) -> ModelParams:
    """The fixed execution model of a trial, from its dedicated sub-stream."""
    return dist.draw(substream(trial_seed, TRUE_MODEL_STREAM))
