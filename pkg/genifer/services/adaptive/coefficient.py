"""Adaptive output-distillation coefficient.

lambda_OD is held constant for I batches. After every I-th batch it moves by
exactly I/S toward the value that makes the mean ratio L_curr / (lambda * L_OD)
over those batches match the target rho*, and is clamped to [0, lambda_max].
"""

import logging
from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np

from genifer.schemas.experiment import AdaptiveCoefConfig
from genifer.schemas.records import LambdaUpdate

logger = logging.getLogger(__name__)

# lambda is rounded after every step so that repeated +-I/S moves stay on the grid
LAMBDA_DECIMALS = 12


@dataclass
class AdaptiveCoefState:
    """lambda_OD controller.

    Attributes:
        lambda_od: Coefficient in effect for the next batch
        rho_target: Target ratio rho*
        update_interval: I, batches between updates
        scaling_factor: S, each update moves lambda by I / S
        lambda_max: Upper clamp
        epsilon: L_OD values at or below this record a neutral ratio
        adaptive: False keeps lambda constant (ratios are still recorded)
        window: Ratios since the last update
        batch_counter: Batches recorded since the last window reset
        history: Every update, for the run record
    """

    lambda_od: float = 1.0
    rho_target: float = 0.45
    update_interval: int = 4
    scaling_factor: float = 10.0
    lambda_max: float = 100.0
    epsilon: float = 1e-12
    adaptive: bool = True
    window: list[float] = field(default_factory=list)
    batch_counter: int = 0
    history: list[LambdaUpdate] = field(default_factory=list)

    @classmethod
    def from_config(cls, config: AdaptiveCoefConfig, lambda_od: float | None = None) -> "AdaptiveCoefState":
        return cls(
            lambda_od=config.initial if lambda_od is None else lambda_od,
            rho_target=config.rho_target,
            update_interval=config.update_interval,
            scaling_factor=config.scaling_factor,
            lambda_max=config.lambda_max,
            epsilon=config.epsilon,
            adaptive=config.adaptive,
        )

    @property
    def step(self) -> float:
        return self.update_interval / self.scaling_factor

    def record_batch(self, l_curr: float, l_od: float) -> "AdaptiveCoefState":
        """Append this batch's ratio, computed with the lambda in effect for it."""
        if l_od <= self.epsilon or self.lambda_od == 0.0:
            ratio = self.rho_target
        else:
            ratio = l_curr / (self.lambda_od * l_od)
        self.window.append(float(ratio))
        self.batch_counter += 1
        return self

    def maybe_update(self) -> "AdaptiveCoefState":
        """Move lambda by sgn(rho - rho*) * I / S on every I-th batch; no-op otherwise."""
        if self.batch_counter == 0 or self.batch_counter % self.update_interval != 0 or not self.window:
            return self
        rho = float(np.mean(self.window))
        self.window.clear()
        if not self.adaptive:
            return self

        sign = float(np.sign(rho - self.rho_target))
        new = min(max(self.lambda_od + sign * self.step, 0.0), self.lambda_max)
        self.lambda_od = round(new, LAMBDA_DECIMALS)
        self.history.append(LambdaUpdate(batch=self.batch_counter, rho=rho, lambda_od=self.lambda_od))
        logger.debug(f"lambda_OD update: batch={self.batch_counter}, rho={rho:.4f}, lambda={self.lambda_od}")
        return self

    def reset_window(self) -> None:
        """Drop pending ratios and restart the cadence (task boundary)."""
        if self.window:
            logger.info(f"Discarding {len(self.window)} pending lambda_OD ratios at task boundary")
        self.window.clear()
        self.batch_counter = 0


def simulate(trace: Iterable[tuple[float, float]], config: AdaptiveCoefConfig) -> list[float]:
    """Replay a loss trace through a fresh controller.

    Args:
        trace: (L_curr, L_OD) per batch
        config: Controller constants

    Returns:
        lambda_OD after each batch (empty for an empty trace)
    """
    state = AdaptiveCoefState.from_config(config)
    trajectory = []
    for l_curr, l_od in trace:
        state.record_batch(l_curr, l_od).maybe_update()
        trajectory.append(state.lambda_od)
    return trajectory
