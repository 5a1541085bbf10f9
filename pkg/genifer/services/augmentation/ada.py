"""Adaptive discriminator augmentation with a capped probability.

Every op fires per sample with the shared probability p. The same pipeline,
with the same p, is applied to the real side and the fake side of a
discriminator step; each side gets fresh random draws.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal

import torch
import torch.nn.functional as F

from genifer.core.exceptions import ConfigurationError, ContractError, ShapeError
from genifer.core.seeding import as_generator
from genifer.schemas.experiment import AdaOpName, AugPipelineConfig
from genifer.schemas.records import AdaUpdate

logger = logging.getLogger(__name__)

DEFAULT_ADA_OPS: tuple[AdaOpName, ...] = ("xflip", "rotate90", "translate", "brightness", "contrast")
BRIGHTNESS_STD = 0.2
CONTRAST_LOG_STD = 0.5 * math.log(2.0)

Side = Literal["real", "fake"]


def _fire(batch: int, p: float, generator: torch.Generator, device: torch.device) -> torch.Tensor:
    return (torch.rand(batch, generator=generator) < p).to(device).view(-1, 1, 1, 1)


def _xflip(x: torch.Tensor, p: float, g: torch.Generator, max_translation: float) -> torch.Tensor:
    return torch.where(_fire(x.shape[0], p, g, x.device), x.flip(-1), x)


def _rotate90(x: torch.Tensor, p: float, g: torch.Generator, max_translation: float) -> torch.Tensor:
    fire = _fire(x.shape[0], p, g, x.device)
    turns = torch.randint(1, 4, (x.shape[0],), generator=g).tolist()
    rotated = torch.stack([torch.rot90(img, k, dims=(-2, -1)) for img, k in zip(x, turns, strict=True)])
    return torch.where(fire, rotated, x)


def _translate(x: torch.Tensor, p: float, g: torch.Generator, max_translation: float) -> torch.Tensor:
    fire = _fire(x.shape[0], p, g, x.device)
    height, width = x.shape[-2:]
    max_dy, max_dx = int(max_translation * height), int(max_translation * width)
    dys = torch.randint(-max_dy, max_dy + 1, (x.shape[0],), generator=g).tolist()
    dxs = torch.randint(-max_dx, max_dx + 1, (x.shape[0],), generator=g).tolist()
    pad = (max_dx, max_dx, max_dy, max_dy)
    padded = F.pad(x, pad, mode="reflect") if max_dx or max_dy else x
    shifted = torch.stack(
        [
            img[:, max_dy - dy : max_dy - dy + height, max_dx - dx : max_dx - dx + width]
            for img, dy, dx in zip(padded, dys, dxs, strict=True)
        ]
    )
    return torch.where(fire, shifted, x)


def _brightness(x: torch.Tensor, p: float, g: torch.Generator, max_translation: float) -> torch.Tensor:
    fire = _fire(x.shape[0], p, g, x.device)
    offset = (torch.randn(x.shape[0], generator=g) * BRIGHTNESS_STD).to(x.device, x.dtype).view(-1, 1, 1, 1)
    return torch.where(fire, x + offset, x)


def _contrast(x: torch.Tensor, p: float, g: torch.Generator, max_translation: float) -> torch.Tensor:
    fire = _fire(x.shape[0], p, g, x.device)
    factor = torch.exp(torch.randn(x.shape[0], generator=g) * CONTRAST_LOG_STD)
    factor = factor.to(x.device, x.dtype).view(-1, 1, 1, 1)
    mean = x.mean(dim=(1, 2, 3), keepdim=True)
    return torch.where(fire, (x - mean) * factor + mean, x)


ADA_OPS = {
    "xflip": _xflip,
    "rotate90": _rotate90,
    "translate": _translate,
    "brightness": _brightness,
    "contrast": _contrast,
}


def ada_apply(
    images: torch.Tensor,
    p: float,
    seed: int | torch.Generator,
    ops: Sequence[AdaOpName] = DEFAULT_ADA_OPS,
    p_cap: float = 0.5,
    max_translation: float = 0.125,
) -> torch.Tensor:
    """Augment a discriminator batch.

    Args:
        images: (B, C, H, W) images in the generator range [-1, 1]
        p: Per-op, per-sample firing probability
        seed: Seed or generator for the draws
        ops: Ordered op names
        p_cap: Upper bound on p
        max_translation: Largest shift as a fraction of the image side

    Raises:
        ContractError: If p is outside [0, p_cap]
    """
    if not 0.0 <= p <= p_cap:
        raise ContractError(f"ADA probability {p} outside [0, {p_cap}]", details={"p": p, "p_cap": p_cap})
    if images.ndim != 4:
        raise ShapeError(f"expected (B, C, H, W) images, got {tuple(images.shape)}")
    if p == 0.0:
        return images
    generator = as_generator(seed)
    out = images
    for name in ops:
        if name not in ADA_OPS:
            raise ConfigurationError(f"unknown ADA op {name!r}")
        out = ADA_OPS[name](out, p, generator, max_translation)
    return out


def ada_signal(real_scores: torch.Tensor) -> float:
    """Overfitting signal r = mean(sign(D(real)))."""
    return float(torch.sign(real_scores.detach()).mean())


def ada_update(p: float, real_scores: torch.Tensor | float, config: AugPipelineConfig) -> float:
    """p' = clamp(p + step * sgn(r - target), 0, p_cap).

    ``real_scores`` may be the raw scores or an already averaged signal r.
    """
    r = ada_signal(real_scores) if isinstance(real_scores, torch.Tensor) else float(real_scores)
    delta = config.ada_adjust_step * math.copysign(1.0, r - config.ada_target) if r != config.ada_target else 0.0
    return min(max(p + delta, 0.0), config.p_cap)


@dataclass(frozen=True)
class AdaCall:
    """One pipeline application, kept for inspecting real/fake symmetry."""

    step: int
    side: Side
    ops: tuple[str, ...]
    p: float


@dataclass
class AdaPipeline:
    """ADA op list, current p, and a log of every application."""

    ops: tuple[AdaOpName, ...]
    p: float
    p_cap: float = 0.5
    max_translation: float = 0.125
    enabled: bool = True
    call_log: list[AdaCall] = field(default_factory=list)
    record_calls: bool = False

    @classmethod
    def from_config(cls, config: AugPipelineConfig, p: float | None = None, enabled: bool = True) -> "AdaPipeline":
        return cls(
            ops=tuple(config.ada_ops),
            p=config.ada_initial_p if p is None else p,
            p_cap=config.p_cap,
            max_translation=config.ada_max_translation,
            enabled=enabled and config.ada_enabled,
        )

    def __call__(self, images: torch.Tensor, side: Side, step: int, seed: int | torch.Generator) -> torch.Tensor:
        if not self.enabled:
            return images
        if self.record_calls:
            self.call_log.append(AdaCall(step=step, side=side, ops=tuple(self.ops), p=self.p))
        return ada_apply(images, self.p, seed, self.ops, self.p_cap, self.max_translation)


@dataclass
class AdaController:
    """Accumulates real-score signs and updates the pipeline's p every interval D steps."""

    pipeline: AdaPipeline
    config: AugPipelineConfig
    d_steps: int = 0
    trace: list[AdaUpdate] = field(default_factory=list)
    _signs: list[float] = field(default_factory=list)

    def observe(self, real_scores: torch.Tensor) -> None:
        self.d_steps += 1
        if not self.pipeline.enabled:
            return
        self._signs.append(ada_signal(real_scores))
        if self.d_steps % self.config.ada_interval:
            return
        signal = sum(self._signs) / len(self._signs)
        self._signs.clear()
        self.pipeline.p = ada_update(self.pipeline.p, signal, self.config)
        if self.pipeline.p > self.config.p_cap:
            raise ContractError(f"ADA probability {self.pipeline.p} exceeded cap {self.config.p_cap}")
        self.trace.append(AdaUpdate(d_step=self.d_steps, signal=signal, p=self.pipeline.p))
        logger.debug(f"ADA update: d_step={self.d_steps}, signal={signal:.3f}, p={self.pipeline.p:.4f}")
