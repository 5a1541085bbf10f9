"""Versioned checkpoint container for classifier and GAN state."""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import torch
from torch import nn

from genifer.core.exceptions import CheckpointError
from genifer.schemas.experiment import MatchingMode
from genifer.services.models.classifier import Classifier
from genifer.services.models.discriminator import ProjectionDiscriminator
from genifer.services.models.gan import GanState
from genifer.services.models.generator import GENERATOR_KINDS, generator_kind

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class CheckpointBundle:
    """Everything restored from one checkpoint file."""

    classifier: Classifier
    gan: GanState | None
    meta: dict[str, Any] = field(default_factory=dict)
    rng_state: torch.Tensor | None = None


def _generator_payload(generator: nn.Module) -> dict[str, Any]:
    return {
        "kind": generator_kind(generator),
        "hparams": dict(generator.hparams),  # type: ignore[arg-type]
        "state": generator.state_dict(),
    }


def _restore_generator(payload: dict[str, Any]) -> nn.Module:
    cls = GENERATOR_KINDS[payload["kind"]]
    generator = cls(**payload["hparams"])
    generator.load_state_dict(payload["state"])
    return generator


def save_checkpoint(
    path: Path,
    classifier: Classifier,
    gan: GanState | None,
    meta: dict[str, Any] | None = None,
) -> Path:
    """Write a checkpoint atomically.

    Args:
        path: Target file
        classifier: Current classifier
        gan: Current GAN state (None before the first GAN phase)
        meta: JSON-like extras (task, phase, config, adaptive state, record)

    Returns:
        The written path
    """
    payload: dict[str, Any] = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "classifier": {
            "hparams": dict(classifier.hparams),
            "seen_classes": list(classifier.seen_classes),
            "tap_point": classifier.tap_point,
            "extractor_frozen": classifier.extractor_frozen,
            "state": classifier.state_dict(),
        },
        "gan": None,
        "rng_state": torch.get_rng_state(),
        "meta": meta or {},
    }
    if gan is not None:
        payload["gan"] = {
            "mode": str(gan.mode),
            "ada_probability": float(gan.ada_probability),
            "trained_classes": list(gan.trained_classes),
            "generator": _generator_payload(gan.generator),
            "ema_generator": _generator_payload(gan.ema_generator),
            "frozen_prev_generator": (
                _generator_payload(gan.frozen_prev_generator) if gan.frozen_prev_generator is not None else None
            ),
            "discriminator": {
                "hparams": dict(gan.discriminator.hparams),
                "state": gan.discriminator.state_dict(),
            },
        }

    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save(payload, tmp)
    os.replace(tmp, path)
    logger.info(f"Saved checkpoint: path={path}")
    return path


def load_checkpoint(path: Path, map_location: str = "cpu") -> CheckpointBundle:
    """Load a checkpoint written by :func:`save_checkpoint`.

    Raises:
        CheckpointError: If the file is missing, unreadable or of another format version
    """
    try:
        payload = torch.load(path, map_location=map_location, weights_only=True)
    except FileNotFoundError as e:
        raise CheckpointError(f"Checkpoint not found: {path}") from e
    except Exception as e:
        raise CheckpointError(f"Cannot read checkpoint: {path}", details={"error": str(e)}) from e

    version = payload.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(
            f"Unsupported checkpoint format version {version}",
            details={"expected": CHECKPOINT_FORMAT_VERSION},
        )

    c = payload["classifier"]
    hparams = dict(c["hparams"])
    hparams["widths"] = tuple(hparams["widths"])
    classifier = Classifier(**hparams)
    classifier.expand_head(c["seen_classes"])
    classifier.load_state_dict(c["state"])
    if c["extractor_frozen"]:
        classifier.freeze_extractor()

    gan = None
    g = payload["gan"]
    if g is not None:
        d_hparams = dict(g["discriminator"]["hparams"])
        discriminator = ProjectionDiscriminator(**d_hparams)
        discriminator.load_state_dict(g["discriminator"]["state"])
        frozen = g["frozen_prev_generator"]
        gan = GanState(
            generator=_restore_generator(g["generator"]),
            discriminator=discriminator,
            ema_generator=_restore_generator(g["ema_generator"]),
            mode=MatchingMode(g["mode"]),
            frozen_prev_generator=_restore_generator(frozen).eval() if frozen is not None else None,
            ada_probability=g["ada_probability"],
            trained_classes=list(g["trained_classes"]),
        )

    logger.info(f"Loaded checkpoint: path={path}")
    return CheckpointBundle(classifier=classifier, gan=gan, meta=payload["meta"], rng_state=payload["rng_state"])
