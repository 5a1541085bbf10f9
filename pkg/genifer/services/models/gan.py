"""GAN state and its operations: sampling, scoring, parameter averaging."""

import copy
import hashlib
import logging
from dataclasses import dataclass, field

import torch
from torch import nn

from genifer.core.exceptions import ContractError, RangeError, ShapeError
from genifer.schemas.experiment import ExperimentConfig, MatchingMode
from genifer.services.models.classifier import Classifier
from genifer.services.models.discriminator import ProjectionDiscriminator
from genifer.services.models.generator import (
    FeatureGenerator,
    NoiseMode,
    StyleGenerator,
    count_parameters,
)

logger = logging.getLogger(__name__)

# Width multipliers tried when sizing the feature generator against the image generator
DFM_WIDTH_SCALES = tuple(round(0.25 + 0.05 * i, 2) for i in range(36))


@dataclass
class GanState:
    """Generator, discriminator, averaged generator and frozen previous generator."""

    generator: nn.Module
    discriminator: ProjectionDiscriminator
    ema_generator: nn.Module
    mode: MatchingMode
    frozen_prev_generator: nn.Module | None = None
    ada_probability: float = 0.0
    trained_classes: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.ema_generator.requires_grad_(False)
        if self.frozen_prev_generator is not None:
            self.frozen_prev_generator.requires_grad_(False)


def _style_generator(config: ExperimentConfig, class_count: int) -> StyleGenerator:
    g = config.generator
    return StyleGenerator(
        z_dim=g.z_dim,
        num_classes=class_count,
        w_dim=g.w_dim,
        mapping_layers=g.mapping_layers,
        channels=g.channels,
        image_size=config.dataset.image_size,
        image_channels=config.dataset.channels,
    )


def build_dfm_variant(
    classifier: Classifier,
    gan: GanState | None,
    config: ExperimentConfig,
    class_count: int,
) -> tuple[Classifier, FeatureGenerator]:
    """Freeze the extractor and build a feature-emitting generator of matching capacity.

    The feature generator keeps the image generator's mapping network and layer
    count; its widths are scaled so that its parameter count is as close as
    possible to the image generator's.

    Args:
        classifier: Classifier whose extractor gets frozen up to the tap point
        gan: Existing GAN whose image generator sets the reference size (optional)
        config: Experiment config
        class_count: Number of conditional classes

    Returns:
        (classifier with frozen extractor, feature generator)
    """
    reference = gan.generator if gan is not None and isinstance(gan.generator, StyleGenerator) else None
    target = count_parameters(reference or _style_generator(config, class_count))
    feature_shape = classifier.feature_shape(config.dataset.image_size)
    g = config.generator

    best: FeatureGenerator | None = None
    best_gap = float("inf")
    for scale in DFM_WIDTH_SCALES:
        channels = tuple(max(1, round(c * scale)) for c in g.channels)
        candidate = FeatureGenerator(g.z_dim, class_count, g.w_dim, g.mapping_layers, channels, feature_shape)
        gap = abs(count_parameters(candidate) - target) / target
        if gap < best_gap:
            best, best_gap = candidate, gap
    assert best is not None

    classifier.freeze_extractor()
    logger.info(
        f"Built DFM generator: channels={best.hparams['channels']}, params={count_parameters(best)}, "
        f"reference={target}, gap={best_gap:.3f}"
    )
    return classifier, best


def build_gan(config: ExperimentConfig, classifier: Classifier, class_count: int) -> GanState:
    """Build the GAN for the configured matching mode.

    IFM: image generator, discriminator on tap features.
    IM: image generator, discriminator with an image stem.
    DFM: feature generator (extractor frozen), discriminator on tap features.
    """
    mode = config.replay.mode
    d = config.discriminator
    feature_shape = classifier.feature_shape(config.dataset.image_size)
    image_shape = (config.dataset.channels, config.dataset.image_size, config.dataset.image_size)

    generator: nn.Module
    if mode == MatchingMode.DFM:
        _, generator = build_dfm_variant(classifier, None, config, class_count)
    else:
        generator = _style_generator(config, class_count)

    discriminator = ProjectionDiscriminator(
        input_shape=feature_shape,
        num_classes=class_count,
        channels=d.channels,
        minibatch_std=d.minibatch_std,
        image_shape=image_shape if mode == MatchingMode.IM else None,
        stem_channels=d.image_stem_channels,
    )
    device = next(classifier.parameters()).device
    generator.to(device)
    discriminator.to(device)
    logger.info(
        f"Built GAN: mode={mode}, G params={count_parameters(generator)}, D params={count_parameters(discriminator)}"
    )
    return GanState(
        generator=generator,
        discriminator=discriminator,
        ema_generator=copy.deepcopy(generator),
        mode=mode,
        ada_probability=config.augmentation.ada_initial_p,
    )


def freeze_previous(gan: GanState) -> None:
    """Snapshot the averaged generator as G_{n-1}, replacing any older snapshot."""
    gan.frozen_prev_generator = copy.deepcopy(gan.ema_generator).eval().requires_grad_(False)


def generate(
    gan: GanState,
    z: torch.Tensor,
    y: torch.Tensor,
    use_ema: bool = True,
    noise_mode: NoiseMode = "const",
) -> torch.Tensor:
    """Sample from a trained generator without tracking gradients.

    Raises:
        RangeError: If a class id was never trained
    """
    unknown = sorted(set(y.tolist()) - set(gan.trained_classes))
    if unknown:
        raise RangeError(f"generator was not trained on classes {unknown}", details={"unknown": unknown})
    if z.shape[0] != y.shape[0]:
        raise ShapeError(f"{z.shape[0]} noise vectors for {y.shape[0]} labels")
    net = gan.ema_generator if use_ema else gan.generator
    with torch.no_grad():
        return net(z, y, noise_mode=noise_mode)


def discriminate(gan: GanState, features: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """Score features (or images in image matching), one real score per sample."""
    return gan.discriminator(features, y)


def ema_update(gan: GanState, decay: float) -> None:
    """ema <- decay * ema + (1 - decay) * G for every parameter; buffers are copied.

    Raises:
        ContractError: If decay is outside [0, 1]
        ShapeError: If the two generators do not have identical shapes
    """
    if not 0.0 <= decay <= 1.0:
        raise ContractError(f"EMA decay {decay} outside [0, 1]")
    with torch.no_grad():
        for p_ema, p in zip(gan.ema_generator.parameters(), gan.generator.parameters(), strict=True):
            if p_ema.shape != p.shape:
                raise ShapeError(f"EMA parameter shape {tuple(p_ema.shape)} != {tuple(p.shape)}")
            p_ema.mul_(decay).add_(p, alpha=1.0 - decay)
        for b_ema, b in zip(gan.ema_generator.buffers(), gan.generator.buffers(), strict=True):
            b_ema.copy_(b)


def parameter_fingerprint(module: nn.Module) -> str:
    """SHA-256 over every parameter and buffer, for bit-identity checks."""
    digest = hashlib.sha256()
    for name, tensor in sorted(module.state_dict().items()):
        digest.update(name.encode())
        digest.update(tensor.detach().cpu().contiguous().numpy().tobytes())
    return digest.hexdigest()
