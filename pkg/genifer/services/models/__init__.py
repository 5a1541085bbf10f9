"""Classifier, generators, discriminator and checkpoints."""

from genifer.services.models.checkpoint import CheckpointBundle, load_checkpoint, save_checkpoint
from genifer.services.models.classifier import Classifier, build_classifier
from genifer.services.models.discriminator import ProjectionDiscriminator
from genifer.services.models.gan import (
    GanState,
    build_dfm_variant,
    build_gan,
    discriminate,
    ema_update,
    freeze_previous,
    generate,
    parameter_fingerprint,
)
from genifer.services.models.generator import FeatureGenerator, StyleGenerator, count_parameters

__all__ = [
    "CheckpointBundle",
    "Classifier",
    "FeatureGenerator",
    "GanState",
    "ProjectionDiscriminator",
    "StyleGenerator",
    "build_classifier",
    "build_dfm_variant",
    "build_gan",
    "count_parameters",
    "discriminate",
    "ema_update",
    "freeze_previous",
    "generate",
    "load_checkpoint",
    "parameter_fingerprint",
    "save_checkpoint",
]
