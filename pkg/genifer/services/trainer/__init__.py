"""Continual classifier and GAN training."""

from genifer.services.trainer.audit import ModelAudit
from genifer.services.trainer.classifier_phase import ReplayBatch, sample_replay, train_classifier_task
from genifer.services.trainer.gan_phase import SurrogateBatch, build_surrogate_batch, train_gan_task
from genifer.services.trainer.service import (
    ABLATION_ARMS,
    ContinualTrainer,
    arm_config,
    evaluate_checkpoint,
    generator_retention,
    run_ablation,
    run_sequence,
)

__all__ = [
    "ABLATION_ARMS",
    "ContinualTrainer",
    "ModelAudit",
    "ReplayBatch",
    "SurrogateBatch",
    "arm_config",
    "build_surrogate_batch",
    "evaluate_checkpoint",
    "generator_retention",
    "run_ablation",
    "run_sequence",
    "sample_replay",
    "train_classifier_task",
    "train_gan_task",
]
