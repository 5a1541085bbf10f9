"""Classifier and GAN losses."""

from genifer.services.losses.functional import (
    DistillationPair,
    classifier_loss,
    current_task_loss,
    discriminator_loss,
    generator_distillation_loss,
    generator_gan_loss,
    generator_loss,
    kappa,
    output_distillation_loss,
    r1_penalty,
    softmax_probs,
    softplus,
)

__all__ = [
    "DistillationPair",
    "classifier_loss",
    "current_task_loss",
    "discriminator_loss",
    "generator_distillation_loss",
    "generator_gan_loss",
    "generator_loss",
    "kappa",
    "output_distillation_loss",
    "r1_penalty",
    "softmax_probs",
    "softplus",
]
