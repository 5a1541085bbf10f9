"""Classifier augmentations and adaptive discriminator augmentation."""

from genifer.services.augmentation.ada import (
    AdaCall,
    AdaController,
    AdaPipeline,
    ada_apply,
    ada_signal,
    ada_update,
)
from genifer.services.augmentation.classifier import apply_classifier_augs, horizontal_flip, random_crop

__all__ = [
    "AdaCall",
    "AdaController",
    "AdaPipeline",
    "ada_apply",
    "ada_signal",
    "ada_update",
    "apply_classifier_augs",
    "horizontal_flip",
    "random_crop",
]
