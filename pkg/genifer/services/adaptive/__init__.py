"""Adaptive distillation weighting."""

from genifer.services.adaptive.coefficient import AdaptiveCoefState, simulate

__all__ = ["AdaptiveCoefState", "simulate"]
