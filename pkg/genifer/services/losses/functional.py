"""Classifier and GAN losses.

Every loss reduces over the batch with an arithmetic mean. Functions take and
return tensors so autograd flows through them; none of them holds state.
"""

from collections.abc import Callable
from dataclasses import dataclass

import torch
import torch.nn.functional as F

from genifer.core.exceptions import ContractError, NumericError, RangeError, ShapeError

ScoreFn = Callable[[torch.Tensor, torch.Tensor], torch.Tensor]


def softmax_probs(logits: torch.Tensor) -> torch.Tensor:
    """Row-wise softmax with max-subtraction.

    Raises:
        NumericError: If any logit is NaN
    """
    if bool(torch.isnan(logits).any()):
        raise NumericError("NaN in logits")
    shifted = logits - logits.max(dim=-1, keepdim=True).values.detach()
    exp = shifted.exp()
    return exp / exp.sum(dim=-1, keepdim=True)


@dataclass(frozen=True)
class DistillationPair:
    """Old-model logits over K classes and new-model logits over K + L classes."""

    old_logits: torch.Tensor  # (B, K)
    new_logits: torch.Tensor  # (B, K + L)

    def __post_init__(self) -> None:
        if self.old_logits.ndim != 2 or self.new_logits.ndim != 2:
            raise ShapeError("distillation logits must be (B, classes)")
        if self.old_logits.shape[1] < 1:
            raise ContractError("distillation needs K >= 1 old classes; skip it on the first task")
        if self.old_logits.shape[0] != self.new_logits.shape[0]:
            raise ShapeError(f"batch sizes differ: {self.old_logits.shape[0]} vs {self.new_logits.shape[0]}")
        if self.new_logits.shape[1] < self.old_logits.shape[1]:
            raise ShapeError(f"new model has {self.new_logits.shape[1]} logits, fewer than K={self.k}")
        if not (bool(torch.isfinite(self.old_logits).all()) and bool(torch.isfinite(self.new_logits).all())):
            raise NumericError("non-finite distillation logits")

    @property
    def k(self) -> int:
        return int(self.old_logits.shape[1])

    @property
    def new_class_count(self) -> int:
        return int(self.new_logits.shape[1]) - self.k


def output_distillation_loss(pair: DistillationPair) -> torch.Tensor:
    """-sum_{k<K} q_old,k * log q_new,k, with q_new taken over all K + L logits.

    The log-probabilities come from the joint softmax of the new model and are
    then restricted to the first K entries; they are not renormalized.
    """
    q_old = softmax_probs(pair.old_logits)
    log_q_new = F.log_softmax(pair.new_logits, dim=1)[:, : pair.k]
    return -(q_old * log_q_new).sum(dim=1).mean()


def current_task_loss(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Cross-entropy of logit indices ``labels``.

    Raises:
        RangeError: If a label index is outside [0, logits.shape[1])
    """
    if labels.numel() and (int(labels.min()) < 0 or int(labels.max()) >= logits.shape[1]):
        raise RangeError(
            f"label index outside [0, {logits.shape[1]})",
            details={"min": int(labels.min()), "max": int(labels.max())},
        )
    return F.cross_entropy(logits, labels)


def classifier_loss(
    curr: torch.Tensor | float, od: torch.Tensor | float, lambda_od: float
) -> torch.Tensor | float:
    """L_curr + lambda_OD * L_OD.

    Raises:
        ContractError: If lambda_od is negative
    """
    if lambda_od < 0:
        raise ContractError(f"lambda_OD must be non-negative, got {lambda_od}")
    return curr + lambda_od * od


def softplus(x: torch.Tensor | float) -> torch.Tensor:
    """log(1 + e^x), stable for large |x|."""
    x = torch.as_tensor(x)
    return torch.logaddexp(x, torch.zeros_like(x))


def discriminator_loss(
    fake_scores: torch.Tensor, real_scores: torch.Tensor, r1_term: torch.Tensor | float = 0.0
) -> torch.Tensor:
    """mean f(D(fake)) + mean f(-D(real)) + R1.

    Raises:
        ContractError: If either score batch is empty
    """
    if fake_scores.numel() == 0 or real_scores.numel() == 0:
        raise ContractError("discriminator loss needs non-empty real and fake batches")
    return softplus(fake_scores).mean() + softplus(-real_scores).mean() + r1_term


def r1_penalty(
    d: ScoreFn,
    features_real: torch.Tensor,
    labels: torch.Tensor,
    gamma: float,
) -> torch.Tensor:
    """(gamma / 2) * mean ||grad_x D(x, y)||^2 at the real-side inputs.

    ``features_real`` is whatever D consumes: tap features, or images in image
    matching. Inputs that do not require grad are replaced by a leaf copy.
    The result keeps its graph so it can be backpropagated into D.

    Raises:
        ContractError: If gamma is negative or gradient tracking is disabled
    """
    if gamma < 0:
        raise ContractError(f"R1 gamma must be non-negative, got {gamma}")
    if not torch.is_grad_enabled():
        raise ContractError("R1 needs gradient tracking; called under no_grad")
    x = features_real if features_real.requires_grad else features_real.detach().requires_grad_(True)
    scores = d(x, labels)
    if not scores.requires_grad:
        return x.new_zeros(())
    (grad,) = torch.autograd.grad(scores.sum(), x, create_graph=True, allow_unused=True)
    if grad is None:
        return x.new_zeros(())
    return 0.5 * gamma * grad.pow(2).flatten(1).sum(dim=1).mean()


def generator_gan_loss(fake_scores: torch.Tensor) -> torch.Tensor:
    """mean f(-D(G(z, y)))."""
    if fake_scores.numel() == 0:
        raise ContractError("generator loss needs a non-empty batch")
    return softplus(-fake_scores).mean()


def generator_distillation_loss(imgs_new: torch.Tensor, imgs_old: torch.Tensor) -> torch.Tensor:
    """Mean absolute difference between G_n and G_{n-1} outputs for the same (z, y).

    Raises:
        ShapeError: If the shapes differ
    """
    if imgs_new.shape != imgs_old.shape:
        raise ShapeError(f"generator outputs differ in shape: {tuple(imgs_new.shape)} vs {tuple(imgs_old.shape)}")
    return (imgs_new - imgs_old).abs().mean()


def kappa(n_prev: int, n_curr: int) -> float:
    """Previous-to-current class-count ratio scaling lambda_GD (0 on the first task)."""
    if n_curr < 1 or n_prev < 0:
        raise ContractError(f"invalid class counts n_prev={n_prev}, n_curr={n_curr}")
    return n_prev / n_curr


def generator_loss(
    gan_term: torch.Tensor | float,
    gd_term: torch.Tensor | float,
    lambda_gd: float,
    kappa_value: float,
) -> torch.Tensor | float:
    """gan_term + lambda_GD * kappa * gd_term.

    Raises:
        ContractError: If lambda_gd or kappa is negative
    """
    if lambda_gd < 0 or kappa_value < 0:
        raise ContractError(f"lambda_GD and kappa must be non-negative, got {lambda_gd}, {kappa_value}")
    if kappa_value == 0:
        return gan_term
    return gan_term + lambda_gd * kappa_value * gd_term
