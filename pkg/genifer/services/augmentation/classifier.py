"""Classifier-side augmentations (real and synthetic replay images)."""

from collections.abc import Sequence

import torch
import torch.nn.functional as F

from genifer.core.exceptions import ConfigurationError, ShapeError
from genifer.core.seeding import as_generator
from genifer.schemas.experiment import ClassifierAugOp, HorizontalFlipOp, RandomCropOp


def _check_batch(images: torch.Tensor) -> None:
    if images.ndim != 4:
        raise ShapeError(f"expected (B, C, H, W) images, got {tuple(images.shape)}")


def horizontal_flip(images: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Mirror the samples selected by the boolean ``mask`` along the width axis."""
    _check_batch(images)
    mask = mask.to(images.device).view(-1, 1, 1, 1)
    return torch.where(mask, images.flip(-1), images)


def random_crop(
    images: torch.Tensor,
    size: int,
    generator: torch.Generator,
    padding: int = 0,
    padding_mode: str = "zeros",
    resize_to_input: bool = True,
) -> torch.Tensor:
    """Crop a ``size`` x ``size`` window at an independent random offset per sample.

    Raises:
        ConfigurationError: If the crop does not fit the padded image
    """
    _check_batch(images)
    batch, _, height, width = images.shape
    if size > height + 2 * padding or size > width + 2 * padding:
        raise ConfigurationError(
            f"crop size {size} exceeds padded image {height + 2 * padding}x{width + 2 * padding}",
            details={"size": size, "padding": padding},
        )
    if padding:
        mode = "constant" if padding_mode == "zeros" else "reflect"
        images = F.pad(images, (padding, padding, padding, padding), mode=mode)

    max_y = images.shape[-2] - size
    max_x = images.shape[-1] - size
    ys = torch.randint(0, max_y + 1, (batch,), generator=generator).tolist()
    xs = torch.randint(0, max_x + 1, (batch,), generator=generator).tolist()
    crops = torch.stack([img[:, y : y + size, x : x + size] for img, y, x in zip(images, ys, xs, strict=True)])

    if resize_to_input and (size != height or size != width):
        crops = F.interpolate(crops, size=(height, width), mode="bilinear", align_corners=False)
    return crops


def apply_classifier_augs(
    images: torch.Tensor,
    ops: Sequence[ClassifierAugOp],
    seed: int | torch.Generator,
) -> torch.Tensor:
    """Apply the configured ops in order, drawing every decision per sample.

    Args:
        images: (B, C, H, W) images in [0, 1]
        ops: Ordered classifier ops
        seed: Seed or generator for the random decisions

    Returns:
        Augmented images (the input tensor itself when ``ops`` is empty)
    """
    _check_batch(images)
    generator = as_generator(seed)
    out = images
    for op in ops:
        if isinstance(op, HorizontalFlipOp):
            mask = torch.rand(images.shape[0], generator=generator) < op.prob
            out = horizontal_flip(out, mask)
        elif isinstance(op, RandomCropOp):
            out = random_crop(out, op.size, generator, op.padding, op.padding_mode, op.resize_to_input)
        else:
            raise ConfigurationError(f"unknown classifier augmentation {op!r}")
    return out
