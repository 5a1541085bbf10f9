"""Procedurally generated shape dataset bundled for tests and desk-scale runs.

Ten classes, one per shape. Foreground and background colors, position, size
and pixel noise are random per sample, so the class is carried by the shape only.
"""

import math

import torch

from genifer.core.exceptions import ConfigurationError, RangeError
from genifer.core.seeding import derive_seed, make_generator
from genifer.services.data.dataset import DatasetIndex, Split

TOY_CLASS_NAMES = [
    "disk",
    "square",
    "triangle",
    "ring",
    "x_cross",
    "plus",
    "h_stripes",
    "v_stripes",
    "checker",
    "diamond",
]


def _shape_mask(class_id: int, dx: torch.Tensor, dy: torch.Tensor, r: float, phase: float) -> torch.Tensor:
    """Boolean mask of one shape on a centered coordinate grid in [-1, 1]."""
    dist = torch.sqrt(dx**2 + dy**2)
    inside = torch.maximum(dx.abs(), dy.abs()) < r
    thickness = 0.14 * r + 0.04
    match class_id:
        case 0:
            return dist < r
        case 1:
            return torch.maximum(dx.abs(), dy.abs()) < 0.8 * r
        case 2:
            return (dy < 0.7 * r) & (dy > -0.9 * r) & (dx.abs() < 0.5 * (dy + 0.9 * r))
        case 3:
            return (dist < r) & (dist > 0.55 * r)
        case 4:
            return inside & (((dx - dy).abs() < thickness) | ((dx + dy).abs() < thickness))
        case 5:
            return inside & ((dx.abs() < thickness) | (dy.abs() < thickness))
        case 6:
            return inside & (torch.cos(dy * 4 * math.pi / r + phase) > 0)
        case 7:
            return inside & (torch.cos(dx * 4 * math.pi / r + phase) > 0)
        case 8:
            return inside & ((torch.cos(dx * 3 * math.pi / r) * torch.cos(dy * 3 * math.pi / r)) > 0)
        case 9:
            return (dx.abs() + dy.abs()) < r
    raise RangeError(f"unknown toy class {class_id}")


def make_toy_dataset(
    samples_per_class: int,
    split: Split,
    image_size: int = 32,
    seed: int = 1234,
    class_count: int = 10,
    noise_std: float = 0.04,
) -> DatasetIndex:
    """Generate the toy shape dataset.

    Args:
        samples_per_class: Images per class
        split: Split name; train and test draw from disjoint seed streams
        image_size: Side length in pixels
        seed: Dataset seed
        class_count: Number of classes (at most 10)
        noise_std: Gaussian pixel noise

    Returns:
        DatasetIndex with channel-last RGB images in [0, 1]
    """
    if not 1 <= class_count <= len(TOY_CLASS_NAMES):
        raise ConfigurationError(
            f"toy class_count must be in [1, {len(TOY_CLASS_NAMES)}]", details={"class_count": class_count}
        )

    g = make_generator(derive_seed(seed, "toy", split))
    coords = torch.linspace(-1.0, 1.0, image_size)
    yy, xx = torch.meshgrid(coords, coords, indexing="ij")

    images = torch.empty(class_count * samples_per_class, image_size, image_size, 3)
    labels = torch.empty(class_count * samples_per_class, dtype=torch.long)

    i = 0
    for class_id in range(class_count):
        for _ in range(samples_per_class):
            params = torch.rand(5, generator=g)
            cx, cy = (params[0].item() - 0.5) * 0.5, (params[1].item() - 0.5) * 0.5
            r = 0.45 + 0.25 * params[2].item()
            phase = params[3].item() * 2 * math.pi
            mask = _shape_mask(class_id, xx - cx, yy - cy, r, phase)

            background = 0.35 * torch.rand(3, generator=g)
            foreground = 0.55 + 0.45 * torch.rand(3, generator=g)
            img = torch.where(mask[..., None], foreground, background)
            img = img + noise_std * torch.randn(image_size, image_size, 3, generator=g)
            images[i] = img.clamp(0.0, 1.0)
            labels[i] = class_id
            i += 1

    return DatasetIndex(
        images=images,
        labels=labels,
        class_count=class_count,
        split=split,
        class_names=TOY_CLASS_NAMES[:class_count],
    )
