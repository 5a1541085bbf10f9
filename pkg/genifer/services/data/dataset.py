"""Dataset index and image-folder storage."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
import torch
from PIL import Image
from pydantic import BaseModel, Field, ValidationError

from genifer.core.exceptions import ConfigurationError, RangeError, ShapeError

logger = logging.getLogger(__name__)

Split = Literal["train", "test"]
MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")
IMAGE_MODES = {1: "L", 3: "RGB"}


class DatasetManifest(BaseModel):
    """Manifest stored at the root of an image-folder dataset.

    Layout::

        root/
          manifest.json          {"version": 1, "classes": [...], "image_size": 32}
          train/<class_name>/*.png
          test/<class_name>/*.png

    Class ids are positions in ``classes``.
    """

    version: Literal[1] = MANIFEST_VERSION
    classes: list[str] = Field(min_length=1)
    image_size: int = Field(ge=1)


@dataclass
class DatasetIndex:
    """Labeled images for one split, stored channel-last in [0, 1]."""

    images: torch.Tensor  # (N, H, W, C) float32
    labels: torch.Tensor  # (N,) int64 global class ids
    class_count: int
    split: Split
    class_names: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.images.ndim != 4:
            raise ShapeError(f"images must be (N, H, W, C), got {tuple(self.images.shape)}")
        if self.labels.shape != (self.images.shape[0],):
            raise ShapeError(
                f"labels shape {tuple(self.labels.shape)} does not match {self.images.shape[0]} images"
            )
        if self.class_count < 1:
            raise ConfigurationError(f"class_count must be positive, got {self.class_count}")
        if self.labels.numel() and (int(self.labels.min()) < 0 or int(self.labels.max()) >= self.class_count):
            raise RangeError(
                f"labels must lie in [0, {self.class_count})",
                details={"min": int(self.labels.min()), "max": int(self.labels.max())},
            )

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def image_size(self) -> int:
        return int(self.images.shape[1])

    @property
    def channels(self) -> int:
        return int(self.images.shape[-1])

    def classes_present(self) -> set[int]:
        return {int(c) for c in self.labels.unique()}

    def channels_first(self) -> torch.Tensor:
        """Return the images as (N, C, H, W)."""
        return self.images.permute(0, 3, 1, 2).contiguous()


def subset(index: DatasetIndex, classes: list[int] | set[int] | tuple[int, ...]) -> DatasetIndex:
    """Restrict an index to samples whose labels are in ``classes``."""
    wanted = torch.tensor(sorted(classes), dtype=torch.long)
    mask = torch.isin(index.labels, wanted)
    return DatasetIndex(
        images=index.images[mask],
        labels=index.labels[mask],
        class_count=index.class_count,
        split=index.split,
        class_names=index.class_names,
    )


def check_split_pair(train: DatasetIndex, test: DatasetIndex) -> None:
    """Ensure train and test cover the same class set."""
    if train.class_count != test.class_count or train.classes_present() != test.classes_present():
        raise ConfigurationError(
            "train and test splits must cover the same classes",
            details={
                "train_only": sorted(train.classes_present() - test.classes_present()),
                "test_only": sorted(test.classes_present() - train.classes_present()),
            },
        )


def read_manifest(root: Path) -> DatasetManifest:
    """Read and validate ``manifest.json``."""
    path = root / MANIFEST_NAME
    try:
        return DatasetManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigurationError(f"Dataset manifest not found: {path}") from e
    except ValidationError as e:
        raise ConfigurationError(
            f"Invalid dataset manifest: {path}",
            details={"errors": e.errors(include_url=False, include_context=False)},
        ) from e


def load_image_folder(root: Path, split: Split, image_size: int | None = None, channels: int = 3) -> DatasetIndex:
    """Load one split of an image-folder dataset.

    Args:
        root: Dataset root containing the manifest
        split: ``train`` or ``test``
        image_size: Resize target (defaults to the manifest's size)
        channels: 1 loads grayscale, 3 loads RGB

    Returns:
        DatasetIndex with images in [0, 1]
    """
    if channels not in IMAGE_MODES:
        raise ConfigurationError(f"image folders hold 1 or 3 channels, got {channels}")
    mode = IMAGE_MODES[channels]
    manifest = read_manifest(root)
    size = image_size or manifest.image_size
    images: list[np.ndarray] = []
    labels: list[int] = []

    for class_id, name in enumerate(manifest.classes):
        class_dir = root / split / name
        if not class_dir.is_dir():
            raise ConfigurationError(f"Missing class directory: {class_dir}")
        files = sorted(p for p in class_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
        for file in files:
            with Image.open(file) as img:
                converted = img.convert(mode)
                if converted.size != (size, size):
                    converted = converted.resize((size, size), Image.Resampling.BILINEAR)
                pixels = np.asarray(converted, dtype=np.float32) / 255.0
                images.append(pixels.reshape(size, size, channels))
            labels.append(class_id)

    if not images:
        raise ConfigurationError(f"No images found under {root / split}")

    logger.info(f"Loaded image folder: root={root}, split={split}, images={len(images)}")
    return DatasetIndex(
        images=torch.from_numpy(np.stack(images)),
        labels=torch.tensor(labels, dtype=torch.long),
        class_count=len(manifest.classes),
        split=split,
        class_names=list(manifest.classes),
    )


def write_image_folder(index: DatasetIndex, root: Path, class_names: list[str] | None = None) -> Path:
    """Write an index to the image-folder layout (PNG, 8 bit).

    Returns:
        Path of the written split directory
    """
    names = class_names or index.class_names or [f"class_{i:03d}" for i in range(index.class_count)]
    if len(names) != index.class_count:
        raise ConfigurationError(f"{len(names)} class names for {index.class_count} classes")

    root.mkdir(parents=True, exist_ok=True)
    manifest = DatasetManifest(classes=names, image_size=index.image_size)
    (root / MANIFEST_NAME).write_text(json.dumps(manifest.model_dump(), indent=2), encoding="utf-8")

    counters: dict[int, int] = {}
    pixels = (index.images.clamp(0, 1) * 255).round().to(torch.uint8).numpy()
    for img, label in zip(pixels, index.labels.tolist(), strict=True):
        class_dir = root / index.split / names[label]
        class_dir.mkdir(parents=True, exist_ok=True)
        n = counters.get(label, 0)
        counters[label] = n + 1
        array = img[..., 0] if img.shape[-1] == 1 else img
        Image.fromarray(array).save(class_dir / f"{n:05d}.png")

    logger.info(f"Wrote image folder: root={root}, split={index.split}, images={len(index)}")
    return root / index.split
