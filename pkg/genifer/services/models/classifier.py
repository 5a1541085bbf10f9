"""Classifier M = g(h(x)) with a feature tap and a growable joint head."""

import logging
import math
from pathlib import Path

import torch
import torch.nn.functional as F
from torch import nn

from genifer.core.exceptions import ConfigurationError, RangeError, ShapeError, StateError

logger = logging.getLogger(__name__)


def _groups(channels: int) -> int:
    return math.gcd(8, channels)


class ResidualBlock(nn.Module):
    """Basic residual block with GroupNorm (no running statistics)."""

    def __init__(self, in_channels: int, out_channels: int, stride: int) -> None:
        super().__init__()
        self.stride = stride
        self.conv1 = nn.Conv2d(in_channels, out_channels, 3, stride=stride, padding=1, bias=False)
        self.norm1 = nn.GroupNorm(_groups(out_channels), out_channels)
        self.conv2 = nn.Conv2d(out_channels, out_channels, 3, padding=1, bias=False)
        self.norm2 = nn.GroupNorm(_groups(out_channels), out_channels)
        self.shortcut: nn.Module = nn.Identity()
        if stride != 1 or in_channels != out_channels:
            self.shortcut = nn.Sequential(
                nn.Conv2d(in_channels, out_channels, 1, stride=stride, bias=False),
                nn.GroupNorm(_groups(out_channels), out_channels),
            )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = F.relu(self.norm1(self.conv1(x)))
        out = self.norm2(self.conv2(out))
        return F.relu(out + self.shortcut(x))


class Classifier(nn.Module):
    """Desk-scale residual classifier.

    Block 1 keeps the resolution, every later block halves it. ``h`` is
    blocks[:tap_point]; ``g`` is the remaining blocks, global average pooling
    and a single linear head over all seen classes. Logit k belongs to
    ``seen_classes[k]``.
    """

    def __init__(
        self,
        in_channels: int = 3,
        widths: tuple[int, ...] = (32, 64, 128, 128),
        tap_point: int = 4,
        head_init: str = "normal",
        head_init_std: float = 0.01,
    ) -> None:
        super().__init__()
        if not 1 <= tap_point <= len(widths):
            raise ConfigurationError(f"tap_point {tap_point} outside [1, {len(widths)}]")
        self.hparams = {
            "in_channels": in_channels,
            "widths": tuple(widths),
            "tap_point": tap_point,
            "head_init": head_init,
            "head_init_std": head_init_std,
        }
        self.in_channels = in_channels
        self.tap_point = tap_point
        self.head_init = head_init
        self.head_init_std = head_init_std

        blocks = []
        prev = in_channels
        for i, width in enumerate(widths):
            blocks.append(ResidualBlock(prev, width, stride=1 if i == 0 else 2))
            prev = width
        self.blocks = nn.ModuleList(blocks)
        self.head_width = prev
        self.head: nn.Linear | None = None
        self.seen_classes: list[int] = []
        self.register_buffer("_label_lookup", torch.full((0,), -1, dtype=torch.long), persistent=False)

    # --- shapes ---

    @property
    def downsampling(self) -> int:
        """Total stride of the blocks up to the tap point."""
        return math.prod(block.stride for block in self.blocks[: self.tap_point])  # type: ignore[misc]

    def feature_shape(self, image_size: int) -> tuple[int, int, int]:
        """Return the (C, H, W) shape of h(x) for square inputs."""
        side = math.ceil(image_size / self.downsampling)
        channels = self.blocks[self.tap_point - 1].conv2.out_channels  # type: ignore[union-attr]
        return int(channels), side, side

    # --- h and g ---

    def extract_features(self, images: torch.Tensor) -> torch.Tensor:
        """Return h(x), the output of block ``tap_point``.

        Raises:
            ShapeError: On a channel mismatch or inputs too small for the tap point
        """
        if images.ndim != 4 or images.shape[1] != self.in_channels:
            raise ShapeError(
                f"expected (B, {self.in_channels}, H, W) images, got {tuple(images.shape)}",
            )
        minimum = self.downsampling
        if images.shape[-1] < minimum or images.shape[-2] < minimum:
            raise ShapeError(
                f"spatial size {tuple(images.shape[-2:])} below minimum {minimum} for tap_point {self.tap_point}",
                details={"minimum": minimum, "tap_point": self.tap_point},
            )
        x = images
        for block in self.blocks[: self.tap_point]:
            x = block(x)
        return x

    def head_forward(self, features: torch.Tensor) -> torch.Tensor:
        """Return g(features)."""
        if self.head is None or not self.seen_classes:
            raise StateError("classifier has no seen classes; call expand_head first")
        x = features
        for block in self.blocks[self.tap_point :]:
            x = block(x)
        x = torch.flatten(F.adaptive_avg_pool2d(x, 1), 1)
        return self.head(x)

    def classify(self, images: torch.Tensor) -> torch.Tensor:
        """Return logits g(h(x)), one column per seen class."""
        if self.head is None or not self.seen_classes:
            raise StateError("classifier has no seen classes; call expand_head first")
        return self.head_forward(self.extract_features(images))

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        return self.classify(images)

    # --- head growth ---

    def expand_head(self, new_classes: list[int] | tuple[int, ...]) -> "Classifier":
        """Append one logit per new class, keeping existing rows bit-exact.

        Raises:
            ConfigurationError: If a new class is already seen or duplicated
        """
        new = list(new_classes)
        overlap = sorted(set(new) & set(self.seen_classes))
        if overlap or len(set(new)) != len(new):
            raise ConfigurationError(
                "new classes overlap seen classes or contain duplicates",
                details={"overlap": overlap},
            )
        if not new:
            return self

        old_head = self.head
        k = len(self.seen_classes)
        ref = self.blocks[0].conv1.weight  # type: ignore[union-attr]
        head = nn.Linear(self.head_width, k + len(new)).to(device=ref.device, dtype=ref.dtype)
        with torch.no_grad():
            if self.head_init == "zeros":
                head.weight.zero_()
            else:
                head.weight.normal_(0.0, self.head_init_std)
            head.bias.zero_()
            if old_head is not None:
                head.weight[:k].copy_(old_head.weight)
                head.bias[:k].copy_(old_head.bias)
        if old_head is not None:
            head.requires_grad_(old_head.weight.requires_grad)
        self.head = head
        self.seen_classes = self.seen_classes + new
        self._rebuild_lookup()
        logger.debug(f"Expanded head: {k} -> {k + len(new)} logits")
        return self

    def _rebuild_lookup(self) -> None:
        size = max(self.seen_classes) + 1 if self.seen_classes else 0
        lookup = torch.full((size,), -1, dtype=torch.long, device=self._label_lookup.device)
        for i, c in enumerate(self.seen_classes):
            lookup[c] = i
        self._label_lookup = lookup

    def label_indices(self, labels: torch.Tensor) -> torch.Tensor:
        """Map global class ids to logit indices.

        Raises:
            RangeError: If a label is not a seen class
        """
        lookup = self._label_lookup.to(labels.device)
        if labels.numel() == 0:
            return labels.clone()
        if int(labels.min()) < 0 or int(labels.max()) >= lookup.numel():
            raise RangeError("label outside seen classes", details={"seen_classes": self.seen_classes})
        idx = lookup[labels]
        if bool((idx < 0).any()):
            raise RangeError("label outside seen classes", details={"seen_classes": self.seen_classes})
        return idx

    # --- freezing ---

    def freeze_extractor(self) -> None:
        """Mark every parameter up to the tap point non-trainable."""
        for block in self.blocks[: self.tap_point]:
            block.requires_grad_(False)
        logger.info(f"Froze feature extractor up to block {self.tap_point}")

    @property
    def extractor_frozen(self) -> bool:
        return not any(p.requires_grad for block in self.blocks[: self.tap_point] for p in block.parameters())

    def load_pretrained(self, path: Path) -> None:
        """Load external weights into the blocks (head excluded)."""
        state = torch.load(path, map_location="cpu", weights_only=True)
        state = {k: v for k, v in state.items() if k.startswith("blocks.")}
        missing, unexpected = self.load_state_dict(state, strict=False)
        logger.info(f"Loaded pretrained weights: path={path}, unexpected={len(unexpected)}")


def build_classifier(
    in_channels: int,
    widths: tuple[int, ...],
    tap_point: int,
    head_init: str = "normal",
    head_init_std: float = 0.01,
    pretrained_weights: Path | None = None,
) -> Classifier:
    """Construct a classifier, optionally loading pretrained block weights."""
    classifier = Classifier(in_channels, widths, tap_point, head_init, head_init_std)
    if pretrained_weights is not None:
        classifier.load_pretrained(pretrained_weights)
    return classifier
