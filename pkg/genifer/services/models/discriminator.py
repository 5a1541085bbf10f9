"""Projection discriminator operating on classifier features (or images)."""

from typing import Any

import torch
import torch.nn.functional as F
from torch import nn

from genifer.core.exceptions import ShapeError

MBSTD_EPS = 1e-8  # keeps sqrt finite for constant batches and B = 1


class MinibatchStdDev(nn.Module):
    """Append the mean per-feature standard deviation over the batch as one channel."""

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        centered = x - x.mean(dim=0, keepdim=True)
        std = torch.sqrt(centered.pow(2).mean(dim=0) + MBSTD_EPS).mean()
        return torch.cat([x, std.expand(x.shape[0], 1, *x.shape[2:])], dim=1)


class ProjectionDiscriminator(nn.Module):
    """D(x, y) = psi(phi(x)) + <embed(y), phi(x)>.

    ``input_shape`` is the (C, H, W) shape of the classifier's tap features.
    With ``image_shape`` set, a stride-2 stem first maps raw images onto a grid
    of ``input_shape`` so the same body judges images (image matching).
    """

    def __init__(
        self,
        input_shape: tuple[int, int, int],
        num_classes: int,
        channels: int = 128,
        minibatch_std: bool = True,
        image_shape: tuple[int, int, int] | None = None,
        stem_channels: tuple[int, ...] = (),
    ) -> None:
        super().__init__()
        self.hparams: dict[str, Any] = {
            "input_shape": tuple(input_shape),
            "num_classes": num_classes,
            "channels": channels,
            "minibatch_std": minibatch_std,
            "image_shape": tuple(image_shape) if image_shape else None,
            "stem_channels": tuple(stem_channels),
        }
        feat_channels, side, _ = input_shape
        self.feature_shape = tuple(input_shape)
        self.expected_shape = tuple(image_shape) if image_shape else self.feature_shape

        self.stem: nn.Module = nn.Identity()
        if image_shape is not None:
            img_channels, img_side, _ = image_shape
            layers: list[nn.Module] = []
            prev, size = img_channels, img_side
            widths = list(stem_channels) or [feat_channels]
            i = 0
            while size > side:
                width = widths[min(i, len(widths) - 1)]
                layers += [nn.Conv2d(prev, width, 3, stride=2, padding=1), nn.LeakyReLU(0.2)]
                prev, size, i = width, (size + 1) // 2, i + 1
            layers += [nn.Conv2d(prev, feat_channels, 1), nn.LeakyReLU(0.2)]
            self.stem = nn.Sequential(*layers)

        self.conv1 = nn.Conv2d(feat_channels, channels, 3, padding=1)
        self.mbstd: nn.Module = MinibatchStdDev() if minibatch_std else nn.Identity()
        self.conv2 = nn.Conv2d(channels + int(minibatch_std), channels, 3, padding=1)
        self.fc = nn.Linear(channels * side * side, channels)
        self.out = nn.Linear(channels, 1)
        self.embed = nn.Embedding(num_classes, channels)

    def penultimate(self, x: torch.Tensor) -> torch.Tensor:
        if tuple(x.shape[1:]) != self.expected_shape:
            raise ShapeError(
                f"discriminator expects (B, {', '.join(map(str, self.expected_shape))}), got {tuple(x.shape)}",
            )
        h = self.stem(x)
        h = F.leaky_relu(self.conv1(h), 0.2)
        h = F.leaky_relu(self.conv2(self.mbstd(h)), 0.2)
        return F.leaky_relu(self.fc(torch.flatten(h, 1)), 0.2)

    def unconditional(self, x: torch.Tensor) -> torch.Tensor:
        return self.out(self.penultimate(x)).squeeze(1)

    def forward(self, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        phi = self.penultimate(x)
        return self.out(phi).squeeze(1) + (self.embed(y) * phi).sum(dim=1)
