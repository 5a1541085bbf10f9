"""Class-conditional style-modulated generators.

A mapping network turns (z, one-hot y) into a style vector w. A learned
constant is refined by modulated convolutions, each followed by per-pixel noise
injection. ``StyleGenerator`` emits images in [-1, 1] (image and indirect feature
matching); ``FeatureGenerator`` emits feature maps directly (direct feature
matching) and never upsamples.
"""

import math
from typing import Any, Literal

import torch
import torch.nn.functional as F
from torch import nn

from genifer.core.exceptions import CheckpointError, ConfigurationError

NoiseMode = Literal["random", "const", "none"]


def pixel_norm(x: torch.Tensor, eps: float = 1e-8) -> torch.Tensor:
    return x * torch.rsqrt(x.pow(2).mean(dim=1, keepdim=True) + eps)


class MappingNetwork(nn.Module):
    """MLP from (z, class embedding) to the style vector w."""

    def __init__(self, z_dim: int, num_classes: int, w_dim: int, num_layers: int) -> None:
        super().__init__()
        self.num_classes = num_classes
        self.embed = nn.Linear(num_classes, z_dim)
        layers: list[nn.Module] = []
        in_dim = 2 * z_dim
        for _ in range(num_layers):
            layers += [nn.Linear(in_dim, w_dim), nn.LeakyReLU(0.2)]
            in_dim = w_dim
        self.net = nn.Sequential(*layers)

    def forward(self, z: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        onehot = F.one_hot(y, self.num_classes).to(z.dtype)
        return self.net(torch.cat([pixel_norm(z), pixel_norm(self.embed(onehot))], dim=1))


class ModulatedConv2d(nn.Module):
    """Convolution whose input channels are scaled by a per-sample style."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int, w_dim: int, demodulate: bool) -> None:
        super().__init__()
        self.out_channels = out_channels
        self.padding = kernel_size // 2
        self.demodulate = demodulate
        self.scale = 1.0 / math.sqrt(in_channels * kernel_size**2)
        self.weight = nn.Parameter(torch.randn(out_channels, in_channels, kernel_size, kernel_size))
        self.affine = nn.Linear(w_dim, in_channels)
        nn.init.ones_(self.affine.bias)

    def forward(self, x: torch.Tensor, w: torch.Tensor) -> torch.Tensor:
        batch, in_channels, height, width = x.shape
        style = self.affine(w)
        weight = self.scale * self.weight[None] * style[:, None, :, None, None]
        if self.demodulate:
            demod = torch.rsqrt(weight.pow(2).sum(dim=(2, 3, 4)) + 1e-8)
            weight = weight * demod[:, :, None, None, None]
        weight = weight.reshape(batch * self.out_channels, in_channels, *weight.shape[-2:])
        out = F.conv2d(x.reshape(1, batch * in_channels, height, width), weight, padding=self.padding, groups=batch)
        return out.reshape(batch, self.out_channels, *out.shape[-2:])


class NoiseInjection(nn.Module):
    """Learned-strength per-pixel noise; ``const`` mode reuses a fixed map."""

    def __init__(self, resolution: int) -> None:
        super().__init__()
        self.strength = nn.Parameter(torch.zeros(()))
        self.register_buffer("noise_const", torch.randn(1, 1, resolution, resolution))

    def forward(self, x: torch.Tensor, noise_mode: NoiseMode) -> torch.Tensor:
        if noise_mode == "none":
            return x
        if noise_mode == "const":
            noise = self.noise_const.to(x.dtype)
        else:
            noise = torch.randn(x.shape[0], 1, *x.shape[-2:], device=x.device, dtype=x.dtype)
        return x + self.strength * noise


class StyleConv(nn.Module):
    """Optional 2x upsampling, modulated 3x3 conv, noise, bias, LeakyReLU."""

    def __init__(self, in_channels: int, out_channels: int, w_dim: int, resolution: int, upsample: bool) -> None:
        super().__init__()
        self.upsample = upsample
        self.conv = ModulatedConv2d(in_channels, out_channels, 3, w_dim, demodulate=True)
        self.noise = NoiseInjection(resolution)
        self.bias = nn.Parameter(torch.zeros(1, out_channels, 1, 1))

    def forward(self, x: torch.Tensor, w: torch.Tensor, noise_mode: NoiseMode) -> torch.Tensor:
        if self.upsample:
            x = F.interpolate(x, scale_factor=2, mode="bilinear", align_corners=False)
        x = self.noise(self.conv(x, w), noise_mode)
        return F.leaky_relu(x + self.bias, 0.2)


class _StyleBackbone(nn.Module):
    """Mapping network, learned constant and StyleConv stack shared by both generators."""

    def __init__(
        self,
        z_dim: int,
        num_classes: int,
        w_dim: int,
        mapping_layers: int,
        channels: tuple[int, ...],
        base_resolution: int,
        upsample: bool,
    ) -> None:
        super().__init__()
        self.z_dim = z_dim
        self.num_classes = num_classes
        self.mapping = MappingNetwork(z_dim, num_classes, w_dim, mapping_layers)
        self.const = nn.Parameter(torch.randn(1, channels[0], base_resolution, base_resolution))
        layers = [StyleConv(channels[0], channels[0], w_dim, base_resolution, upsample=False)]
        resolution = base_resolution
        for prev, cur in zip(channels[:-1], channels[1:], strict=True):
            if upsample:
                resolution *= 2
            layers.append(StyleConv(prev, cur, w_dim, resolution, upsample=upsample))
        self.layers = nn.ModuleList(layers)
        self.out_resolution = resolution

    def synthesize(self, z: torch.Tensor, y: torch.Tensor, noise_mode: NoiseMode) -> tuple[torch.Tensor, torch.Tensor]:
        w = self.mapping(z, y)
        x = self.const.expand(z.shape[0], -1, -1, -1)
        for layer in self.layers:
            x = layer(x, w, noise_mode)
        return x, w


class StyleGenerator(_StyleBackbone):
    """Image generator G(z, y) -> x' in [-1, 1]."""

    def __init__(
        self,
        z_dim: int,
        num_classes: int,
        w_dim: int,
        mapping_layers: int,
        channels: tuple[int, ...],
        image_size: int,
        image_channels: int = 3,
    ) -> None:
        levels = int(math.log2(image_size // 4)) + 1
        if image_size < 4 or 4 * 2 ** (levels - 1) != image_size or len(channels) != levels:
            raise ConfigurationError(
                f"image_size {image_size} needs a power of two >= 4 and {levels} channel entries, got {len(channels)}"
            )
        super().__init__(z_dim, num_classes, w_dim, mapping_layers, tuple(channels), 4, upsample=True)
        self.hparams: dict[str, Any] = {
            "z_dim": z_dim,
            "num_classes": num_classes,
            "w_dim": w_dim,
            "mapping_layers": mapping_layers,
            "channels": tuple(channels),
            "image_size": image_size,
            "image_channels": image_channels,
        }
        self.to_rgb = ModulatedConv2d(channels[-1], image_channels, 1, w_dim, demodulate=False)
        self.rgb_bias = nn.Parameter(torch.zeros(1, image_channels, 1, 1))

    @property
    def output_shape(self) -> tuple[int, int, int]:
        size = self.hparams["image_size"]
        return self.hparams["image_channels"], size, size

    def forward(self, z: torch.Tensor, y: torch.Tensor, noise_mode: NoiseMode = "random") -> torch.Tensor:
        x, w = self.synthesize(z, y, noise_mode)
        return torch.tanh(self.to_rgb(x, w) + self.rgb_bias)


class FeatureGenerator(_StyleBackbone):
    """Feature generator G(z, y) -> h-shaped map (non-negative, like post-ReLU features)."""

    def __init__(
        self,
        z_dim: int,
        num_classes: int,
        w_dim: int,
        mapping_layers: int,
        channels: tuple[int, ...],
        feature_shape: tuple[int, int, int],
    ) -> None:
        feature_channels, side, _ = feature_shape
        super().__init__(z_dim, num_classes, w_dim, mapping_layers, tuple(channels), side, upsample=False)
        self.hparams: dict[str, Any] = {
            "z_dim": z_dim,
            "num_classes": num_classes,
            "w_dim": w_dim,
            "mapping_layers": mapping_layers,
            "channels": tuple(channels),
            "feature_shape": tuple(feature_shape),
        }
        self.to_features = ModulatedConv2d(channels[-1], feature_channels, 1, w_dim, demodulate=False)
        self.feature_bias = nn.Parameter(torch.zeros(1, feature_channels, 1, 1))

    @property
    def output_shape(self) -> tuple[int, int, int]:
        return tuple(self.hparams["feature_shape"])  # type: ignore[return-value]

    def forward(self, z: torch.Tensor, y: torch.Tensor, noise_mode: NoiseMode = "random") -> torch.Tensor:
        x, w = self.synthesize(z, y, noise_mode)
        return F.softplus(self.to_features(x, w) + self.feature_bias)


GENERATOR_KINDS: dict[str, type[nn.Module]] = {
    "style": StyleGenerator,
    "feature": FeatureGenerator,
}


def generator_kind(generator: nn.Module) -> str:
    for kind, cls in GENERATOR_KINDS.items():
        if type(generator) is cls:
            return kind
    raise CheckpointError(f"unknown generator type {type(generator).__name__}")


def count_parameters(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())
