"""Pydantic schemas for experiment configuration files."""

import hashlib
import json
import tomllib
from enum import StrEnum
from pathlib import Path
from typing import Annotated, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from genifer.core.exceptions import ConfigurationError


class MatchingMode(StrEnum):
    """Where the discriminator compares real and generated samples."""

    IFM = "ifm"  # generator emits images, D judges classifier features
    DFM = "dfm"  # generator emits features directly
    IM = "im"  # conventional image GAN


class DatasetSource(StrEnum):
    """Supported dataset sources."""

    TOY = "toy"
    FOLDER = "folder"


class GanBudgetPolicy(StrEnum):
    """How the per-task GAN image budget is derived."""

    FIXED = "fixed"
    PROPORTIONAL = "proportional"  # images_per_class * |C_t|


class StrictModel(BaseModel):
    """Base for config sections: unknown keys are errors."""

    model_config = ConfigDict(extra="forbid", frozen=True)


class DatasetConfig(StrictModel):
    """Dataset source and normalization constants."""

    source: DatasetSource = DatasetSource.TOY
    path: Path | None = Field(default=None, description="Image-folder root (source=folder)")
    image_size: int = Field(default=32, ge=8)
    channels: int = Field(default=3, ge=1)
    toy_train_per_class: int = Field(default=200, ge=1)
    toy_test_per_class: int = Field(default=100, ge=1)
    toy_seed: int = 1234
    mean: tuple[float, ...] = (0.5, 0.5, 0.5)
    std: tuple[float, ...] = (0.25, 0.25, 0.25)

    @model_validator(mode="after")
    def _check_constants(self) -> "DatasetConfig":
        if len(self.mean) != self.channels or len(self.std) != self.channels:
            raise ValueError(f"mean/std need {self.channels} entries, got {len(self.mean)}/{len(self.std)}")
        if any(s <= 0 for s in self.std):
            raise ValueError("std entries must be positive")
        if self.source == DatasetSource.FOLDER and self.path is None:
            raise ValueError("dataset.path is required for source='folder'")
        return self


class SplitConfig(StrictModel):
    """Class-incremental task split."""

    first_task_size: int = Field(default=5, ge=1)
    classes_per_task: int = Field(default=5, ge=1)
    seed: int = 0


class ClassifierConfig(StrictModel):
    """Desk-scale classifier M = g(h(x))."""

    widths: tuple[int, ...] = (32, 64, 128, 128)
    tap_point: int = Field(default=4, ge=1)
    head_init: Literal["normal", "zeros"] = "normal"
    head_init_std: float = Field(default=0.01, ge=0.0)
    pretrained_weights: Path | None = None

    @model_validator(mode="after")
    def _check_tap(self) -> "ClassifierConfig":
        if self.tap_point > len(self.widths):
            raise ValueError(f"tap_point {self.tap_point} exceeds block count {len(self.widths)}")
        return self


class GeneratorConfig(StrictModel):
    """Style-modulated conditional generator."""

    z_dim: int = Field(default=64, ge=1)
    w_dim: int = Field(default=64, ge=1)
    mapping_layers: int = Field(default=4, ge=1)
    channels: tuple[int, ...] = Field(
        default=(64, 64, 32, 32),
        description="One entry per resolution, starting at 4x4 and doubling up to image_size",
    )


class DiscriminatorConfig(StrictModel):
    """Projection discriminator."""

    channels: int = Field(default=128, ge=1)
    minibatch_std: bool = True
    image_stem_channels: tuple[int, ...] = Field(
        default=(32, 64, 128),
        description="Stride-2 conv widths mapping images to the feature grid (image matching only)",
    )


class ReplayConfig(StrictModel):
    """Classifier and GAN phase schedule."""

    mode: MatchingMode = MatchingMode.IFM
    batch_ratio: float = Field(default=0.5, ge=0.0, le=1.0, description="eta: synthetic fraction per batch")
    batch_size: int = Field(default=32, ge=1)
    classifier_epochs: int = Field(default=50, ge=1)
    learning_rate: float = Field(default=1e-4, gt=0.0)
    weight_decay: float = Field(default=5e-4, ge=0.0)
    lr_milestones: tuple[int, ...] = (15, 30, 40)
    lr_decay_factor: float = Field(default=5.0, ge=1.0)

    gan_batch_size: int = Field(default=64, ge=1)
    gan_learning_rate: float = Field(default=2.5e-3, gt=0.0)
    gan_betas: tuple[float, float] = (0.0, 0.99)
    gan_budget_policy: GanBudgetPolicy = GanBudgetPolicy.PROPORTIONAL
    gan_images_budget: int = Field(default=96_000, ge=1)
    gan_images_per_class: int = Field(default=19_200, ge=1)
    d_steps_per_g_step: int = Field(default=1, ge=1)
    lazy_r1_interval: int = Field(default=16, ge=1)
    r1_gamma: float = Field(default=0.1, ge=0.0)
    lambda_gd: float = Field(default=10.0, ge=0.0)
    ema_decay: float = Field(default=0.999, ge=0.0, le=1.0)
    train_final_gan: bool = True
    sample_grid_per_class: int = Field(
        default=8, ge=0, description="Samples per class in the per-task grid (0 disables)"
    )
    check_invariants: bool = True

    def gan_budget(self, task_class_count: int) -> int:
        """Return the number of images the GAN sees for a task of the given size."""
        if self.gan_budget_policy == GanBudgetPolicy.FIXED:
            return self.gan_images_budget
        return self.gan_images_per_class * task_class_count


class AdaptiveCoefConfig(StrictModel):
    """lambda_OD controller constants."""

    adaptive: bool = True
    initial: float = Field(default=1.0, ge=0.0)
    rho_target: float = Field(default=0.45, gt=0.0)
    update_interval: int = Field(default=4, ge=1)
    scaling_factor: float = Field(default=10.0, gt=0.0)
    lambda_max: float = Field(default=100.0, ge=0.0)
    epsilon: float = Field(default=1e-12, gt=0.0)


class HorizontalFlipOp(StrictModel):
    """Random horizontal flip."""

    kind: Literal["horizontal_flip"] = "horizontal_flip"
    prob: float = Field(default=0.5, ge=0.0, le=1.0)


class RandomCropOp(StrictModel):
    """Random crop after padding, optionally resized back to the input size."""

    kind: Literal["random_crop"] = "random_crop"
    size: int = Field(ge=1)
    padding: int = Field(default=0, ge=0)
    padding_mode: Literal["zeros", "reflect"] = "zeros"
    resize_to_input: bool = True


ClassifierAugOp = Annotated[HorizontalFlipOp | RandomCropOp, Field(discriminator="kind")]
AdaOpName = Literal["xflip", "rotate90", "translate", "brightness", "contrast"]


class AugPipelineConfig(StrictModel):
    """Classifier augmentations and adaptive discriminator augmentation."""

    classifier_ops: tuple[ClassifierAugOp, ...] = (HorizontalFlipOp(),)
    augment_synthetic: bool = Field(default=True, description="False reproduces the 'w/o CA' arm")
    ada_enabled: bool = Field(default=True, description="False reproduces the 'w/o ADA' arm")
    ada_ops: tuple[AdaOpName, ...] = ("xflip", "rotate90", "translate", "brightness", "contrast")
    ada_initial_p: float = Field(default=0.0, ge=0.0)
    p_cap: float = Field(default=0.5, ge=0.0, le=0.5)
    ada_target: float = Field(default=0.6, ge=-1.0, le=1.0)
    ada_adjust_step: float = Field(default=0.005, ge=0.0)
    ada_interval: int = Field(default=4, ge=1)
    ada_max_translation: float = Field(default=0.125, ge=0.0, le=0.5)

    @model_validator(mode="after")
    def _check_initial_p(self) -> "AugPipelineConfig":
        if self.ada_initial_p > self.p_cap:
            raise ValueError(f"ada_initial_p {self.ada_initial_p} exceeds p_cap {self.p_cap}")
        return self


class ExperimentConfig(StrictModel):
    """Complete description of one continual-learning run."""

    name: str = "genifer"
    seed: int = 0
    dataset: DatasetConfig = DatasetConfig()
    split: SplitConfig = SplitConfig()
    classifier: ClassifierConfig = ClassifierConfig()
    generator: GeneratorConfig = GeneratorConfig()
    discriminator: DiscriminatorConfig = DiscriminatorConfig()
    replay: ReplayConfig = ReplayConfig()
    adaptive: AdaptiveCoefConfig = AdaptiveCoefConfig()
    augmentation: AugPipelineConfig = AugPipelineConfig()


def config_hash(config: ExperimentConfig) -> str:
    """Return the SHA-256 of the canonical JSON form of a config."""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def parse_experiment_config(data: dict[str, object]) -> ExperimentConfig:
    """Validate a raw mapping into an ExperimentConfig.

    Raises:
        ConfigurationError: On unknown keys or invalid values
    """
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(
            f"Invalid experiment configuration ({e.error_count()} errors)",
            details={"errors": e.errors(include_url=False, include_context=False)},
        ) from e


def load_experiment_config(path: Path) -> ExperimentConfig:
    """Load an experiment config from a TOML or JSON file.

    Args:
        path: Config file path (``.toml`` or ``.json``)

    Returns:
        Validated ExperimentConfig

    Raises:
        ConfigurationError: If the file cannot be read or does not validate
    """
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise ConfigurationError(f"Cannot read config file: {path}", details={"error": str(e)}) from e

    if path.suffix == ".toml":
        data = tomllib.loads(raw.decode("utf-8"))
    elif path.suffix == ".json":
        data = json.loads(raw)
    else:
        raise ConfigurationError(f"Unsupported config format: {path.suffix}", details={"path": str(path)})
    return parse_experiment_config(data)
