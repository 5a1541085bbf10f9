"""Pytest configuration and fixtures for the test suite.

Heavy fixtures (micro-scale runs) are session-scoped so that the protocol
invariant tests share one training run.
"""

from pathlib import Path

import pytest
import torch

from genifer.config import Settings
from genifer.schemas.experiment import ExperimentConfig, load_experiment_config
from genifer.services.data.dataset import DatasetIndex
from genifer.services.data.tasks import Normalizer
from genifer.services.data.toy import make_toy_dataset
from genifer.services.models.classifier import Classifier
from genifer.services.trainer.service import ContinualTrainer

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(autouse=True)
def _seed() -> None:
    """Seed the global RNG before every test."""
    torch.manual_seed(0)


@pytest.fixture(scope="session")
def cpu_settings() -> Settings:
    """Process settings pinned to deterministic CPU execution."""
    return Settings(device="cpu", deterministic=True, num_threads=1, log_level="WARNING")


@pytest.fixture(scope="session")
def micro_config() -> ExperimentConfig:
    """Protocol-invariant scale config shipped in configs/micro.toml."""
    return load_experiment_config(CONFIG_DIR / "micro.toml")


@pytest.fixture(scope="session")
def toy_config() -> ExperimentConfig:
    """Desk-scale acceptance config shipped in configs/toy.toml."""
    return load_experiment_config(CONFIG_DIR / "toy.toml")


@pytest.fixture(scope="session")
def micro_data() -> tuple[DatasetIndex, DatasetIndex]:
    """Toy train/test pair at micro scale (16 px, 8 images per class)."""
    return make_toy_dataset(8, "train", image_size=16), make_toy_dataset(8, "test", image_size=16)


@pytest.fixture
def normalizer() -> Normalizer:
    """Normalization constants of the default dataset config."""
    return Normalizer((0.5, 0.5, 0.5), (0.25, 0.25, 0.25))


@pytest.fixture
def small_classifier() -> Classifier:
    """Four-block classifier at micro widths with five seen classes."""
    classifier = Classifier(in_channels=3, widths=(8, 16, 16, 16), tap_point=4)
    return classifier.expand_head([0, 1, 2, 3, 4])


@pytest.fixture(scope="session")
def micro_run(
    micro_config: ExperimentConfig,
    micro_data: tuple[DatasetIndex, DatasetIndex],
    cpu_settings: Settings,
    tmp_path_factory: pytest.TempPathFactory,
) -> ContinualTrainer:
    """One full IFM run at micro scale with checkpoints, shared by the invariant tests."""
    trainer = ContinualTrainer(
        micro_config,
        output_dir=tmp_path_factory.mktemp("micro_run"),
        data=micro_data,
        settings=cpu_settings,
    )
    trainer.record = trainer.run()  # type: ignore[attr-defined]
    return trainer
