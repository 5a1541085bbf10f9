"""Resolve the configured dataset source into train/test indices."""

from pathlib import Path

from genifer.core.exceptions import ConfigurationError
from genifer.schemas.experiment import DatasetConfig, DatasetSource
from genifer.services.data.dataset import DatasetIndex, check_split_pair, load_image_folder
from genifer.services.data.toy import make_toy_dataset


def _grayscale(index: DatasetIndex) -> DatasetIndex:
    return DatasetIndex(
        images=index.images.mean(dim=-1, keepdim=True),
        labels=index.labels,
        class_count=index.class_count,
        split=index.split,
        class_names=index.class_names,
    )


def resolve_dataset_path(config: DatasetConfig, data_root: Path) -> Path:
    """Return ``dataset.path``, resolved against ``data_root`` when relative."""
    if config.path is None:
        raise ConfigurationError("dataset.path is required for source='folder'")
    return config.path if config.path.is_absolute() else data_root / config.path


def load_dataset_pair(config: DatasetConfig, data_root: Path = Path(".")) -> tuple[DatasetIndex, DatasetIndex]:
    """Return (train, test) for the configured source.

    The toy source renders RGB; ``channels = 1`` averages it to grayscale.
    """
    if config.source == DatasetSource.TOY:
        if config.channels not in (1, 3):
            raise ConfigurationError(f"the toy source has 1 or 3 channels, got {config.channels}")
        train = make_toy_dataset(config.toy_train_per_class, "train", config.image_size, config.toy_seed)
        test = make_toy_dataset(config.toy_test_per_class, "test", config.image_size, config.toy_seed)
        if config.channels == 1:
            train, test = _grayscale(train), _grayscale(test)
    else:
        root = resolve_dataset_path(config, data_root)
        train = load_image_folder(root, "train", config.image_size, config.channels)
        test = load_image_folder(root, "test", config.image_size, config.channels)
    check_split_pair(train, test)
    return train, test
