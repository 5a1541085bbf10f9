"""Task stream: datasets, class-incremental splits and loaders."""

from genifer.services.data.dataset import (
    DatasetIndex,
    DatasetManifest,
    check_split_pair,
    load_image_folder,
    subset,
    write_image_folder,
)
from genifer.services.data.tasks import (
    Normalizer,
    TaskLoader,
    TaskSequence,
    build_task_sequence,
    denormalize,
    from_generator_range,
    normalize,
    task_loader,
    to_generator_range,
)
from genifer.services.data.source import load_dataset_pair
from genifer.services.data.toy import TOY_CLASS_NAMES, make_toy_dataset

__all__ = [
    "DatasetIndex",
    "DatasetManifest",
    "Normalizer",
    "TOY_CLASS_NAMES",
    "TaskLoader",
    "TaskSequence",
    "build_task_sequence",
    "check_split_pair",
    "denormalize",
    "from_generator_range",
    "load_dataset_pair",
    "load_image_folder",
    "make_toy_dataset",
    "normalize",
    "subset",
    "task_loader",
    "to_generator_range",
    "write_image_folder",
]
