"""Static figures: accuracy-vs-task curves and generator sample grids."""

import logging
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import torch  # noqa: E402
from PIL import Image  # noqa: E402

from genifer.core.exceptions import ReportIOError  # noqa: E402
from genifer.core.seeding import make_generator  # noqa: E402
from genifer.schemas.experiment import MatchingMode  # noqa: E402
from genifer.schemas.records import RunRecord  # noqa: E402
from genifer.services.data.tasks import from_generator_range  # noqa: E402
from genifer.services.models.gan import GanState, generate  # noqa: E402

logger = logging.getLogger(__name__)

# PNG metadata without version or time stamps, so reruns are byte-identical
PNG_METADATA = {"Software": None}


def plot_accuracy_curves(records: list[RunRecord], path: Path, title: str | None = None) -> Path:
    """Plot alpha_all,t against t, one line per mode (mean over seeds, std band).

    Curves start at t = 1 even though alpha_all averages from t = 2.
    """
    by_mode: dict[str, list[list[float]]] = defaultdict(list)
    for r in records:
        by_mode[r.mode].append(r.accuracy_trace)

    fig, ax = plt.subplots(figsize=(6, 4))
    for mode in sorted(by_mode):
        traces = by_mode[mode]
        length = min(len(t) for t in traces)
        values = np.array([t[:length] for t in traces]) * 100.0
        tasks = np.arange(1, length + 1)
        mean = values.mean(axis=0)
        ax.plot(tasks, mean, marker="o", label=f"{mode} (n={len(traces)})")
        if len(traces) > 1:
            std = values.std(axis=0)
            ax.fill_between(tasks, mean - std, mean + std, alpha=0.2)

    ax.set_xlabel("task")
    ax.set_ylabel("overall accuracy [%]")
    ax.set_ylim(0, 100)
    ax.grid(True, alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, dpi=100, metadata=PNG_METADATA)
    except OSError as e:
        raise ReportIOError(f"Cannot write {path}", details={"error": str(e)}) from e
    finally:
        plt.close(fig)
    logger.info(f"Wrote accuracy curves: path={path}, modes={sorted(by_mode)}")
    return path


def sample_grid(gan: GanState, classes: list[int], per_class: int, path: Path, seed: int = 0) -> Path:
    """Save a grid of averaged-generator samples, one row per class.

    Only image generators are supported; DFM generators emit feature maps.
    """
    if gan.mode == MatchingMode.DFM:
        raise ReportIOError("sample grids need an image generator; DFM emits features")
    rng = make_generator(seed)
    device = next(gan.ema_generator.parameters()).device
    z_dim = gan.ema_generator.hparams["z_dim"]  # type: ignore[index]
    labels = torch.tensor([c for c in classes for _ in range(per_class)], dtype=torch.long, device=device)
    z = torch.randn(len(labels), z_dim, generator=rng).to(device)
    images = from_generator_range(generate(gan, z, labels)).clamp(0, 1).cpu()

    _, channels, height, width = images.shape
    grid = images.view(len(classes), per_class, channels, height, width)
    grid = grid.permute(0, 3, 1, 4, 2).reshape(len(classes) * height, per_class * width, channels)
    pixels = (grid * 255).round().to(torch.uint8).numpy()
    if channels == 1:
        pixels = pixels[..., 0]
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(pixels).save(path)
    except OSError as e:
        raise ReportIOError(f"Cannot write {path}", details={"error": str(e)}) from e
    logger.info(f"Wrote sample grid: path={path}, classes={len(classes)}, per_class={per_class}")
    return path
