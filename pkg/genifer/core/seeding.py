"""Seed derivation and deterministic-mode helpers."""

import hashlib
import logging

import torch

logger = logging.getLogger(__name__)


def derive_seed(base: int, *parts: object) -> int:
    """Derive an independent 63-bit seed from a base seed and a purpose tag.

    Args:
        base: Run seed
        *parts: Purpose components, e.g. ``("classifier", task)``

    Returns:
        Non-negative integer seed
    """
    key = ":".join([str(base), *(str(p) for p in parts)])
    digest = hashlib.sha256(key.encode()).digest()
    return int.from_bytes(digest[:8], "big") & 0x7FFF_FFFF_FFFF_FFFF


def make_generator(seed: int) -> torch.Generator:
    """Return a CPU torch generator seeded with ``seed``."""
    generator = torch.Generator()
    generator.manual_seed(seed)
    return generator


def as_generator(seed: int | torch.Generator) -> torch.Generator:
    """Accept either a seed or an existing generator."""
    if isinstance(seed, torch.Generator):
        return seed
    return make_generator(seed)


def seed_everything(seed: int, deterministic: bool = True) -> None:
    """Seed the global torch RNG and optionally force deterministic kernels."""
    torch.manual_seed(seed)
    if deterministic:
        torch.use_deterministic_algorithms(True, warn_only=True)
        torch.backends.cudnn.benchmark = False
    logger.debug(f"Seeded global RNG: seed={seed}, deterministic={deterministic}")
