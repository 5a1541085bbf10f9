"""Class-incremental learning with generative replay matched in classifier feature space."""

__version__ = "0.1.0"
