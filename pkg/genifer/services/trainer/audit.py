"""Peak counts of model copies held during a run."""

from dataclasses import dataclass

from genifer.services.models.gan import GanState


@dataclass
class ModelAudit:
    """Largest number of classifiers, generators and discriminators alive at once.

    Averaged (EMA) generator copies are not counted.
    """

    classifiers: int = 0
    generators: int = 0
    discriminators: int = 0

    def observe(self, classifiers: int, gan: GanState | None) -> None:
        generators = 0
        discriminators = 0
        if gan is not None:
            generators = 1 + int(gan.frozen_prev_generator is not None)
            discriminators = 1
        self.classifiers = max(self.classifiers, classifiers)
        self.generators = max(self.generators, generators)
        self.discriminators = max(self.discriminators, discriminators)

    def within_limits(self) -> bool:
        return self.classifiers <= 2 and self.generators <= 2 and self.discriminators <= 1

    def as_dict(self) -> dict[str, int]:
        return {
            "classifiers": self.classifiers,
            "generators": self.generators,
            "discriminators": self.discriminators,
        }
