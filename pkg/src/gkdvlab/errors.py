"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input outside the domain of an operation."""


class CollapseError(RuntimeError):
    """Energy minimization diverged towards -inf (supercritical collapse)."""

    def __init__(self, message, energy=None, iterations=None):
        super().__init__(message)
        self.energy = energy
        self.iterations = iterations


class BlowUpError(RuntimeError):
    """A time integration produced a non-finite or runaway field.

    ``trace`` holds the partial :class:`~gkdvlab.evolution.EvolutionTrace`
    recorded up to the last good sample.
    """

    def __init__(self, message, time, trace=None):
        super().__init__(message)
        self.time = time
        self.trace = trace


class InsufficientSamplesError(ValueError):
    """Too few time samples to fit a speed."""
