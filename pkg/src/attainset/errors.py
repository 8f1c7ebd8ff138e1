"""Exception types shared across the package."""


class AttainsetError(Exception):
    """Base class for package-specific failures."""


class DivergenceError(AttainsetError):
    """A rollout left the admissible region (coordinate magnitude > 1e8)."""

    def __init__(self, time, magnitude):
        self.time = float(time)
        self.magnitude = float(magnitude)
        super().__init__(
            f"trajectory diverged at t={self.time:.6g} "
            f"(max |state| = {self.magnitude:.3g})"
        )


class ConfigError(AttainsetError):
    """An experiment configuration is malformed or inconsistent."""


class DegenerateGridError(AttainsetError):
    """A time grid is unusable for a log-log order fit."""


class TruncatedSeriesError(AttainsetError):
    """Truncation errors sit at machine precision; an order fit is meaningless."""


class DegenerateRatiosError(AttainsetError):
    """All neighbor ratios equal one; the dimension fit has zero x-variance."""
