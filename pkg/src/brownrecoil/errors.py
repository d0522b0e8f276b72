"""Exception hierarchy shared by every engine."""


class DiffusionError(Exception):
    """Base class for all errors raised by brownrecoil."""


class GridMismatch(DiffusionError, ValueError):
    pass


class NonPositiveDensity(DiffusionError, ValueError):
    pass


class DriftNotGradient(DiffusionError, ValueError):
    pass


class NegativeTime(DiffusionError, ValueError):
    pass


class UnsupportedClosedForm(DiffusionError):
    """No closed form exists for the requested parameters; use a numerical engine."""


class PhaseUnwrapFailure(DiffusionError):
    pass


class StabilityViolation(DiffusionError):
    pass


class DriftDomainExceeded(DiffusionError):
    pass


class TooFewParticles(DiffusionError, ValueError):
    pass


class CoverageTooLow(DiffusionError):
    pass


class VolumeOutsideGrid(DiffusionError, ValueError):
    pass


class ParseError(DiffusionError):
    pass


class EngineError(DiffusionError):
    def __init__(self, engine, message):
        super().__init__(f"[{engine}] {message}")
        self.engine = engine


class ColumnMissing(DiffusionError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class TimeAxisMismatch(DiffusionError):
    pass
