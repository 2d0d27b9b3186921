class QAGibbsError(Exception):
    """Base class for library errors."""


class ConfigurationMismatch(QAGibbsError, ValueError):
    pass


class CapacityError(QAGibbsError, ValueError):
    pass


class DimensionMismatch(QAGibbsError, ValueError):
    pass


class NotHermitian(QAGibbsError, ValueError):
    pass


class EmptyGrid(QAGibbsError, ValueError):
    pass


class DegeneracyNotFound(QAGibbsError):
    def __init__(self, target, attempts):
        super().__init__(f"no instance with degeneracy {target} after {attempts} attempts")
        self.target = target
        self.attempts = attempts


class UnknownAnnealLabel(QAGibbsError, KeyError):
    pass


class TransportError(QAGibbsError):
    pass


class DecodeError(QAGibbsError, ValueError):
    pass


class FixtureMiss(QAGibbsError, LookupError):
    pass
