"""Exception types raised by the library."""


class PmuError(Exception):
    """Base class for all library errors."""


class InvalidGroupoid(PmuError):
    pass


class NotQuasiInvariant(PmuError):
    pass


class ShapeMismatch(PmuError):
    pass


class BaseAxiomFailed(PmuError):
    pass


class ModuleAxiomFailed(PmuError):
    pass


class NotInAlgebra(PmuError):
    pass


class InconsistentSystem(PmuError):
    pass


class NotInCommutant(PmuError):
    pass


class NotNormalizedFixed(PmuError):
    pass


class NotNormalizedCofixed(PmuError):
    pass


class CocycleViolation(PmuError):
    pass


class NotGroupoidPMU(PmuError):
    pass


class ParseError(PmuError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message
