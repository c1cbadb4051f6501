"""
Exception hierarchy for the squeezing-gate simulator
"""
from typing import Optional


class GateSimulationError(Exception):
    """Base class for every error raised by the simulator"""


class InvalidArgumentError(GateSimulationError, ValueError):
    """A parameter is out of range, non-finite or has the wrong shape"""


class PhysicalityError(GateSimulationError):
    """A computed state violates the uncertainty relation beyond tolerance"""


class InfeasibleParametersError(GateSimulationError):
    """No parameter set satisfies the requested constraints"""


class InfeasibleFeedforwardError(InfeasibleParametersError):
    """The feedforward beam is too weak to cancel the ancilla noise"""

    def __init__(self, required_attenuation: float, minimum_gain_db: float):
        self.required_attenuation = required_attenuation
        self.minimum_gain_db = minimum_gain_db
        super().__init__(
            f"feedforward needs attenuation {required_attenuation:.6g} > 1; "
            f"OPA2 gain must be at least {minimum_gain_db:.2f} dB"
        )


class EmptyBandError(InvalidArgumentError):
    """The masked spectral band contains no frequency bins"""


class DegenerateMeasurementError(InvalidArgumentError):
    """A squeezing pair carries no information about loss or squeezing"""


class InconsistentMeasurementError(InvalidArgumentError):
    """A squeezing pair cannot come from a squeezer followed by loss"""


class ConfigError(GateSimulationError):
    """Configuration file could not be parsed or validated"""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[int] = None,
        key: Optional[str] = None,
    ):
        self.message = message
        self.path = path
        self.line = line
        self.column = column
        self.key = key
        super().__init__(str(self))

    def __str__(self) -> str:
        location = [str(part) for part in (self.path, self.line, self.column) if part is not None]
        if location:
            return f"{':'.join(location)}: {self.message}"
        return self.message
