"""Exception hierarchy shared across the package."""


class FixedTimeEtcError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(FixedTimeEtcError):
    """An experiment configuration failed to parse or validate.

    ``path`` is the dotted field path of the offending value (``"controller.f[0]"``).
    """

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class ConstraintViolation(FixedTimeEtcError):
    """A state left its open constraint interval."""

    def __init__(self, index: int, value: float, lower: float, upper: float, time: float | None = None):
        self.index = index
        self.value = value
        self.lower = lower
        self.upper = upper
        self.time = time
        when = "" if time is None else f" at t={time:.6g}"
        super().__init__(
            f"state x{index + 1}={float(value)!r} outside ({-lower}, {upper}){when}"
        )


class MappingSaturation(FixedTimeEtcError):
    """A mapped coordinate is too large to exponentiate safely."""

    def __init__(self, w: float, cap: float):
        self.w = w
        self.cap = cap
        super().__init__(f"|w|={abs(w):.6g} exceeds {cap}; constraint violation imminent")


class UnboundedFormulaError(FixedTimeEtcError):
    """A bound formula has no finite value for the supplied inputs."""


class SimulationError(FixedTimeEtcError):
    """A run aborted. ``result`` holds the partial run up to the last valid sample."""

    exit_code = 1

    def __init__(self, message: str, time: float, result=None):
        self.time = time
        self.result = result
        super().__init__(message)


class ConstraintViolationError(SimulationError):
    exit_code = 2

    def __init__(self, violation: ConstraintViolation, time: float, result=None):
        self.violation = violation
        when = "" if violation.time is not None else f" at t={time:.6g}"
        super().__init__(f"constraint violation: {violation}{when}", time, result)


class DivergenceError(SimulationError):
    exit_code = 3
