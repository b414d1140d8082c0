"""Exception types raised across the package."""


class ThermostatLabError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(ThermostatLabError, ValueError):
    pass


class InvalidParameterError(ThermostatLabError, ValueError):
    pass


class DegenerateStateError(ThermostatLabError, ValueError):
    pass


class InvalidInitialConditionError(ThermostatLabError, ValueError):
    pass


class InsufficientDataError(ThermostatLabError, ValueError):
    pass


class GridError(ThermostatLabError, ValueError):
    """Time arguments that are not grid points or lie outside the path domain."""


class UnsupportedModelError(ThermostatLabError, ValueError):
    pass


class StepSizeError(ThermostatLabError, RuntimeError):
    """Raised when step rejection keeps failing after the maximum number of halvings."""


class LowPowerWarning(UserWarning):
    pass


class TruncationWarning(UserWarning):
    pass
