"""Exception types shared across the toolkit."""


class BellBatteryError(ValueError):
    """Base class; every input/validation failure derives from this."""


class InvalidParameter(BellBatteryError):
    pass


class SizeLimitError(BellBatteryError):
    pass


class InconsistentMarginal(BellBatteryError):
    pass


class MissingParameter(BellBatteryError):
    pass


class DegenerateCalibration(BellBatteryError):
    pass


class ConvergenceWarning(UserWarning):
    pass
