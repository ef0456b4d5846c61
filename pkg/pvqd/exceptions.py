"""Errors raised by the pvqd package"""


class PVQDError(Exception):
    """Base class for every error raised by pvqd"""


class InvalidGateError(PVQDError, ValueError):
    "gate support does not fit the state"


class NumericInputError(PVQDError, ValueError):
    "non-finite angle, coefficient or parameter"


class ShapeError(PVQDError, ValueError):
    "dimension or length mismatch"


class NonHermitianError(PVQDError, ValueError):
    "observable with a non-real coefficient"


class InvalidSizeError(PVQDError, ValueError):
    "lattice too small for the requested model"


class CapacityError(PVQDError):
    "dense realization requested above the qubit guard"


class InvalidConfigError(PVQDError, ValueError):
    "bad numerical configuration (dt, p, n, budgets)"


class InvalidMaskError(PVQDError, ValueError):
    "empty or out-of-range block mask"


class InvalidNoiseError(PVQDError, ValueError):
    "noise probability outside [0, 1)"


class NumericFailureError(PVQDError):
    "the loss became non-finite during optimization"


class ComparisonError(PVQDError):
    "experiments compared side by side differ in their model"


class ConfigError(PVQDError):
    """
    Experiment file error; always names the offending key
    """
    def __init__(self, key, reason):
        self.key = key
        self.reason = reason
        super(ConfigError, self).__init__("%s: %s" % (key, reason))


class EvolutionError(PVQDError):
    """
    Run aborted part way; `records` holds the completed time steps
    """
    def __init__(self, message, records, cause=None):
        self.records = list(records)
        self.cause = cause
        super(EvolutionError, self).__init__(message)
