# -*- coding: utf-8 -*-
""" Error Types.

Every error raised on purpose by cicstone derives from one of the builtin types
below, so callers that only know about ValueError/RuntimeError keep working. The
command line maps each family onto a stable exit code.
"""

__all__ = ["ConfigurationError", "ContractError", "TrainingError", "CorruptionError", "ReplayNotReady",
           "exit_code_for"]


class ConfigurationError(ValueError):
    """ Raised for invalid configuration keys or values and mismatched dimensions. """

    exit_code = 2


class ContractError(ValueError):
    """ Raised when the inputs of an operation violate its preconditions. """

    exit_code = 2


class TrainingError(RuntimeError):
    """ Raised when a numerical quantity stops being finite during training.

    :param message: Description of the failure.
    :param step: Index of the step at which the failure was detected.
    """

    exit_code = 3

    def __init__(self, message: str, step: int = None):
        self.step = step
        if step is not None:
            message = "{} (step {})".format(message, step)
        super(TrainingError, self).__init__(message)


class CorruptionError(RuntimeError):
    """ Raised when a persisted artifact fails its integrity checks. """

    exit_code = 4


class ReplayNotReady(RuntimeError):
    """ Raised when the replay buffer holds no complete sampling window yet. """


def exit_code_for(error: BaseException) -> int:
    return getattr(error, "exit_code", 1)
