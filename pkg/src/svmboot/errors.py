"""Exception hierarchy shared by all modules.

Each class carries the CLI exit code it maps to.
"""


class SvmBootError(Exception):
    exit_code = 1

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        out = {"error": type(self).__name__, "message": str(self)}
        out.update({k: v for k, v in self.details.items() if _jsonable(v)})
        return out


class InputError(SvmBootError, ValueError):
    """Malformed data passed to an operation (shape, label set, NaN)."""

    exit_code = 2


class ConfigError(SvmBootError, ValueError):
    """Invalid parameter or configuration value."""

    exit_code = 2


class NumericError(SvmBootError, ArithmeticError):
    """A linear system could not be solved or a numeric guard tripped."""

    exit_code = 3


class ConvergenceError(NumericError):
    """Newton iterations hit ``max_iter`` before reaching tolerance."""

    exit_code = 3


def _jsonable(value):
    return isinstance(value, (str, int, float, bool, type(None), list, dict))
