"""
Exception hierarchy shared by the services and the command line.

Every error carries the process exit code the CLI reports for it.
"""
from typing import Optional, Sequence


class RelGatError(Exception):
    exit_code: int = 2

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class ShapeError(RelGatError):
    """Operands with incompatible shapes"""

    @classmethod
    def mismatch(cls, what: str, left: Sequence[int], right: Sequence[int]) -> "ShapeError":
        return cls(f"{what}: shape {tuple(left)} is incompatible with shape {tuple(right)}")


class EmptySupportError(RelGatError):
    """Softmax over an empty or fully masked support"""


class ConfigurationError(RelGatError):
    """Invalid dimensions, missing parameter groups or labels"""


class DomainError(RelGatError):
    """Value outside the domain of an operation"""


class EmptyGraphError(RelGatError):
    """Graph with zero nodes"""


class UsageError(RelGatError):
    """Invalid combination of command options"""


class InputError(RelGatError):
    """Malformed input document or distribution"""

    def __init__(
        self,
        message: str,
        source: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[int] = None,
    ):
        location = ""
        if source is not None:
            location = f"{source}"
            if line is not None:
                location += f":{line}:{column or 0}"
            location += ": "
        super().__init__(f"{location}{message}")
        self.source = source
        self.line = line
        self.column = column


class CheckFailure(RelGatError):
    """A verification command found a discrepancy"""

    exit_code = 1
