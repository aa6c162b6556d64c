"""
Error taxonomy shared by the services, the CLI and the HTTP surface
"""
from typing import Optional


# CLI exit codes
EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_IO_ERROR = 3
EXIT_NOT_CONVERGED = 4


class SimulatorError(Exception):
    """Base class for every error raised on purpose by the simulator"""
    exit_code = 1


class ConfigError(SimulatorError):
    """
    A manifest or configuration could not be loaded or validated.

    Attributes:
        code: machine-readable reason (config_not_found, config_syntax, config_invalid)
        field: dotted path of the offending field, when there is one
    """
    exit_code = EXIT_CONFIG_ERROR

    NOT_FOUND = "config_not_found"
    SYNTAX = "config_syntax"
    INVALID = "config_invalid"

    def __init__(self, message: str, code: str = INVALID, field: Optional[str] = None):
        self.code = code
        self.field = field
        prefix = f"[{code}]"
        if field:
            prefix += f" {field}:"
        super().__init__(f"{prefix} {message}")

    @classmethod
    def from_validation_error(cls, exc, root: str = "") -> "ConfigError":
        """Build a ConfigError from a pydantic ValidationError, naming the first bad field"""
        first = exc.errors()[0]
        parts = [str(p) for p in first.get("loc", ())]
        if root:
            parts.insert(0, root)
        field = ".".join(parts) or None
        return cls(first.get("msg", str(exc)), code=cls.INVALID, field=field)


class ContractViolation(SimulatorError, ValueError):
    """An operation was called outside its documented preconditions"""


class OutputError(SimulatorError):
    """Results could not be written to disk"""
    exit_code = EXIT_IO_ERROR
