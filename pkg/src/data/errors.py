"""
Exception hierarchy for the coexistence lab.

Every failure the numerics or the spec loader can raise derives from LabError so the
CLI can map it onto a stable exit code. Conditions that fail, solves that do not converge
and inconclusive multi-starts are reported as values instead.
"""

from typing import Optional


class LabError(Exception):
    """Base class for all lab errors"""


class InvalidArgumentError(LabError):
    """Bad input to an operation (grid mismatch, non-positive length, ...)"""


class SpecViolationError(LabError):
    """A growth/interaction function or system spec breaks its invariants"""


class NumericalFailureError(LabError):
    """A linear solve or eigen-iteration failed to reach its tolerance"""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message if residual is None else f"{message} (residual={residual:.3e})")
        self.residual = residual


class UniquenessViolationError(LabError):
    """Super and sub monotone limits of a logistic problem disagree"""

    def __init__(self, message: str, gap: float):
        super().__init__(f"{message} (gap={gap:.3e})")
        self.gap = gap


class InvalidPerturbationError(LabError):
    """A perturbed growth function left the admissible class"""


class UndefinedConstantError(LabError):
    """K cannot be formed because a lower-bound logistic solution vanishes"""


class SpecParseError(LabError):
    """Spec file is not valid TOML or does not match the schema"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        location = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(f"{location}{message}")
        self.line = line
        self.column = column
