"""Shared containers for constructed states and validation failures."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .swsh import SpinField

__all__ = ["ValidationError", "StateBundle"]


class ValidationError(ValueError):
    """A parameter set for which no state of the requested family exists.

    ``code`` is a stable machine-readable tag; the message gives the reason.
    """

    code = "INVALID"

    def __init__(self, message: str, code: str | None = None) -> None:
        super().__init__(message)
        if code is not None:
            self.code = code


@dataclass(eq=False)
class StateBundle:
    """A normalized most classical state with its analytic metadata.

    ``targets`` holds the closed-form expectation values the state was
    built to have, ``family`` the remaining construction parameters.
    """

    system: str
    field: SpinField
    params: Any
    normalization: float
    targets: dict[str, complex] = field(default_factory=dict)
    family: dict[str, Any] = field(default_factory=dict)
