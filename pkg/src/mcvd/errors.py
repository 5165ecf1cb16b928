"""Shared exception types."""

from __future__ import annotations


class ConvergenceError(RuntimeError):
    """An iterative estimate failed to reach its tolerance within budget.

    The partial result computed so far, when one exists, is attached as
    ``partial`` so callers can inspect or salvage it.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial
