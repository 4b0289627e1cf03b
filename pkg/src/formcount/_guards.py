"""Enumeration guards shared by the counting engines."""

from __future__ import annotations

__all__ = ["GuardExceeded", "check_guard"]


class GuardExceeded(RuntimeError):
    """An enumeration would exceed its size guard.

    ``cost`` is the estimated number of enumerated points and ``limit`` the
    guard value.  Pass ``guard=None`` to the raising function to override.
    """

    def __init__(self, what: str, cost: int, limit: int):
        self.what = what
        self.cost = cost
        self.limit = limit
        super().__init__(f"{what}: estimated cost {cost} exceeds guard {limit}")


def check_guard(what: str, cost: int, limit: int | None):
    if limit is not None and cost > limit:
        raise GuardExceeded(what, cost, limit)
