"""Exception types and the global enumeration cap."""

from __future__ import annotations

import contextlib
import contextvars
from typing import Iterator

DEFAULT_CAP = 10**7

_cap: contextvars.ContextVar[int] = contextvars.ContextVar("enumeration_cap", default=DEFAULT_CAP)


class InputError(ValueError):
    """Malformed or out-of-range input."""


class PreconditionError(ValueError):
    """An operation was called outside its domain (e.g. a cylinder too shallow)."""


class RefinementRequired(PreconditionError):
    """The requested quantity is not determined at the given resolution."""


class ResourceLimitError(RuntimeError):
    """An enumeration would exceed the configured cap."""


def current_cap() -> int:
    return _cap.get()


@contextlib.contextmanager
def resource_cap(cap: int) -> Iterator[None]:
    """Temporarily change the enumeration cap for the current context."""
    if cap < 1:
        raise InputError(f"cap must be positive, got {cap}")
    token = _cap.set(cap)
    try:
        yield
    finally:
        _cap.reset(token)


def check_cap(size: int, what: str) -> None:
    cap = _cap.get()
    if size > cap:
        raise ResourceLimitError(f"{what}: {size} items exceeds cap {cap}")
