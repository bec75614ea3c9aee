"""Exact pointwise-ergodic averages on free groups, built from leafwise averages
on amenable equivalence relations and pushed forward through cocycles."""

from .errors import InputError, PreconditionError, RefinementRequired, ResourceLimitError, resource_cap

__version__ = "0.1.0"

__all__ = ["InputError", "PreconditionError", "RefinementRequired", "ResourceLimitError", "resource_cap"]
