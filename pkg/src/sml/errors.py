"""Exception types and the shared element/interval budget."""

from __future__ import annotations

import os

DEFAULT_BUDGET = 10**6


class PreconditionError(ValueError):
    """An input violates the documented precondition of an operation."""


class ModelMismatch(PreconditionError):
    """Elements from two different group models were combined."""


class EscapesTower(PreconditionError):
    """An orbit leaves the finite tower it was evaluated on."""


class NotSummable(PreconditionError):
    """A sum over the marked subgroup has infinitely many nonzero terms."""


class BudgetExceeded(RuntimeError):
    """A finite enumeration would exceed the configured budget."""

    def __init__(self, what: str, needed: int, budget: int):
        super().__init__(f"{what}: {needed} exceeds budget {budget}")
        self.what = what
        self.needed = needed
        self.budget = budget


def budget() -> int:
    """Element/interval cap, read from ``SML_BUDGET`` (default 10**6)."""
    raw = os.environ.get("SML_BUDGET")
    if raw is None or raw.strip() == "":
        return DEFAULT_BUDGET
    value = int(raw)
    if value <= 0:
        raise PreconditionError(f"SML_BUDGET must be positive, got {raw!r}")
    return value


def check_budget(what: str, needed: int) -> None:
    cap = budget()
    if needed > cap:
        raise BudgetExceeded(what, needed, cap)
