#!/usr/bin/env python3

"""Enumerations and the budget type shared by the solvers, the cycles and the CLI."""

import re
from dataclasses import dataclass
from enum import Enum

from .errors import InvalidArgumentError

# Constants
METRIC_LABEL = "||M-VW||_F"  # The error metric printed in every report
WORK_SLACK = 1e-9  # Relative slack when comparing spent work to a budget

__all__ = [
    "METRIC_LABEL",
    "WORK_SLACK",
    "SolverKind",
    "CycleKind",
    "BudgetMode",
    "Budget",
    "parse_budget",
]


class SolverKind(Enum):
    """The three baseline NMF iterations."""

    ANLS = "anls"
    MU = "mu"
    HALS = "hals"

    @classmethod
    def parse(cls, name: str) -> "SolverKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise InvalidArgumentError(
                f"unknown algorithm {name!r} (expected one of {choices})"
            ) from None


class CycleKind(Enum):
    """Multilevel schedules; SINGLE_LEVEL is the plain solver run."""

    SINGLE_LEVEL = "none"
    NESTED_ITERATION = "ni"
    V_CYCLE = "vc"
    FULL_MULTIGRID = "fmg"

    @classmethod
    def parse(cls, name: str) -> "CycleKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise InvalidArgumentError(
                f"unknown cycle {name!r} (expected one of {choices})"
            ) from None

    @property
    def label(self) -> str:
        return {
            CycleKind.SINGLE_LEVEL: "NMF",
            CycleKind.NESTED_ITERATION: "NI",
            CycleKind.V_CYCLE: "VC",
            CycleKind.FULL_MULTIGRID: "FMG",
        }[self]


class BudgetMode(Enum):
    WORK = "work"
    TIME = "time"


@dataclass(frozen=True)
class Budget:
    """Amount T of work units or wall-clock seconds given to a run.

    One work unit is the model flop count of one fine-level iteration of the
    running algorithm.
    """

    mode: BudgetMode
    amount: float

    def __post_init__(self) -> None:
        if not self.amount >= 0:
            raise InvalidArgumentError(f"budget must be >= 0, got {self.amount}")

    def scaled(self, fraction: float) -> "Budget":
        """Return a budget of the same mode holding `fraction` of this one."""
        return Budget(self.mode, self.amount * fraction)

    def with_amount(self, amount: float) -> "Budget":
        return Budget(self.mode, max(0.0, amount))

    def __str__(self) -> str:
        return f"{self.mode.value}:{self.amount:g}"


_BUDGET_RE = re.compile(r"^(work|time):([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)$")


def parse_budget(text: str) -> Budget:
    """Parse `work:<units>` or `time:<seconds>`.

    Raises:
        InvalidArgumentError: If the string is malformed or the amount is not positive
    """
    match = _BUDGET_RE.match(text.strip())
    if not match:
        raise InvalidArgumentError(
            f"invalid budget {text!r} (expected work:<units> or time:<seconds>)"
        )
    amount = float(match.group(2))
    if amount <= 0:
        raise InvalidArgumentError(f"budget must be positive, got {text!r}")
    return Budget(BudgetMode(match.group(1)), amount)
