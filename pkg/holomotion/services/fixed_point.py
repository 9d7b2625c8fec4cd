from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np

from holomotion.config import settings, tolerances
from holomotion.errors import SolverFailure, UsageError
from holomotion.logger import logger

Operator = Callable[[np.ndarray], np.ndarray]


class Diverged(SolverFailure):
    def __init__(self, max_iterations: int, last_increment: float):
        self.max_iterations, self.last_increment = max_iterations, last_increment
        super().__init__(
            f"Fixed-point iteration did not converge in {max_iterations} iterations "
            f"(last increment {last_increment:.3e})"
        )


@dataclass(frozen=True)
class FixedPointProblem:
    target: complex
    operator: Operator
    tol: float = field(default_factory=lambda: tolerances().fixed_point)
    max_iterations: int = field(default_factory=lambda: settings.MAX_ITERATIONS)


@dataclass(frozen=True, eq=False)
class FixedPointResult:
    solution: np.ndarray
    iterations: int
    increments: Tuple[float, ...]

    @property
    def contraction_rates(self) -> np.ndarray:
        """Ratios of successive sup-norm increments."""
        steps = np.asarray(self.increments)
        with np.errstate(divide="ignore", invalid="ignore"):
            return steps[1:] / steps[:-1]


@dataclass(frozen=True, eq=False)
class UniquenessReport:
    solutions: Tuple[np.ndarray, ...]
    spread: float
    agrees: bool


def fixed_point_iterate(problem: FixedPointProblem, initial) -> FixedPointResult:
    """Iterates until sup |g - (target + K g)| < tol; ``iterations`` counts applied updates."""
    g = np.array(initial, dtype=complex)
    if not np.all(np.isfinite(g)):
        raise UsageError("Initial grid function must be finite")
    increments: List[float] = []
    for n in range(problem.max_iterations + 1):
        update = problem.target + np.asarray(problem.operator(g), dtype=complex)
        increment = float(np.max(np.abs(update - g))) if g.size else 0.0
        increments.append(increment)
        if not np.isfinite(increment):
            break
        if increment < problem.tol:
            logger.debug(f"Fixed point reached after {n} update(s)")
            return FixedPointResult(update, n, tuple(increments))
        g = update
    raise Diverged(problem.max_iterations, increments[-1])


def probe_uniqueness(problem: FixedPointProblem, initials: Sequence) -> UniquenessReport:
    """Converges from every initial function and compares the limits within 10 * tol."""
    if len(initials) < 3:
        raise UsageError("The uniqueness probe needs at least three initial functions")
    solutions = tuple(fixed_point_iterate(problem, initial).solution for initial in initials)
    spread = max(float(np.max(np.abs(a - b))) for a, b in itertools.combinations(solutions, 2))
    return UniquenessReport(solutions, spread, spread <= 10.0 * problem.tol)
