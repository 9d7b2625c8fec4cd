"""One-point extension of a finite motion: a new holomorphic strand avoiding all others.

The strand is a polynomial in the normalized parameter u = (lam - x0) / scale whose value
at the basepoint is the new point; its coefficients maximize a smoothed minimum distance
to the other strands, found by multi-start local search and verified on a denser sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from holomotion.config import settings, tolerances
from holomotion.errors import AxiomViolation, HolomotionError, SolverFailure
from holomotion.logger import logger
from holomotion.services.braid import first_nontrivial, is_trivial_monodromy, monodromy, require_trivial_monodromy
from holomotion.services.expressions import polynomial_expression
from holomotion.services.motion import ClosedFormStrand, MotionFamily, extend_family
from holomotion.services.sphere import SpherePoint, chordal_distance, chordal_to_infinity, is_infinite
from holomotion.services.validation import ValidationReport, sample_motion, validate_motion
from holomotion.tasks import run_concurrently

SOFTMIN_TEMPERATURE = 0.01
RIDGE = 1e-6
START_SPREAD = 0.1
DENSE_FACTOR = 4


class InvalidNewPoint(AxiomViolation):
    def __init__(self, point: SpherePoint, reason: str):
        self.point = point
        super().__init__(f"Cannot add the point {point}: {reason}")


class NoStrandFound(SolverFailure):
    """No candidate reached the required margin. Says nothing about existence."""

    def __init__(self, degree: int, best_margin: float):
        self.degree, self.best_margin = degree, best_margin
        super().__init__(f"No strand of degree {degree} reaches the required margin (best {best_margin:.4e})")


class NontrivialExtendedMonodromy(SolverFailure):
    def __init__(self, degree: int, generator: int):
        self.degree, self.generator = degree, generator
        super().__init__(
            f"Every degree-{degree} strand with enough margin gives the extended motion a "
            f"nontrivial monodromy (generator {generator})"
        )


@dataclass(frozen=True)
class StrandAnsatz:
    degree: int
    center: complex
    scale: float
    anchor: complex

    def powers(self, points: np.ndarray) -> np.ndarray:
        """(N, degree) matrix of u^k, k = 1..degree."""
        u = (np.asarray(points, dtype=complex) - self.center) / self.scale
        return u[:, None] ** np.arange(1, self.degree + 1)[None, :]

    def coefficients(self, flat: np.ndarray) -> np.ndarray:
        return flat[: self.degree] + 1j * flat[self.degree :]

    def values(self, flat: np.ndarray, powers: np.ndarray) -> np.ndarray:
        return self.anchor + powers @ self.coefficients(flat)

    def strand(self, flat: np.ndarray) -> ClosedFormStrand:
        return ClosedFormStrand(polynomial_expression(self.anchor, self.coefficients(flat), self.center, self.scale))


@dataclass(frozen=True, eq=False)
class StrandSolution:
    strand: ClosedFormStrand
    degree: int
    coefficients: np.ndarray
    margin: float
    family: MotionFamily  # the extended motion
    report: ValidationReport


def check_new_point(family: MotionFamily, point: SpherePoint) -> complex:
    if is_infinite(point):
        raise InvalidNewPoint(point, "INF is already a puncture")
    point = complex(point)
    if not (math.isfinite(point.real) and math.isfinite(point.imag)):
        raise InvalidNewPoint(point, "not a finite complex number")
    sep = tolerances().sep
    for k, p in enumerate(family.base.punctures):
        if chordal_distance(point, p) <= sep:
            raise InvalidNewPoint(point, f"it coincides with base puncture {k}")
    return point


def _sample_set(family: MotionFamily, factor: int = 1) -> np.ndarray:
    domain = family.domain
    loop_times = np.linspace(0.0, 1.0, factor * settings.LOOP_SAMPLES)
    parts = [np.array([domain.basepoint]), domain.sample_points(factor * settings.VALIDATION_SAMPLES)]
    parts += [loop(loop_times) for loop in domain.generators]
    return np.concatenate(parts)


def _objective(flat: np.ndarray, ansatz: StrandAnsatz, powers: np.ndarray, others: np.ndarray) -> float:
    tau = SOFTMIN_TEMPERATURE
    margin_min = tolerances().margin_min
    h = ansatz.values(flat, powers)
    distances = np.abs(h[:, None] - others)
    soft_min = -tau * logsumexp(-distances / tau)
    shortfall = np.concatenate([(margin_min - distances).ravel(), margin_min - chordal_to_infinity(h)])
    penalty = tau * np.logaddexp(0.0, shortfall / tau).sum()
    return float(-soft_min + penalty + RIDGE * np.dot(flat, flat))


def _margin(h: np.ndarray, others: np.ndarray) -> float:
    if not np.all(np.isfinite(h)):
        return -np.inf
    euclidean = float(np.abs(h[:, None] - others).min())
    return min(euclidean, float(chordal_to_infinity(h).min()))


def _candidates(ansatz: StrandAnsatz, powers: np.ndarray, others: np.ndarray) -> List[np.ndarray]:
    size = 2 * ansatz.degree
    zero = np.zeros(size)
    if size == 0:
        return [zero]
    rng = np.random.default_rng(settings.RANDOM_SEED + ansatz.degree)
    starts = [zero] + list(START_SPREAD * rng.standard_normal((max(settings.SOLVER_STARTS - 1, 0), size)))

    def local_search(start: np.ndarray) -> np.ndarray:
        result = minimize(_objective, start, args=(ansatz, powers, others), method="L-BFGS-B")
        return np.asarray(result.x, dtype=float)

    return [zero] + run_concurrently(local_search, starts, "solver")


def solve_new_strand(family: MotionFamily, point: SpherePoint, degree: int) -> StrandSolution:
    """A closed-form strand through ``point`` at the basepoint keeping ``margin_min`` clearance.

    The extended motion is validated and its monodromy rechecked; candidates are tried in
    order of verified margin until one passes.
    """
    point = check_new_point(family, point)
    if degree < 0:
        raise InvalidNewPoint(point, f"degree must be non-negative, got {degree}")
    require_trivial_monodromy(family)
    margin_min = tolerances().margin_min

    points = _sample_set(family)
    x0 = family.basepoint
    scale = float(np.abs(points - x0).max()) or 1.0
    ansatz = StrandAnsatz(degree, x0, scale, point)
    others = sample_motion(family, points)

    dense = _sample_set(family, DENSE_FACTOR)
    dense_others = sample_motion(family, dense)
    dense_powers = ansatz.powers(dense)

    ranked = []
    for flat in _candidates(ansatz, ansatz.powers(points), others):
        margin = _margin(ansatz.values(flat, dense_powers), dense_others)
        ranked.append((-margin, float(np.dot(flat, flat)), len(ranked), flat))
    ranked.sort(key=lambda item: item[:3])
    best_margin = -ranked[0][0]
    logger.debug(f"Degree {degree}: best verified margin {best_margin:.4e} over {len(ranked)} candidate(s)")

    offending: Optional[int] = None
    for negative_margin, _, _, flat in ranked:
        if -negative_margin < margin_min:
            break
        strand = ansatz.strand(flat)
        try:
            extended = extend_family(family, strand, point)
            report = validate_motion(extended)
        except AxiomViolation as e:
            logger.warning(f"Candidate strand rejected by validation: {e}")
            continue
        classes = monodromy(extended)
        if not is_trivial_monodromy(extended, classes):
            g = offending = first_nontrivial(classes)
            logger.warning(f"Candidate strand gives nontrivial extended monodromy at generator {g}; trying the next")
            continue
        logger.info(f"New strand of degree {degree} through {point}: margin {-negative_margin:.4e}")
        return StrandSolution(strand, degree, ansatz.coefficients(flat), -negative_margin, extended, report)

    if offending is not None:
        raise NontrivialExtendedMonodromy(degree, offending)
    raise NoStrandFound(degree, best_margin)


def solve_with_schedule(
    family: MotionFamily, point: SpherePoint, schedule: Optional[Sequence[int]] = None
) -> StrandSolution:
    """Tries each degree of the schedule in turn; re-raises the last solver failure."""
    schedule = list(schedule if schedule is not None else settings.DEGREE_SCHEDULE)
    if not schedule:
        raise InvalidNewPoint(point, "the degree schedule is empty")
    failure: Optional[HolomotionError] = None
    for degree in schedule:
        try:
            return solve_new_strand(family, point, degree)
        except (NoStrandFound, NontrivialExtendedMonodromy) as e:
            logger.warning(f"Degree {degree} failed: {e}")
            failure = e
    raise failure
