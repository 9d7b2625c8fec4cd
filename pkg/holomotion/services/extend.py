"""Inductive extension of a finite motion, one new point at a time.

Each stage solves for a new strand, re-validates the motion, rechecks its monodromy and
verifies that forgetting the new puncture gives back the previous stage in the covering
model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from holomotion.config import settings
from holomotion.errors import HolomotionError, SolverFailure
from holomotion.logger import logger
from holomotion.services.braid import require_trivial_monodromy
from holomotion.services.cover import forgetful, lift_path, same_point
from holomotion.services.motion import MotionFamily, is_extension
from holomotion.services.paths import Path
from holomotion.services.sphere import SpherePoint
from holomotion.services.strand_solver import solve_with_schedule
from holomotion.tasks import run_concurrently


class StageFailure(HolomotionError):
    """Stage ``stage`` (0-based index into the new points) failed; ``reason`` is the underlying error."""

    def __init__(self, stage: int, point: SpherePoint, reason: HolomotionError):
        self.stage, self.point, self.reason = stage, point, reason
        self.exit_code = reason.exit_code
        super().__init__(f"Stage {stage} (point {point}) failed with {reason.cause}: {reason}")


class ForgetfulMismatch(SolverFailure):
    def __init__(self, end: complex):
        self.end = end
        super().__init__(f"Forgetting the new puncture does not recover the previous lift along the path to {end}")


class NotAnExtension(SolverFailure):
    pass


@dataclass(frozen=True)
class StageRecord:
    stage: int
    point: complex
    degree: int
    margin: float
    forgetful_checks: int
    strand: str


@dataclass(frozen=True, eq=False)
class ExtensionResult:
    family: MotionFamily
    stages: Tuple[StageRecord, ...]

    def describe(self) -> dict:
        return {
            "stages": [
                {
                    "stage": record.stage,
                    "point": [record.point.real, record.point.imag],
                    "degree": record.degree,
                    "margin": record.margin,
                    "forgetful_checks": record.forgetful_checks,
                    "strand": record.strand,
                }
                for record in self.stages
            ],
        }


def compatibility_paths(family: MotionFamily) -> List[Path]:
    """Generator loops plus canonical paths to the probe points."""
    domain = family.domain
    return list(domain.generators) + [domain.path_to(lam) for lam in domain.sample_points(settings.PROBE_POINTS)]


def check_forgetful_compatibility(extended: MotionFamily, original: MotionFamily) -> int:
    """Verifies forgetful(lift in ``extended``) == lift in ``original`` on every compatibility path."""
    paths = compatibility_paths(original)

    def agrees(path: Path) -> bool:
        return same_point(forgetful(lift_path(extended, path)), lift_path(original, path))

    for path, ok in zip(paths, run_concurrently(agrees, paths, "forgetful")):
        if not ok:
            raise ForgetfulMismatch(path.end)
    return len(paths)


def extend_motion_inductive(
    family: MotionFamily, new_points: Sequence[SpherePoint], degree_schedule: Optional[Sequence[int]] = None
) -> ExtensionResult:
    require_trivial_monodromy(family)
    current = family
    records: List[StageRecord] = []
    for stage, point in enumerate(new_points):
        try:
            solution = solve_with_schedule(current, point, degree_schedule)
            if not is_extension(solution.family, current):
                raise NotAnExtension(f"Stage {stage} changed an existing strand")
            checks = check_forgetful_compatibility(solution.family, current)
        except HolomotionError as e:
            raise StageFailure(stage, point, e) from e
        records.append(
            StageRecord(stage, complex(point), solution.degree, solution.margin, checks, solution.strand.text())
        )
        logger.info(f"Stage {stage} done: point {point}, degree {solution.degree}, margin {solution.margin:.4e}")
        current = solution.family
    return ExtensionResult(current, tuple(records))
