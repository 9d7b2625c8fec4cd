"""Numerical validation of the motion axioms, and evaluation away from the basepoint.

Checks, in order: the basepoint identity, an exact collision scan for closed-form strands
(zeros of h_i - h_j and poles inside the domain), sampled injectivity over quasi-random
parameters and along every generator loop, single-valuedness of algebraic strands around
the loops, and a circle-mean holomorphy residual per strand.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import sympy

from holomotion.config import settings, tolerances
from holomotion.errors import AxiomViolation, UsageError
from holomotion.logger import logger
from holomotion.models.domain import StrandKind
from holomotion.services.continuation import CollisionDetected, continue_strands
from holomotion.services.expressions import Expression
from holomotion.services.motion import (
    AlgebraicRootStrand,
    MotionFamily,
    closed_form_values,
    make_motion_family,
)
from holomotion.services.sphere import chordal_distance, configuration_separation, make_configuration
from holomotion.tasks import run_concurrently

MIN_SAMPLE_BUDGET = 100


class ValidationFailure(AxiomViolation):
    """The first violated axiom with its witness parameter."""

    def __init__(self, axiom: str, witness: complex, detail: str):
        self.axiom, self.witness, self.detail = axiom, complex(witness), detail
        super().__init__(f"Axiom '{axiom}' fails at parameter {self.witness}: {detail}")


@dataclass(frozen=True)
class ValidationReport:
    basepoint_residual: float
    injectivity_margin: float
    margin_witness: complex
    holomorphy_residuals: Tuple[float, ...]
    sample_count: int
    loop_sample_count: int
    sampler: str = "halton"
    exact_scan: bool = True
    single_valued: Tuple[bool, ...] = field(default=())


def sample_motion(family: MotionFamily, points: Sequence[complex]) -> np.ndarray:
    """Configurations at ``points``, shape (N, m). Algebraic strands are continued from the basepoint."""
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    if not family.has_algebraic:
        return closed_form_values(family, points)

    def endpoint(lam: complex) -> np.ndarray:
        return continue_strands(family, family.domain.path_to(lam)).positions[-1]

    return np.array(run_concurrently(endpoint, list(points), "sample"), dtype=complex).reshape(points.size, family.size)


def _basepoint_residual(family: MotionFamily) -> float:
    x0 = family.basepoint
    residual = 0.0
    for k, strand in enumerate(family.strands):
        value = strand.anchor if strand.kind == StrandKind.ALGEBRAIC_ROOT else complex(strand(x0))
        if not np.isfinite(value):
            raise ValidationFailure("basepoint", x0, f"strand {k + 2} has a pole at the basepoint")
        residual = max(residual, chordal_distance(value, family.base[k + 2]))
    return residual


def _exact_collision_scan(family: MotionFamily) -> None:
    """Locates collisions of closed-form strands exactly, from numerator and denominator zeros."""
    domain = family.domain
    margin = tolerances().sep
    exprs: Dict[int, sympy.Expr] = {0: sympy.Integer(0), 1: sympy.Integer(1)}
    for k, strand in enumerate(family.strands):
        if strand.kind == StrandKind.CLOSED_FORM:
            exprs[k + 2] = strand.expression.expr

    def inside(roots: np.ndarray) -> Optional[complex]:
        for root in roots:
            if np.isfinite(root) and domain.boundary_distance(root) > margin:
                return complex(root)
        return None

    for i, j in itertools.combinations(sorted(exprs), 2):
        difference = sympy.cancel(exprs[i] - exprs[j])
        if difference == 0:
            raise ValidationFailure("injectivity", family.basepoint, f"strands {i} and {j} coincide identically")
        witness = inside(Expression(difference).numerator_roots())
        if witness is not None:
            raise ValidationFailure("injectivity", witness, f"punctures {i} and {j} collide")
    for index, expr in exprs.items():
        witness = inside(Expression(sympy.cancel(expr)).pole_roots())
        if witness is not None:
            raise ValidationFailure("injectivity", witness, f"puncture {index} escapes to INF")


def _circle_radii(family: MotionFamily, samples: np.ndarray) -> np.ndarray:
    return np.minimum(tolerances().circle_radius, family.domain.boundary_distance(samples) / 4.0)


def _newton_or_nan(strand: AlgebraicRootStrand, lam: complex, z: complex) -> complex:
    root = strand.newton(lam, z)
    return complex("nan") if root is None else root


def _holomorphy_residuals(family: MotionFamily, samples: np.ndarray, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per strand: max |h(lam) - mean of h on a small circle about lam|, and where it is attained."""
    count = settings.CIRCLE_POINTS
    offsets = np.exp(2j * np.pi * np.arange(count) / count)
    circles = samples[:, None] + _circle_radii(family, samples)[:, None] * offsets[None, :]
    residuals = np.zeros(len(family.strands))
    witnesses = np.full(len(family.strands), family.basepoint, dtype=complex)
    for k, strand in enumerate(family.strands):
        center = values[:, k + 2]
        if strand.kind == StrandKind.CLOSED_FORM:
            ring = strand(circles)
        else:
            ring = np.array(
                [[_newton_or_nan(strand, lam, z) for lam in row] for row, z in zip(circles, center)],
                dtype=complex,
            )
        with np.errstate(invalid="ignore"):
            error = np.abs(center - ring.mean(axis=1))
        error = np.where(np.isfinite(error), error, np.inf)
        n = int(np.argmax(error))
        residuals[k], witnesses[k] = error[n], samples[n]
    return residuals, witnesses


def validate_motion(family: MotionFamily, sample_budget: Optional[int] = None) -> ValidationReport:
    budget = sample_budget if sample_budget is not None else settings.VALIDATION_SAMPLES
    if budget < MIN_SAMPLE_BUDGET:
        raise UsageError(f"Sample budget must be at least {MIN_SAMPLE_BUDGET}, got {budget}")
    tol = tolerances()
    x0 = family.basepoint

    residual = _basepoint_residual(family)
    if residual > tol.eq:
        raise ValidationFailure("basepoint", x0, f"base configuration off by {residual:.3e}")

    _exact_collision_scan(family)

    loops = family.domain.generators
    loop_times = np.linspace(0.0, 1.0, settings.LOOP_SAMPLES)
    single_valued = []
    loop_values = []
    loop_parameters = []
    for g, loop in enumerate(loops):
        if family.has_algebraic:
            try:
                tracks = continue_strands(family, loop)
            except CollisionDetected as e:
                raise ValidationFailure("injectivity", loop(e.t), f"collision on generator loop {g}: {e}")
            moved = np.abs(tracks.positions[-1] - tracks.positions[0]).max()
            single_valued.append(bool(moved <= tol.track))
            if moved > tol.track:
                raise ValidationFailure("single-valued", x0, f"algebraic strands permute around generator {g}")
            loop_values.append(tracks.positions)
            loop_parameters.append(loop(tracks.times))
        else:
            loop_values.append(closed_form_values(family, loop(loop_times)))
            loop_parameters.append(loop(loop_times))
            single_valued.append(True)

    samples = family.domain.sample_points(budget)
    try:
        values = sample_motion(family, samples)
    except CollisionDetected as e:
        raise ValidationFailure("injectivity", x0, f"collision while continuing to a sample: {e}")

    stacked = np.vstack([values] + loop_values) if loop_values else values
    parameters = np.concatenate([samples] + loop_parameters)
    if not np.all(np.isfinite(stacked)):
        n = int(np.argwhere(~np.isfinite(stacked))[0][0])
        raise ValidationFailure("injectivity", parameters[n], "a puncture escapes to INF")
    separation, first, second = configuration_separation(stacked)
    n = int(np.argmin(separation))
    if separation[n] <= tol.sep:
        other = "INF" if int(second[n]) == family.size else int(second[n])
        raise ValidationFailure("injectivity", parameters[n], f"punctures {int(first[n])} and {other} collide")

    residuals, witnesses = _holomorphy_residuals(family, samples, values)
    for k, value in enumerate(residuals):
        if value > tol.holomorphy:
            raise ValidationFailure("holomorphy", witnesses[k], f"strand {k + 2} residual {value:.3e}")

    report = ValidationReport(
        basepoint_residual=float(residual),
        injectivity_margin=float(separation[n]),
        margin_witness=complex(parameters[n]),
        holomorphy_residuals=tuple(float(r) for r in residuals),
        sample_count=int(samples.size),
        loop_sample_count=int(sum(len(v) for v in loop_values)),
        single_valued=tuple(single_valued),
    )
    logger.info(
        f"Motion validated: margin {report.injectivity_margin:.4e}, "
        f"max holomorphy residual {max(report.holomorphy_residuals, default=0.0):.3e}"
    )
    return report


def rebase(family: MotionFamily, basepoint: complex) -> MotionFamily:
    """The same motion seen from another basepoint."""
    domain = family.domain.with_basepoint(basepoint)
    values = sample_motion(family, [basepoint])[0]
    base = make_configuration(values)
    strands = [
        replace(strand, anchor=complex(values[k + 2])) if isinstance(strand, AlgebraicRootStrand) else strand
        for k, strand in enumerate(family.strands)
    ]
    return make_motion_family(domain, base, strands)
