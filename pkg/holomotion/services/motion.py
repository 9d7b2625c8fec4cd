"""Holomorphic motions of finite sets over plane domains.

A MotionFamily moves the finite punctures of its base configuration; punctures 0 and 1
are frozen and infinity is implicit. Strand ``k`` of ``family.strands`` moves puncture
``k + 2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar, Optional, Sequence, Tuple, Union

import numpy as np
import sympy

from holomotion.config import settings, tolerances
from holomotion.errors import AxiomViolation, InputError, UsageError
from holomotion.models.domain import StrandKind
from holomotion.services.domains import OutsideDomain, ParameterDomain
from holomotion.services.expressions import LAM, Z, Expression, constant_expression
from holomotion.services.sphere import (
    INF,
    Configuration,
    SpherePoint,
    chordal_distance,
    configuration_separation,
    make_configuration,
    normalize_mobius,
)


class CollisionAtParameter(AxiomViolation):
    """Two punctures meet; ``j == -1`` stands for infinity."""

    def __init__(self, i: int, j: int, parameter: complex, distance: float = 0.0):
        self.i, self.j, self.parameter, self.distance = i, j, parameter, distance
        other = "INF" if j < 0 else j
        super().__init__(f"Punctures {i} and {other} collide at parameter {parameter}")


class OffTrackEvaluation(UsageError):
    def __init__(self, index: int, parameter: complex):
        self.index, self.parameter = index, parameter
        super().__init__(
            f"Strand {index} is an algebraic root; it can only be evaluated along a continuation "
            f"track, not directly at {parameter}"
        )


class StrandMismatch(AxiomViolation):
    pass


class NotBasepointPreserving(AxiomViolation):
    def __init__(self, image: complex, basepoint: complex):
        self.image, self.basepoint = image, basepoint
        super().__init__(f"Pullback map sends the new basepoint to {image}, not to {basepoint}")


class RangeEscape(AxiomViolation):
    def __init__(self, parameter: complex, image: complex):
        self.parameter, self.image = parameter, image
        super().__init__(f"Pullback map sends {parameter} to {image}, outside the target domain")


@dataclass(frozen=True)
class ClosedFormStrand:
    expression: Expression
    kind: ClassVar[StrandKind] = StrandKind.CLOSED_FORM

    def __call__(self, lam):
        return self.expression(lam)

    def text(self) -> str:
        return self.expression.text()

    def compose(self, inner: Expression) -> "ClosedFormStrand":
        return ClosedFormStrand(self.expression.compose(inner))


@dataclass(frozen=True)
class AlgebraicRootStrand:
    """A root of P(lam, z), labeled by its value ``anchor`` at the basepoint."""

    polynomial: sympy.Expr
    anchor: complex
    source: str = field(default="", compare=False)
    kind: ClassVar[StrandKind] = StrandKind.ALGEBRAIC_ROOT

    @cached_property
    def _coefficients(self):
        poly = sympy.Poly(sympy.expand(self.polynomial), Z)
        terms = [sympy.together(c) for c in poly.all_coeffs()]
        value = [sympy.lambdify(LAM, c, modules="numpy") for c in terms]
        slope = [sympy.lambdify(LAM, sympy.diff(c, LAM), modules="numpy") for c in terms]
        return value, slope

    @property
    def degree(self) -> int:
        return sympy.Poly(sympy.expand(self.polynomial), Z).degree()

    def coefficients(self, lam: complex) -> np.ndarray:
        """Coefficients of P(lam, .) in z, highest degree first."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.array([complex(f(complex(lam))) for f in self._coefficients[0]], dtype=complex)

    def lam_derivative(self, lam: complex) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.array([complex(f(complex(lam))) for f in self._coefficients[1]], dtype=complex)

    def roots(self, lam: complex) -> np.ndarray:
        coefficients = self.coefficients(lam)
        nonzero = np.flatnonzero(coefficients)
        if nonzero.size == 0:
            return np.zeros(0, dtype=complex)
        return np.roots(coefficients[nonzero[0] :])

    def residual(self, lam: complex, z: complex) -> complex:
        return complex(np.polyval(self.coefficients(lam), z))

    def newton(self, lam: complex, z: complex, iterations: int = 30) -> Optional[complex]:
        """Newton on P(lam, .) from z; None if it does not settle."""
        coefficients = self.coefficients(lam)
        if not np.all(np.isfinite(coefficients)):
            return None
        derivative = np.polyder(coefficients)
        for _ in range(iterations):
            slope = np.polyval(derivative, z)
            if slope == 0:
                return None
            step = np.polyval(coefficients, z) / slope
            z = z - step
            if abs(step) <= 1e-14 * max(1.0, abs(z)):
                return complex(z)
        return None

    def velocity(self, lam: complex, z: complex) -> complex:
        """dz/dlam = -P_lam / P_z along the root."""
        p_z = np.polyval(np.polyder(self.coefficients(lam)), z)
        p_lam = np.polyval(self.lam_derivative(lam), z)
        return complex(-p_lam / p_z) if p_z != 0 else complex("nan")

    def text(self) -> str:
        return self.source or sympy.sstr(self.polynomial)

    def compose(self, inner: Expression) -> "AlgebraicRootStrand":
        return AlgebraicRootStrand(sympy.expand(self.polynomial.subs(LAM, inner.expr)), self.anchor)


Strand = Union[ClosedFormStrand, AlgebraicRootStrand]


@dataclass(frozen=True)
class MotionFamily:
    domain: ParameterDomain
    base: Configuration
    strands: Tuple[Strand, ...]

    @property
    def size(self) -> int:
        """Number of finite punctures, frozen 0 and 1 included."""
        return len(self.base)

    @property
    def basepoint(self) -> complex:
        return self.domain.basepoint

    @property
    def has_algebraic(self) -> bool:
        return any(s.kind == StrandKind.ALGEBRAIC_ROOT for s in self.strands)

    def strand(self, index: int) -> Strand:
        """Strand moving puncture ``index`` (index >= 2)."""
        return self.strands[index - 2]

    def describe(self) -> dict:
        return {
            "domain": self.domain.describe(),
            "base": [[p.real, p.imag] for p in self.base.punctures],
            "strands": [{"kind": s.kind.value, "text": s.text()} for s in self.strands],
        }


def make_motion_family(
    domain: ParameterDomain, base: Configuration, strands: Sequence[Strand]
) -> MotionFamily:
    """Assembles a family; the motion axioms themselves are checked by validate_motion."""
    strands = tuple(strands)
    if len(strands) != len(base) - 2:
        raise StrandMismatch(
            f"Configuration has {len(base) - 2} moving punctures but {len(strands)} strands were given"
        )
    x0 = domain.basepoint
    for k, strand in enumerate(strands):
        if strand.kind != StrandKind.ALGEBRAIC_ROOT:
            continue
        if abs(strand.anchor - base[k + 2]) > 1e-9 * max(1.0, abs(base[k + 2])):
            raise StrandMismatch(f"Strand {k + 2} is anchored at {strand.anchor}, not at its base puncture")
        root = strand.newton(x0, strand.anchor) if strand.degree >= 1 else None
        if root is None or abs(root - strand.anchor) > 1e-9 * max(1.0, abs(strand.anchor)):
            raise StrandMismatch(f"Base puncture {k + 2} is not a root of its polynomial at the basepoint")
        roots = strand.roots(x0)
        gaps = np.where(np.eye(roots.size, dtype=bool), np.inf, np.abs(roots[:, None] - roots[None, :]))
        if roots.size > 1 and gaps.min() <= tolerances().sep:
            raise StrandMismatch(f"Polynomial of strand {k + 2} has a vanishing discriminant at the basepoint")
    return MotionFamily(domain, base, strands)


def identity_family(domain: ParameterDomain, base: Configuration) -> MotionFamily:
    return make_motion_family(domain, base, [ClosedFormStrand(constant_expression(p)) for p in base.moving])


def closed_form_values(family: MotionFamily, points: np.ndarray) -> np.ndarray:
    """Positions of all finite punctures at each parameter, shape (N, m); poles give non-finite."""
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    values = np.empty((points.size, family.size), dtype=complex)
    values[:, 0] = 0
    values[:, 1] = 1
    for k, strand in enumerate(family.strands):
        if strand.kind == StrandKind.ALGEBRAIC_ROOT:
            raise OffTrackEvaluation(k + 2, complex(points[0]) if points.size else family.basepoint)
        values[:, k + 2] = strand(points)
    return values


def check_injective(values: np.ndarray, parameter: complex) -> float:
    """Raises CollisionAtParameter if one configuration is not separated; returns its separation."""
    sep = tolerances().sep
    if not np.all(np.isfinite(values)):
        i = int(np.flatnonzero(~np.isfinite(values))[0])
        raise CollisionAtParameter(i, -1, parameter)
    distance, i, j = configuration_separation(values)
    if distance <= sep:
        j = -1 if int(j) == values.size else int(j)
        raise CollisionAtParameter(int(i), j, parameter, float(distance))
    return float(distance)


def eval_motion(family: MotionFamily, lam: complex) -> Configuration:
    lam = complex(lam)
    domain = family.domain
    if not domain.contains(lam):
        raise OutsideDomain(lam)
    at_basepoint = abs(lam - family.basepoint) <= tolerances().eq
    values = np.array([0j, 1 + 0j] + [0j] * len(family.strands))
    for k, strand in enumerate(family.strands):
        if strand.kind == StrandKind.ALGEBRAIC_ROOT:
            if not at_basepoint:
                raise OffTrackEvaluation(k + 2, lam)
            values[k + 2] = strand.anchor
        else:
            values[k + 2] = strand(lam)
    check_injective(values, lam)
    return Configuration(tuple(complex(v) for v in values))


def pullback(family: MotionFamily, f: Expression, new_domain: ParameterDomain) -> MotionFamily:
    """The motion (x, z) -> family(f(x), z) over ``new_domain``."""
    image = complex(f(new_domain.basepoint))
    if abs(image - family.basepoint) > tolerances().eq * max(1.0, abs(family.basepoint)):
        raise NotBasepointPreserving(image, family.basepoint)

    probes = [new_domain.sample_points(settings.VALIDATION_SAMPLES)]
    probes += [loop(np.linspace(0.0, 1.0, settings.LOOP_SAMPLES)) for loop in new_domain.generators]
    probes = np.concatenate(probes)
    images = np.atleast_1d(f(probes))
    inside = np.isfinite(images)
    inside[inside] = family.domain.boundary_distance(images[inside]) > 0
    if not inside.all():
        k = int(np.flatnonzero(~inside)[0])
        raise RangeEscape(complex(probes[k]), complex(images[k]))

    strands = [strand.compose(f) for strand in family.strands]
    return make_motion_family(new_domain, family.base, strands)


def extend_family(family: MotionFamily, strand: Strand, point: SpherePoint) -> MotionFamily:
    """Appends one moving puncture and its strand; existing strands are kept as they are."""
    return make_motion_family(family.domain, family.base.append(point), family.strands + (strand,))


def is_extension(extended: MotionFamily, original: MotionFamily) -> bool:
    """Whether ``extended`` restricted to the punctures of ``original`` is ``original``."""
    if extended.domain != original.domain or extended.size < original.size:
        return False
    eq = tolerances().eq
    if any(chordal_distance(a, b) > eq for a, b in zip(extended.base.punctures, original.base.punctures)):
        return False
    return all(a == b for a, b in zip(extended.strands, original.strands))


def normalize_family(
    domain: ParameterDomain, points: Sequence[SpherePoint], strands: Sequence[Optional[Expression]]
) -> MotionFamily:
    """Normalizes a motion of >= 3 finite points so strands 0, 1, 2 go to 0, 1, INF.

    ``strands[k]`` moves ``points[k]``; None means constant. Strand 2 is sent to infinity and
    dropped from the finite configuration.
    """
    if len(points) < 3 or len(points) != len(strands):
        raise InputError("Normalization needs at least three points and one strand entry per point")
    if any(p is INF for p in points):
        raise InputError("Points to normalize must be finite")
    mobius = normalize_mobius(points[0], points[1], points[2])
    exprs = [s.expr if s is not None else constant_expression(p).expr for p, s in zip(points, strands)]
    h0, h1, h2 = exprs[:3]
    new_strands = []
    for expr in exprs[3:]:
        moved = sympy.cancel((expr - h0) * (h1 - h2) / ((expr - h2) * (h1 - h0)))
        new_strands.append(ClosedFormStrand(Expression(moved)))
    images = [mobius(p) for p in points[3:]]
    if any(image is INF for image in images):
        raise InputError("A normalized point landed on INF")
    base = make_configuration([0j, 1 + 0j] + images)
    return make_motion_family(domain, base, new_strands)
