from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.stats import qmc

from holomotion.config import tolerances
from holomotion.errors import AxiomViolation
from holomotion.logger import logger
from holomotion.models.domain import DomainKind
from holomotion.services.paths import ArcSegment, LineSegment, Path


class DomainError(AxiomViolation):
    """Domain geometry is unusable (basepoint placement, blocked generator loops, no path)."""


class OutsideDomain(AxiomViolation):
    def __init__(self, point: complex):
        self.point = point
        super().__init__(f"Parameter {point} lies outside the domain")


def _segment_distance(a: complex, b: complex, p: complex) -> float:
    """Euclidean distance from p to the segment [a, b]."""
    d = b - a
    if d == 0:
        return abs(p - a)
    s = ((p - a) * d.conjugate()).real / abs(d) ** 2
    s = min(1.0, max(0.0, s))
    return abs(p - (a + s * d))


@dataclass(frozen=True)
class ParameterDomain:
    kind: DomainKind
    basepoint: complex
    center: complex = 0j
    radius: float = 1.0
    inner_radius: float = 0.0  # annulus only
    punctures: Tuple[complex, ...] = field(default=())  # finitely-punctured-disk only

    def _holes(self) -> List[Tuple[complex, float]]:
        """Excluded closed disks (center, radius); radius 0 for point punctures."""
        if self.kind == DomainKind.PUNCTURED_DISK:
            return [(self.center, 0.0)]
        if self.kind == DomainKind.ANNULUS:
            return [(self.center, self.inner_radius)]
        if self.kind == DomainKind.FINITELY_PUNCTURED_DISK:
            return [(p, 0.0) for p in self.punctures]
        return []

    def boundary_distance(self, lam):
        """Distance to the boundary (outer circle, punctures, inner circle); negative outside."""
        points = np.asarray(lam, dtype=complex)
        distance = self.radius - np.abs(points - self.center)
        for hole, hole_radius in self._holes():
            distance = np.minimum(distance, np.abs(points - hole) - hole_radius)
        return float(distance) if distance.ndim == 0 else distance

    def contains(self, lam) -> bool:
        return bool(np.all(self.boundary_distance(lam) > 0))

    def segment_is_clear(self, a: complex, b: complex, clearance: float) -> bool:
        """Whether every point of [a, b] keeps ``clearance`` from the boundary."""
        for end in (a, b):
            if self.radius - abs(end - self.center) < clearance:
                return False
        return all(_segment_distance(a, b, hole) - r >= clearance for hole, r in self._holes())

    @property
    def generator_count(self) -> int:
        if self.kind == DomainKind.DISK:
            return 0
        if self.kind == DomainKind.FINITELY_PUNCTURED_DISK:
            return len(self.punctures)
        return 1

    @cached_property
    def generators(self) -> Tuple[Path, ...]:
        """Counterclockwise loops based at the basepoint, one per generator of pi_1."""
        eps = tolerances().boundary
        x0 = self.basepoint
        if self.kind == DomainKind.DISK:
            return ()
        if self.kind in (DomainKind.PUNCTURED_DISK, DomainKind.ANNULUS):
            if self.boundary_distance(x0) < eps:
                raise DomainError(f"Generator loop through {x0} comes within {eps} of the boundary")
            return (Path.loop_around(self.center, x0),)

        loops = []
        for j, p in enumerate(self.punctures):
            others = [abs(p - q) for k, q in enumerate(self.punctures) if k != j]
            delta = 0.5 * min(others + [self.radius - abs(p - self.center), abs(x0 - p)])
            if delta < eps:
                raise DomainError(f"Puncture {j} at {p} leaves no room for a generator loop")
            direction = (x0 - p) / abs(x0 - p)
            foot = p + delta * direction
            spoke = Path.line(x0, foot)
            if not all(
                _segment_distance(x0, foot, q) >= eps for k, q in enumerate(self.punctures) if k != j
            ):
                raise DomainError(f"Generator loop {j} is blocked by another puncture")
            loops.append(spoke.then(Path.loop_around(p, foot)).then(spoke.reverse()))
        return tuple(loops)

    def sample_points(self, count: int) -> np.ndarray:
        """Deterministic low-discrepancy points keeping ``boundary`` clearance."""
        eps = tolerances().boundary
        sampler = qmc.Halton(d=2, scramble=False)
        accepted = np.zeros(0, dtype=complex)
        batch = max(2 * count, 16)
        while accepted.size < count:
            uv = sampler.random(batch)
            points = self.center + self.radius * np.sqrt(uv[:, 0]) * np.exp(2j * np.pi * uv[:, 1])
            points = points[self.boundary_distance(points) >= eps]
            accepted = np.concatenate([accepted, points])
        return accepted[:count]

    def path_to(self, lam: complex) -> Path:
        """A path from the basepoint to ``lam`` staying inside the domain."""
        lam = complex(lam)
        if not self.contains(lam):
            raise OutsideDomain(lam)
        x0 = self.basepoint
        clearance = 0.5 * min(tolerances().boundary, self.boundary_distance(x0), self.boundary_distance(lam))
        if self.segment_is_clear(x0, lam, clearance):
            return Path.line(x0, lam)

        if self.kind in (DomainKind.PUNCTURED_DISK, DomainKind.ANNULUS):
            radius = abs(x0 - self.center)
            start_angle = cmath.phase(x0 - self.center)
            sweep = cmath.phase((lam - self.center) / (x0 - self.center))
            arc = ArcSegment(self.center, radius, start_angle, sweep)
            corner = arc.end
            segments = (arc, LineSegment(corner, lam)) if corner != lam else (arc,)
            return Path(segments, x0, lam)

        # finitely punctured: one clear intermediate point, shortest total length
        best: Optional[Tuple[float, complex]] = None
        for w in self.sample_points(256):
            if self.segment_is_clear(x0, w, clearance) and self.segment_is_clear(w, lam, clearance):
                length = abs(w - x0) + abs(lam - w)
                if best is None or length < best[0]:
                    best = (length, complex(w))
        if best is None:
            raise DomainError(f"No clear path from {x0} to {lam}")
        logger.debug(f"Routing path to {lam} through {best[1]}")
        return Path.line(x0, best[1]).then(Path.line(best[1], lam))

    def with_basepoint(self, basepoint: complex) -> "ParameterDomain":
        return make_domain(
            self.kind,
            basepoint,
            center=self.center,
            radius=self.radius,
            inner_radius=self.inner_radius,
            punctures=self.punctures,
        )

    def describe(self) -> dict:
        """JSON-ready summary; complex numbers as [re, im] pairs."""
        data = {
            "kind": self.kind.value,
            "basepoint": [self.basepoint.real, self.basepoint.imag],
            "center": [self.center.real, self.center.imag],
            "radius": self.radius,
            "generators": self.generator_count,
        }
        if self.kind == DomainKind.ANNULUS:
            data["inner_radius"] = self.inner_radius
        if self.kind == DomainKind.FINITELY_PUNCTURED_DISK:
            data["punctures"] = [[p.real, p.imag] for p in self.punctures]
        return data


def make_domain(
    kind: Union[DomainKind, str],
    basepoint: complex,
    center: complex = 0j,
    radius: float = 1.0,
    inner_radius: float = 0.0,
    punctures: Tuple[complex, ...] = (),
) -> ParameterDomain:
    """Builds and checks a ParameterDomain; generator loops are built eagerly."""
    kind = DomainKind(kind)
    if not radius > 0 or not math.isfinite(radius):
        raise DomainError(f"Outer radius must be positive, got {radius}")
    if kind == DomainKind.ANNULUS and not 0 < inner_radius < radius:
        raise DomainError(f"Annulus needs 0 < inner_radius < radius, got {inner_radius}, {radius}")
    if kind == DomainKind.FINITELY_PUNCTURED_DISK:
        if not punctures:
            raise DomainError("A finitely-punctured disk needs at least one puncture")
        if any(abs(complex(p) - center) >= radius for p in punctures):
            raise DomainError("Domain punctures must lie inside the outer circle")
    domain = ParameterDomain(
        kind=kind,
        basepoint=complex(basepoint),
        center=complex(center),
        radius=float(radius),
        inner_radius=float(inner_radius) if kind == DomainKind.ANNULUS else 0.0,
        punctures=tuple(complex(p) for p in punctures) if kind == DomainKind.FINITELY_PUNCTURED_DISK else (),
    )
    if not domain.contains(domain.basepoint):
        raise DomainError(f"Basepoint {basepoint} is not in the domain interior")
    domain.generators  # raises if a loop is blocked
    return domain

