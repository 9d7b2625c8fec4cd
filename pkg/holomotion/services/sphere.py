"""Arithmetic on the Riemann sphere: points, chordal metric, Mobius maps, configurations.

The point at infinity is the singleton ``INF``; it is never encoded as a large float.
Configurations hold the finite punctures only, with 0 and 1 in the first two slots and
infinity as an implicit frozen puncture.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple, Union

import numpy as np

from holomotion.config import tolerances
from holomotion.errors import AxiomViolation


class Infinity:
    """The point at infinity of the Riemann sphere."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __reduce__(self):
        return (Infinity, ())


INF = Infinity()

SpherePoint = Union[complex, Infinity]


class InvalidPoint(AxiomViolation):
    def __init__(self, value):
        self.value = value
        super().__init__(f"Not a point of the Riemann sphere: {value!r}")


class DegenerateTriple(AxiomViolation):
    def __init__(self, p: SpherePoint, q: SpherePoint, r: SpherePoint):
        self.points = (p, q, r)
        super().__init__(f"Normalization triple has coinciding points: {p!r}, {q!r}, {r!r}")


class DegenerateMobius(AxiomViolation):
    def __init__(self, determinant: complex):
        self.determinant = determinant
        super().__init__(f"Mobius determinant too small: |ad - bc| = {abs(determinant):.3e}")


class SeparationViolation(AxiomViolation):
    def __init__(self, i: int, j: int, distance: float):
        self.i, self.j, self.distance = i, j, distance
        super().__init__(
            f"Punctures {i} and {j} are not separated (chordal distance {distance:.3e})"
        )


class InfinitePuncture(AxiomViolation):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"Puncture {index} is INF; infinity is an implicit puncture")


class NotNormalized(AxiomViolation):
    def __init__(self, points: Sequence[SpherePoint]):
        self.points = tuple(points)
        super().__init__(
            "A configuration must start with the punctures 0 and 1 "
            f"(got {list(self.points)[:2]})"
        )


def is_infinite(p: SpherePoint) -> bool:
    return p is INF


def as_sphere_point(value) -> SpherePoint:
    """Coerces numbers (or INF) into a SpherePoint, rejecting NaN components."""
    if value is INF:
        return INF
    try:
        z = complex(value)
    except (TypeError, ValueError):
        raise InvalidPoint(value)
    if math.isnan(z.real) or math.isnan(z.imag):
        raise InvalidPoint(value)
    if math.isinf(z.real) or math.isinf(z.imag):
        return INF
    return z


def chordal_distance(a: SpherePoint, b: SpherePoint) -> float:
    """Chordal distance on the sphere of diameter 2."""
    a_inf, b_inf = is_infinite(a), is_infinite(b)
    if a_inf and b_inf:
        return 0.0
    if a_inf:
        return 2.0 / math.sqrt(1.0 + abs(b) ** 2)
    if b_inf:
        return 2.0 / math.sqrt(1.0 + abs(a) ** 2)
    return 2.0 * abs(a - b) / math.sqrt((1.0 + abs(a) ** 2) * (1.0 + abs(b) ** 2))


def points_equal(a: SpherePoint, b: SpherePoint) -> bool:
    return chordal_distance(a, b) <= tolerances().eq


def chordal_matrix(points: np.ndarray) -> np.ndarray:
    """Pairwise chordal distances of finite points, shape (..., m, m)."""
    z = np.asarray(points, dtype=complex)
    scale = np.sqrt(1.0 + np.abs(z) ** 2)
    diff = np.abs(z[..., :, None] - z[..., None, :])
    return 2.0 * diff / (scale[..., :, None] * scale[..., None, :])


def chordal_to_infinity(points: np.ndarray) -> np.ndarray:
    return 2.0 / np.sqrt(1.0 + np.abs(np.asarray(points, dtype=complex)) ** 2)


def configuration_separation(points: np.ndarray, include_infinity: bool = True):
    """Minimum chordal separation of each configuration in a stack.

    ``points`` has shape (..., m). Returns ``(separation, i, j)`` arrays where ``j == m``
    stands for infinity.
    """
    z = np.asarray(points, dtype=complex)
    m = z.shape[-1]
    dist = chordal_matrix(z)
    dist = np.where(np.eye(m, dtype=bool), np.inf, dist)
    if include_infinity:
        to_inf = chordal_to_infinity(z)[..., :, None]
        dist = np.concatenate([dist, to_inf], axis=-1)
    flat = dist.reshape(dist.shape[:-2] + (-1,))
    idx = np.argmin(flat, axis=-1)
    width = dist.shape[-1]
    return np.min(flat, axis=-1), idx // width, idx % width


@dataclass(frozen=True)
class Mobius:
    """Determinant-normalized 2x2 matrix acting by z -> (az + b) / (cz + d)."""

    a: complex
    b: complex
    c: complex
    d: complex

    @classmethod
    def from_entries(cls, a: complex, b: complex, c: complex, d: complex) -> "Mobius":
        det = a * d - b * c
        if abs(det) < tolerances().det:
            raise DegenerateMobius(det)
        root = cmath.sqrt(det)
        return cls(a / root, b / root, c / root, d / root)

    def __call__(self, z: SpherePoint) -> SpherePoint:
        if is_infinite(z):
            if self.c == 0:
                return INF
            return self.a / self.c
        denominator = self.c * z + self.d
        if denominator == 0:
            return INF
        return (self.a * z + self.b) / denominator

    def compose(self, other: "Mobius") -> "Mobius":
        """Returns self o other."""
        return Mobius.from_entries(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "Mobius":
        return Mobius.from_entries(self.d, -self.b, -self.c, self.a)


def normalize_mobius(p: SpherePoint, q: SpherePoint, r: SpherePoint) -> Mobius:
    """The Mobius map sending p, q, r to 0, 1, INF (cross-ratio form)."""
    p, q, r = as_sphere_point(p), as_sphere_point(q), as_sphere_point(r)
    sep = tolerances().sep
    if min(chordal_distance(p, q), chordal_distance(q, r), chordal_distance(p, r)) <= sep:
        raise DegenerateTriple(p, q, r)

    if is_infinite(p):
        # z -> (q - r) / (z - r)
        return Mobius.from_entries(0j, q - r, 1 + 0j, -r)
    if is_infinite(q):
        # z -> (z - p) / (z - r)
        return Mobius.from_entries(1 + 0j, -p, 1 + 0j, -r)
    if is_infinite(r):
        # z -> (z - p) / (q - p)
        return Mobius.from_entries(1 + 0j, -p, 0j, q - p)
    return Mobius.from_entries(q - r, -p * (q - r), q - p, -r * (q - p))


@dataclass(frozen=True)
class Configuration:
    """Ordered finite punctures; punctures[0] == 0, punctures[1] == 1."""

    punctures: Tuple[complex, ...]

    def __len__(self) -> int:
        return len(self.punctures)

    def __getitem__(self, index: int) -> complex:
        return self.punctures[index]

    @property
    def moving(self) -> Tuple[complex, ...]:
        return self.punctures[2:]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.punctures, dtype=complex)

    def min_separation(self, include_infinity: bool = True) -> float:
        if len(self) < 2 and not include_infinity:
            return math.inf
        sep, _, _ = configuration_separation(self.as_array(), include_infinity)
        return float(sep)

    def drop_last(self) -> "Configuration":
        return Configuration(self.punctures[:-1])

    def append(self, point: SpherePoint) -> "Configuration":
        return make_configuration(list(self.punctures) + [point])


def make_configuration(points: Iterable[SpherePoint]) -> Configuration:
    """Validates a labeled puncture tuple and returns it as a Configuration."""
    values = [as_sphere_point(p) for p in points]
    for index, value in enumerate(values):
        if is_infinite(value):
            raise InfinitePuncture(index)
    if len(values) < 2 or not points_equal(values[0], 0j) or not points_equal(values[1], 1 + 0j):
        raise NotNormalized(values)

    sep = tolerances().sep
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            distance = chordal_distance(values[i], values[j])
            if distance <= sep:
                raise SeparationViolation(i, j, distance)

    return Configuration((0j, 1 + 0j) + tuple(complex(v) for v in values[2:]))
