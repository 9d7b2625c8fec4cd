"""Continuation of all strands of a motion along a parameter path.

Closed-form strands are evaluated directly. Algebraic strands are tracked with an Euler
predictor on dz/dlam = -P_lam / P_z and a Newton corrector, halving the step whenever the
corrector settles on a root other than the predicted one. Samples are then refined until
no strand moves more than a quarter of the minimum separation between adjacent samples,
so that no crossing can hide between samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from holomotion.config import settings, tolerances
from holomotion.errors import AxiomViolation, SolverFailure, UsageError
from holomotion.logger import logger
from holomotion.models.domain import StrandKind
from holomotion.services.motion import AlgebraicRootStrand, MotionFamily
from holomotion.services.paths import Path
from holomotion.services.sphere import (
    Configuration,
    SpherePoint,
    chordal_to_infinity,
    configuration_separation,
    is_infinite,
)

MAX_TRACK_SAMPLES = 1 << 20


class PathNotBased(UsageError):
    def __init__(self, start: complex, basepoint: complex):
        self.start, self.basepoint = start, basepoint
        super().__init__(f"Path starts at {start}, not at the basepoint {basepoint}")


class CollisionDetected(AxiomViolation):
    """Two strands (or a strand and INF, ``j == -1``) came within the tracking tolerance."""

    def __init__(self, t: float, i: int, j: int, distance: float):
        self.t, self.i, self.j, self.distance = t, i, j, distance
        other = "INF" if j < 0 else j
        super().__init__(f"Strands {i} and {other} collide at path time {t:.6f} (separation {distance:.3e})")


class StepUnderflow(SolverFailure):
    def __init__(self, t: float):
        self.t = t
        super().__init__(f"Continuation step underflow at path time {t:.12f}")


class NotClosed(UsageError):
    pass


class TooClose(UsageError):
    pass


@dataclass(frozen=True, eq=False)
class StrandTracks:
    times: np.ndarray  # (T,) increasing, from 0 to 1
    positions: np.ndarray  # (T, m) all finite punctures, frozen 0 and 1 included
    min_separation: float
    path: Path

    @property
    def strand_count(self) -> int:
        return self.positions.shape[1]

    @property
    def start_configuration(self) -> Configuration:
        return Configuration(tuple(complex(z) for z in self.positions[0]))

    @property
    def end_configuration(self) -> Configuration:
        return Configuration(tuple(complex(z) for z in self.positions[-1]))

    def reversed(self) -> "StrandTracks":
        return StrandTracks(1.0 - self.times[::-1], self.positions[::-1].copy(), self.min_separation, self.path.reverse())


def _chordal_steps(positions: np.ndarray) -> np.ndarray:
    """Largest chordal move of any strand between consecutive samples, shape (T-1,)."""
    a, b = positions[:-1], positions[1:]
    scale = np.sqrt((1.0 + np.abs(a) ** 2) * (1.0 + np.abs(b) ** 2))
    return (2.0 * np.abs(a - b) / scale).max(axis=1)


def _predict_correct(strand: AlgebraicRootStrand, lam0: complex, z0: complex, lam1: complex) -> Optional[complex]:
    velocity = strand.velocity(lam0, z0)
    if not np.isfinite(velocity):
        return None
    predicted = z0 + velocity * (lam1 - lam0)
    corrected = strand.newton(lam1, predicted)
    if corrected is None:
        return None
    roots = strand.roots(lam1)
    distance = np.abs(roots - predicted)
    order = np.argsort(distance)
    if abs(corrected - roots[order[0]]) > 1e-8 * max(1.0, abs(corrected)):
        return None  # corrector jumped to another root
    if roots.size > 1 and 2.0 * distance[order[0]] >= distance[order[1]]:
        return None  # prediction does not single out a root
    return corrected


def _advance(strand: AlgebraicRootStrand, path: Path, t0: float, z0: complex, t1: float) -> complex:
    z1 = _predict_correct(strand, path(t0), z0, path(t1))
    if z1 is not None:
        return z1
    if t1 - t0 < tolerances().min_step:
        raise StepUnderflow(t0)
    middle = 0.5 * (t0 + t1)
    return _advance(strand, path, middle, _advance(strand, path, t0, z0, middle), t1)


def _track_root(strand: AlgebraicRootStrand, path: Path, times: np.ndarray, start: complex) -> np.ndarray:
    values = np.empty(times.size, dtype=complex)
    values[0] = start
    for n in range(1, times.size):
        values[n] = _advance(strand, path, times[n - 1], values[n - 1], times[n])
    return values


def _sweep(family: MotionFamily, path: Path, start: np.ndarray, times: np.ndarray) -> np.ndarray:
    parameters = path(times)
    positions = np.empty((times.size, family.size), dtype=complex)
    positions[:, 0] = 0
    positions[:, 1] = 1
    for k, strand in enumerate(family.strands):
        if strand.kind == StrandKind.ALGEBRAIC_ROOT:
            positions[:, k + 2] = _track_root(strand, path, times, start[k + 2])
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                positions[:, k + 2] = strand(parameters)
    return positions


def _separations(times: np.ndarray, positions: np.ndarray) -> Tuple[np.ndarray, float]:
    if not np.all(np.isfinite(positions)):
        n, i = np.argwhere(~np.isfinite(positions))[0]
        raise CollisionDetected(float(times[n]), int(i), -1, 0.0)
    separation, first, second = configuration_separation(positions)
    n = int(np.argmin(separation))
    if separation[n] <= tolerances().track:
        j = -1 if int(second[n]) == positions.shape[1] else int(second[n])
        raise CollisionDetected(float(times[n]), int(first[n]), j, float(separation[n]))
    return separation, float(separation[n])


def continue_strands(
    family: MotionFamily,
    path: Path,
    start: Optional[Configuration] = None,
    initial_samples: Optional[int] = None,
) -> StrandTracks:
    """Continues every strand along ``path``.

    Without ``start`` the path must begin at the basepoint and starts from the base
    configuration; otherwise ``start`` is the configuration at ``path.start``.
    """
    if start is None:
        if abs(path.start - family.basepoint) > tolerances().eq * max(1.0, abs(family.basepoint)):
            raise PathNotBased(path.start, family.basepoint)
        start = family.base
    start_values = start.as_array()

    if path.length == 0:
        times = np.array([0.0, 1.0])
        positions = np.vstack([start_values, start_values])
        _, min_separation = _separations(times, positions)
        return StrandTracks(times, positions, min_separation, path)

    samples = initial_samples or settings.INITIAL_SAMPLES
    times = np.union1d(np.linspace(0.0, 1.0, samples), path.breakpoints)
    positions = _sweep(family, path, start_values, times)
    while True:
        _, min_separation = _separations(times, positions)
        bad = _chordal_steps(positions) >= min_separation / 4.0
        if not bad.any():
            break
        widths = np.diff(times)
        if widths[bad].min() < tolerances().min_step or times.size > MAX_TRACK_SAMPLES:
            raise StepUnderflow(float(times[:-1][bad][0]))
        midpoints = 0.5 * (times[:-1][bad] + times[1:][bad])
        times = np.union1d(times, midpoints)
        positions = _sweep(family, path, start_values, times)

    logger.debug(f"Continued {family.size} strands over {times.size} samples (separation {min_separation:.3e})")
    return StrandTracks(times, positions, min_separation, path)


def min_separation(tracks: StrandTracks) -> float:
    """Minimum chordal separation over all samples, against 0, 1 and INF included."""
    return tracks.min_separation


def winding_number(tracks: StrandTracks, strand: int, center: SpherePoint) -> int:
    """Winding of a closed strand track around ``center``; around INF, the winding of 1/z about 0."""
    if not tracks.path.is_closed:
        raise NotClosed("Winding numbers need a closed path")
    z = tracks.positions[:, strand]
    if abs(z[-1] - z[0]) > tolerances().track:
        raise NotClosed(f"Strand {strand} does not return to its starting point")

    if is_infinite(center):
        if chordal_to_infinity(z).min() <= tolerances().track:
            raise TooClose(f"Strand {strand} passes within tolerance of INF")
        shifted = 1.0 / z
    else:
        scale = np.sqrt((1.0 + np.abs(z) ** 2) * (1.0 + abs(center) ** 2))
        if (2.0 * np.abs(z - center) / scale).min() <= tolerances().track:
            raise TooClose(f"Strand {strand} passes within tolerance of {center}")
        shifted = z - center
    turns = float(np.sum(np.angle(shifted[1:] / shifted[:-1]))) / (2.0 * math.pi)
    return int(round(turns))
