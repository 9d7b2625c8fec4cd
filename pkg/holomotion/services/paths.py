from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from holomotion.errors import UsageError


class PathMismatch(UsageError):
    def __init__(self, end: complex, start: complex):
        self.end, self.start = end, start
        super().__init__(f"Cannot concatenate: path ends at {end} but the next starts at {start}")


@dataclass(frozen=True)
class LineSegment:
    start: complex
    end: complex

    @property
    def length(self) -> float:
        return abs(self.end - self.start)

    def point(self, s: np.ndarray) -> np.ndarray:
        return self.start + (self.end - self.start) * s

    def reversed(self) -> "LineSegment":
        return LineSegment(self.end, self.start)


@dataclass(frozen=True)
class ArcSegment:
    center: complex
    radius: float
    start_angle: float
    sweep: float  # signed, radians; positive is counterclockwise

    @property
    def length(self) -> float:
        return self.radius * abs(self.sweep)

    @property
    def start(self) -> complex:
        return self.center + self.radius * complex(math.cos(self.start_angle), math.sin(self.start_angle))

    @property
    def end(self) -> complex:
        angle = self.start_angle + self.sweep
        return self.center + self.radius * complex(math.cos(angle), math.sin(angle))

    def point(self, s: np.ndarray) -> np.ndarray:
        return self.center + self.radius * np.exp(1j * (self.start_angle + self.sweep * s))

    def reversed(self) -> "ArcSegment":
        return ArcSegment(self.center, self.radius, self.start_angle + self.sweep, -self.sweep)


Segment = Union[LineSegment, ArcSegment]


@dataclass(frozen=True)
class Path:
    # Segments share [0, 1] by length; path(0) and path(1) return start and end exactly
    segments: Tuple[Segment, ...]
    start: complex
    end: complex

    @classmethod
    def constant(cls, point: complex) -> "Path":
        return cls((), complex(point), complex(point))

    @classmethod
    def line(cls, start: complex, end: complex) -> "Path":
        start, end = complex(start), complex(end)
        if start == end:
            return cls.constant(start)
        return cls((LineSegment(start, end),), start, end)

    @classmethod
    def loop_around(cls, center: complex, through: complex, turns: int = 1) -> "Path":
        """Circle about ``center`` starting and ending at ``through``, counterclockwise."""
        center, through = complex(center), complex(through)
        radius = abs(through - center)
        angle = math.atan2((through - center).imag, (through - center).real)
        arc = ArcSegment(center, radius, angle, 2.0 * math.pi * turns)
        return cls((arc,), through, through)

    @property
    def length(self) -> float:
        return float(sum(segment.length for segment in self.segments))

    @property
    def is_closed(self) -> bool:
        return abs(self.end - self.start) <= 1e-12 * max(1.0, abs(self.start))

    @property
    def breakpoints(self) -> np.ndarray:
        """Times at which segments meet, including 0 and 1."""
        lengths = np.array([segment.length for segment in self.segments], dtype=float)
        if lengths.size == 0 or lengths.sum() == 0:
            return np.array([0.0, 1.0])
        cumulative = np.concatenate([[0.0], np.cumsum(lengths)]) / lengths.sum()
        cumulative[-1] = 1.0
        return cumulative

    def __call__(self, t):
        times = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        scalar = times.ndim == 0
        times = np.atleast_1d(times)
        values = np.full(times.shape, self.start, dtype=complex)
        if self.segments and self.length > 0:
            cuts = self.breakpoints
            index = np.clip(np.searchsorted(cuts, times, side="right") - 1, 0, len(self.segments) - 1)
            for k, segment in enumerate(self.segments):
                mask = index == k
                if not mask.any():
                    continue
                span = cuts[k + 1] - cuts[k]
                local = (times[mask] - cuts[k]) / span if span > 0 else np.zeros(mask.sum())
                values[mask] = segment.point(local)
        values[times == 0.0] = self.start
        values[times == 1.0] = self.end
        return complex(values[0]) if scalar else values

    def then(self, other: "Path") -> "Path":
        if abs(self.end - other.start) > 1e-9 * max(1.0, abs(self.end)):
            raise PathMismatch(self.end, other.start)
        return Path(self.segments + other.segments, self.start, other.end)

    def reverse(self) -> "Path":
        return Path(tuple(segment.reversed() for segment in reversed(self.segments)), self.end, self.start)

    def repeat(self, times: int) -> "Path":
        if times < 1:
            return Path.constant(self.start)
        path = self
        for _ in range(times - 1):
            path = path.then(self)
        return path
