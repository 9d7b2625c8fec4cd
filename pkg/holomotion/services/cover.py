"""Covering model of the Teichmuller space of a finite set.

A point is a braid-decorated configuration: the end configuration of a lifted path together
with the braid word of that path, read in the mapping class group of the punctured sphere.
Evaluating the universal motion at a point is reading off a coordinate of the end
configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from holomotion.config import settings
from holomotion.errors import SolverFailure, UsageError
from holomotion.logger import logger
from holomotion.services.braid import (
    BraidWord,
    MappingClass,
    NontrivialMonodromy,
    braid_from_tracks,
    braid_words,
    first_nontrivial,
    is_trivial_monodromy,
    monodromy,
    same_class,
)
from holomotion.services.continuation import StrandTracks, continue_strands
from holomotion.services.motion import MotionFamily
from holomotion.services.paths import Path
from holomotion.services.sphere import INF, Configuration, SpherePoint, chordal_distance
from holomotion.tasks import run_concurrently

POINT_TOLERANCE = 1e-10


class FrameMismatch(UsageError):
    pass


class LiftInconsistent(SolverFailure):
    def __init__(self, point: complex):
        self.point = point
        super().__init__(f"Lifts along two paths to {point} disagree")


@dataclass(frozen=True)
class CoverPoint:
    base: Configuration
    word: BraidWord
    end: Configuration
    tracks: Optional[StrandTracks] = field(default=None, compare=False, repr=False)

    @property
    def size(self) -> int:
        return len(self.end)

    def describe(self) -> dict:
        return {
            "word": self.word.to_tokens(),
            "end": [[p.real, p.imag] for p in self.end.punctures],
        }


@dataclass(frozen=True)
class ProbeCertificate:
    point: complex
    word: str
    agrees: bool


@dataclass(frozen=True)
class LiftedMap:
    family: MotionFamily
    deck_classes: Tuple[MappingClass, ...]
    probes: Tuple[ProbeCertificate, ...]

    def __call__(self, lam: complex) -> CoverPoint:
        return lift_path(self.family, self.family.domain.path_to(lam))

    def describe(self) -> dict:
        return {
            "deck_words": [cls.word.to_tokens() for cls in self.deck_classes],
            "probes": [
                {"point": [p.point.real, p.point.imag], "word": p.word, "agrees": p.agrees} for p in self.probes
            ],
        }


def lift_path(family: MotionFamily, path: Path) -> CoverPoint:
    tracks = continue_strands(family, path)
    word = braid_from_tracks(tracks).free_reduce()
    return CoverPoint(family.base, word, tracks.end_configuration, tracks)


def deck_transform(family: MotionFamily, generator: int) -> MappingClass:
    loops = family.domain.generators
    if not 0 <= generator < len(loops):
        raise UsageError(f"Generator {generator} does not exist; the domain has {len(loops)}")
    return MappingClass(lift_path(family, loops[generator]).word)


def _drop_tracks(tracks: StrandTracks) -> StrandTracks:
    positions = tracks.positions[:, :-1]
    return StrandTracks(tracks.times, positions, tracks.min_separation, tracks.path)


def forget_last_strand(word: BraidWord) -> BraidWord:
    """Delete-a-strand homomorphism for the highest labeled strand."""
    if not word.initial_order:
        raise FrameMismatch("Word carries no initial strand order; cannot locate the strand to delete")
    deleted = word.strand_count - 1
    position = word.initial_order.index(deleted) + 1
    letters = []
    for letter in word.letters:
        k = abs(letter)
        if k == position:
            position = k + 1
        elif k + 1 == position:
            position = k
        elif k > position:
            letters.append(letter - 1 if letter > 0 else letter + 1)
        else:
            letters.append(letter)
    order = tuple(s for s in word.initial_order if s != deleted)
    return BraidWord(word.strand_count - 1, tuple(letters), word.projection_angle, order).free_reduce()


def forgetful(point: CoverPoint) -> CoverPoint:
    """Forgets the last finite puncture."""
    if point.size < 3:
        raise UsageError("Only moving punctures can be forgotten")
    tracks = _drop_tracks(point.tracks) if point.tracks is not None else None
    return CoverPoint(point.base.drop_last(), forget_last_strand(point.word), point.end.drop_last(), tracks)


def universal_motion_eval(point: CoverPoint, puncture: int) -> SpherePoint:
    """Coordinate ``puncture`` of the end configuration; index ``size`` is INF."""
    if puncture == point.size:
        return INF
    if not 0 <= puncture < point.size:
        raise UsageError(f"Puncture {puncture} out of range for {point.size} finite punctures")
    return point.end[puncture]


def _shared_words(p: CoverPoint, q: CoverPoint) -> Tuple[BraidWord, BraidWord]:
    if p.word.projection_angle == q.word.projection_angle and p.word.initial_order == q.word.initial_order:
        return p.word, q.word
    if p.tracks is None or q.tracks is None:
        raise FrameMismatch("Words were read in different projections and carry no tracks to re-read")
    a, b = braid_words([p.tracks, q.tracks])
    return a, b


def same_point(p: CoverPoint, q: CoverPoint) -> bool:
    if p.size != q.size:
        return False
    ends = [chordal_distance(a, b) for a, b in zip(p.end.punctures, q.end.punctures)]
    if max(ends, default=0.0) > POINT_TOLERANCE:
        return False
    a, b = _shared_words(p, q)
    return same_class(a, b)


def lifts_agree(family: MotionFamily, path: Path) -> bool:
    """Lifts at the base and at doubled sample density agree at every shared sample."""
    base_samples = settings.INITIAL_SAMPLES
    coarse = continue_strands(family, path, initial_samples=base_samples)
    fine = continue_strands(family, path, initial_samples=2 * base_samples - 1)

    index = np.clip(np.searchsorted(fine.times, coarse.times), 0, fine.times.size - 1)
    shared = np.abs(fine.times[index] - coarse.times) <= 1e-14
    a, b = coarse.positions[shared], fine.positions[index[shared]]
    scale = np.sqrt((1.0 + np.abs(a) ** 2) * (1.0 + np.abs(b) ** 2))
    if (2.0 * np.abs(a - b) / scale).max() > POINT_TOLERANCE:
        return False
    first, second = braid_words([coarse, fine])
    return first.free_reduce() == second.free_reduce()


def _probe_paths(family: MotionFamily, lam: complex, k: int) -> Tuple[Path, Path]:
    direct = family.domain.path_to(lam)
    loops = family.domain.generators
    if loops:
        return direct, loops[k % len(loops)].then(direct)
    return direct, direct.then(direct.reverse()).then(direct)


def lift_map(family: MotionFamily) -> LiftedMap:
    """The basepoint-preserving lift of the motion to the covering model.

    Exists exactly when every deck transformation is trivial. Path independence is
    certified on a probe set by lifting along two paths in distinct homotopy classes.
    """
    classes = monodromy(family)
    if not is_trivial_monodromy(family, classes):
        g = first_nontrivial(classes)
        raise NontrivialMonodromy(g, classes[g])

    probes = family.domain.sample_points(settings.PROBE_POINTS)

    def certify(item: Tuple[int, complex]) -> ProbeCertificate:
        k, lam = item
        first, second = _probe_paths(family, complex(lam), k)
        p, q = lift_path(family, first), lift_path(family, second)
        return ProbeCertificate(complex(lam), p.word.to_tokens(), same_point(p, q))

    certificates = run_concurrently(certify, list(enumerate(probes)), "probe")
    for certificate in certificates:
        if not certificate.agrees:
            raise LiftInconsistent(certificate.point)
    logger.info(f"Lift certified on {len(certificates)} probe point(s)")
    return LiftedMap(family, tuple(classes), tuple(certificates))
