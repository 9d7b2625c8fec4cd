"""Braid words from strand tracks, the braid and sphere mapping class word problems, monodromy.

Letters are signed 1-based positions in the real-part ordering of all finite punctures
(0 and 1 included): +i exchanges the strands at positions i and i + 1 with the left one
passing below (smaller imaginary part), -i the other way. A counterclockwise point-push
of one puncture around another is sigma_i^2.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from holomotion.config import settings
from holomotion.errors import InputError, ObstructionError, SolverFailure
from holomotion.logger import logger
from holomotion.services.continuation import NotClosed, StrandTracks, continue_strands, min_separation
from holomotion.services.dynnikov import is_trivial_letters
from holomotion.services.motion import MotionFamily
from holomotion.tasks import run_concurrently

PROJECTION_ATTEMPTS = 8
_TOKEN = re.compile(r"^s(\d+)(?:\^(-?\d+))?$")


class DegenerateCrossing(SolverFailure):
    def __init__(self, attempts: int):
        self.attempts = attempts
        super().__init__(f"No generic projection found after {attempts} rotation(s)")


class InvalidBraidWord(InputError):
    pass


class NontrivialMonodromy(ObstructionError):
    def __init__(self, generator: int, mapping_class: "MappingClass"):
        self.generator, self.mapping_class = generator, mapping_class
        super().__init__(
            f"Monodromy of generator {generator} is nontrivial: [{mapping_class.word.to_tokens()}]"
        )


@dataclass(frozen=True)
class BraidWord:
    strand_count: int
    letters: Tuple[int, ...] = ()
    projection_angle: float = field(default=0.0, compare=False)
    initial_order: Tuple[int, ...] = field(default=(), compare=False)

    def __post_init__(self):
        for letter in self.letters:
            if letter == 0 or abs(letter) > self.strand_count - 1:
                raise InvalidBraidWord(f"Generator s{abs(letter)} out of range for {self.strand_count} strands")

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: "BraidWord") -> "BraidWord":
        if other.strand_count != self.strand_count:
            raise InvalidBraidWord(f"Cannot multiply words on {self.strand_count} and {other.strand_count} strands")
        return BraidWord(self.strand_count, self.letters + other.letters, self.projection_angle, self.initial_order)

    @property
    def exponent_sum(self) -> int:
        return sum(1 if letter > 0 else -1 for letter in self.letters)

    def free_reduce(self) -> "BraidWord":
        stack: List[int] = []
        for letter in self.letters:
            if stack and stack[-1] == -letter:
                stack.pop()
            else:
                stack.append(letter)
        return BraidWord(self.strand_count, tuple(stack), self.projection_angle, self.initial_order)

    def inverse(self) -> "BraidWord":
        return BraidWord(self.strand_count, tuple(-letter for letter in reversed(self.letters)), self.projection_angle)

    def power(self, exponent: int) -> "BraidWord":
        base = self if exponent >= 0 else self.inverse()
        return BraidWord(self.strand_count, base.letters * abs(exponent), self.projection_angle, self.initial_order)

    def to_tokens(self) -> str:
        return " ".join(f"s{letter}" if letter > 0 else f"s{-letter}^-1" for letter in self.letters)

    @classmethod
    def parse_tokens(cls, text: str, strand_count: int) -> "BraidWord":
        """Parses ``"s1 s2^-1 s1^2"``."""
        letters: List[int] = []
        for token in text.split():
            match = _TOKEN.match(token)
            if not match:
                raise InvalidBraidWord(f"Bad braid token {token!r}")
            index, exponent = int(match.group(1)), int(match.group(2) or 1)
            letters.extend([index if exponent > 0 else -index] * abs(exponent))
        return cls(strand_count, tuple(letters))

    @classmethod
    def full_twist(cls, strand_count: int) -> "BraidWord":
        """Delta^2 = (s1 s2 ... s_{m-1})^m."""
        return cls(strand_count, tuple(range(1, strand_count)) * strand_count)


@dataclass(frozen=True)
class MappingClass:
    """A braid word read in Mod(0, m + 1): all punctures fixed, INF the capped one."""

    word: BraidWord

    @property
    def puncture_count(self) -> int:
        return self.word.strand_count + 1

    def is_trivial(self) -> bool:
        return is_trivial_mapping_class(self)


def is_trivial_braid(word: BraidWord) -> bool:
    return is_trivial_letters(word.free_reduce().letters, word.strand_count)


def is_trivial_mapping_class(cls: Union[MappingClass, BraidWord]) -> bool:
    """Kernel test for B_m -> Mod(0, m + 1): exponent sum t*m*(m-1) and w * Delta^(-2t) trivial."""
    word = (cls.word if isinstance(cls, MappingClass) else cls).free_reduce()
    if not word.letters:
        return True
    m = word.strand_count
    twist_exponent = m * (m - 1)
    if word.exponent_sum % twist_exponent:
        return False
    twists = word.exponent_sum // twist_exponent
    return is_trivial_braid(word * BraidWord.full_twist(m).power(-twists))


def same_class(a: Union[MappingClass, BraidWord], b: Union[MappingClass, BraidWord]) -> bool:
    a_word = a.word if isinstance(a, MappingClass) else a
    b_word = b.word if isinstance(b, MappingClass) else b
    return is_trivial_mapping_class(a_word * b_word.inverse())


@dataclass(frozen=True)
class Crossing:
    time: float
    position: int  # 1-based position of the left strand
    sign: int
    left: int
    right: int


class _Degenerate(Exception):
    pass


def _crossings(tracks: StrandTracks, angle: float) -> Tuple[Tuple[int, ...], List[Crossing]]:
    rotated = tracks.positions * complex(math.cos(angle), math.sin(angle))
    x, y = rotated.real, rotated.imag
    order = [int(k) for k in np.argsort(x[0], kind="stable")]
    if np.any(np.diff(x[0][order]) == 0):
        raise _Degenerate()

    gaps = x[:, :, None] - x[:, None, :]
    upper = np.triu(np.ones(x.shape[1], dtype=bool), k=1)
    if np.any((gaps == 0) & upper):
        raise _Degenerate()
    flips = (gaps[:-1] * gaps[1:] < 0) & upper

    crossings: List[Crossing] = []
    for k in np.flatnonzero(flips.any(axis=(1, 2))):
        events = []
        for a, b in np.argwhere(flips[k]):
            d0, d1 = gaps[k, a, b], gaps[k + 1, a, b]
            events.append((d0 / (d0 - d1), int(a), int(b)))
        events.sort()
        for (s1, a1, b1), (s2, a2, b2) in zip(events, events[1:]):
            if s2 - s1 <= 1e-12 and {a1, b1} & {a2, b2}:
                raise _Degenerate()
        for s, a, b in events:
            pa, pb = order.index(a), order.index(b)
            if abs(pa - pb) != 1:
                raise _Degenerate()
            low = min(pa, pb)
            left, right = order[low], order[low + 1]
            y_left = y[k, left] + (y[k + 1, left] - y[k, left]) * s
            y_right = y[k, right] + (y[k + 1, right] - y[k, right]) * s
            if y_left == y_right:
                raise _Degenerate()
            time = tracks.times[k] + s * (tracks.times[k + 1] - tracks.times[k])
            crossings.append(Crossing(float(time), low + 1, 1 if y_left < y_right else -1, left, right))
            order[low], order[low + 1] = right, left
    initial = tuple(int(k) for k in np.argsort(x[0], kind="stable"))
    return initial, crossings


def _candidate_angles() -> List[float]:
    rng = np.random.default_rng(settings.RANDOM_SEED)
    return [0.0] + [float(a) for a in rng.uniform(0.0, 2.0 * math.pi, PROJECTION_ATTEMPTS)]


def projection_angle(tracks_list: Sequence[StrandTracks]) -> float:
    """First rotation (0, then seeded random angles) that is generic for every track set."""
    for angle in _candidate_angles():
        try:
            for tracks in tracks_list:
                _crossings(tracks, angle)
        except _Degenerate:
            logger.warning(f"Degenerate real-part projection at angle {angle:.6f}; rotating the plane")
            continue
        return angle
    raise DegenerateCrossing(PROJECTION_ATTEMPTS)


def braid_from_tracks(tracks: StrandTracks, angle: Optional[float] = None) -> BraidWord:
    if angle is None:
        angle = projection_angle([tracks])
    try:
        initial, crossings = _crossings(tracks, angle)
    except _Degenerate:
        raise DegenerateCrossing(1)
    letters = tuple(c.position * c.sign for c in crossings)
    return BraidWord(tracks.strand_count, letters, angle, initial)


def braid_words(tracks_list: Sequence[StrandTracks]) -> List[BraidWord]:
    """Words for several track sets in one shared projection, so they can be multiplied."""
    angle = projection_angle(tracks_list)
    return [braid_from_tracks(tracks, angle) for tracks in tracks_list]


def linking_number(tracks: StrandTracks, i: int, j: int) -> int:
    if not tracks.path.is_closed:
        raise NotClosed("Linking numbers need a closed path")
    events = crossings(tracks, projection_angle([tracks]))
    total = sum(c.sign for c in events if {c.left, c.right} == {i, j})
    if total % 2:
        raise NotClosed(f"Strands {i} and {j} do not return to their starting points")
    return total // 2


def crossings(tracks: StrandTracks, angle: float) -> List[Crossing]:
    """Crossings of the projection rotated by ``angle``, in time order."""
    try:
        return _crossings(tracks, angle)[1]
    except _Degenerate:
        raise DegenerateCrossing(1)


def generator_braids(
    family: MotionFamily, initial_samples: Optional[int] = None
) -> List[Tuple[StrandTracks, MappingClass]]:
    """Tracks and mapping class of every generator loop, in generator order."""

    def generator_braid(loop) -> Tuple[StrandTracks, MappingClass]:
        tracks = continue_strands(family, loop, initial_samples=initial_samples)
        return tracks, MappingClass(braid_from_tracks(tracks).free_reduce())

    braids = run_concurrently(generator_braid, family.domain.generators, "monodromy")
    for g, (tracks, cls) in enumerate(braids):
        logger.info(
            f"Generator {g}: word [{cls.word.to_tokens()}], "
            f"{'trivial' if cls.is_trivial() else 'nontrivial'} in Mod(0, {cls.puncture_count}), "
            f"separation {min_separation(tracks):.3e}"
        )
    return braids


def monodromy(family: MotionFamily, initial_samples: Optional[int] = None) -> List[MappingClass]:
    """One mapping class per generator of pi_1, in generator order."""
    return [cls for _, cls in generator_braids(family, initial_samples)]


def first_nontrivial(classes: Iterable[MappingClass]) -> Optional[int]:
    for g, cls in enumerate(classes):
        if not cls.is_trivial():
            return g
    return None


def is_trivial_monodromy(family: MotionFamily, classes: Optional[Sequence[MappingClass]] = None) -> bool:
    """True when every generator acts trivially; pass ``classes`` to reuse a computed monodromy."""
    return first_nontrivial(monodromy(family) if classes is None else classes) is None


def require_trivial_monodromy(family: MotionFamily) -> List[MappingClass]:
    """Returns the monodromy, raising NontrivialMonodromy at the first offending generator."""
    classes = monodromy(family)
    if not is_trivial_monodromy(family, classes):
        g = first_nontrivial(classes)
        raise NontrivialMonodromy(g, classes[g])
    return classes
