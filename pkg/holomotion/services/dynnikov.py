"""Braid word problem via the Dynnikov coordinate action.

An m-strand braid acts on integer vectors (a_1, b_1, ..., a_m, b_m) by piecewise-linear
max/min formulas; the generator sigma_i touches the pairs i and i + 1 only. A braid is
trivial exactly when it fixes the reference vector (0, 1, ..., 0, 1). The action is exact
integer arithmetic, so no normal forms are needed.
"""

from typing import Iterable, List, Sequence, Tuple


def _pos(x: int) -> int:
    return x if x > 0 else 0


def _neg(x: int) -> int:
    return x if x < 0 else 0


def _apply(coords: List[int], letter: int) -> None:
    i = abs(letter) - 1
    x1, y1, x2, y2 = coords[2 * i], coords[2 * i + 1], coords[2 * i + 2], coords[2 * i + 3]
    if letter > 0:
        z = x1 - _neg(y1) - x2 + _pos(y2)
        coords[2 * i] = x1 + _pos(y1) + _pos(_pos(y2) - z)
        coords[2 * i + 1] = y2 - _pos(z)
        coords[2 * i + 2] = x2 + _neg(y2) + _neg(_neg(y1) + z)
        coords[2 * i + 3] = y1 + _pos(z)
    else:
        z = x1 + _neg(y1) - x2 - _pos(y2)
        coords[2 * i] = x1 - _pos(y1) - _pos(_pos(y2) + z)
        coords[2 * i + 1] = y2 + _neg(z)
        coords[2 * i + 2] = x2 - _neg(y2) - _neg(_neg(y1) - z)
        coords[2 * i + 3] = y1 - _neg(z)


def reference_coordinates(strand_count: int) -> Tuple[int, ...]:
    """(0, 1) repeated per strand: 2m coordinates, one (a, b) pair per strand.

    The reduced form for m punctures has 2m - 4 coordinates. This is that form for the disk with
    two extra fixed punctures, one at each end, which B_m includes into injectively, so
    triviality is decided the same way.
    """
    return (0, 1) * strand_count


def probe_coordinates(strand_count: int) -> List[Tuple[int, ...]]:
    """The reference vector with one a_k raised to 1, for each k."""
    probes = []
    for k in range(strand_count):
        coords = list(reference_coordinates(strand_count))
        coords[2 * k] = 1
        probes.append(tuple(coords))
    return probes


def action(letters: Iterable[int], coords: Sequence[int]) -> Tuple[int, ...]:
    """Applies the letters left to right; +i is sigma_i, -i its inverse (1-based)."""
    state = [int(c) for c in coords]
    pairs = len(state) // 2
    for letter in letters:
        if letter == 0 or abs(letter) >= pairs:
            raise ValueError(f"Generator index {letter} out of range for {pairs} strands")
        _apply(state, letter)
    return tuple(state)


def is_trivial_letters(letters: Sequence[int], strand_count: int) -> bool:
    if not letters:
        return True
    if strand_count < 2:
        return False
    vectors = [reference_coordinates(strand_count)] + probe_coordinates(strand_count)
    return all(action(letters, vector) == tuple(vector) for vector in vectors)
