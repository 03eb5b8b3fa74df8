"""Integer array geometries and shift windows.

Positions are integers in units of half a wavelength: position ``d`` is a
sensor located at ``d * lambda / 2``. Geometries are kept in canonical form
(sorted, first element 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidSizeError, PartitionError


@dataclass(frozen=True)
class ArrayGeometry:
    """Sorted integer sensor positions, starting at 0.

    Use :meth:`from_positions` to canonicalize arbitrary input; the plain
    constructor validates but never shifts.
    """

    positions: tuple[int, ...]

    def __post_init__(self):
        pos = tuple(int(p) for p in self.positions)
        if not pos:
            raise InvalidSizeError("geometry needs at least one sensor")
        if pos[0] != 0:
            raise InvalidSizeError(
                f"geometry must start at position 0, got {pos[0]} "
                "(use ArrayGeometry.from_positions to canonicalize)"
            )
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise InvalidSizeError("positions must be strictly increasing")
        object.__setattr__(self, "positions", pos)

    @classmethod
    def from_positions(cls, positions: Iterable[int]) -> "ArrayGeometry":
        """Build a geometry from any set of integers, translated to start at 0.

        Duplicates are rejected rather than merged.
        """
        pos = sorted(int(p) for p in positions)
        if not pos:
            raise InvalidSizeError("geometry needs at least one sensor")
        if len(set(pos)) != len(pos):
            raise InvalidSizeError("duplicate sensor positions")
        return cls(tuple(p - pos[0] for p in pos))

    def __len__(self):
        return len(self.positions)

    def __iter__(self):
        return iter(self.positions)

    def __contains__(self, item):
        return item in self._set

    @property
    def _set(self) -> frozenset[int]:
        # not cached as a field so equality/hash stay tied to positions only
        return frozenset(self.positions)

    @property
    def size(self) -> int:
        return len(self.positions)

    @property
    def aperture(self) -> int:
        return aperture(self)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.positions, dtype=np.int64)

    def is_ula(self) -> bool:
        return self.positions[-1] == len(self.positions) - 1

    def to_json(self) -> list[int]:
        return list(self.positions)


@dataclass(frozen=True)
class ShiftWindow:
    """A contiguous run of shifts ``{start, ..., start + length - 1}``.

    ``index`` is the 1-based window number ``l`` within its partition.
    """

    start: int
    length: int
    index: int = 1

    def __post_init__(self):
        if self.start < 0:
            raise InvalidSizeError("window start must be non-negative")
        if self.length < 1:
            raise InvalidSizeError("window length must be positive")

    @property
    def shifts(self) -> range:
        return range(self.start, self.start + self.length)

    @property
    def stop(self) -> int:
        """Last shift contained in the window (inclusive)."""
        return self.start + self.length - 1


def make_ula(n: int) -> ArrayGeometry:
    if n < 1:
        raise InvalidSizeError(f"ULA needs n >= 1 sensors, got {n}")
    return ArrayGeometry(tuple(range(n)))


def make_nested(a: int, b: int) -> ArrayGeometry:
    """Two-level nested array: a dense ULA of ``a`` sensors followed by
    ``b`` sensors spaced ``a`` apart.

    Positions are ``{0..a-1} U {m*a - 1 : m = 2..b+1}``, aperture ``(b+1)a - 1``.
    """
    if a < 1 or b < 1:
        raise InvalidSizeError(f"nested array needs a, b >= 1, got ({a}, {b})")
    inner = range(a)
    outer = (m * a - 1 for m in range(2, b + 2))
    return ArrayGeometry(tuple(inner) + tuple(outer))


def nested_order(n: int) -> int:
    """``floor(sqrt(n))``, the design parameter of :func:`make_nested_auto`."""
    return math.isqrt(n)


def make_nested_auto(n: int) -> ArrayGeometry:
    """Nested sub-array sized for an ``n``-sensor ULA.

    With ``r = floor(sqrt(n))`` this is ``make_nested(r - 1, r - 1)``:
    ``2r - 2`` sensors and aperture ``r(r - 1) - 1``.
    """
    if n < 9:
        raise InvalidSizeError(f"automatic nested design needs n >= 9, got {n}")
    r = nested_order(n)
    return make_nested(r - 1, r - 1)


def make_shift_windows(total_shifts: int, p: int) -> list[ShiftWindow]:
    """All overlapping windows of ``p`` consecutive shifts out of
    ``{0, ..., total_shifts - 1}``.

    Window ``l`` (1-based) is ``{l-1, ..., l+p-2}``; there are
    ``total_shifts - p + 1`` of them. Callers that need fewer windows take
    a prefix.
    """
    if p < 1:
        raise InvalidSizeError(f"window length must be positive, got {p}")
    if total_shifts < 1:
        raise InvalidSizeError(f"total_shifts must be positive, got {total_shifts}")
    if p > total_shifts:
        raise PartitionError(
            f"window length P={p} exceeds the {total_shifts} available shifts"
        )
    return [ShiftWindow(l - 1, p, l) for l in range(1, total_shifts - p + 2)]


def available_shifts(full: ArrayGeometry, sub: ArrayGeometry) -> int:
    """Number of non-negative shifts ``d`` with ``sub + d`` inside a ULA ``full``."""
    return max(full.positions[-1] - sub.positions[-1] + 1, 0)


def aperture(g: ArrayGeometry) -> int:
    return g.positions[-1] - g.positions[0]


def longest_ula_segment(g: ArrayGeometry | Sequence[int]) -> int:
    """Length of the longest run of unit-spaced positions."""
    pos = g.positions if isinstance(g, ArrayGeometry) else sorted(g)
    if len(pos) == 0:
        return 0
    best = run = 1
    for a, b in zip(pos, pos[1:]):
        run = run + 1 if b - a == 1 else 1
        best = max(best, run)
    return best


def validate_embedding(
    full: ArrayGeometry, sub: ArrayGeometry, shifts: Sequence[ShiftWindow]
) -> bool:
    """True iff every shifted copy ``sub + d`` (d in any window) lies in ``full``."""
    full_set = full._set
    for window in shifts:
        for d in window.shifts:
            if any(s + d not in full_set for s in sub.positions):
                return False
    return True


def identifiable_sources(sub: ArrayGeometry, window_length: int) -> int:
    """Largest K for which MUSIC on the smoothed matrix is guaranteed to work.

    Needs a ULA segment of K + 1 in the sub-array and K shifts per window.
    """
    return min(longest_ula_segment(sub) - 1, window_length)
