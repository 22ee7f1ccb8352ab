"""Equal-mass binning of scores in [0, 1] and the induced binning kernel.

Bins are right-closed intervals ``(boundaries[i], boundaries[i+1]]`` except
the first, which also contains 0.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InputError, OutOfRange, TooFewSamples


class BinSource(str, enum.Enum):
    SOURCE = "source"
    TARGET = "target"


@dataclass(frozen=True, eq=False)
class BinningScheme:
    boundaries: np.ndarray
    source: BinSource = BinSource.SOURCE

    def __post_init__(self):
        edges = np.array(self.boundaries, dtype=float)
        if edges.ndim != 1 or edges.size < 2:
            raise InputError("need at least two boundaries")
        if edges[0] != 0.0 or edges[-1] != 1.0:
            raise InputError("boundaries must start at 0 and end at 1")
        if np.any(np.diff(edges) < 0):
            raise InputError("boundaries must be nondecreasing")
        edges.setflags(write=False)
        object.__setattr__(self, "boundaries", edges)
        object.__setattr__(self, "source", BinSource(self.source))

    @property
    def b(self) -> int:
        return self.boundaries.size - 1

    def assign(self, scores) -> np.ndarray:
        """Vectorized :func:`assign_bin`."""
        s = np.asarray(scores, dtype=float)
        if s.size and (np.any(s < 0) | np.any(s > 1) | np.any(np.isnan(s))):
            raise OutOfRange("scores must lie in [0, 1]")
        return np.searchsorted(self.boundaries[1:-1], s, side="left")


def build_equal_mass_bins(scores, b: int, source=BinSource.SOURCE) -> BinningScheme:
    """Place ``b - 1`` cuts so every bin holds about ``n / b`` of ``scores``.

    Cut ``i`` sits halfway between the order statistics of (1-based) rank
    ``ceil(i * n / b)`` and the next one. Tied scores can leave bins empty.
    """
    s = np.sort(np.asarray(scores, dtype=float))
    n = s.size
    if b < 1:
        raise InputError(f"bin count must be >= 1, got {b}")
    if n < b:
        raise TooFewSamples(f"need at least {b} scores for {b} bins, got {n}")
    if np.any(s < 0) or np.any(s > 1):
        raise OutOfRange("scores must lie in [0, 1]")
    i = np.arange(1, b)
    # ceil(i*n/b) in exact integer arithmetic, converted to 0-based
    lo = -((-i * n) // b) - 1
    cuts = 0.5 * (s[lo] + s[lo + 1])
    return BinningScheme(np.concatenate([[0.0], cuts, [1.0]]), source)


def assign_bin(scheme: BinningScheme, s: float) -> int:
    if not 0.0 <= s <= 1.0:
        raise OutOfRange(f"score {s} outside [0, 1]")
    return int(scheme.assign(s))


def binning_kernel(scheme: BinningScheme, s1: float, s2: float) -> int:
    return int(assign_bin(scheme, s1) == assign_bin(scheme, s2))
