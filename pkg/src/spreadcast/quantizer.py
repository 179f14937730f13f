"""Five-class quantization of the real-time minus day-ahead price spread.

Classes, with the default thresholds (-12, -5, 5, 12):

    0: (-inf, -12)   1: [-12, -5)   2: [-5, 5)   3: [5, 12)   4: [12, inf)

Class 2 is the neutral (no-trade) band; $5 is the break-even spread once
the uplift cost is paid.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np

N_CLASSES = 5
NEUTRAL = 2
DEFAULT_THRESHOLDS = (-12.0, -5.0, 5.0, 12.0)

_DIRECTIONS = (-1, -1, 0, 1, 1)


@dataclass(frozen=True)
class SpreadQuantizer:
    thresholds: tuple[float, float, float, float] = DEFAULT_THRESHOLDS

    def __post_init__(self):
        t = tuple(float(x) for x in self.thresholds)
        if len(t) != N_CLASSES - 1:
            raise ValueError(f"need {N_CLASSES - 1} thresholds, got {len(t)}")
        if not all(math.isfinite(x) for x in t) or any(a >= b for a, b in zip(t, t[1:])):
            raise ValueError(f"thresholds must be finite and strictly increasing: {t}")
        object.__setattr__(self, "thresholds", t)

    def quantize(self, spread: float) -> int:
        if not math.isfinite(spread):
            raise ValueError(f"spread must be finite, got {spread}")
        return bisect_right(self.thresholds, spread)

    def quantize_array(self, spreads) -> np.ndarray:
        """Vectorized :meth:`quantize`; returns an integer array of the same shape."""
        arr = np.asarray(spreads, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise ValueError("spreads must be finite")
        return np.searchsorted(self.thresholds, arr, side="right").astype(np.int64)

    def bounds(self, c: int) -> tuple[float, float]:
        """Interval ``[lower, upper)`` of class ``c`` (open at infinite ends)."""
        _check_class(c)
        edges = (-math.inf,) + self.thresholds + (math.inf,)
        return edges[c], edges[c + 1]


DEFAULT_QUANTIZER = SpreadQuantizer()


def _check_class(c: int) -> None:
    if not (isinstance(c, (int, np.integer)) and 0 <= c < N_CLASSES):
        raise ValueError(f"class index must be in 0..{N_CLASSES - 1}, got {c!r}")


def quantize(spread: float, thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> int:
    """Class index whose interval contains ``spread``; intervals are left-closed."""
    return SpreadQuantizer(tuple(thresholds)).quantize(spread)


def class_bounds(c: int, thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> tuple[float, float]:
    return SpreadQuantizer(tuple(thresholds)).bounds(c)


def class_direction(c: int) -> int:
    """Trade side implied by a class.

    -1 for the negative classes (virtual supply offer, profits when DAM > SCED),
    +1 for the positive classes (virtual demand bid, profits when SCED > DAM),
    0 for the neutral band.
    """
    _check_class(c)
    return _DIRECTIONS[int(c)]


def direction_array(classes) -> np.ndarray:
    return np.asarray(_DIRECTIONS, dtype=np.int64)[np.asarray(classes, dtype=np.int64)]
